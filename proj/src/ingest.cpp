#include "lfid/ingest.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "lfid/error.hpp"
#include "lfid/template_io.hpp"

namespace lfid {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w),
      height(h),
      pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill),
      roi(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 1) {}

double GrayImage::mean_roi_intensity() const noexcept {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (roi[i]) {
      sum += pixels[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    std::string tok;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        ++pos;
      } else {
        tok.push_back(c);
        ++pos;
      }
    }
    return tok;
  };
  const std::string magic = next_token();
  const bool binary = magic == "P5";
  if (!binary && magic != "P2") throw Error(ErrorCode::InvalidArgument, name + ": unsupported image format");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, name + ": bad PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::InvalidArgument, name + ": only 8-bit PGM is supported");
  }
  GrayImage img(w, h);
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + img.pixels.size()) throw Error(ErrorCode::InvalidArgument, name + ": truncated PGM");
    std::memcpy(img.pixels.data(), bytes.data() + pos, img.pixels.size());
  } else {
    for (auto& p : img.pixels) {
      const auto tok = next_token();
      if (tok.empty()) throw Error(ErrorCode::InvalidArgument, name + ": truncated PGM");
      p = static_cast<std::uint8_t>(std::stoi(tok));
    }
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::lround(p * 255.0 / maxval));
  }
  return img;
}

GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::InvalidArgument, name + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::InvalidArgument, name + ": " + image.message);
  }
  return img;
}

}  // namespace

GrayImage read_gray_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes, path.string());
  return decode_pgm(bytes, path.string());
}

GrayImage read_gray_image(const std::filesystem::path& path, const std::filesystem::path& mask_path) {
  GrayImage img = read_gray_image(path);
  const GrayImage mask = read_gray_image(mask_path);
  if (mask.width != img.width || mask.height != img.height) {
    throw Error(ErrorCode::InvalidArgument, "ROI mask size differs from image size");
  }
  for (std::size_t i = 0; i < img.roi.size(); ++i) img.roi[i] = mask.pixels[i] != 0 ? 1 : 0;
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ostringstream header;
  header << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  write_file_bytes(path, bytes);
}

OrientationField estimate_orientation_field(const GrayImage& img, int block_size, double coherence_threshold) {
  if (block_size < 8) throw Error(ErrorCode::InvalidArgument, "block size must be at least 8");
  if (img.width <= block_size || img.height <= block_size) {
    throw Error(ErrorCode::InvalidArgument, "image smaller than one block");
  }
  const int w = img.width;
  const int h = img.height;
  std::vector<double> gx(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<double> gy(gx.size(), 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      auto p = [&](int dx, int dy) { return static_cast<double>(img.at(x + dx, y + dy)); };
      const std::size_t k = static_cast<std::size_t>(y) * w + x;
      gx[k] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      gy[k] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    }
  }

  OrientationField of(block_size, w / block_size, h / block_size);
  for (int by = 0; by < of.height_blocks; ++by) {
    for (int bx = 0; bx < of.width_blocks; ++bx) {
      double gxx = 0.0, gyy = 0.0, gxy = 0.0;
      int inside = 0;
      for (int y = by * block_size; y < (by + 1) * block_size; ++y) {
        for (int x = bx * block_size; x < (bx + 1) * block_size; ++x) {
          if (!img.in_roi(x, y)) continue;
          ++inside;
          const std::size_t k = static_cast<std::size_t>(y) * w + x;
          gxx += gx[k] * gx[k];
          gyy += gy[k] * gy[k];
          gxy += gx[k] * gy[k];
        }
      }
      const std::size_t idx = of.index(bx, by);
      const double energy = gxx + gyy;
      if (2 * inside < block_size * block_size || energy <= 0.0) continue;
      const double coherence = std::hypot(gxx - gyy, 2.0 * gxy) / energy;
      if (coherence < coherence_threshold) continue;
      // Ridges run perpendicular to the dominant gradient.
      of.theta[idx] = wrap_pi(0.5 * std::atan2(2.0 * gxy, gxx - gyy) + 0.5 * kPi);
      of.mask[idx] = 1;
    }
  }
  if (of.masked_count() == 0) throw Error(ErrorCode::EmptyRoi, "no block passed the ROI and coherence tests");
  return of;
}

namespace {

template <typename Emit>
void for_each_interior_block(const OrientationField& of, Emit&& emit) {
  for (int by = 1; by + 1 < of.height_blocks; ++by) {
    for (int bx = 1; bx + 1 < of.width_blocks; ++bx) {
      if (of.masked_in(bx, by)) emit(of.center_x(bx), of.center_y(by), of.theta[of.index(bx, by)]);
    }
  }
}

}  // namespace

std::vector<Minutia> latent_virtual_minutiae(const OrientationField& of) {
  std::vector<Minutia> out;
  for_each_interior_block(of, [&](double x, double y, double o) {
    out.push_back(make_minutia(x, y, o, MinutiaKind::Virtual));
    out.push_back(make_minutia(x, y, o + kPi, MinutiaKind::Virtual));
  });
  return out;
}

std::vector<Minutia> reference_virtual_minutiae(const OrientationField& of) {
  std::vector<Minutia> out;
  for_each_interior_block(
      of, [&](double x, double y, double o) { out.push_back(make_minutia(x, y, o, MinutiaKind::Virtual)); });
  return out;
}

PatchWindow patch_window(PatchType t) noexcept {
  constexpr double kOff = (160.0 - 96.0) / 2.0;
  switch (t) {
    case PatchType::Centered80: return {80.0, 0.0, 0.0};
    case PatchType::Centered96: return {96.0, 0.0, 0.0};
    case PatchType::Centered112: return {112.0, 0.0, 0.0};
    case PatchType::Centered128: return {128.0, 0.0, 0.0};
    case PatchType::Centered144: return {144.0, 0.0, 0.0};
    case PatchType::Centered160: return {160.0, 0.0, 0.0};
    case PatchType::TopLeft: return {96.0, -kOff, -kOff};
    case PatchType::TopRight: return {96.0, kOff, -kOff};
    case PatchType::BottomRight: return {96.0, kOff, kOff};
    case PatchType::BottomLeft: return {96.0, -kOff, kOff};
    case PatchType::Top: return {96.0, 0.0, -kOff};
    case PatchType::Right: return {96.0, kOff, 0.0};
    case PatchType::Left: return {96.0, -kOff, 0.0};
    case PatchType::Bottom: return {96.0, 0.0, kOff};
  }
  return {};
}

Patch extract_patch(const GrayImage& img, const Minutia& m, PatchType t, double fill) {
  const PatchWindow win = patch_window(t);
  const double scale = win.size / kPatchSide;
  const double c = std::cos(m.alpha);
  const double s = std::sin(m.alpha);
  auto pixel = [&](long long x, long long y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return fill;
    return img.at(static_cast<int>(x), static_cast<int>(y));
  };

  Patch patch;
  patch.patch_type = t;
  patch.center = m;
  patch.pixels.resize(static_cast<std::size_t>(kPatchSide) * kPatchSide);
  for (int v = 0; v < kPatchSide; ++v) {
    const double py = win.offset_y + (v - kPatchSide / 2) * scale;
    for (int u = 0; u < kPatchSide; ++u) {
      const double px = win.offset_x + (u - kPatchSide / 2) * scale;
      const double x = m.x + c * px - s * py;
      const double y = m.y + s * px + c * py;
      const double fx = std::floor(x);
      const double fy = std::floor(y);
      const double ax = x - fx;
      const double ay = y - fy;
      const auto x0 = static_cast<long long>(fx);
      const auto y0 = static_cast<long long>(fy);
      const double value = (1 - ax) * (1 - ay) * pixel(x0, y0) + ax * (1 - ay) * pixel(x0 + 1, y0) +
                           (1 - ax) * ay * pixel(x0, y0 + 1) + ax * ay * pixel(x0 + 1, y0 + 1);
      patch.pixels[static_cast<std::size_t>(v) * kPatchSide + u] = static_cast<float>(value);
    }
  }
  return patch;
}

Patch extract_patch(const GrayImage& img, const Minutia& m, PatchType t) {
  return extract_patch(img, m, t, img.mean_roi_intensity());
}

}  // namespace lfid
