#include "lfid/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lfid/error.hpp"
#include "lfid/kernels.hpp"
#include "numeric.hpp"

namespace lfid {

PatchTypeCatalog PatchTypeCatalog::standard() {
  PatchTypeCatalog c;
  const auto all = all_patch_types();
  c.entries.assign(all.begin(), all.end());
  c.selected = {PatchType::Centered80, PatchType::TopLeft, PatchType::BottomRight};
  return c;
}

bool PatchTypeCatalog::valid() const {
  const std::set<PatchType> cat(entries.begin(), entries.end());
  if (cat.size() != entries.size()) return false;
  const std::set<PatchType> sel(selected.begin(), selected.end());
  if (sel.size() != selected.size()) return false;
  return std::all_of(selected.begin(), selected.end(), [&](PatchType t) { return cat.count(t) != 0; });
}

void normalize_in_place(std::span<float> v) noexcept {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq <= 0.0) {
    const float u = static_cast<float>(1.0 / std::sqrt(static_cast<double>(v.size())));
    std::fill(v.begin(), v.end(), u);
    return;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

namespace {

void orientation_histogram(const Patch& patch, const DescriptorConfig& cfg, std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  const int side = kPatchSide;
  const double cell = static_cast<double>(side) / cfg.grid;
  const double bin_width = kTwoPi / cfg.bins;
  const auto& px = patch.pixels;
  for (int y = 1; y + 1 < side; ++y) {
    const int cy = std::min(cfg.grid - 1, static_cast<int>(y / cell));
    for (int x = 1; x + 1 < side; ++x) {
      const double gx = 0.5 * (static_cast<double>(px[y * side + x + 1]) - px[y * side + x - 1]);
      const double gy = 0.5 * (static_cast<double>(px[(y + 1) * side + x]) - px[(y - 1) * side + x]);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const int cx = std::min(cfg.grid - 1, static_cast<int>(x / cell));
      // Soft assignment between the two nearest bin centers.
      const double pos = wrap_two_pi(std::atan2(gy, gx)) / bin_width - 0.5;
      const double fl = std::floor(pos);
      const double frac = pos - fl;
      const int b0 = (static_cast<int>(fl) + cfg.bins) % cfg.bins;
      const int b1 = (b0 + 1) % cfg.bins;
      const std::size_t base = static_cast<std::size_t>(cy * cfg.grid + cx) * cfg.bins;
      out[base + b0] += static_cast<float>(mag * (1.0 - frac));
      out[base + b1] += static_cast<float>(mag * frac);
    }
  }
  normalize_in_place(out);
}

}  // namespace

Descriptor compute_descriptor(std::span<const Patch> patches, std::span<const PatchType> subset,
                              const DescriptorConfig& cfg) {
  if (patches.empty() && !subset.empty()) throw Error(ErrorCode::MissingPatchType, "no patches supplied");
  Descriptor d;
  d.patch_types.assign(subset.begin(), subset.end());
  d.dim = cfg.dim();
  d.values.assign(subset.size() * d.dim, 0.0f);
  for (std::size_t p = 0; p < subset.size(); ++p) {
    const auto it = std::find_if(patches.begin(), patches.end(),
                                 [&](const Patch& patch) { return patch.patch_type == subset[p]; });
    if (it == patches.end()) {
      throw Error(ErrorCode::MissingPatchType, std::string(patch_type_name(subset[p])) + " patch missing");
    }
    if (p > 0 && !(it->center == patches.front().center)) {
      throw Error(ErrorCode::InvalidArgument, "patches belong to different minutiae");
    }
    orientation_histogram(*it, cfg, std::span<float>(d.values).subspan(p * d.dim, d.dim));
  }
  return d;
}

DescriptorSet compute_descriptors(const GrayImage& img, std::span<const Minutia> minutiae,
                                  std::span<const PatchType> subset, const DescriptorConfig& cfg) {
  DescriptorSet out(std::vector<PatchType>(subset.begin(), subset.end()), cfg.dim(), minutiae.size());
  const double fill = img.mean_roi_intensity();
  // Each minutia writes its own slice of `out`.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(minutiae.size()); ++i) {
    std::vector<Patch> patches;
    patches.reserve(subset.size());
    for (PatchType t : subset) patches.push_back(extract_patch(img, minutiae[i], t, fill));
    const Descriptor d = compute_descriptor(patches, subset, cfg);
    std::copy(d.values.begin(), d.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(i * out.stride()));
  }
  return out;
}

double descriptor_similarity(const DescriptorView& a, const DescriptorView& b) {
  if (a.dim != b.dim || !std::equal(a.patch_types.begin(), a.patch_types.end(), b.patch_types.begin(),
                                    b.patch_types.end())) {
    throw Error(ErrorCode::PatchSetMismatch, "descriptors cover different patch types");
  }
  if (a.patch_types.empty()) throw Error(ErrorCode::PatchSetMismatch, "descriptors have no patch types");
  double sum = 0.0;
  for (std::size_t p = 0; p < a.patch_types.size(); ++p) {
    const auto va = a.vector(p);
    const auto vb = b.vector(p);
    sum += detail::cosine(va, vb, detail::norm(va), detail::norm(vb));
  }
  return sum / static_cast<double>(a.patch_types.size());
}

SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference) {
  return parallel::similarity_matrix(latent, reference);
}

std::vector<CandidatePair> select_top_pairs(const SimilarityMatrix& sim, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "top-N must be at least 1");
  std::vector<CandidatePair> all;
  all.reserve(sim.rows * sim.cols);
  for (std::size_t i = 0; i < sim.rows; ++i) {
    for (std::size_t j = 0; j < sim.cols; ++j) {
      all.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), sim(i, j)});
    }
  }
  auto better = [](const CandidatePair& a, const CandidatePair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.i1 != b.i1) return a.i1 < b.i1;
    return a.i2 < b.i2;
  };
  if (all.size() > n) {
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
  }
  std::sort(all.begin(), all.end(), better);
  return all;
}

DescriptorSet load_descriptor_sidecar(const std::filesystem::path& path, const std::string& source_id,
                                      std::size_t minutia_count, std::span<const PatchType> subset) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::map<std::pair<std::size_t, PatchType>, std::vector<float>> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string sid, idx, type, vec;
    if (!std::getline(ss, sid, ',') || !std::getline(ss, idx, ',') || !std::getline(ss, type, ',') ||
        !std::getline(ss, vec)) {
      throw Error(ErrorCode::MalformedPayload, path.string() + ":" + std::to_string(line_no) + ": bad sidecar line");
    }
    if (sid != source_id) continue;
    const auto t = parse_patch_type(type);
    if (!t) throw Error(ErrorCode::MalformedPayload, "unknown patch type '" + type + "'");
    std::vector<float> v;
    std::istringstream vs(vec);
    float x;
    while (vs >> x) v.push_back(x);
    if (v.empty() || (dim != 0 && v.size() != dim)) {
      throw Error(ErrorCode::MalformedPayload, path.string() + ":" + std::to_string(line_no) + ": bad vector length");
    }
    dim = v.size();
    rows[{std::stoul(idx), *t}] = std::move(v);
  }
  DescriptorSet out(std::vector<PatchType>(subset.begin(), subset.end()), dim, minutia_count);
  for (std::size_t i = 0; i < minutia_count; ++i) {
    for (std::size_t p = 0; p < subset.size(); ++p) {
      const auto it = rows.find({i, subset[p]});
      if (it == rows.end()) {
        throw Error(ErrorCode::MissingPatchType, "sidecar lacks minutia " + std::to_string(i) + " type " +
                                                     std::string(patch_type_name(subset[p])));
      }
      auto dst = out.mutable_vector(i, p);
      std::copy(it->second.begin(), it->second.end(), dst.begin());
      normalize_in_place(dst);
    }
  }
  return out;
}

void save_descriptor_sidecar(const std::filesystem::path& path, const std::string& source_id,
                             const DescriptorSet& d) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.precision(9);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const auto view = d.at(i);
    for (std::size_t p = 0; p < d.patch_types.size(); ++p) {
      out << source_id << ',' << i << ',' << patch_type_name(d.patch_types[p]) << ',';
      const auto v = view.vector(p);
      for (std::size_t k = 0; k < v.size(); ++k) out << (k ? " " : "") << v[k];
      out << '\n';
    }
  }
}

}  // namespace lfid
