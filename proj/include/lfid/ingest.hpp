#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lfid/core.hpp"

namespace lfid {

/// 8-bit grayscale image with a same-sized ROI mask. Pixel (x, y) is column x,
/// row y; pixel centers sit at integer coordinates.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> roi;  // 1 = inside ROI

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool in_roi(int x, int y) const noexcept { return roi[static_cast<std::size_t>(y) * width + x] != 0; }
  double mean_roi_intensity() const noexcept;
};

/// Reads binary (P5) or ASCII (P2) PGM, or 8-bit grayscale PNG. The ROI is set to
/// the full image.
GrayImage read_gray_image(const std::filesystem::path& path);
/// Reads an image and applies `mask_path` (nonzero pixels = inside ROI).
GrayImage read_gray_image(const std::filesystem::path& path, const std::filesystem::path& mask_path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

inline constexpr int kDefaultBlockSize = 16;
inline constexpr double kDefaultCoherenceThreshold = 0.2;
inline constexpr int kPatchSide = 160;

/// Block ridge orientation from the doubled-angle average of Sobel gradients.
/// Blocks with coherence below `coherence_threshold`, or with less than half of
/// their pixels inside the ROI, are masked out. Throws EmptyRoi if none remain.
OrientationField estimate_orientation_field(const GrayImage& img, int block_size = kDefaultBlockSize,
                                            double coherence_threshold = kDefaultCoherenceThreshold);

/// Two virtual minutiae (O and O + π) at each masked-in block off the grid border.
std::vector<Minutia> latent_virtual_minutiae(const OrientationField& of);
/// One virtual minutia (direction O) at each masked-in block off the grid border.
std::vector<Minutia> reference_virtual_minutiae(const OrientationField& of);

struct PatchWindow {
  double size = 160.0;      // side length in source pixels
  double offset_x = 0.0;    // window center in the minutia frame (+x along the minutia)
  double offset_y = 0.0;
};

PatchWindow patch_window(PatchType t) noexcept;

struct Patch {
  PatchType patch_type = PatchType::Centered160;
  std::vector<float> pixels;  // kPatchSide × kPatchSide, row-major
  Minutia center;
};

/// Rotation-normalized crop: the minutia direction maps to the patch +x axis.
/// Out-of-image samples take `fill`.
Patch extract_patch(const GrayImage& img, const Minutia& m, PatchType t, double fill);
/// As above, filling with the mean ROI intensity.
Patch extract_patch(const GrayImage& img, const Minutia& m, PatchType t);

}  // namespace lfid
