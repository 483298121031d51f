#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "lfid/core.hpp"

namespace lfid {

// Binary template format, little-endian throughout:
//
//   "LFRT" | u16 version | u8 kind (1 minutiae, 2 texture) | u8 variant/side
//   then tagged sections: u32 tag (fourcc) | u32 length | payload
//     META  source id, bounds, block size
//     MINU  minutiae as (f64 x, f64 y, f64 alpha, u8 kind)
//     ORIF  orientation field (minutiae templates only)
//     DESC  patch types, dim, count, f32 values
inline constexpr std::uint16_t kTemplateFormatVersion = 1;

using AnyTemplate = std::variant<MinutiaeTemplate, TextureTemplate>;

std::vector<std::uint8_t> encode_template(const MinutiaeTemplate& t);
std::vector<std::uint8_t> encode_template(const TextureTemplate& t);
AnyTemplate decode_template(std::span<const std::uint8_t> bytes);

void save_template(const MinutiaeTemplate& t, const std::filesystem::path& path);
void save_template(const TextureTemplate& t, const std::filesystem::path& path);
AnyTemplate load_template(const std::filesystem::path& path);

/// Loads and requires a specific template kind (MalformedPayload otherwise).
MinutiaeTemplate load_minutiae_template(const std::filesystem::path& path);
TextureTemplate load_texture_template(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lfid
