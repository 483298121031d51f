#pragma once

#include <filesystem>
#include <string>

#include "lfid/scoring.hpp"

namespace lfid {

// Plain key = value file, '#' starts a comment. Recognized keys:
//
//   minutiae.top_n, texture.top_n
//   minutiae.second_order_threshold, minutiae.third_order_threshold (same for texture.)
//   minutiae.max_iterations, minutiae.tolerance (same for texture.)
//   directional_mu = 1/12 | pi/12
//   weights.mt1, weights.mt2, weights.tt
//
// Unknown keys and unparsable values raise InvalidArgument.
IdentificationConfig parse_identification_config(const std::string& text);
IdentificationConfig load_identification_config(const std::filesystem::path& path);

}  // namespace lfid
