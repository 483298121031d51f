#include "lfid/config.hpp"

#include <sstream>

#include "lfid/error.hpp"
#include "lfid/template_io.hpp"

namespace lfid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "config: bad value for " + key + ": '" + v + "'");
}

bool apply_matcher_key(MatcherConfig& c, const std::string& key, const std::string& v) {
  if (key == "top_n") {
    const double n = number(key, v);
    if (n < 1.0) throw Error(ErrorCode::InvalidArgument, "config: top_n must be >= 1");
    c.top_n = static_cast<std::size_t>(n);
  } else if (key == "second_order_threshold") {
    c.second_order_threshold = number(key, v);
  } else if (key == "third_order_threshold") {
    c.third_order_threshold = number(key, v);
  } else if (key == "max_iterations") {
    c.max_iterations = static_cast<int>(number(key, v));
  } else if (key == "tolerance") {
    c.tolerance = number(key, v);
  } else {
    return false;
  }
  return true;
}

}  // namespace

IdentificationConfig parse_identification_config(const std::string& text) {
  IdentificationConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    if (key.rfind("minutiae.", 0) == 0) {
      known = apply_matcher_key(cfg.minutiae, key.substr(9), value);
    } else if (key.rfind("texture.", 0) == 0) {
      known = apply_matcher_key(cfg.texture, key.substr(8), value);
    } else if (key == "weights.mt1") {
      cfg.weights.mt1 = number(key, value);
      known = true;
    } else if (key == "weights.mt2") {
      cfg.weights.mt2 = number(key, value);
      known = true;
    } else if (key == "weights.tt") {
      cfg.weights.tt = number(key, value);
      known = true;
    } else if (key == "directional_mu") {
      SigmoidParams p;
      if (value == "1/12") {
        p = kDirectionalSigmoid;
      } else if (value == "pi/12") {
        p = kDirectionalSigmoidPiOver12;
      } else {
        throw Error(ErrorCode::InvalidArgument, "config: directional_mu must be 1/12 or pi/12");
      }
      cfg.minutiae.compat.directional = p;
      cfg.texture.compat.directional = p;
      known = true;
    }
    if (!known) throw Error(ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
  }
  if (cfg.weights.mt1 < 0.0 || cfg.weights.mt2 < 0.0 || cfg.weights.tt < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "config: fusion weights must be >= 0");
  }
  return cfg;
}

IdentificationConfig load_identification_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_identification_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace lfid
