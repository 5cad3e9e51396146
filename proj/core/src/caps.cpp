#include "cclb/caps.hpp"

#include <charconv>
#include <cstdlib>
#include <string>

#include "cclb/error.hpp"

namespace cclb {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Solver: return "solver error";
    case ErrorKind::Conditioning: return "conditioning error";
    case ErrorKind::Degenerate: return "degenerate-input error";
  }
  return "error";
}

Caps Caps::parse(std::string_view spec) {
  Caps out;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const auto item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    require(eq != std::string_view::npos, ErrorKind::Input,
            "CCLB_CAPS entry without '=': " + std::string(item));
    const auto key = item.substr(0, eq);
    const auto text = item.substr(eq + 1);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    require(ec == std::errc{} && ptr == text.data() + text.size() && value > 0, ErrorKind::Input,
            "CCLB_CAPS value is not a positive integer: " + std::string(item));
    if (key == "enum_side") out.enum_side = value;
    else if (key == "lp_float_vars") out.lp_float_vars = value;
    else if (key == "lp_float_rows") out.lp_float_rows = value;
    else if (key == "lp_rational_vars") out.lp_rational_vars = value;
    else if (key == "lp_rational_rows") out.lp_rational_rows = value;
    else if (key == "dp_trials") out.dp_trials = value;
    else if (key == "dp_universe") out.dp_universe = value;
    else if (key == "grid_cells") out.grid_cells = value;
    else fail(ErrorKind::Input, "unknown CCLB_CAPS key: " + std::string(key));
  }
  require(out.enum_side <= 16, ErrorKind::Input, "enum_side cannot exceed 16 (mask width)");
  return out;
}

Caps Caps::from_env() {
  const char* env = std::getenv("CCLB_CAPS");
  return env ? parse(env) : Caps{};
}

const Caps& caps() {
  static const Caps instance = Caps::from_env();
  return instance;
}

}  // namespace cclb
