#pragma once

#include <cstddef>
#include <string_view>

namespace cclb {

// Size limits for the exhaustive algorithms. Defaults keep every
// computation at desk scale; CCLB_CAPS can raise them, e.g.
//   CCLB_CAPS="enum_side=10,dp_trials=5000000"
// Values above the defaults are unsupported territory.
struct Caps {
  std::size_t enum_side = 8;             // max |X| and |Y| for rectangle enumeration
  std::size_t lp_float_vars = 50'000;
  std::size_t lp_float_rows = 5'000;
  std::size_t lp_rational_vars = 2'000;
  std::size_t lp_rational_rows = 2'000;
  std::size_t dp_trials = 1'000'000;     // T for the exact output-distribution DP
  std::size_t dp_universe = 16;          // |U| for the exact DP
  std::size_t grid_cells = 64;           // |X|*|Y| for strategy extraction

  static Caps defaults() { return {}; }
  // Defaults overridden by the CCLB_CAPS environment variable.
  static Caps from_env();
  // Parses "key=value,key=value" on top of the defaults.
  static Caps parse(std::string_view spec);
};

// Process-wide caps, initialised from the environment on first use.
const Caps& caps();

}  // namespace cclb
