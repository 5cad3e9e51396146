#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cclb {

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  std::uint64_t mc_samples = 10'000'000;     // dp-mc
  std::uint64_t extract_seeds = 100'000;     // strategy
  unsigned threads = 0;
  bool perturb = false;  // corrupt one bound value so the chain check must fail
  std::vector<std::string> only;  // empty: every check
};

struct AcceptanceResult {
  std::string id;
  std::string title;
  bool checks_pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;

  bool within_budget() const noexcept { return seconds <= budget_seconds; }
  bool pass() const noexcept { return checks_pass && within_budget(); }
};

// experiment-exact, experiment-bounds, bad-set, chain, duality, dp-mc, compression-exact,
// ic-vs-bprt, strategy, conditioning, ic.
const std::vector<std::string>& acceptance_ids();

// Runs the selected checks in order; Parameter error on an unknown id.
std::vector<AcceptanceResult> run_acceptance(const AcceptanceOptions& options,
                                             const std::function<void(const AcceptanceResult&)>& on_result = {});

// "PASS id (1.23 s / 10 s): detail"
std::string format_acceptance_line(const AcceptanceResult& r);

}  // namespace cclb
