#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cclb/error.hpp"

namespace cclb::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kBadInput = 2,
  kCapacity = 3,
  kSolverFailure = 4,
};

int exit_code(ErrorKind kind) noexcept;

struct RunConfig {
  std::string subcommand;
  std::string fn;              // corpus spec or COMMFN path
  std::string mu = "uniform";  // uniform, uniform_on_domain or COMMDIST path
  std::string prot;            // corpus spec or COMMPROT path
  double eps = 0.0;
  double delta = 0.5;
  std::string bounds = "prt,bprt";
  std::string mode = "dp";
  bool paper_exact = false;
  std::string override_spec;   // "Delta,T,k"
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  bool rational = false;
  std::string out;
  std::string only;
  bool perturb = false;
  bool mu_given = false;

  // Parameter error when a field is out of range for the subcommand.
  void validate() const;
};

// Entry point of the command-line tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cclb::cli
