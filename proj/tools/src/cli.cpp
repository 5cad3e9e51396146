#include "cclb_cli/cli.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cclb/acceptance.hpp"
#include "cclb/bounds.hpp"
#include "cclb/compression.hpp"
#include "cclb/corpus.hpp"
#include "cclb/function.hpp"
#include "cclb/protocol.hpp"

namespace cclb::cli {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Capacity: return kCapacity;
    case ErrorKind::Solver: return kSolverFailure;
    default: return kBadInput;
  }
}

void RunConfig::validate() const {
  require(eps >= 0.0 && eps < 1.0, ErrorKind::Parameter, fmt::format("--eps must lie in [0, 1), got {}", eps));
  require(delta > 0.0 && delta < 1.0, ErrorKind::Parameter, fmt::format("--delta must lie in (0, 1), got {}", delta));
  require(mode == "dp" || mode == "mc", ErrorKind::Parameter, fmt::format("--mode must be dp or mc, got '{}'", mode));
  require(!(paper_exact && !override_spec.empty()), ErrorKind::Parameter,
          "--paper-exact and --override are mutually exclusive");
  if (subcommand == "bounds") require(!fn.empty(), ErrorKind::Parameter, "bounds needs --fn");
  if (subcommand == "ic" || subcommand == "compress") {
    require(!prot.empty(), ErrorKind::Parameter, subcommand + " needs --prot");
  }
  if (subcommand == "compress" && mode == "mc") require(samples > 0, ErrorKind::Parameter, "--samples must be positive");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

PartialFunction load_fn(const std::string& src) {
  if (is_corpus_spec(src)) return make_function(parse_corpus_spec(src));
  return load_function(src);
}

ProtocolTree load_prot(const std::string& src, const PartialFunction* f) {
  if (is_corpus_spec(src)) return make_protocol(parse_corpus_spec(src), f);
  return load_protocol(src);
}

// Stand-in function when none is given: every cell maps to 0 over the
// protocol's output alphabet.
PartialFunction placeholder_function(const ProtocolTree& pi) {
  const std::size_t nx = pi.x_size().value_or(2);
  const std::size_t ny = pi.y_size().value_or(2);
  const std::size_t nz = std::max<std::size_t>(2, static_cast<std::size_t>(pi.max_output()) + 1);
  return PartialFunction(nx, ny, nz, std::vector<int>(nx * ny, 0), "none");
}

// Writes to a sibling temporary and renames, so a failure never leaves a
// partial report behind.
void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    out.flush();
    return;
  }
  const std::string tmp = fmt::format("{}.tmp.{}", cfg.out, static_cast<long>(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorKind::Input, fmt::format("cannot write '{}'", tmp));
    f << text;
    f.close();
    if (!f) {
      std::remove(tmp.c_str());
      fail(ErrorKind::Input, fmt::format("cannot write '{}'", tmp));
    }
  }
  if (std::rename(tmp.c_str(), cfg.out.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorKind::Input, fmt::format("cannot rename '{}' to '{}'", tmp, cfg.out));
  }
}

template <Scalar T>
std::string bounds_report(const RunConfig& cfg, const PartialFunction& f, const InputDistribution& mu) {
  const T eps = is_exact_v<T> ? scalar_from<T>(to_rational(cfg.eps)) : scalar_from<T>(cfg.eps);
  std::string csv = bound_csv_header() + "\n";
  auto labels = [&f] {
    std::vector<int> z;
    for (int v = 0; v < static_cast<int>(f.z_size()); ++v) {
      if (f.preimage_size(v) > 0) z.push_back(v);
    }
    return z;
  };
  for (const auto& name : split(cfg.bounds, ',')) {
    if (name == "prt") {
      csv += bound_csv_row(prt<T>(f, eps), f) + "\n";
    } else if (name == "bprt") {
      csv += bound_csv_row(bprt<T>(f, eps), f) + "\n";
    } else if (name == "bprt-mu") {
      csv += bound_csv_row(bprt_mu<T>(f, mu, eps), f) + "\n";
    } else if (name == "srec") {
      for (int z : labels()) csv += bound_csv_row(srec<T>(f, eps, z), f) + "\n";
    } else if (name == "rect") {
      for (int z : labels()) {
        csv += bound_csv_row(cfg.mu_given ? rect_dual<T>(f, eps, z, mu) : rect_dual<T>(f, eps, z), f) + "\n";
      }
    } else if (name == "disc") {
      BoundResult<T> r;
      r.bound_name = "disc";
      r.value = discrepancy<T>(f, mu);
      r.primal_objective = r.value;
      r.dual_objective = r.value;
      csv += bound_csv_row(r, f) + "\n";
    } else {
      fail(ErrorKind::Parameter, fmt::format("unknown bound '{}' (expected prt, bprt, bprt-mu, srec, rect, disc)", name));
    }
  }
  return csv;
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  const auto f = load_fn(cfg.fn);
  const auto mu = make_distribution(cfg.mu, f);
  check_compatible(f, mu);
  emit(cfg, cfg.rational ? bounds_report<Rational>(cfg, f, mu) : bounds_report<double>(cfg, f, mu), out);
  return kOk;
}

int cmd_ic(const RunConfig& cfg, std::ostream& out) {
  std::optional<PartialFunction> f;
  if (!cfg.fn.empty()) f = load_fn(cfg.fn);
  const auto pi = load_prot(cfg.prot, f ? &*f : nullptr);
  const auto dims = f ? *f : placeholder_function(pi);
  const auto mu = make_distribution(cfg.mu, dims);
  pi.check_inputs(mu.x_size(), mu.y_size());
  const auto rep = cfg.rational ? information_cost_report<Rational>(pi, mu) : information_cost_report<double>(pi, mu);
  std::string error;
  if (f) {
    error = cfg.rational ? to_string(protocol_error<Rational>(pi, *f, mu))
                         : fmt::format("{:.17g}", protocol_error<double>(pi, *f, mu));
  }
  std::string csv = "ic,ic_divergence,difference,alice_term,bob_term,depth,leaves,protocol_error\n";
  csv += fmt::format("{:.17g},{:.17g},{:.3g},{:.17g},{:.17g},{},{},{}\n", rep.from_entropies, rep.from_divergences,
                     std::fabs(rep.from_entropies - rep.from_divergences), rep.alice_term, rep.bob_term, pi.depth(),
                     pi.num_leaves(), error);
  emit(cfg, csv, out);
  return kOk;
}

ParameterOverride parse_override(const std::string& spec) {
  const auto parts = split(spec, ',');
  require(parts.size() == 3, ErrorKind::Parameter, fmt::format("--override takes Delta,T,k, got '{}'", spec));
  ParameterOverride ov;
  try {
    std::size_t used = 0;
    ov.delta_exp = std::stol(parts[0], &used);
    require(used == parts[0].size(), ErrorKind::Parameter, "bad Delta");
    ov.trials = std::stod(parts[1], &used);
    require(used == parts[1].size(), ErrorKind::Parameter, "bad T");
    ov.hash_bits = std::stol(parts[2], &used);
    require(used == parts[2].size(), ErrorKind::Parameter, "bad k");
  } catch (const std::logic_error&) {
    fail(ErrorKind::Parameter, fmt::format("--override takes three integers Delta,T,k, got '{}'", spec));
  }
  return ov;
}

int cmd_compress(const RunConfig& cfg, std::ostream& out) {
  std::optional<PartialFunction> given;
  if (!cfg.fn.empty()) given = load_fn(cfg.fn);
  const auto pi = load_prot(cfg.prot, given ? &*given : nullptr);
  const auto f = given ? *given : placeholder_function(pi);
  const auto mu = make_distribution(cfg.mu, f);
  const double ic = information_cost<double>(pi, mu);
  std::optional<ParameterOverride> ov;
  if (!cfg.override_spec.empty()) ov = parse_override(cfg.override_spec);
  const auto params = compression_parameters(cfg.delta, ic, pi.num_leaves(), ov);
  VerifyOptions opts;
  opts.engine = cfg.mode == "mc" ? Engine::MC : Engine::DP;
  opts.samples = cfg.samples;
  opts.seed = cfg.seed;
  const auto rep = verify_compression(pi, f, mu, params, opts);
  emit(cfg, format_compression_csv(rep), out);
  return rep.pass() ? kOk : kVerificationFailed;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  AcceptanceOptions opts;
  opts.seed = cfg.seed;
  opts.perturb = cfg.perturb;
  opts.only = split(cfg.only, ',');
  std::string text;
  bool ok = true;
  const auto results = run_acceptance(opts, [&](const AcceptanceResult& r) {
    const auto line = format_acceptance_line(r) + "\n";
    if (cfg.out.empty()) out << line << std::flush;
    text += line;
  });
  for (const auto& r : results) ok = ok && r.pass();
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass(); });
  const auto summary = fmt::format("{} of {} checks passed\n", passed, results.size());
  if (cfg.out.empty()) out << summary;
  else emit(cfg, text + summary, out);
  return ok ? kOk : kVerificationFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Lower bounds and compression checks for two-party protocols", "cclb"};
  app.require_subcommand(1);
  auto* bounds = app.add_subcommand("bounds", "Compute LP lower bounds of a function");
  auto* ic = app.add_subcommand("ic", "Information cost of a protocol");
  auto* compress = app.add_subcommand("compress", "Verify the zero-communication compression of a protocol");
  auto* verify = app.add_subcommand("verify", "Run the acceptance checks");

  for (auto* sub : {bounds, ic, compress}) {
    sub->add_option("--fn", cfg.fn, "Function: corpus:FAMILY,args or a COMMFN file");
    sub->add_option_function<std::string>(
        "--mu",
        [&cfg](const std::string& v) {
          cfg.mu = v;
          cfg.mu_given = true;
        },
        "Distribution: uniform, uniform_on_domain or a COMMDIST file");
    sub->add_flag("--rational", cfg.rational, "Exact rational arithmetic");
  }
  for (auto* sub : {ic, compress}) sub->add_option("--prot", cfg.prot, "Protocol: corpus:FAMILY,args or a COMMPROT file");
  bounds->add_option("--eps", cfg.eps, "Error parameter in [0, 1)");
  bounds->add_option("--bound", cfg.bounds, "Comma-separated: prt,bprt,bprt-mu,srec,rect,disc");
  compress->add_option("--delta", cfg.delta, "Compression parameter in (0, 1)");
  compress->add_option("--mode", cfg.mode, "Engine: dp (exact) or mc (Monte Carlo)");
  compress->add_flag("--paper-exact", cfg.paper_exact, "Derive Delta, T, k from delta and the information cost");
  compress->add_option("--override", cfg.override_spec, "Explicit parameters Delta,T,k");
  compress->add_option("--samples", cfg.samples, "Monte Carlo runs per input");
  for (auto* sub : {compress, verify}) sub->add_option("--seed", cfg.seed, "Random seed");
  verify->add_option("--only", cfg.only, "Comma-separated check ids");
  verify->add_flag("--self-test-perturb", cfg.perturb, "Corrupt one bound value; the run must fail");
  for (auto* sub : {bounds, ic, compress, verify}) sub->add_option("--out", cfg.out, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "cclb: " << e.what() << "\n";
    return kBadInput;
  }

  for (auto* sub : {bounds, ic, compress, verify}) {
    if (sub->parsed()) cfg.subcommand = sub->get_name();
  }
  try {
    cfg.validate();
    if (cfg.subcommand == "bounds") return cmd_bounds(cfg, out);
    if (cfg.subcommand == "ic") return cmd_ic(cfg, out);
    if (cfg.subcommand == "compress") return cmd_compress(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const Error& e) {
    err << "cclb: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << "cclb: out of memory\n";
    return kCapacity;
  }
}

}  // namespace cclb::cli
