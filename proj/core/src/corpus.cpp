#include "cclb/corpus.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <functional>

#include "cclb/error.hpp"

namespace cclb {

namespace {

void check_bits(std::size_t n) {
  require(n >= 1, ErrorKind::Parameter, "corpus functions need n >= 1");
  require(n <= kMaxCorpusBits, ErrorKind::Capacity,
          fmt::format("n = {} exceeds the corpus cap of {} bits per side", n, kMaxCorpusBits));
}

PartialFunction tabulate(std::size_t n, std::string name, const std::function<int(unsigned, unsigned)>& rule) {
  check_bits(n);
  const std::size_t side = std::size_t{1} << n;
  std::vector<int> table(side * side);
  for (unsigned x = 0; x < side; ++x) {
    for (unsigned y = 0; y < side; ++y) table[x * side + y] = rule(x, y);
  }
  return PartialFunction(side, side, 2, std::move(table), std::move(name));
}

long parse_int(const std::string& token, std::string_view what) {
  long v = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  require(ec == std::errc() && ptr == end && !token.empty(), ErrorKind::Input,
          fmt::format("corpus: {} must be an integer, got '{}'", what, token));
  return v;
}

std::size_t parse_size(const std::string& token, std::string_view what) {
  const long v = parse_int(token, what);
  require(v >= 0, ErrorKind::Parameter, fmt::format("corpus: {} must be non-negative, got {}", what, v));
  return static_cast<std::size_t>(v);
}

void check_arity(const CorpusSpec& s, std::size_t lo, std::size_t hi) {
  require(s.args.size() >= lo && s.args.size() <= hi, ErrorKind::Input,
          lo == hi ? fmt::format("corpus: {} takes {} argument(s), got {}", s.family, lo, s.args.size())
                   : fmt::format("corpus: {} takes {} to {} arguments, got {}", s.family, lo, hi, s.args.size()));
}

std::string upper(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

std::size_t bits_for(std::size_t size) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < size) ++b;
  return b;
}

// Deterministic node on bit `bit` (from the top, of `bits`) of the owner's input.
ProtocolTree bit_node(Owner owner, std::size_t size, std::size_t bits, std::size_t bit, ProtocolTree zero,
                      ProtocolTree one) {
  std::vector<Rational> p1(size);
  for (std::size_t v = 0; v < size; ++v) p1[v] = (v >> (bits - 1 - bit)) & 1u;
  return ProtocolTree::node(owner, std::move(p1), std::move(zero), std::move(one));
}

// Tree that reveals `bits` bits of the owner's input, prefix `value` so far,
// then continues with `tail(value)`.
ProtocolTree reveal(Owner owner, std::size_t size, std::size_t bits, std::size_t bit, std::size_t value,
                    const std::function<ProtocolTree(std::size_t)>& tail) {
  if (bit == bits) return tail(value);
  return bit_node(owner, size, bits, bit, reveal(owner, size, bits, bit + 1, value << 1, tail),
                  reveal(owner, size, bits, bit + 1, (value << 1) | 1u, tail));
}

}  // namespace

bool is_corpus_spec(std::string_view text) noexcept { return text.substr(0, kCorpusPrefix.size()) == kCorpusPrefix; }

CorpusSpec parse_corpus_spec(std::string_view text) {
  if (is_corpus_spec(text)) text.remove_prefix(kCorpusPrefix.size());
  CorpusSpec spec;
  std::size_t start = 0;
  bool first = true;
  while (true) {
    const auto comma = text.find(',', start);
    std::string token(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    require(!token.empty(), ErrorKind::Input, fmt::format("corpus: empty field in '{}'", text));
    if (first) spec.family = std::move(token);
    else spec.args.push_back(std::move(token));
    first = false;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return spec;
}

PartialFunction equality(std::size_t n) {
  return tabulate(n, fmt::format("EQ_{}", n), [](unsigned x, unsigned y) { return x == y ? 1 : 0; });
}

PartialFunction greater_than(std::size_t n) {
  return tabulate(n, fmt::format("GT_{}", n), [](unsigned x, unsigned y) { return x > y ? 1 : 0; });
}

PartialFunction disjointness(std::size_t n) {
  return tabulate(n, fmt::format("DISJ_{}", n), [](unsigned x, unsigned y) { return (x & y) == 0 ? 1 : 0; });
}

PartialFunction inner_product(std::size_t n) {
  return tabulate(n, fmt::format("IP_{}", n), [](unsigned x, unsigned y) { return std::popcount(x & y) & 1; });
}

PartialFunction and_function() {
  return tabulate(1, "AND_1", [](unsigned x, unsigned y) { return static_cast<int>(x & y); });
}

PartialFunction constant(int z, std::size_t n) {
  require(z == 0 || z == 1, ErrorKind::Parameter, fmt::format("CONST takes z in {{0, 1}}, got {}", z));
  return tabulate(n, fmt::format("CONST_{}", z), [z](unsigned, unsigned) { return z; });
}

PartialFunction gap_hamming(std::size_t n, std::size_t g) {
  const double half = static_cast<double>(n) / 2.0;
  const double gap = static_cast<double>(g);
  return tabulate(n, fmt::format("GHD({},{})", n, g), [half, gap](unsigned x, unsigned y) {
    const double d = std::popcount(x ^ y);
    if (d >= half + gap) return 1;
    if (d <= half - gap) return 0;
    return PartialFunction::kUndefined;
  });
}

PartialFunction make_function(const CorpusSpec& spec) {
  const std::string fam = upper(spec.family);
  auto bits = [&](std::size_t i) { return parse_size(spec.args[i], "n"); };
  if (fam == "EQ" || fam == "GT" || fam == "DISJ" || fam == "IP") {
    check_arity(spec, 1, 1);
    const std::size_t n = bits(0);
    if (fam == "EQ") return equality(n);
    if (fam == "GT") return greater_than(n);
    if (fam == "DISJ") return disjointness(n);
    return inner_product(n);
  }
  if (fam == "AND") {
    check_arity(spec, 0, 1);
    if (!spec.args.empty()) require(bits(0) == 1, ErrorKind::Parameter, "AND is defined on 1-bit inputs only");
    return and_function();
  }
  if (fam == "CONST") {
    check_arity(spec, 0, 2);
    const int z = spec.args.empty() ? 1 : static_cast<int>(parse_int(spec.args[0], "z"));
    return constant(z, spec.args.size() > 1 ? bits(1) : 1);
  }
  if (fam == "GHD") {
    check_arity(spec, 2, 2);
    return gap_hamming(bits(0), parse_size(spec.args[1], "g"));
  }
  fail(ErrorKind::Input, fmt::format("corpus: unknown function family '{}'", spec.family));
}

InputDistribution make_distribution(std::string_view kind, const PartialFunction& f) {
  if (is_corpus_spec(kind)) kind.remove_prefix(kCorpusPrefix.size());
  if (kind == "uniform") return InputDistribution::uniform(f.x_size(), f.y_size());
  if (kind == "uniform_on_domain") {
    const std::size_t defined = f.defined_cells();
    require(defined > 0, ErrorKind::Degenerate, "uniform_on_domain: the promise is empty");
    std::vector<Rational> mass(f.cells(), Rational(0));
    for (std::size_t x = 0; x < f.x_size(); ++x) {
      for (std::size_t y = 0; y < f.y_size(); ++y) {
        if (f.defined(x, y)) mass[x * f.y_size() + y] = Rational(1, static_cast<unsigned long>(defined));
      }
    }
    return InputDistribution::from_exact(f.x_size(), f.y_size(), std::move(mass));
  }
  return load_distribution(std::string(kind));
}

ProtocolTree trivial_const(int z) { return ProtocolTree::leaf(z); }

ProtocolTree send_x(std::size_t n) {
  check_bits(n);
  const std::size_t side = std::size_t{1} << n;
  return reveal(Owner::Alice, side, n, 0, 0, [](std::size_t x) { return ProtocolTree::leaf(static_cast<int>(x & 1u)); });
}

ProtocolTree send_y(std::size_t n) {
  check_bits(n);
  const std::size_t side = std::size_t{1} << n;
  return reveal(Owner::Bob, side, n, 0, 0, [](std::size_t y) { return ProtocolTree::leaf(static_cast<int>(y & 1u)); });
}

ProtocolTree noisy_bit(const Rational& p) {
  require(sgn(p) >= 0 && p <= 1, ErrorKind::Parameter, fmt::format("noisy_bit: p = {} outside [0, 1]", to_string(p)));
  return ProtocolTree::node(Owner::Alice, {p, Rational(1 - p)}, ProtocolTree::leaf(0), ProtocolTree::leaf(1));
}

ProtocolTree exchange_all(const PartialFunction& f) {
  const std::size_t bx = bits_for(f.x_size());
  const std::size_t by = bits_for(f.y_size());
  auto output = [&f](std::size_t x, std::size_t y) {
    if (x >= f.x_size() || y >= f.y_size() || !f.defined(x, y)) return ProtocolTree::leaf(0);
    return ProtocolTree::leaf(f.value(x, y));
  };
  auto tree = reveal(Owner::Alice, f.x_size(), bx, 0, 0, [&](std::size_t x) {
    return reveal(Owner::Bob, f.y_size(), by, 0, 0, [&](std::size_t y) { return output(x, y); });
  });
  // A single-cell side sends nothing; make sure tables still match f.
  tree.check_inputs(f.x_size(), f.y_size());
  return tree;
}

ProtocolTree and_protocol() {
  return ProtocolTree::node(
      Owner::Alice, {Rational(0), Rational(1)}, ProtocolTree::leaf(0),
      ProtocolTree::node(Owner::Bob, {Rational(0), Rational(1)}, ProtocolTree::leaf(0), ProtocolTree::leaf(1)));
}

ProtocolTree make_protocol(const CorpusSpec& spec, const PartialFunction* f) {
  const std::string& fam = spec.family;
  if (fam == "trivial_const") {
    check_arity(spec, 0, 1);
    return trivial_const(spec.args.empty() ? 1 : static_cast<int>(parse_int(spec.args[0], "z")));
  }
  if (fam == "send_x" || fam == "send_y") {
    check_arity(spec, 0, 1);
    const std::size_t n = spec.args.empty() ? 1 : parse_size(spec.args[0], "n");
    return fam == "send_x" ? send_x(n) : send_y(n);
  }
  if (fam == "noisy_bit") {
    check_arity(spec, 1, 1);
    return noisy_bit(parse_rational(spec.args[0]));
  }
  if (fam == "exchange_all") {
    check_arity(spec, 0, 0);
    require(f != nullptr, ErrorKind::Input, "exchange_all needs a function (--fn)");
    return exchange_all(*f);
  }
  if (fam == "and_protocol" || fam == "and") {
    check_arity(spec, 0, 0);
    return and_protocol();
  }
  fail(ErrorKind::Input, fmt::format("corpus: unknown protocol family '{}'", spec.family));
}

std::vector<PartialFunction> standard_corpus() {
  return {equality(1),     equality(2),     and_function(),  constant(1),
          disjointness(2), greater_than(2), inner_product(2), gap_hamming(2, 1)};
}

}  // namespace cclb
