#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cclb/function.hpp"
#include "cclb/protocol.hpp"
#include "cclb/rational.hpp"

namespace cclb {

// "corpus:FAMILY,arg,..." with the prefix optional.
struct CorpusSpec {
  std::string family;
  std::vector<std::string> args;
};

inline constexpr std::string_view kCorpusPrefix = "corpus:";
inline constexpr std::size_t kMaxCorpusBits = 3;

bool is_corpus_spec(std::string_view text) noexcept;
CorpusSpec parse_corpus_spec(std::string_view text);

// Functions on n-bit inputs (2^n x 2^n, n <= 3).
PartialFunction equality(std::size_t n);
PartialFunction greater_than(std::size_t n);
PartialFunction disjointness(std::size_t n);
PartialFunction inner_product(std::size_t n);
PartialFunction and_function();
// Binary output space, every cell mapped to z.
PartialFunction constant(int z, std::size_t n = 1);
// 1 when the Hamming distance is at least n/2 + g, 0 when at most n/2 - g,
// undefined in between.
PartialFunction gap_hamming(std::size_t n, std::size_t g);

// Families EQ, GT, DISJ, IP (arg n), AND, CONST (z[, n]), GHD (n, g).
PartialFunction make_function(const CorpusSpec& spec);

// Kinds: uniform, uniform_on_domain, or a COMMDIST path.
InputDistribution make_distribution(std::string_view kind, const PartialFunction& f);

ProtocolTree trivial_const(int z);
// Sends the n bits of x (most significant first) and outputs x's low bit.
ProtocolTree send_x(std::size_t n = 1);
ProtocolTree send_y(std::size_t n = 1);
// Alice sends x flipped with probability p; the output is the sent bit.
ProtocolTree noisy_bit(const Rational& p);
// Sends all of x, then all of y, and outputs f (0 off the promise).
ProtocolTree exchange_all(const PartialFunction& f);
// Alice sends x; if it is 1 Bob sends y; outputs x AND y.
ProtocolTree and_protocol();

// Families trivial_const[,z], send_x[,n], send_y[,n], noisy_bit,p,
// exchange_all (needs f) and and_protocol.
ProtocolTree make_protocol(const CorpusSpec& spec, const PartialFunction* f = nullptr);

// EQ_1, EQ_2, AND_1, CONST_1, DISJ_2, GT_2, IP_2, GHD(2,1).
std::vector<PartialFunction> standard_corpus();

}  // namespace cclb
