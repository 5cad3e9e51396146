#include "cclb/protocol.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "cclb/error.hpp"

namespace cclb {

const char* to_string(Owner owner) noexcept {
  switch (owner) {
    case Owner::Alice: return "A";
    case Owner::Bob: return "B";
    case Owner::Public: return "P";
  }
  return "?";
}

ProtocolTree ProtocolTree::leaf(int output) {
  require(output >= 0, ErrorKind::Input, fmt::format("leaf output must be non-negative, got {}", output));
  ProtocolTree t;
  Node n;
  n.is_leaf = true;
  n.output = output;
  t.nodes_.push_back(std::move(n));
  t.finalize();
  return t;
}

ProtocolTree ProtocolTree::node(Owner owner, std::vector<Rational> p1, ProtocolTree zero, ProtocolTree one) {
  require(!p1.empty(), ErrorKind::Input, "node needs at least one send probability");
  if (owner == Owner::Public) {
    require(p1.size() == 1, ErrorKind::Input, fmt::format("public node takes 1 probability, got {}", p1.size()));
  }
  for (const auto& p : p1) {
    require(sgn(p) >= 0 && p <= 1, ErrorKind::Input,
            fmt::format("send probability {} outside [0, 1]", to_string(p)));
  }
  ProtocolTree t;
  Node n;
  n.is_leaf = false;
  n.owner = owner;
  for (const auto& p : p1) n.p1_approx.push_back(p.get_d());
  n.p1 = std::move(p1);
  n.zero = 1;
  n.one = 1 + zero.nodes_.size();
  t.nodes_.push_back(std::move(n));
  auto append = [&t](const ProtocolTree& sub) {
    const std::size_t offset = t.nodes_.size();
    for (Node m : sub.nodes_) {
      if (!m.is_leaf) {
        m.zero += offset;
        m.one += offset;
      }
      t.nodes_.push_back(std::move(m));
    }
  };
  append(zero);
  append(one);
  t.finalize();
  return t;
}

void ProtocolTree::finalize() {
  leaves_.clear();
  depth_ = 0;
  x_size_.reset();
  y_size_.reset();
  max_output_ = 0;
  std::function<void(std::size_t, std::string&)> visit = [&](std::size_t id, std::string& path) {
    Node& n = nodes_[id];
    if (n.is_leaf) {
      n.leaf_index = leaves_.size();
      leaves_.push_back({id, path, n.output});
      depth_ = std::max(depth_, path.size());
      max_output_ = std::max(max_output_, n.output);
      return;
    }
    auto note_size = [&](std::optional<std::size_t>& slot, const char* who) {
      if (slot && *slot != n.p1.size()) {
        fail(ErrorKind::Input, fmt::format("{} tables disagree on the input size ({} vs {})", who, *slot, n.p1.size()));
      }
      slot = n.p1.size();
    };
    if (n.owner == Owner::Alice) note_size(x_size_, "Alice");
    if (n.owner == Owner::Bob) note_size(y_size_, "Bob");
    const std::size_t zero = n.zero, one = n.one;
    path.push_back('0');
    visit(zero, path);
    path.back() = '1';
    visit(one, path);
    path.pop_back();
  };
  std::string path;
  visit(0, path);
}

void ProtocolTree::check_inputs(std::size_t x_size, std::size_t y_size) const {
  require(!x_size_ || *x_size_ == x_size, ErrorKind::Dimension,
          fmt::format("protocol expects |X| = {}, got {}", x_size_.value_or(0), x_size));
  require(!y_size_ || *y_size_ == y_size, ErrorKind::Dimension,
          fmt::format("protocol expects |Y| = {}, got {}", y_size_.value_or(0), y_size));
}

namespace {

template <Scalar T>
const T& send_one(const ProtocolTree::Node& n, std::size_t i) {
  if constexpr (is_exact_v<T>) return n.p1[i];
  else return n.p1_approx[i];
}

// Multiplies, along each root-leaf path, factor(node, bit) and returns the
// per-leaf products.
template <Scalar T, class Factor>
std::vector<T> path_products(const ProtocolTree& pi, Factor factor) {
  std::vector<T> out(pi.num_leaves(), T(0));
  std::function<void(std::size_t, const T&)> visit = [&](std::size_t id, const T& acc) {
    const auto& n = pi.nodes()[id];
    if (n.is_leaf) {
      out[n.leaf_index] = acc;
      return;
    }
    visit(n.zero, T(acc * factor(n, 0)));
    visit(n.one, T(acc * factor(n, 1)));
  };
  visit(0, T(1));
  return out;
}

template <Scalar T>
T bit_probability(const ProtocolTree::Node& n, std::size_t input, int bit) {
  require(input < n.p1.size(), ErrorKind::Dimension,
          fmt::format("input {} outside the {} table of size {}", input, to_string(n.owner), n.p1.size()));
  const T& p = send_one<T>(n, input);
  return bit ? p : T(T(1) - p);
}

template <Scalar T>
T positive_marginal(const InputDistribution& mu, bool along_x, std::size_t index) {
  const std::size_t bound = along_x ? mu.x_size() : mu.y_size();
  require(index < bound, ErrorKind::Dimension,
          fmt::format("{} = {} outside [0, {})", along_x ? "x" : "y", index, bound));
  T m = along_x ? mu.x_marginal<T>(index) : mu.y_marginal<T>(index);
  require(is_positive(m, 0.0), ErrorKind::Conditioning,
          fmt::format("cannot condition on {} = {}: zero marginal mass", along_x ? "x" : "y", index));
  return m;
}

}  // namespace

template <Scalar T>
std::vector<T> leaf_probabilities(const ProtocolTree& pi, std::size_t x, std::size_t y) {
  return path_products<T>(pi, [&](const ProtocolTree::Node& n, int bit) {
    switch (n.owner) {
      case Owner::Alice: return bit_probability<T>(n, x, bit);
      case Owner::Bob: return bit_probability<T>(n, y, bit);
      case Owner::Public: break;
    }
    return bit_probability<T>(n, 0, bit);
  });
}

template <Scalar T>
std::vector<T> alice_factor(const ProtocolTree& pi, std::size_t x) {
  return path_products<T>(pi, [&](const ProtocolTree::Node& n, int bit) {
    if (n.owner == Owner::Bob) return T(1);
    return bit_probability<T>(n, n.owner == Owner::Alice ? x : 0, bit);
  });
}

template <Scalar T>
std::vector<T> bob_factor(const ProtocolTree& pi, std::size_t y) {
  return path_products<T>(pi, [&](const ProtocolTree::Node& n, int bit) {
    if (n.owner != Owner::Bob) return T(1);
    return bit_probability<T>(n, y, bit);
  });
}

template <Scalar T>
TranscriptDistribution<T> transcript_distribution(const ProtocolTree& pi, std::size_t x, std::size_t y) {
  return {FiniteDistribution<T>(leaf_probabilities<T>(pi, x, y)), TranscriptSource::Joint, x, y};
}

template <Scalar T>
TranscriptDistribution<T> marginal_x(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x) {
  pi.check_inputs(mu.x_size(), mu.y_size());
  const T mx = positive_marginal<T>(mu, true, x);
  std::vector<T> out(pi.num_leaves(), T(0));
  for (std::size_t y = 0; y < mu.y_size(); ++y) {
    const T& m = mu.mass<T>(x, y);
    if (!is_positive(m, 0.0)) continue;
    const T w = m / mx;
    const auto joint = leaf_probabilities<T>(pi, x, y);
    for (std::size_t u = 0; u < out.size(); ++u) out[u] += w * joint[u];
  }
  return {FiniteDistribution<T>(std::move(out)), TranscriptSource::MarginalX, x, 0};
}

template <Scalar T>
TranscriptDistribution<T> marginal_y(const ProtocolTree& pi, const InputDistribution& mu, std::size_t y) {
  pi.check_inputs(mu.x_size(), mu.y_size());
  const T my = positive_marginal<T>(mu, false, y);
  std::vector<T> out(pi.num_leaves(), T(0));
  for (std::size_t x = 0; x < mu.x_size(); ++x) {
    const T& m = mu.mass<T>(x, y);
    if (!is_positive(m, 0.0)) continue;
    const T w = m / my;
    const auto joint = leaf_probabilities<T>(pi, x, y);
    for (std::size_t u = 0; u < out.size(); ++u) out[u] += w * joint[u];
  }
  return {FiniteDistribution<T>(std::move(out)), TranscriptSource::MarginalY, 0, y};
}

template <Scalar T>
Factorization<T> factorization(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x, std::size_t y) {
  pi.check_inputs(mu.x_size(), mu.y_size());
  const T mx = positive_marginal<T>(mu, true, x);
  const T my = positive_marginal<T>(mu, false, y);
  Factorization<T> out;
  out.p_a = alice_factor<T>(pi, x);
  out.p_b = bob_factor<T>(pi, y);
  const std::size_t n = pi.num_leaves();
  out.q_a.assign(n, T(0));
  out.q_b.assign(n, T(0));
  // Pi_x(u) = p_a(u) * sum_y' mu(y'|x) p_b(u; y'), so q_a is that average
  // wherever p_a(u) > 0; likewise for q_b.
  for (std::size_t yy = 0; yy < mu.y_size(); ++yy) {
    const T& m = mu.mass<T>(x, yy);
    if (!is_positive(m, 0.0)) continue;
    const T w = m / mx;
    const auto pb = bob_factor<T>(pi, yy);
    for (std::size_t u = 0; u < n; ++u) out.q_a[u] += w * pb[u];
  }
  for (std::size_t xx = 0; xx < mu.x_size(); ++xx) {
    const T& m = mu.mass<T>(xx, y);
    if (!is_positive(m, 0.0)) continue;
    const T w = m / my;
    const auto pa = alice_factor<T>(pi, xx);
    for (std::size_t u = 0; u < n; ++u) out.q_b[u] += w * pa[u];
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (!is_positive(out.p_a[u], 0.0)) out.q_a[u] = T(0);
    if (!is_positive(out.p_b[u], 0.0)) out.q_b[u] = T(0);
  }
  return out;
}

template <Scalar T>
InformationCostReport information_cost_report(const ProtocolTree& pi, const InputDistribution& mu) {
  pi.check_inputs(mu.x_size(), mu.y_size());
  const std::size_t nx = mu.x_size(), ny = mu.y_size(), nu = pi.num_leaves();

  std::vector<std::vector<T>> joint(nx * ny);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) joint[x * ny + y] = leaf_probabilities<T>(pi, x, y);
  }

  // Entropy form from the law of (X, Y, leaf).
  std::vector<double> pxyu(nx * ny * nu, 0.0), pxu(nx * nu, 0.0), pyu(ny * nu, 0.0);
  std::vector<double> px(nx, 0.0), py(ny, 0.0), pxy(nx * ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      const double m = as_double(mu.mass<T>(x, y));
      pxy[x * ny + y] = m;
      px[x] += m;
      py[y] += m;
      for (std::size_t u = 0; u < nu; ++u) {
        const double p = as_double(T(mu.mass<T>(x, y) * joint[x * ny + y][u]));
        pxyu[(x * ny + y) * nu + u] = p;
        pxu[x * nu + u] += p;
        pyu[y * nu + u] += p;
      }
    }
  }
  const double h_xy = entropy_bits(pxy);
  const double h_xyu = entropy_bits(pxyu);
  InformationCostReport report;
  report.alice_term = h_xy + entropy_bits(pyu) - h_xyu - entropy_bits(py);
  report.bob_term = h_xy + entropy_bits(pxu) - h_xyu - entropy_bits(px);
  report.from_entropies = std::max(0.0, report.alice_term + report.bob_term);

  // Divergence form: I(X;Pi|Y) = E D(Pi_xy || Pi_y), I(Y;Pi|X) = E D(Pi_xy || Pi_x).
  double divergences = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    std::optional<FiniteDistribution<T>> pi_x;
    for (std::size_t y = 0; y < ny; ++y) {
      const T& m = mu.mass<T>(x, y);
      if (!is_positive(m, 0.0)) continue;
      if (!pi_x) pi_x = marginal_x<T>(pi, mu, x).dist;
      const FiniteDistribution<T> pi_xy(joint[x * ny + y]);
      const auto pi_y = marginal_y<T>(pi, mu, y).dist;
      divergences += as_double(m) * (kl_divergence(pi_xy, *pi_x) + kl_divergence(pi_xy, pi_y));
    }
  }
  report.from_divergences = divergences;
  require(std::fabs(report.from_entropies - report.from_divergences) <= 1e-9, ErrorKind::Solver,
          fmt::format("information cost forms disagree: {:.17g} vs {:.17g}", report.from_entropies,
                      report.from_divergences));
  return report;
}

template <Scalar T>
T protocol_error(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu) {
  check_compatible(f, mu);
  pi.check_inputs(f.x_size(), f.y_size());
  T err(0);
  for (std::size_t x = 0; x < f.x_size(); ++x) {
    for (std::size_t y = 0; y < f.y_size(); ++y) {
      const T& m = mu.mass<T>(x, y);
      if (!f.defined(x, y) || !is_positive(m, 0.0)) continue;
      const auto probs = leaf_probabilities<T>(pi, x, y);
      T wrong(0);
      for (std::size_t u = 0; u < probs.size(); ++u) {
        if (pi.leaves()[u].output != f.value(x, y)) wrong += probs[u];
      }
      err += m * wrong;
    }
  }
  return err;
}

template <Scalar T>
std::vector<T> output_distribution(const ProtocolTree& pi, std::size_t x, std::size_t y, std::size_t z_size) {
  require(static_cast<std::size_t>(pi.max_output()) < z_size, ErrorKind::Dimension,
          fmt::format("protocol outputs {} but the output space has size {}", pi.max_output(), z_size));
  const auto probs = leaf_probabilities<T>(pi, x, y);
  std::vector<T> out(z_size, T(0));
  for (std::size_t u = 0; u < probs.size(); ++u) out[static_cast<std::size_t>(pi.leaves()[u].output)] += probs[u];
  return out;
}

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  // Next token: "(", ")", "=" or a maximal run of other non-space chars.
  std::string_view next() {
    skip_space();
    if (pos_ >= text_.size()) return {};
    const char c = text_[pos_];
    if (c == '(' || c == ')' || c == '=') return text_.substr(pos_++, 1);
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == '=' || d == '#') break;
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::string_view peek() {
    const std::size_t saved = pos_;
    auto tok = next();
    pos_ = saved;
    return tok;
  }

  void expect(std::string_view want) {
    const auto got = next();
    if (got != want) {
      fail(ErrorKind::Input, fmt::format("protocol: expected '{}' but found '{}' at line {}", want,
                                         got.empty() ? "end of input" : got, line()));
    }
  }

  std::size_t line() const {
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos_), '\n'));
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

ProtocolTree parse_tree(Lexer& lex, std::size_t depth) {
  require(depth < 4096, ErrorKind::Input, "protocol nesting too deep");
  lex.expect("(");
  const auto kind = lex.next();
  if (kind == "leaf") {
    lex.expect("z");
    lex.expect("=");
    const auto tok = lex.next();
    int z = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), z);
    require(ec == std::errc{} && ptr == tok.data() + tok.size(), ErrorKind::Input,
            fmt::format("protocol: bad leaf output '{}'", tok));
    lex.expect(")");
    return ProtocolTree::leaf(z);
  }
  require(kind == "node", ErrorKind::Input,
          fmt::format("protocol: expected 'node' or 'leaf', found '{}' at line {}", kind, lex.line()));
  std::optional<Owner> owner;
  std::optional<std::vector<Rational>> p1;
  std::optional<ProtocolTree> zero;
  std::optional<ProtocolTree> one;
  while (lex.peek() != ")") {
    const std::string key(lex.next());
    require(!key.empty(), ErrorKind::Input, "protocol: unexpected end of input inside a node");
    lex.expect("=");
    auto once = [&](bool seen) {
      require(!seen, ErrorKind::Input, fmt::format("protocol: repeated attribute '{}'", key));
    };
    if (key == "owner") {
      once(owner.has_value());
      const auto tok = lex.next();
      if (tok == "A") owner = Owner::Alice;
      else if (tok == "B") owner = Owner::Bob;
      else if (tok == "P") owner = Owner::Public;
      else fail(ErrorKind::Input, fmt::format("protocol: unknown owner '{}'", tok));
    } else if (key == "p1") {
      once(p1.has_value());
      lex.expect("(");
      std::vector<Rational> values;
      while (lex.peek() != ")") {
        const auto tok = lex.next();
        require(!tok.empty(), ErrorKind::Input, "protocol: unterminated p1 table");
        values.push_back(parse_rational(tok));
      }
      lex.expect(")");
      p1 = std::move(values);
    } else if (key == "zero") {
      once(zero.has_value());
      zero = parse_tree(lex, depth + 1);
    } else if (key == "one") {
      once(one.has_value());
      one = parse_tree(lex, depth + 1);
    } else {
      fail(ErrorKind::Input, fmt::format("protocol: unknown node attribute '{}'", key));
    }
  }
  lex.expect(")");
  require(owner && p1 && zero && one, ErrorKind::Input, "protocol: node needs owner, p1, zero and one");
  return ProtocolTree::node(*owner, std::move(*p1), std::move(*zero), std::move(*one));
}

std::string format_probability(const Rational& q) {
  if (auto dec = exact_decimal(q)) return *dec;
  return to_string(q);
}

void format_node(const ProtocolTree& pi, std::size_t id, std::size_t indent, std::string& out) {
  const auto& n = pi.nodes()[id];
  if (n.is_leaf) {
    out += fmt::format("(leaf z={})", n.output);
    return;
  }
  out += fmt::format("(node owner={} p1=(", to_string(n.owner));
  for (std::size_t i = 0; i < n.p1.size(); ++i) {
    if (i) out += ' ';
    out += format_probability(n.p1[i]);
  }
  out += ")";
  const std::string pad(indent + 2, ' ');
  out += "\n" + pad + "zero=";
  format_node(pi, n.zero, indent + 2, out);
  out += "\n" + pad + "one=";
  format_node(pi, n.one, indent + 2, out);
  out += ")";
}

}  // namespace

ProtocolTree parse_protocol(std::string_view text) {
  Lexer lex(text);
  lex.expect("COMMPROT");
  lex.expect("1");
  auto tree = parse_tree(lex, 0);
  const auto rest = lex.next();
  require(rest.empty(), ErrorKind::Input, fmt::format("protocol: trailing input '{}'", rest));
  return tree;
}

std::string format_protocol(const ProtocolTree& pi) {
  std::string out = "COMMPROT 1\n";
  format_node(pi, 0, 0, out);
  out += '\n';
  return out;
}

ProtocolTree load_protocol(const std::string& path) { return parse_protocol(read_text_file(path)); }

#define CCLB_INSTANTIATE_PROTOCOL(T)                                                                             \
  template std::vector<T> leaf_probabilities<T>(const ProtocolTree&, std::size_t, std::size_t);                 \
  template std::vector<T> alice_factor<T>(const ProtocolTree&, std::size_t);                                    \
  template std::vector<T> bob_factor<T>(const ProtocolTree&, std::size_t);                                      \
  template TranscriptDistribution<T> transcript_distribution<T>(const ProtocolTree&, std::size_t, std::size_t); \
  template TranscriptDistribution<T> marginal_x<T>(const ProtocolTree&, const InputDistribution&, std::size_t); \
  template TranscriptDistribution<T> marginal_y<T>(const ProtocolTree&, const InputDistribution&, std::size_t); \
  template Factorization<T> factorization<T>(const ProtocolTree&, const InputDistribution&, std::size_t,        \
                                             std::size_t);                                                      \
  template InformationCostReport information_cost_report<T>(const ProtocolTree&, const InputDistribution&);     \
  template T protocol_error<T>(const ProtocolTree&, const PartialFunction&, const InputDistribution&);          \
  template std::vector<T> output_distribution<T>(const ProtocolTree&, std::size_t, std::size_t, std::size_t);

CCLB_INSTANTIATE_PROTOCOL(double)
CCLB_INSTANTIATE_PROTOCOL(Rational)

#undef CCLB_INSTANTIATE_PROTOCOL

}  // namespace cclb
