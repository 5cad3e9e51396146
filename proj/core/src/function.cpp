#include "cclb/function.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cclb/error.hpp"

namespace cclb {

namespace {

std::vector<std::vector<std::string>> tokenize_lines(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  return lines;
}

std::size_t parse_size(const std::string& tok, const char* what) {
  std::size_t pos = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == tok.size() && value > 0 && tok.front() != '-', ErrorKind::Input,
          fmt::format("{} must be a positive integer, got '{}'", what, tok));
  return value;
}

void expect_header(const std::vector<std::vector<std::string>>& lines, std::string_view magic) {
  require(!lines.empty() && lines[0].size() == 2 && lines[0][0] == magic && lines[0][1] == "1", ErrorKind::Input,
          fmt::format("missing '{} 1' header", magic));
}

}  // namespace

PartialFunction::PartialFunction(std::size_t x_size, std::size_t y_size, std::size_t z_size, std::vector<int> table,
                                 std::string name)
    : x_size_(x_size), y_size_(y_size), z_size_(z_size), table_(std::move(table)), name_(std::move(name)) {
  require(x_size_ > 0 && y_size_ > 0 && z_size_ > 0, ErrorKind::Dimension, "function sizes must be positive");
  require(table_.size() == x_size_ * y_size_, ErrorKind::Dimension, "function table has the wrong number of cells");
  bool any_defined = false;
  for (int v : table_) {
    if (v == kUndefined) continue;
    require(v >= 0 && static_cast<std::size_t>(v) < z_size_, ErrorKind::Parameter,
            fmt::format("function output {} outside [0, {})", v, z_size_));
    any_defined = true;
  }
  require(any_defined, ErrorKind::Degenerate, "function has no defined cell");
}

std::optional<int> PartialFunction::at(std::size_t x, std::size_t y) const {
  const int v = value(x, y);
  if (v == kUndefined) return std::nullopt;
  return v;
}

std::size_t PartialFunction::preimage_size(int z) const {
  return static_cast<std::size_t>(std::count(table_.begin(), table_.end(), z));
}

std::size_t PartialFunction::defined_cells() const {
  return cells() - static_cast<std::size_t>(std::count(table_.begin(), table_.end(), kUndefined));
}

InputDistribution::InputDistribution(std::size_t x_size, std::size_t y_size, std::vector<Rational> exact)
    : x_size_(x_size), y_size_(y_size), exact_(std::move(exact)) {
  approx_.reserve(exact_.size());
  for (const auto& q : exact_) approx_.push_back(q.get_d());
}

InputDistribution InputDistribution::from_exact(std::size_t x_size, std::size_t y_size, std::vector<Rational> mass) {
  require(x_size > 0 && y_size > 0, ErrorKind::Dimension, "distribution sizes must be positive");
  require(mass.size() == x_size * y_size, ErrorKind::Dimension, "distribution has the wrong number of cells");
  Rational sum(0);
  for (const auto& q : mass) {
    require(sgn(q) >= 0, ErrorKind::Parameter, "negative input probability");
    sum += q;
  }
  require(sgn(sum) > 0, ErrorKind::Parameter, "input distribution has zero total mass");
  const double gap = std::fabs(sum.get_d() - 1.0);
  require(gap <= 1e-9, ErrorKind::Parameter, fmt::format("input distribution sums to {} (off by more than 1e-9)", sum.get_d()));
  if (sum != 1) {
    for (auto& q : mass) q /= sum;
  }
  return InputDistribution(x_size, y_size, std::move(mass));
}

InputDistribution InputDistribution::from_weights(std::size_t x_size, std::size_t y_size,
                                                  const std::vector<double>& mass) {
  std::vector<Rational> exact;
  exact.reserve(mass.size());
  for (double m : mass) {
    require(std::isfinite(m), ErrorKind::Parameter, "non-finite input probability");
    exact.push_back(to_rational(m));
  }
  return from_exact(x_size, y_size, std::move(exact));
}

InputDistribution InputDistribution::uniform(std::size_t x_size, std::size_t y_size) {
  require(x_size > 0 && y_size > 0, ErrorKind::Dimension, "distribution sizes must be positive");
  const Rational cell(1, static_cast<unsigned long>(x_size * y_size));
  return InputDistribution(x_size, y_size, std::vector<Rational>(x_size * y_size, cell));
}

template <Scalar T>
T InputDistribution::x_marginal(std::size_t x) const {
  T sum(0);
  for (std::size_t y = 0; y < y_size_; ++y) sum += mass<T>(x, y);
  return sum;
}

template <Scalar T>
T InputDistribution::y_marginal(std::size_t y) const {
  T sum(0);
  for (std::size_t x = 0; x < x_size_; ++x) sum += mass<T>(x, y);
  return sum;
}

template double InputDistribution::x_marginal<double>(std::size_t) const;
template Rational InputDistribution::x_marginal<Rational>(std::size_t) const;
template double InputDistribution::y_marginal<double>(std::size_t) const;
template Rational InputDistribution::y_marginal<Rational>(std::size_t) const;

bool InputDistribution::is_product() const {
  for (std::size_t x = 0; x < x_size_; ++x) {
    const Rational px = x_marginal<Rational>(x);
    for (std::size_t y = 0; y < y_size_; ++y) {
      if (mass<Rational>(x, y) != px * y_marginal<Rational>(y)) return false;
    }
  }
  return true;
}

void check_compatible(const PartialFunction& f, const InputDistribution& mu) {
  require(f.x_size() == mu.x_size() && f.y_size() == mu.y_size(), ErrorKind::Dimension,
          fmt::format("function is {}x{} but distribution is {}x{}", f.x_size(), f.y_size(), mu.x_size(), mu.y_size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Input, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PartialFunction parse_function(std::string_view text, std::string name) {
  const auto lines = tokenize_lines(text);
  expect_header(lines, "COMMFN");
  require(lines.size() >= 2 && lines[1].size() == 3, ErrorKind::Input, "COMMFN: expected 'x_size y_size z_size'");
  const std::size_t xs = parse_size(lines[1][0], "x_size");
  const std::size_t ys = parse_size(lines[1][1], "y_size");
  const std::size_t zs = parse_size(lines[1][2], "z_size");
  require(lines.size() == 2 + xs, ErrorKind::Input, fmt::format("COMMFN: expected {} table rows", xs));
  std::vector<int> table;
  table.reserve(xs * ys);
  for (std::size_t x = 0; x < xs; ++x) {
    const auto& row = lines[2 + x];
    require(row.size() == ys, ErrorKind::Input, fmt::format("COMMFN: row {} needs {} entries", x, ys));
    for (const auto& tok : row) {
      if (tok == "*") {
        table.push_back(PartialFunction::kUndefined);
        continue;
      }
      std::size_t pos = 0;
      int v = -1;
      try {
        v = std::stoi(tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      require(pos == tok.size() && v >= 0 && static_cast<std::size_t>(v) < zs, ErrorKind::Input,
              fmt::format("COMMFN: entry '{}' is not '*' or an integer in [0, {})", tok, zs));
      table.push_back(v);
    }
  }
  return PartialFunction(xs, ys, zs, std::move(table), std::move(name));
}

std::string format_function(const PartialFunction& f) {
  std::string out = fmt::format("COMMFN 1\n{} {} {}\n", f.x_size(), f.y_size(), f.z_size());
  for (std::size_t x = 0; x < f.x_size(); ++x) {
    for (std::size_t y = 0; y < f.y_size(); ++y) {
      if (y) out += ' ';
      out += f.defined(x, y) ? std::to_string(f.value(x, y)) : std::string("*");
    }
    out += '\n';
  }
  return out;
}

PartialFunction load_function(const std::string& path) { return parse_function(read_text_file(path), path); }

InputDistribution parse_distribution(std::string_view text) {
  const auto lines = tokenize_lines(text);
  expect_header(lines, "COMMDIST");
  require(lines.size() >= 2 && lines[1].size() == 2, ErrorKind::Input, "COMMDIST: expected 'x_size y_size'");
  const std::size_t xs = parse_size(lines[1][0], "x_size");
  const std::size_t ys = parse_size(lines[1][1], "y_size");
  require(lines.size() == 2 + xs, ErrorKind::Input, fmt::format("COMMDIST: expected {} rows", xs));
  std::vector<Rational> mass;
  mass.reserve(xs * ys);
  for (std::size_t x = 0; x < xs; ++x) {
    const auto& row = lines[2 + x];
    require(row.size() == ys, ErrorKind::Input, fmt::format("COMMDIST: row {} needs {} entries", x, ys));
    for (const auto& tok : row) mass.push_back(parse_rational(tok));
  }
  return InputDistribution::from_exact(xs, ys, std::move(mass));
}

std::string format_distribution(const InputDistribution& mu) {
  std::string out = fmt::format("COMMDIST 1\n{} {}\n", mu.x_size(), mu.y_size());
  for (std::size_t x = 0; x < mu.x_size(); ++x) {
    for (std::size_t y = 0; y < mu.y_size(); ++y) {
      if (y) out += ' ';
      const auto& q = mu.mass<Rational>(x, y);
      if (auto dec = exact_decimal(q)) out += *dec;
      else out += fmt::format("{:.17g}", q.get_d());
    }
    out += '\n';
  }
  return out;
}

InputDistribution load_distribution(const std::string& path) { return parse_distribution(read_text_file(path)); }

}  // namespace cclb
