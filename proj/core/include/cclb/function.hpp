#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cclb/rational.hpp"

namespace cclb {

// A two-party function X x Y -> Z, possibly partial. Cells outside the
// promise are Undefined.
class PartialFunction {
 public:
  static constexpr int kUndefined = -1;

  PartialFunction(std::size_t x_size, std::size_t y_size, std::size_t z_size, std::vector<int> table,
                  std::string name = {});

  std::size_t x_size() const noexcept { return x_size_; }
  std::size_t y_size() const noexcept { return y_size_; }
  std::size_t z_size() const noexcept { return z_size_; }
  std::size_t cells() const noexcept { return x_size_ * y_size_; }
  const std::string& name() const noexcept { return name_; }

  bool defined(std::size_t x, std::size_t y) const { return table_[x * y_size_ + y] != kUndefined; }
  // Output index or kUndefined.
  int value(std::size_t x, std::size_t y) const { return table_[x * y_size_ + y]; }
  std::optional<int> at(std::size_t x, std::size_t y) const;

  // Number of defined cells with output z.
  std::size_t preimage_size(int z) const;
  std::size_t defined_cells() const;

  friend bool operator==(const PartialFunction& a, const PartialFunction& b) {
    return a.x_size_ == b.x_size_ && a.y_size_ == b.y_size_ && a.z_size_ == b.z_size_ && a.table_ == b.table_;
  }

 private:
  std::size_t x_size_;
  std::size_t y_size_;
  std::size_t z_size_;
  std::vector<int> table_;
  std::string name_;
};

// Probability mass over X x Y, held exactly and as doubles.
class InputDistribution {
 public:
  // Renormalises exactly when the total is within 1e-9 of one; rejects
  // anything further off.
  static InputDistribution from_weights(std::size_t x_size, std::size_t y_size, const std::vector<double>& mass);
  static InputDistribution from_exact(std::size_t x_size, std::size_t y_size, std::vector<Rational> mass);
  static InputDistribution uniform(std::size_t x_size, std::size_t y_size);

  std::size_t x_size() const noexcept { return x_size_; }
  std::size_t y_size() const noexcept { return y_size_; }

  template <Scalar T>
  const T& mass(std::size_t x, std::size_t y) const {
    if constexpr (is_exact_v<T>) return exact_[x * y_size_ + y];
    else return approx_[x * y_size_ + y];
  }

  template <Scalar T>
  T x_marginal(std::size_t x) const;
  template <Scalar T>
  T y_marginal(std::size_t y) const;

  const std::vector<double>& masses() const noexcept { return approx_; }
  const std::vector<Rational>& exact_masses() const noexcept { return exact_; }

  bool is_product() const;

  friend bool operator==(const InputDistribution& a, const InputDistribution& b) {
    return a.x_size_ == b.x_size_ && a.y_size_ == b.y_size_ && a.exact_ == b.exact_;
  }

 private:
  InputDistribution(std::size_t x_size, std::size_t y_size, std::vector<Rational> exact);

  std::size_t x_size_;
  std::size_t y_size_;
  std::vector<Rational> exact_;
  std::vector<double> approx_;
};

void check_compatible(const PartialFunction& f, const InputDistribution& mu);

// COMMFN 1 text format.
PartialFunction parse_function(std::string_view text, std::string name = {});
std::string format_function(const PartialFunction& f);
PartialFunction load_function(const std::string& path);

// COMMDIST 1 text format.
InputDistribution parse_distribution(std::string_view text);
std::string format_distribution(const InputDistribution& mu);
InputDistribution load_distribution(const std::string& path);

// Whole-file read shared by the loaders; missing files are input errors.
std::string read_text_file(const std::string& path);

}  // namespace cclb
