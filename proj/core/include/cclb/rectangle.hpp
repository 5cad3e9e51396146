#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace cclb {

// A combinatorial rectangle A x B as two bit masks. Any product with an
// empty side is stored as the single canonical empty rectangle.
class Rectangle {
 public:
  using Mask = std::uint32_t;

  constexpr Rectangle() = default;
  constexpr Rectangle(Mask rows, Mask cols) : rows_(rows), cols_(cols) {
    if (rows_ == 0 || cols_ == 0) rows_ = cols_ = 0;
  }

  constexpr Mask rows() const noexcept { return rows_; }
  constexpr Mask cols() const noexcept { return cols_; }
  constexpr bool empty() const noexcept { return rows_ == 0; }
  constexpr bool contains(std::size_t x, std::size_t y) const noexcept {
    return ((rows_ >> x) & 1u) && ((cols_ >> y) & 1u);
  }
  std::size_t area() const noexcept;

  friend constexpr bool operator==(const Rectangle&, const Rectangle&) = default;
  friend constexpr auto operator<=>(const Rectangle&, const Rectangle&) = default;

 private:
  Mask rows_ = 0;
  Mask cols_ = 0;
};

// (2^x - 1)(2^y - 1) + 1: every nonempty product plus the empty rectangle.
std::size_t rectangle_count(std::size_t x_size, std::size_t y_size);

// Visits the empty rectangle first, then nonempty products ordered by
// (row mask, column mask). Throws a capacity error past the enumeration cap.
void for_each_rectangle(std::size_t x_size, std::size_t y_size, const std::function<void(const Rectangle&)>& visit);

std::vector<Rectangle> enumerate_rectangles(std::size_t x_size, std::size_t y_size);

void check_enumeration_cap(std::size_t x_size, std::size_t y_size);

}  // namespace cclb
