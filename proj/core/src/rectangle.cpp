#include "cclb/rectangle.hpp"

#include <fmt/format.h>

#include <bit>

#include "cclb/caps.hpp"
#include "cclb/error.hpp"

namespace cclb {

std::size_t Rectangle::area() const noexcept {
  return static_cast<std::size_t>(std::popcount(rows_)) * static_cast<std::size_t>(std::popcount(cols_));
}

void check_enumeration_cap(std::size_t x_size, std::size_t y_size) {
  const std::size_t cap = caps().enum_side;
  require(x_size > 0 && y_size > 0, ErrorKind::Dimension, "rectangle enumeration needs positive sizes");
  require(x_size <= cap && y_size <= cap, ErrorKind::Capacity,
          fmt::format("rectangle enumeration over {}x{} exceeds the enumeration cap of {} per side", x_size, y_size,
                      cap));
}

std::size_t rectangle_count(std::size_t x_size, std::size_t y_size) {
  return ((std::size_t{1} << x_size) - 1) * ((std::size_t{1} << y_size) - 1) + 1;
}

void for_each_rectangle(std::size_t x_size, std::size_t y_size, const std::function<void(const Rectangle&)>& visit) {
  check_enumeration_cap(x_size, y_size);
  visit(Rectangle{});
  const Rectangle::Mask row_end = Rectangle::Mask{1} << x_size;
  const Rectangle::Mask col_end = Rectangle::Mask{1} << y_size;
  for (Rectangle::Mask rows = 1; rows < row_end; ++rows) {
    for (Rectangle::Mask cols = 1; cols < col_end; ++cols) visit(Rectangle(rows, cols));
  }
}

std::vector<Rectangle> enumerate_rectangles(std::size_t x_size, std::size_t y_size) {
  check_enumeration_cap(x_size, y_size);
  std::vector<Rectangle> out;
  out.reserve(rectangle_count(x_size, y_size));
  for_each_rectangle(x_size, y_size, [&](const Rectangle& r) { out.push_back(r); });
  return out;
}

}  // namespace cclb
