#pragma once

#include <compare>

namespace papireg {

// Integer image coordinate: u is the column, v the row.
struct Pixel {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct GridShape {
  int rows = 0;
  int cols = 0;

  int size() const { return rows * cols; }
  int flat(Pixel p) const { return p.v * cols + p.u; }
  Pixel unflat(int index) const { return {index % cols, index / cols}; }
  bool contains(Pixel p) const { return p.u >= 0 && p.v >= 0 && p.u < cols && p.v < rows; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

}  // namespace papireg
