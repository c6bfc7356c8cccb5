#ifndef PROM_GRID_HPP
#define PROM_GRID_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "prom/errors.hpp"

namespace prom {

using Complex = std::complex<double>;

// 2D grid dimensions. Grids are stored row-major in vectorized order,
// element (r, c) at index r * width + c.
struct GridShape {
  int height = 0;
  int width = 0;

  GridShape() = default;
  GridShape(int h, int w) : height(h), width(w) {
    if (h < 1 || w < 1) {
      throw ValidationError("GridShape: height and width must be >= 1");
    }
  }

  std::int64_t elements() const { return std::int64_t(height) * width; }

  bool operator==(const GridShape& o) const {
    return height == o.height && width == o.width;
  }
  bool operator!=(const GridShape& o) const { return !(*this == o); }
};

// Complex-valued grid: either k-space data or a complex image.
struct ComplexGrid {
  GridShape shape;
  std::vector<Complex> data;

  ComplexGrid() = default;
  ComplexGrid(GridShape s, std::vector<Complex> d) : shape(s), data(std::move(d)) {
    check_size();
  }

  static ComplexGrid zeros(GridShape s) {
    return ComplexGrid(s, std::vector<Complex>(static_cast<std::size_t>(s.elements())));
  }

  Complex& at(int r, int c) { return data[std::size_t(r) * shape.width + c]; }
  const Complex& at(int r, int c) const { return data[std::size_t(r) * shape.width + c]; }

  void check_size() const {
    if (std::int64_t(data.size()) != shape.elements()) {
      throw ValidationError("ComplexGrid: data length does not match shape");
    }
  }

  bool all_finite() const {
    for (const Complex& z : data) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }
};

// Real-valued grid: magnitude images, reconstruction targets, loss gradients.
struct RealGrid {
  GridShape shape;
  std::vector<double> data;

  RealGrid() = default;
  RealGrid(GridShape s, std::vector<double> d) : shape(s), data(std::move(d)) {
    check_size();
  }

  static RealGrid zeros(GridShape s) {
    return RealGrid(s, std::vector<double>(static_cast<std::size_t>(s.elements())));
  }

  double& at(int r, int c) { return data[std::size_t(r) * shape.width + c]; }
  const double& at(int r, int c) const { return data[std::size_t(r) * shape.width + c]; }

  void check_size() const {
    if (std::int64_t(data.size()) != shape.elements()) {
      throw ValidationError("RealGrid: data length does not match shape");
    }
  }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

}  // namespace prom

#endif  // PROM_GRID_HPP
