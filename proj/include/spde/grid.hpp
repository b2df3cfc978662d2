#pragma once

#include "spde/errors.hpp"
#include "spde/linalg.hpp"

namespace spde {

/// Uniform 1-d grid including both endpoints.
struct Grid1D {
  double lo = -1.0;
  double hi = 1.0;
  int n = 3;

  double h() const { return (hi - lo) / (n - 1); }

  Vector points() const {
    if (n < 3) throw ValidationError("Grid1D requires n >= 3");
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = lo + (hi - lo) * i / (n - 1.0);
    return x;
  }

  /// Index of the grid node matching x, or -1.
  int index_of(double x, double tol = 1e-9) const {
    const double t = (x - lo) / h();
    const int i = static_cast<int>(std::lround(t));
    if (i < 0 || i >= n) return -1;
    return std::abs(lo + i * h() - x) <= tol ? i : -1;
  }
};

/// Uniform tensor grid on a square, both boundaries included. Nodes are
/// flattened with x fastest: idx = iy * nx + ix.
struct Grid2D {
  double lo = -1.0;
  double hi = 1.0;
  int nx = 3;
  int ny = 3;

  double hx() const { return (hi - lo) / (nx - 1); }
  double hy() const { return (hi - lo) / (ny - 1); }
  int count() const { return nx * ny; }

  Matrix points() const {
    if (nx < 3 || ny < 3) throw ValidationError("Grid2D requires nx, ny >= 3");
    Matrix p(count(), 2);
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        p(iy * nx + ix, 0) = lo + (hi - lo) * ix / (nx - 1.0);
        p(iy * nx + ix, 1) = lo + (hi - lo) * iy / (ny - 1.0);
      }
    return p;
  }

  int index_of(double x, double y, double tol = 1e-9) const {
    const int ix = static_cast<int>(std::lround((x - lo) / hx()));
    const int iy = static_cast<int>(std::lround((y - lo) / hy()));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
    if (std::abs(lo + ix * hx() - x) > tol || std::abs(lo + iy * hy() - y) > tol)
      return -1;
    return iy * nx + ix;
  }
};

}  // namespace spde
