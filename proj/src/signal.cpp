#include "vpal/signal.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace vpal {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

GridSignal::GridSignal(Shape s, double fill) : data(numel(s), fill), shape(std::move(s)) {}

GridSignal::GridSignal(Shape s, std::vector<double> values)
    : data(std::move(values)), shape(std::move(s)) {
  if (numel(shape) != data.size()) {
    throw ShapeError("GridSignal: shape " + to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

GridSignal GridSignal::vector(std::vector<double> values) {
  Shape s{values.size()};
  return GridSignal(std::move(s), std::move(values));
}

bool GridSignal::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

GridSignal GridSignal::reshaped(Shape s) const { return GridSignal(std::move(s), data); }

GridSignal zeros_like(const GridSignal& x) { return GridSignal(x.shape, 0.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

void axpy(double a, const GridSignal& x, GridSignal& y) {
  require_same_size(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] += a * x.data[i];
}

void scale(GridSignal& x, double a) {
  for (double& v : x.data) v *= a;
}

GridSignal operator+(const GridSignal& a, const GridSignal& b) {
  require_same_size(a, b, "operator+");
  GridSignal r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.data[i] += b.data[i];
  return r;
}

GridSignal operator-(const GridSignal& a, const GridSignal& b) {
  require_same_size(a, b, "operator-");
  GridSignal r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.data[i] -= b.data[i];
  return r;
}

GridSignal operator*(double a, const GridSignal& x) {
  GridSignal r = x;
  scale(r, a);
  return r;
}

GridSignal operator-(const GridSignal& x) { return -1.0 * x; }

void require_same_size(const GridSignal& a, const GridSignal& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": size mismatch " + to_string(a.shape) + " vs " +
                     to_string(b.shape));
  }
}

}  // namespace vpal
