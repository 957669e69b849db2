#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpal {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Real-valued samples on a grid. data is stored row-major; shape is one of
// [n], [h, w] or [c, h, w] in practice but any rank is accepted.
struct GridSignal {
  std::vector<double> data;
  Shape shape;

  GridSignal() = default;
  explicit GridSignal(Shape s, double fill = 0.0);
  GridSignal(Shape s, std::vector<double> values);

  static GridSignal vector(std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }

  bool all_finite() const;
  GridSignal reshaped(Shape s) const;
};

GridSignal zeros_like(const GridSignal& x);

double dot(std::span<const double> a, std::span<const double> b);
inline double dot(const GridSignal& a, const GridSignal& b) { return dot(a.span(), b.span()); }
double norm2(std::span<const double> a);
inline double norm2(const GridSignal& a) { return norm2(a.span()); }
double norm1(std::span<const double> a);
inline double norm1(const GridSignal& a) { return norm1(a.span()); }

// y += a * x
void axpy(double a, const GridSignal& x, GridSignal& y);
void scale(GridSignal& x, double a);

GridSignal operator+(const GridSignal& a, const GridSignal& b);
GridSignal operator-(const GridSignal& a, const GridSignal& b);
GridSignal operator*(double a, const GridSignal& x);
GridSignal operator-(const GridSignal& x);

// Throws ShapeError naming `what` when a.size() != b.size().
void require_same_size(const GridSignal& a, const GridSignal& b, const char* what);

}  // namespace vpal
