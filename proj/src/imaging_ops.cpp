#include "vpal/imaging_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vpal {

FiniteDifference1D::FiniteDifference1D(std::size_t n) : LinearOperator(Shape{n}, Shape{n}) {
  if (n == 0) throw ShapeError("FiniteDifference1D: empty signal");
}

GridSignal FiniteDifference1D::apply(const GridSignal& x) const {
  check_input(x);
  const std::size_t n = x.size();
  GridSignal out(out_shape());
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = x[i + 1] - x[i];
  return out;
}

GridSignal FiniteDifference1D::adjoint(const GridSignal& v) const {
  check_output(v);
  const std::size_t n = v.size();
  GridSignal out(in_shape());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out[i] -= v[i];
    out[i + 1] += v[i];
  }
  return out;
}

FiniteDifference2D::FiniteDifference2D(std::size_t h, std::size_t w)
    : LinearOperator(Shape{h, w}, Shape{2, h, w}), h_(h), w_(w) {
  if (h == 0 || w == 0) throw ShapeError("FiniteDifference2D: empty image");
}

GridSignal FiniteDifference2D::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  const std::size_t plane = h_ * w_;
  for (std::size_t r = 0; r < h_; ++r) {
    for (std::size_t c = 0; c < w_; ++c) {
      const std::size_t i = r * w_ + c;
      if (c + 1 < w_) out[i] = x[i + 1] - x[i];
      if (r + 1 < h_) out[plane + i] = x[i + w_] - x[i];
    }
  }
  return out;
}

GridSignal FiniteDifference2D::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  const std::size_t plane = h_ * w_;
  for (std::size_t r = 0; r < h_; ++r) {
    for (std::size_t c = 0; c < w_; ++c) {
      const std::size_t i = r * w_ + c;
      if (c + 1 < w_) {
        out[i] -= v[i];
        out[i + 1] += v[i];
      }
      if (r + 1 < h_) {
        out[i] -= v[plane + i];
        out[i + w_] += v[plane + i];
      }
    }
  }
  return out;
}

LinearOperatorPtr make_finite_difference(const Shape& shape) {
  if (shape.size() == 1) return std::make_shared<FiniteDifference1D>(shape[0]);
  if (shape.size() == 2) return std::make_shared<FiniteDifference2D>(shape[0], shape[1]);
  throw ShapeError("finite_difference: unsupported rank " + std::to_string(shape.size()) +
                   " (process channels separately)");
}

GridSignal finite_difference(const GridSignal& signal) {
  return make_finite_difference(signal.shape)->apply(signal);
}

MaskOperator::MaskOperator(std::vector<std::size_t> keep, Shape in_shape)
    : LinearOperator(std::move(in_shape), Shape{keep.size()}), keep_(std::move(keep)) {
  const std::size_t n = in_size();
  for (std::size_t k : keep_)
    if (k >= n)
      throw std::out_of_range("mask_operator: index " + std::to_string(k) +
                              " outside [0, " + std::to_string(n) + ")");
}

GridSignal MaskOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  for (std::size_t i = 0; i < keep_.size(); ++i) out[i] = x[keep_[i]];
  return out;
}

GridSignal MaskOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  for (std::size_t i = 0; i < keep_.size(); ++i) out[keep_[i]] += v[i];
  return out;
}

LinearOperatorPtr mask_operator(std::vector<std::size_t> keep, std::size_t n) {
  return std::make_shared<MaskOperator>(std::move(keep), Shape{n});
}

namespace {

Shape valid_shape(const GridSignal& psf, std::size_t h, std::size_t w) {
  if (psf.rank() != 2) throw ShapeError("convolution_operator: psf must be 2-D");
  if (psf.shape[0] > h || psf.shape[1] > w || psf.shape[0] == 0 || psf.shape[1] == 0)
    throw ShapeError("convolution_operator: psf " + to_string(psf.shape) +
                     " larger than image " + to_string({h, w}));
  return {h - psf.shape[0] + 1, w - psf.shape[1] + 1};
}

}  // namespace

ConvolutionOperator::ConvolutionOperator(GridSignal psf, std::size_t h, std::size_t w)
    : LinearOperator(Shape{h, w}, valid_shape(psf, h, w)),
      psf_(std::move(psf)),
      h_(h),
      w_(w),
      p_(psf_.shape[0]),
      q_(psf_.shape[1]) {}

GridSignal ConvolutionOperator::apply(const GridSignal& x) const {
  check_input(x);
  const std::size_t oh = h_ - p_ + 1, ow = w_ - q_ + 1;
  GridSignal out(out_shape());
  for (std::size_t a = 0; a < p_; ++a) {
    for (std::size_t b = 0; b < q_; ++b) {
      const double k = psf_[a * q_ + b];
      if (k == 0.0) continue;
      // out(i, j) += k * x(i + p-1-a, j + q-1-b)
      const std::size_t dr = p_ - 1 - a, dc = q_ - 1 - b;
      for (std::size_t i = 0; i < oh; ++i) {
        const double* src = &x.data[(i + dr) * w_ + dc];
        double* dst = &out.data[i * ow];
        for (std::size_t j = 0; j < ow; ++j) dst[j] += k * src[j];
      }
    }
  }
  return out;
}

GridSignal ConvolutionOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  const std::size_t oh = h_ - p_ + 1, ow = w_ - q_ + 1;
  GridSignal out(in_shape());
  for (std::size_t a = 0; a < p_; ++a) {
    for (std::size_t b = 0; b < q_; ++b) {
      const double k = psf_[a * q_ + b];
      if (k == 0.0) continue;
      const std::size_t dr = p_ - 1 - a, dc = q_ - 1 - b;
      for (std::size_t i = 0; i < oh; ++i) {
        const double* src = &v.data[i * ow];
        double* dst = &out.data[(i + dr) * w_ + dc];
        for (std::size_t j = 0; j < ow; ++j) dst[j] += k * src[j];
      }
    }
  }
  return out;
}

LinearOperatorPtr convolution_operator(const GridSignal& psf, const Shape& image_shape) {
  if (image_shape.size() != 2) throw ShapeError("convolution_operator: image must be 2-D");
  return std::make_shared<ConvolutionOperator>(psf, image_shape[0], image_shape[1]);
}

namespace {

SparseOperator::Matrix build_radon(std::size_t n, const std::vector<double>& angles_deg,
                                   std::size_t rays) {
  if (n < 2) throw ShapeError("radon_operator: n must be at least 2");
  if (angles_deg.empty()) throw ShapeError("radon_operator: no angles");
  if (rays == 0) throw ShapeError("radon_operator: no rays");

  const double radius = 0.5 * static_cast<double>(n);
  const double centre = 0.5 * static_cast<double>(n - 1);
  const double ds = 0.5;
  const double half_len = radius * std::numbers::sqrt2 + 1.0;
  const auto samples = static_cast<std::size_t>(std::ceil(2.0 * half_len / ds));
  const double dt = 2.0 * radius / static_cast<double>(rays);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(angles_deg.size() * rays * 3 * n);
  std::vector<std::pair<int, double>> row;
  row.reserve(8 * n);

  for (std::size_t ia = 0; ia < angles_deg.size(); ++ia) {
    const double th = angles_deg[ia] * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t k = 0; k < rays; ++k) {
      const double t = -radius + (static_cast<double>(k) + 0.5) * dt;
      row.clear();
      for (std::size_t m = 0; m < samples; ++m) {
        const double sp = -half_len + (static_cast<double>(m) + 0.5) * ds;
        const double px = t * c - sp * s;
        const double py = t * s + sp * c;
        // continuous (column, row) index; row 0 is the top of the image
        const double u = px + centre;
        const double v = centre - py;
        if (u <= -1.0 || v <= -1.0 || u >= static_cast<double>(n) ||
            v >= static_cast<double>(n))
          continue;
        const double fu = std::floor(u), fv = std::floor(v);
        const double wu = u - fu, wv = v - fv;
        const auto iu = static_cast<long>(fu), iv = static_cast<long>(fv);
        const long ln = static_cast<long>(n);
        const double wts[4] = {(1 - wu) * (1 - wv), wu * (1 - wv), (1 - wu) * wv, wu * wv};
        const long cols[4] = {iu, iu + 1, iu, iu + 1};
        const long rows[4] = {iv, iv, iv + 1, iv + 1};
        for (int q = 0; q < 4; ++q) {
          if (wts[q] == 0.0) continue;
          if (cols[q] < 0 || rows[q] < 0 || cols[q] >= ln || rows[q] >= ln) continue;
          row.emplace_back(static_cast<int>(rows[q] * ln + cols[q]), ds * wts[q]);
        }
      }
      std::sort(row.begin(), row.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      const int r = static_cast<int>(ia * rays + k);
      for (std::size_t i = 0; i < row.size();) {
        const int col = row[i].first;
        double acc = 0.0;
        while (i < row.size() && row[i].first == col) acc += row[i++].second;
        triplets.emplace_back(r, col, acc);
      }
    }
  }
  SparseOperator::Matrix m(static_cast<Eigen::Index>(angles_deg.size() * rays),
                           static_cast<Eigen::Index>(n * n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

RadonOperator::RadonOperator(std::size_t n, std::vector<double> angles_deg, std::size_t rays)
    : LinearOperator(Shape{n, n}, Shape{angles_deg.size(), rays}),
      m_(build_radon(n, angles_deg, rays)) {}

GridSignal RadonOperator::apply(const GridSignal& x) const {
  check_input(x);
  GridSignal out(out_shape());
  as_eigen(out).noalias() = m_ * as_eigen(x);
  return out;
}

GridSignal RadonOperator::adjoint(const GridSignal& v) const {
  check_output(v);
  GridSignal out(in_shape());
  as_eigen(out).noalias() = m_.transpose() * as_eigen(v);
  return out;
}

LinearOperatorPtr radon_operator(std::size_t n, std::vector<double> angles_deg,
                                 std::size_t rays) {
  return std::make_shared<RadonOperator>(n, std::move(angles_deg), rays);
}

std::vector<double> uniform_angles(std::size_t count) {
  std::vector<double> a(count);
  for (std::size_t i = 0; i < count; ++i)
    a[i] = 180.0 * static_cast<double>(i) / static_cast<double>(count);
  return a;
}

}  // namespace vpal
