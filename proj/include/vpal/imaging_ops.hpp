#pragma once

#include <memory>
#include <vector>

#include "vpal/operators.hpp"

namespace vpal {

// Forward differences with replicate (Neumann) boundary:
//   (Dx)_i = x_{i+1} - x_i for i < n-1, and 0 in the last slot.
// The kernel is exactly the constant vectors.
class FiniteDifference1D final : public LinearOperator {
 public:
  explicit FiniteDifference1D(std::size_t n);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
};

// Stacked [horizontal; vertical] forward differences of an h x w image.
// Output shape is [2, h, w]; channel 0 differences along columns (x), channel
// 1 along rows (y).
class FiniteDifference2D final : public LinearOperator {
 public:
  FiniteDifference2D(std::size_t h, std::size_t w);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;

 private:
  std::size_t h_, w_;
};

// Difference operator matching the rank of `shape` ([n] or [h, w]).
LinearOperatorPtr make_finite_difference(const Shape& shape);

// Applies the finite difference operator matching signal.shape.
GridSignal finite_difference(const GridSignal& signal);

// Selects the entries listed in keep (in the given order).
class MaskOperator final : public LinearOperator {
 public:
  MaskOperator(std::vector<std::size_t> keep, Shape in_shape);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
  const std::vector<std::size_t>& keep() const { return keep_; }

 private:
  std::vector<std::size_t> keep_;
};

LinearOperatorPtr mask_operator(std::vector<std::size_t> keep, std::size_t n);

// 2-D convolution restricted to the valid region: an h x w image and a
// p x q kernel produce an (h-p+1) x (w-q+1) result with no boundary
// extension. The adjoint is the zero-padded correlation.
class ConvolutionOperator final : public LinearOperator {
 public:
  ConvolutionOperator(GridSignal psf, std::size_t h, std::size_t w);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;
  const GridSignal& psf() const { return psf_; }

 private:
  GridSignal psf_;
  std::size_t h_, w_, p_, q_;
};

LinearOperatorPtr convolution_operator(const GridSignal& psf, const Shape& image_shape);

// Parallel-beam discrete Radon transform of an n x n image.
//
// Pixels have unit size and the image is centred at the origin. For each
// angle theta the p rays sit at detector offsets
//   t_k = -R + (k + 1/2) * 2R/p,  R = n/2,
// so they evenly cover the inscribed circle. Each ray is sampled every half
// pixel and the image is read with bilinear weights; the integral carries the
// sample spacing so values are line lengths in pixel units. The operator is
// stored as a sparse matrix and the adjoint is its exact transpose.
class RadonOperator final : public LinearOperator {
 public:
  RadonOperator(std::size_t n, std::vector<double> angles_deg, std::size_t rays);
  GridSignal apply(const GridSignal& x) const override;
  GridSignal adjoint(const GridSignal& v) const override;

 private:
  SparseOperator::Matrix m_;
};

LinearOperatorPtr radon_operator(std::size_t n, std::vector<double> angles_deg,
                                 std::size_t rays);

// count angles evenly spaced in [0, 180).
std::vector<double> uniform_angles(std::size_t count);

}  // namespace vpal
