#pragma once

#include <Eigen/Core>

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "vpal/operators.hpp"

namespace vpal {

using Complex = std::complex<double>;
using ComplexSignal = std::vector<Complex>;

// Complex signal split as x_n = amp_n * exp(i phase_n).
struct AmpPhase {
  std::vector<double> amp;
  std::vector<double> phase;

  std::size_t size() const { return amp.size(); }
  static AmpPhase from_complex(std::span<const Complex> x);
  ComplexSignal to_complex() const;

  // [amp; phase] as one vector of length 2N, and back.
  GridSignal pack() const;
  static AmpPhase unpack(const GridSignal& v);
};

enum class WindowKind { Exponential, Gaussian, Custom };

struct WindowSpec {
  WindowKind kind = WindowKind::Custom;
  std::size_t support = 0;  // w_n = 0 for n >= support
  ComplexSignal w;          // length N
};

// w_exp(k) = exp(-5k/9), w_gauss(k) = exp(-(5k/9 - 5/2)^2) for k < 10.
WindowSpec make_window(WindowKind kind, std::size_t N);
WindowSpec custom_window(ComplexSignal values, std::size_t support);

using StftMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// F(j, k) = sum_n x_n w_{(n - j) mod N} exp(2 pi i k n / N), all N shifts.
StftMatrix stft(std::span<const Complex> x, const WindowSpec& w);

// Rows j = 0, s, 2s, ... of the STFT.
StftMatrix stft_rows(std::span<const Complex> x, const WindowSpec& w, std::size_t stride);

std::size_t subsampled_rows(std::size_t N, std::size_t stride);

// |F_w(T(amp, phase))|^2 on rows j*s; shape [ceil(N/s), N].
GridSignal forward_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride);

// Gradient of <A_s(p), cotangent> with respect to (amp, phase).
AmpPhase vjp_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride,
                const GridSignal& cotangent);

// Directional derivative of A_s at p along tangent.
GridSignal jvp_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride,
                  const AmpPhase& tangent);

// A_s as an operator on the packed [amp; phase] vector.
class StftMagnitudeOperator final : public Operator {
 public:
  StftMagnitudeOperator(WindowSpec w, std::size_t stride);
  GridSignal apply(const GridSignal& x) const override;
  std::unique_ptr<LinearOperator> linearize(const GridSignal& x) const override;

  const WindowSpec& window() const { return w_; }
  std::size_t stride() const { return stride_; }

 private:
  WindowSpec w_;
  std::size_t stride_;
};

// [FD(N), FD(N)] acting on [amp; phase] blocks independently.
LinearOperatorPtr amp_phase_difference(std::size_t N);

}  // namespace vpal
