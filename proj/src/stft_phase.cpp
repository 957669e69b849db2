#include "vpal/stft_phase.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "vpal/imaging_ops.hpp"

namespace vpal {

namespace {

// Batched length-N transforms with the e^{+2 pi i k n / N} kernel. Plans are
// cached and created under a lock; execution uses the new-array interface so
// one plan serves any pair of buffers.
class BatchFft {
 public:
  static const BatchFft& get(std::size_t n, std::size_t howmany) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<BatchFft>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, howmany}];
    if (!slot) slot.reset(new BatchFft(n, howmany));
    return *slot;
  }

  // in and out hold howmany contiguous rows of length n.
  void execute(Complex* in, Complex* out) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }

  ~BatchFft() { fftw_destroy_plan(plan_); }
  BatchFft(const BatchFft&) = delete;
  BatchFft& operator=(const BatchFft&) = delete;

 private:
  BatchFft(std::size_t n, std::size_t howmany) {
    std::vector<Complex> a(n * howmany), b(n * howmany);
    int len = static_cast<int>(n);
    plan_ = fftw_plan_many_dft(1, &len, static_cast<int>(howmany),
                               reinterpret_cast<fftw_complex*>(a.data()), nullptr, 1, len,
                               reinterpret_cast<fftw_complex*>(b.data()), nullptr, 1, len,
                               FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_) throw std::runtime_error("fftw: plan creation failed");
  }

  fftw_plan plan_ = nullptr;
};

void check_stride(std::size_t stride, const WindowSpec& w) {
  if (stride < 1 || stride >= std::max<std::size_t>(w.support, 2))
    throw std::invalid_argument("stft: shift stride must satisfy 1 <= s < K");
}

// Per-row e^{+} DFT of the rows selected by stride of u_j(n) = x_n w_{n-j}.
StftMatrix windowed_rows(std::span<const Complex> x, const WindowSpec& w, std::size_t stride) {
  const std::size_t N = w.w.size();
  if (x.size() != N)
    throw ShapeError("stft: signal length " + std::to_string(x.size()) + " != window length " +
                     std::to_string(N));
  const std::size_t rows = subsampled_rows(N, stride);
  StftMatrix in(rows, N), out(rows, N);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = r * stride;
    for (std::size_t n = 0; n < N; ++n) in(r, n) = x[n] * w.w[(n + N - j) % N];
  }
  BatchFft::get(N, rows).execute(in.data(), out.data());
  return out;
}

// Row-wise e^{+} DFT of an arbitrary rows x N matrix (used by the adjoint).
StftMatrix row_dft(StftMatrix m) {
  StftMatrix out(m.rows(), m.cols());
  BatchFft::get(static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.rows()))
      .execute(m.data(), out.data());
  return out;
}

// sum over rows j*s of w_{n - j} H(r, n)
ComplexSignal gather_rows(const StftMatrix& H, const WindowSpec& w, std::size_t stride) {
  const std::size_t N = w.w.size();
  ComplexSignal G(N, Complex(0.0, 0.0));
  for (Eigen::Index r = 0; r < H.rows(); ++r) {
    const std::size_t j = static_cast<std::size_t>(r) * stride;
    for (std::size_t n = 0; n < N; ++n) G[n] += w.w[(n + N - j) % N] * H(r, static_cast<Eigen::Index>(n));
  }
  return G;
}

ComplexSignal tangent_signal(const AmpPhase& p, const AmpPhase& t) {
  ComplexSignal dx(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    const Complex e = std::polar(1.0, p.phase[n]);
    dx[n] = e * Complex(t.amp[n], p.amp[n] * t.phase[n]);
  }
  return dx;
}

GridSignal jvp_from(const StftMatrix& F, const AmpPhase& p, const WindowSpec& w,
                    std::size_t stride, const AmpPhase& t) {
  const ComplexSignal dx = tangent_signal(p, t);
  const StftMatrix dF = windowed_rows(dx, w, stride);
  GridSignal out({static_cast<std::size_t>(F.rows()), static_cast<std::size_t>(F.cols())});
  for (Eigen::Index i = 0; i < F.size(); ++i)
    out[static_cast<std::size_t>(i)] = 2.0 * (std::conj(F.data()[i]) * dF.data()[i]).real();
  return out;
}

AmpPhase vjp_from(const StftMatrix& F, const AmpPhase& p, const WindowSpec& w,
                  std::size_t stride, const GridSignal& cot) {
  if (cot.size() != static_cast<std::size_t>(F.size()))
    throw ShapeError("vjp_As: cotangent has " + std::to_string(cot.size()) + " entries, expected " +
                     std::to_string(F.size()));
  StftMatrix C(F.rows(), F.cols());
  for (Eigen::Index i = 0; i < F.size(); ++i)
    C.data()[i] = cot[static_cast<std::size_t>(i)] * std::conj(F.data()[i]);
  const ComplexSignal G = gather_rows(row_dft(std::move(C)), w, stride);
  AmpPhase out;
  out.amp.resize(p.size());
  out.phase.resize(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    const Complex ge = G[n] * std::polar(1.0, p.phase[n]);
    out.amp[n] = 2.0 * ge.real();
    out.phase[n] = -2.0 * p.amp[n] * ge.imag();
  }
  return out;
}

void check_pair(const AmpPhase& p, const WindowSpec& w) {
  if (p.amp.size() != p.phase.size() || p.amp.size() != w.w.size())
    throw ShapeError("stft: amplitude, phase and window lengths differ");
}

}  // namespace

AmpPhase AmpPhase::from_complex(std::span<const Complex> x) {
  AmpPhase p;
  p.amp.reserve(x.size());
  p.phase.reserve(x.size());
  for (const Complex& c : x) {
    p.amp.push_back(std::abs(c));
    p.phase.push_back(std::arg(c));
  }
  return p;
}

ComplexSignal AmpPhase::to_complex() const {
  ComplexSignal x(size());
  for (std::size_t n = 0; n < size(); ++n) x[n] = amp[n] * std::polar(1.0, phase[n]);
  return x;
}

GridSignal AmpPhase::pack() const {
  if (amp.size() != phase.size()) throw ShapeError("AmpPhase: amp and phase lengths differ");
  std::vector<double> v(amp);
  v.insert(v.end(), phase.begin(), phase.end());
  return GridSignal::vector(std::move(v));
}

AmpPhase AmpPhase::unpack(const GridSignal& v) {
  if (v.size() % 2 != 0) throw ShapeError("AmpPhase: packed vector has odd length");
  const auto half = static_cast<std::ptrdiff_t>(v.size() / 2);
  AmpPhase p;
  p.amp.assign(v.data.begin(), v.data.begin() + half);
  p.phase.assign(v.data.begin() + half, v.data.end());
  return p;
}

WindowSpec make_window(WindowKind kind, std::size_t N) {
  constexpr std::size_t K = 10;
  if (N < K) throw std::invalid_argument("make_window: N must be at least 10");
  WindowSpec w{kind, K, ComplexSignal(N, Complex(0.0, 0.0))};
  for (std::size_t k = 0; k < K; ++k) {
    const double t = 5.0 * static_cast<double>(k) / 9.0;
    switch (kind) {
      case WindowKind::Exponential: w.w[k] = std::exp(-t); break;
      case WindowKind::Gaussian: w.w[k] = std::exp(-(t - 2.5) * (t - 2.5)); break;
      case WindowKind::Custom: throw std::invalid_argument("make_window: use custom_window");
    }
  }
  return w;
}

WindowSpec custom_window(ComplexSignal values, std::size_t support) {
  if (support == 0 || support > values.size())
    throw std::invalid_argument("custom_window: support out of range");
  double norm = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (n >= support && values[n] != Complex(0.0, 0.0))
      throw std::invalid_argument("custom_window: non-zero value beyond support");
    norm += std::norm(values[n]);
  }
  if (!(norm > 0.0)) throw std::invalid_argument("custom_window: window is zero");
  return {WindowKind::Custom, support, std::move(values)};
}

std::size_t subsampled_rows(std::size_t N, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stft: stride must be positive");
  return (N + stride - 1) / stride;
}

StftMatrix stft(std::span<const Complex> x, const WindowSpec& w) { return windowed_rows(x, w, 1); }

StftMatrix stft_rows(std::span<const Complex> x, const WindowSpec& w, std::size_t stride) {
  return windowed_rows(x, w, stride);
}

GridSignal forward_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride) {
  check_stride(stride, w);
  check_pair(p, w);
  const StftMatrix F = windowed_rows(p.to_complex(), w, stride);
  GridSignal out({static_cast<std::size_t>(F.rows()), static_cast<std::size_t>(F.cols())});
  for (Eigen::Index i = 0; i < F.size(); ++i) out[static_cast<std::size_t>(i)] = std::norm(F.data()[i]);
  return out;
}

AmpPhase vjp_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride,
                const GridSignal& cotangent) {
  check_stride(stride, w);
  check_pair(p, w);
  return vjp_from(windowed_rows(p.to_complex(), w, stride), p, w, stride, cotangent);
}

GridSignal jvp_As(const AmpPhase& p, const WindowSpec& w, std::size_t stride,
                  const AmpPhase& tangent) {
  check_stride(stride, w);
  check_pair(p, w);
  check_pair(tangent, w);
  return jvp_from(windowed_rows(p.to_complex(), w, stride), p, w, stride, tangent);
}

namespace {

class StftJacobian final : public LinearOperator {
 public:
  StftJacobian(const StftMagnitudeOperator& op, AmpPhase p)
      : LinearOperator(op.in_shape(), op.out_shape()),
        w_(&op.window()),
        stride_(op.stride()),
        p_(std::move(p)),
        F_(windowed_rows(p_.to_complex(), *w_, stride_)) {}

  GridSignal apply(const GridSignal& t) const override {
    check_input(t);
    return jvp_from(F_, p_, *w_, stride_, AmpPhase::unpack(t));
  }

  GridSignal adjoint(const GridSignal& v) const override {
    check_output(v);
    GridSignal out = vjp_from(F_, p_, *w_, stride_, v).pack();
    out.shape = in_shape();
    return out;
  }

 private:
  const WindowSpec* w_;
  std::size_t stride_;
  AmpPhase p_;
  StftMatrix F_;
};

}  // namespace

StftMagnitudeOperator::StftMagnitudeOperator(WindowSpec w, std::size_t stride)
    : Operator({2 * w.w.size()}, {subsampled_rows(w.w.size(), stride), w.w.size()}),
      w_(std::move(w)),
      stride_(stride) {
  check_stride(stride_, w_);
}

GridSignal StftMagnitudeOperator::apply(const GridSignal& x) const {
  check_input(x);
  return forward_As(AmpPhase::unpack(x), w_, stride_);
}

std::unique_ptr<LinearOperator> StftMagnitudeOperator::linearize(const GridSignal& x) const {
  check_input(x);
  return std::make_unique<StftJacobian>(*this, AmpPhase::unpack(x));
}

LinearOperatorPtr amp_phase_difference(std::size_t N) {
  auto fd = std::make_shared<FiniteDifference1D>(N);
  return std::make_shared<BlockDiagonalOperator>(std::vector<LinearOperatorPtr>{fd, fd});
}

}  // namespace vpal
