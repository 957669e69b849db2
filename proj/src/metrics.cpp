#include "vpal/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vpal {

double rre(const GridSignal& x_hat, const GridSignal& x_true) {
  require_same_size(x_hat, x_true, "rre");
  const double t = norm2(x_true);
  if (!(t > 0.0)) throw std::invalid_argument("rre: reference has zero norm");
  return norm2(x_hat - x_true) / t;
}

double psnr(const GridSignal& x_hat, const GridSignal& x_true, double peak) {
  require_same_size(x_hat, x_true, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const GridSignal e = x_hat - x_true;
  const double e2 = dot(e, e);
  if (e2 == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak * static_cast<double>(x_true.size()) / e2);
}

double per_min(double v) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r = std::abs(std::remainder(v, two_pi));
  return std::min(r, std::numbers::pi);
}

double phase_mse(std::span<const double> p_hat, std::span<const double> p_true) {
  if (p_hat.size() != p_true.size()) throw ShapeError("phase_mse: lengths differ");
  if (p_true.size() < 2) throw std::invalid_argument("phase_mse: need at least two entries");
  double acc = 0.0;
  for (std::size_t k = 1; k < p_true.size(); ++k) {
    const double d = (p_true[k] - p_true[k - 1]) - (p_hat[k] - p_hat[k - 1]);
    const double m = per_min(d);
    acc += m * m;
  }
  return acc / static_cast<double>(p_true.size() - 1);
}

double residual_mse(const GridSignal& model, const GridSignal& data) {
  require_same_size(model, data, "residual_mse");
  const GridSignal r = model - data;
  return dot(r, r) / static_cast<double>(r.size());
}

AmpPhase canonical(const AmpPhase& p) {
  AmpPhase out = p;
  for (std::size_t n = 0; n < out.size(); ++n)
    if (out.amp[n] < 0.0) {
      out.amp[n] = -out.amp[n];
      out.phase[n] += std::numbers::pi;
    }
  return out;
}

double amp_mse(const AmpPhase& p_hat, const AmpPhase& p_true) {
  if (p_hat.size() != p_true.size() || p_true.size() == 0)
    throw ShapeError("amp_mse: lengths differ or are zero");
  double acc = 0.0;
  for (std::size_t n = 0; n < p_true.size(); ++n) {
    const double d = std::abs(p_hat.amp[n]) - p_true.amp[n];
    acc += d * d;
  }
  return acc / static_cast<double>(p_true.size());
}

}  // namespace vpal
