#pragma once

#include <span>

#include "vpal/signal.hpp"
#include "vpal/stft_phase.hpp"

namespace vpal {

// ||x_hat - x_true|| / ||x_true||
double rre(const GridSignal& x_hat, const GridSignal& x_true);

// 10 log10(peak^2 n / ||x_hat - x_true||^2); +inf on an exact match.
double psnr(const GridSignal& x_hat, const GridSignal& x_true, double peak = 1.0);

// min_k |v - 2 pi k|, in [0, pi].
double per_min(double v);

// Mean of per_min(diff(p_true) - diff(p_hat))^2 over the N - 1 differences.
double phase_mse(std::span<const double> p_hat, std::span<const double> p_true);

// mean((model - data)^2)
double residual_mse(const GridSignal& model, const GridSignal& data);

// Negative amplitudes are folded into the phase (a sign flip is a pi shift).
AmpPhase canonical(const AmpPhase& p);

// mean((|amp_hat| - amp_true)^2)
double amp_mse(const AmpPhase& p_hat, const AmpPhase& p_true);

}  // namespace vpal
