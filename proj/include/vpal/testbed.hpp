#pragma once

#include <cstdint>
#include <vector>

#include "vpal/signal.hpp"
#include "vpal/stft_phase.hpp"

namespace vpal {

// Stream seed for trial `index` of a run seeded with `master`:
// splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Modified (high contrast) 10-ellipse Shepp-Logan phantom on [-1, 1]^2,
// 4x4 supersampled per pixel, values clamped to [0, 1]. Row 0 is the top.
GridSignal shepp_logan(std::size_t n);

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};
const std::vector<Ellipse>& shepp_logan_ellipses();

// Linear motion blur of `len` unit-spaced taps along angle_deg
// (counter-clockwise from the +x axis), bilinearly splatted, cropped to its
// support and normalised to sum 1.
GridSignal motion_psf(std::size_t len, double angle_deg);

// Sorted random subset of [0, n) of size round((1 - remove_fraction) n).
std::vector<std::size_t> random_mask(std::size_t n, double remove_fraction, std::uint64_t seed);

// b + e with Gaussian e rescaled so that ||e|| = level ||b||.
GridSignal add_noise(const GridSignal& b_clean, double level, std::uint64_t seed);

// Piecewise-constant complex signal with `jumps` change points drawn without
// replacement from [1, N); every segment value is standard complex Gaussian.
ComplexSignal random_piecewise_signal(std::size_t N, std::size_t jumps, std::uint64_t seed);

// 256 x 256 grayscale photograph compiled into the library (CC0 "camera"
// image from scikit-image, downsampled), values in [0, 1].
GridSignal bundled_gray_image();

// Deterministic procedural test images, values in [0, 1].
GridSignal synthetic_gray_image(std::size_t n = 256);        // [n, n]
GridSignal synthetic_rgb_image(std::size_t n = 128);         // [3, n, n]

}  // namespace vpal
