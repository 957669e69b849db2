#include "vpal/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "vpal/io.hpp"

namespace vpal::detail {
extern const unsigned char bundled_gray_pgm[];
extern const std::size_t bundled_gray_pgm_size;
}  // namespace vpal::detail

namespace vpal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

const std::vector<Ellipse>& shepp_logan_ellipses() {
  static const std::vector<Ellipse> e{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  return e;
}

GridSignal shepp_logan(std::size_t n) {
  if (n < 16) throw std::invalid_argument("shepp_logan: n must be at least 16");
  constexpr int sub = 4;
  const auto& ellipses = shepp_logan_ellipses();
  GridSignal img({n, n});
  const double h = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int si = 0; si < sub; ++si) {
        const double y = 1.0 - h * (static_cast<double>(i) + (si + 0.5) / sub);
        for (int sj = 0; sj < sub; ++sj) {
          const double x = -1.0 + h * (static_cast<double>(j) + (sj + 0.5) / sub);
          double v = 0.0;
          for (const auto& e : ellipses) {
            const double c = std::cos(deg2rad(e.phi_deg)), s = std::sin(deg2rad(e.phi_deg));
            const double dx = x - e.x0, dy = y - e.y0;
            const double u = (dx * c + dy * s) / e.a;
            const double w = (-dx * s + dy * c) / e.b;
            if (u * u + w * w <= 1.0) v += e.intensity;
          }
          acc += std::clamp(v, 0.0, 1.0);
        }
      }
      img[i * n + j] = acc / (sub * sub);
    }
  }
  return img;
}

GridSignal motion_psf(std::size_t len, double angle_deg) {
  if (len < 1) throw std::invalid_argument("motion_psf: len must be at least 1");
  const double c = std::cos(deg2rad(angle_deg)), s = std::sin(deg2rad(angle_deg));
  std::vector<double> px(len), py(len);
  for (std::size_t m = 0; m < len; ++m) {
    px[m] = static_cast<double>(m) * c;
    py[m] = -static_cast<double>(m) * s;  // rows grow downwards
  }
  const double x0 = std::floor(*std::min_element(px.begin(), px.end()));
  const double y0 = std::floor(*std::min_element(py.begin(), py.end()));
  const auto W = static_cast<std::size_t>(std::ceil(*std::max_element(px.begin(), px.end()) - x0)) + 2;
  const auto H = static_cast<std::size_t>(std::ceil(*std::max_element(py.begin(), py.end()) - y0)) + 2;
  std::vector<double> grid(H * W, 0.0);
  for (std::size_t m = 0; m < len; ++m) {
    const double gx = px[m] - x0, gy = py[m] - y0;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double tx = gx - fx, ty = gy - fy;
    const auto ix = static_cast<std::size_t>(fx), iy = static_cast<std::size_t>(fy);
    grid[iy * W + ix] += (1 - tx) * (1 - ty);
    grid[iy * W + ix + 1] += tx * (1 - ty);
    grid[(iy + 1) * W + ix] += (1 - tx) * ty;
    grid[(iy + 1) * W + ix + 1] += tx * ty;
  }
  for (double& g : grid)
    if (g < 1e-12) g = 0.0;

  std::size_t r0 = H, r1 = 0, c0 = W, c1 = 0;
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j)
      if (grid[i * W + j] > 0.0) {
        r0 = std::min(r0, i), r1 = std::max(r1, i);
        c0 = std::min(c0, j), c1 = std::max(c1, j);
      }
  GridSignal psf({r1 - r0 + 1, c1 - c0 + 1});
  double total = 0.0;
  for (std::size_t i = r0; i <= r1; ++i)
    for (std::size_t j = c0; j <= c1; ++j) total += grid[i * W + j];
  for (std::size_t i = r0; i <= r1; ++i)
    for (std::size_t j = c0; j <= c1; ++j)
      psf[(i - r0) * psf.shape[1] + (j - c0)] = grid[i * W + j] / total;
  return psf;
}

std::vector<std::size_t> random_mask(std::size_t n, double remove_fraction, std::uint64_t seed) {
  if (!(remove_fraction >= 0.0 && remove_fraction < 1.0))
    throw std::invalid_argument("random_mask: fraction must lie in [0, 1)");
  const auto kept = static_cast<std::size_t>(std::llround((1.0 - remove_fraction) * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first `kept` slots are a uniform sample
  for (std::size_t i = 0; i < kept; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(kept);
  std::sort(idx.begin(), idx.end());
  return idx;
}

GridSignal add_noise(const GridSignal& b_clean, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw std::invalid_argument("add_noise: level must be non-negative");
  if (level == 0.0) return b_clean;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  GridSignal e(b_clean.shape);
  for (double& v : e.data) v = normal(rng);
  scale(e, level * norm2(b_clean) / norm2(e));
  return b_clean + e;
}

ComplexSignal random_piecewise_signal(std::size_t N, std::size_t jumps, std::uint64_t seed) {
  if (jumps < 1 || jumps >= N)
    throw std::invalid_argument("random_piecewise_signal: need 1 <= jumps < N");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> cand(N - 1);
  std::iota(cand.begin(), cand.end(), std::size_t{1});
  for (std::size_t i = 0; i < jumps; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, cand.size() - 1);
    std::swap(cand[i], cand[pick(rng)]);
  }
  cand.resize(jumps);
  std::sort(cand.begin(), cand.end());
  cand.push_back(N);

  // E|value|^2 = 1
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexSignal x(N);
  std::size_t start = 0;
  for (std::size_t stop : cand) {
    const Complex value(normal(rng), normal(rng));
    for (std::size_t n = start; n < stop; ++n) x[n] = value;
    start = stop;
  }
  return x;
}

namespace {

double smoothstep_edge(double d, double width) {
  // 1 inside (d < 0), 0 outside, a short ramp across the boundary
  const double t = std::clamp(0.5 - d / width, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Blob {
  double cx, cy, rx, ry, rot, level, shade;
};

void paint(std::vector<double>& img, std::size_t n, const std::vector<Blob>& blobs,
           double background, double tilt) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      const double y = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      double v = background + tilt * (x - y);
      for (const auto& b : blobs) {
        const double c = std::cos(b.rot), s = std::sin(b.rot);
        const double u = ((x - b.cx) * c + (y - b.cy) * s) / b.rx;
        const double w = (-(x - b.cx) * s + (y - b.cy) * c) / b.ry;
        const double r = std::sqrt(u * u + w * w);
        const double inside = smoothstep_edge((r - 1.0) * std::min(b.rx, b.ry) * n, 1.5);
        const double body = b.level + b.shade * (0.35 - 0.5 * (u + w) * 0.5 - 0.3 * r * r);
        v = (1.0 - inside) * v + inside * body;
      }
      img[i * n + j] = std::clamp(v, 0.0, 1.0);
    }
  }
}

// Zero-mean random field with a 1/f amplitude spectrum, scaled to the given
// standard deviation. Deterministic per seed.
std::vector<double> pink_texture(std::size_t n, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> t(n * n, 0.0);
  std::vector<double> cx(n), sx(n), cy(n), sy(n);
  const int max_f = static_cast<int>(std::max<std::size_t>(n / 3, 2));
  for (int k = 0; k < 400; ++k) {
    const double radius = std::exp(std::log(1.0) + uni(rng) * std::log(double(max_f)));
    const double theta = uni(rng) * std::numbers::pi;
    const double fx = radius * std::cos(theta), fy = radius * std::sin(theta);
    const double phase = uni(rng) * two_pi;
    // log-uniform radii already carry a 1/f density; amplitude 1/sqrt(f)
    // keeps the power spectrum close to 1/f^2
    const double amp = 1.0 / std::sqrt(radius);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = two_pi * fy * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      cy[i] = std::cos(a), sy[i] = std::sin(a);
      const double b = two_pi * fx * (static_cast<double>(i) + 0.5) / static_cast<double>(n) + phase;
      cx[i] = std::cos(b), sx[i] = std::sin(b);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t[i * n + j] += amp * (cy[i] * cx[j] - sy[i] * sx[j]);
  }
  double mean = 0.0, var = 0.0;
  for (double v : t) mean += v;
  mean /= static_cast<double>(t.size());
  for (double v : t) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(t.size()));
  for (double& v : t) v = (v - mean) * stddev / sd;
  return t;
}

}  // namespace

GridSignal bundled_gray_image() {
  return decode_pgm({detail::bundled_gray_pgm, detail::bundled_gray_pgm_size});
}

GridSignal synthetic_gray_image(std::size_t n) {
  if (n < 16) throw std::invalid_argument("synthetic_gray_image: n must be at least 16");
  const std::vector<Blob> blobs{
      {0.28, 0.30, 0.22, 0.17, 0.4, 0.55, 0.30},  {0.70, 0.28, 0.20, 0.24, -0.3, 0.80, 0.25},
      {0.50, 0.66, 0.30, 0.20, 0.1, 0.35, 0.35},  {0.22, 0.76, 0.14, 0.18, 0.9, 0.70, 0.20},
      {0.80, 0.74, 0.15, 0.13, -0.7, 0.25, 0.30}, {0.48, 0.45, 0.08, 0.10, 0.0, 0.92, 0.10},
      {0.62, 0.12, 0.06, 0.04, 1.2, 0.15, 0.05},
  };
  std::vector<double> img(n * n);
  paint(img, n, blobs, 0.12, 0.08);
  const std::vector<double> tex = pink_texture(n, 0.06, 0x5eed);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(img[i] + tex[i], 0.0, 1.0);
  return GridSignal({n, n}, std::move(img));
}

GridSignal synthetic_rgb_image(std::size_t n) {
  if (n < 16) throw std::invalid_argument("synthetic_rgb_image: n must be at least 16");
  const std::vector<std::vector<Blob>> channels{
      {{0.50, 0.42, 0.28, 0.34, 0.0, 0.78, 0.20}, {0.50, 0.85, 0.45, 0.16, 0.0, 0.30, 0.15},
       {0.36, 0.38, 0.05, 0.03, 0.0, 0.20, 0.05}, {0.64, 0.38, 0.05, 0.03, 0.0, 0.20, 0.05},
       {0.50, 0.16, 0.26, 0.09, 0.0, 0.55, 0.10}},
      {{0.50, 0.42, 0.28, 0.34, 0.0, 0.60, 0.20}, {0.50, 0.85, 0.45, 0.16, 0.0, 0.45, 0.15},
       {0.36, 0.38, 0.05, 0.03, 0.0, 0.25, 0.05}, {0.64, 0.38, 0.05, 0.03, 0.0, 0.25, 0.05},
       {0.50, 0.16, 0.26, 0.09, 0.0, 0.40, 0.10}},
      {{0.50, 0.42, 0.28, 0.34, 0.0, 0.45, 0.20}, {0.50, 0.85, 0.45, 0.16, 0.0, 0.20, 0.15},
       {0.36, 0.38, 0.05, 0.03, 0.0, 0.35, 0.05}, {0.64, 0.38, 0.05, 0.03, 0.0, 0.35, 0.05},
       {0.50, 0.16, 0.26, 0.09, 0.0, 0.75, 0.10}},
  };
  const double backgrounds[3] = {0.10, 0.14, 0.22};
  std::vector<double> out;
  out.reserve(3 * n * n);
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> img(n * n);
    paint(img, n, channels[static_cast<std::size_t>(ch)], backgrounds[ch], 0.05);
    out.insert(out.end(), img.begin(), img.end());
  }
  return GridSignal({3, n, n}, std::move(out));
}

}  // namespace vpal
