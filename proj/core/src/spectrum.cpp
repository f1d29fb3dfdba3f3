#include "paintlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>

#include "paintlab/error.hpp"

namespace paintlab {
namespace {

using Complex = std::complex<double>;

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform of a strided sequence.
void fft1(Complex* a, std::size_t n, std::size_t stride) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i * stride], a[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles from the exact angle, not by repeated multiplication.
        const Complex w = std::polar(1.0, angle * static_cast<double>(k));
        Complex& lo = a[(start + k) * stride];
        Complex& hi = a[(start + k + len / 2) * stride];
        const Complex t = w * hi;
        hi = lo - t;
        lo += t;
      }
    }
  }
}

}  // namespace

std::vector<Complex> fft2(std::span<const double> map, std::size_t height, std::size_t width, bool centered) {
  if (!power_of_two(height) || !power_of_two(width))
    throw ShapeError("fft2 needs power-of-two sizes, got " + std::to_string(height) + "x" + std::to_string(width));
  if (map.size() != height * width) throw ShapeError("fft2 map size does not match its extents");
  std::vector<Complex> a(map.begin(), map.end());
  for (std::size_t y = 0; y < height; ++y) fft1(&a[y * width], width, 1);
  for (std::size_t x = 0; x < width; ++x) fft1(&a[x], height, width);
  if (!centered) return a;
  std::vector<Complex> shifted(a.size());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      shifted[((y + height / 2) % height) * width + (x + width / 2) % width] = a[y * width + x];
  return shifted;
}

std::size_t band_index(std::size_t y, std::size_t x, std::size_t height, std::size_t width) {
  const double dy = static_cast<double>(y) - static_cast<double>(height / 2);
  const double dx = static_cast<double>(x) - static_cast<double>(width / 2);
  const double rho_max = static_cast<double>(std::min(height, width)) / 2.0 * std::numbers::sqrt2;
  const double rho = std::sqrt(dx * dx + dy * dy);
  return std::min<std::size_t>(kBands - 1, static_cast<std::size_t>(std::floor(kBands * rho / rho_max)));
}

BandEnergies band_energies(const Tensor& map) {
  if (map.rank() != 4 || map.dim(0) != 1) throw ShapeError("band_energies expects [1,C,H,W], got " + to_string(map.shape()));
  const std::size_t c = map.dim(1), h = map.dim(2), w = map.dim(3);
  BandEnergies e{};
  const auto data = map.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto spec = fft2(data.subspan(ch * h * w, h * w), h, w, true);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) e[band_index(y, x, h, w)] += std::norm(spec[y * w + x]);
  }
  return e;
}

void BandTrace::write_csv(std::ostream& out) const {
  out << "iter,E1,E2,E3,E4,E5\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    out << iterations[i];
    for (double v : energies[i]) out << ',' << v;
    out << '\n';
  }
}

std::array<std::size_t, kBands> convergence_iterations(const BandTrace& trace, const BandEnergies& target,
                                                       double tol, double eps_abs) {
  if (trace.size() == 0) throw ConfigError("convergence needs a non-empty trace");
  std::array<std::size_t, kBands> t;
  for (std::size_t k = 0; k < kBands; ++k) {
    const double bound = tol * std::max(target[k], eps_abs);
    t[k] = kNeverConverged;
    // Walk backwards while the band stays inside the tolerance.
    for (std::size_t i = trace.size(); i-- > 0;) {
      if (!(std::abs(trace.energies[i][k] - target[k]) <= bound)) break;
      t[k] = trace.iterations[i];
    }
  }
  return t;
}

double convergence_spread(const std::array<std::size_t, kBands>& t, std::size_t total) {
  const auto read = [total](std::size_t v) { return static_cast<double>(v == kNeverConverged ? total : v); };
  return (read(t[kBands - 1]) - read(t[0])) / static_cast<double>(total);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("spearman needs two equal-length samples of size >= 2");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace paintlab
