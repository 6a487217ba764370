#include "rbcav/oscillation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace rbcav::oscillation {

namespace {

// |windowed DFT|^2 at frequency f (Hann window, demeaned input)
double power_at(std::span<const double> v, double dt, double f) {
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  std::complex<double> acc(0.0, 0.0);
  const double w0 = 2.0 * M_PI * f * dt;
  for (std::size_t k = 0; k < n; ++k) {
    const double hann = 0.5 * (1.0 - std::cos(2.0 * M_PI * k / (n - 1)));
    const double ph = w0 * static_cast<double>(k);
    acc += hann * (v[k] - mean) * std::complex<double>(std::cos(ph), -std::sin(ph));
  }
  return std::norm(acc);
}

}  // namespace

double dominant_frequency(std::span<const double> values, double dt) {
  const std::size_t n = values.size();
  if (n < 16 || dt <= 0.0) return 0.0;

  // coarse scan on a decimated copy
  const std::size_t target = 2048;
  const std::size_t stride = std::max<std::size_t>(1, n / target);
  std::vector<double> coarse;
  for (std::size_t k = 0; k < n; k += stride) coarse.push_back(values[k]);
  const double cdt = dt * static_cast<double>(stride);
  const std::size_t m = coarse.size();
  const double df = 1.0 / (cdt * static_cast<double>(m));
  double best_f = 0.0, best_p = -1.0;
  for (std::size_t k = 1; k <= m / 2; ++k) {
    const double f = df * static_cast<double>(k);
    const double p = power_at(coarse, cdt, f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  if (best_f == 0.0) return 0.0;

  // golden-section refinement on the full series around the coarse peak
  double lo = std::max(best_f - df, df * 0.25), hi = best_f + df;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double p1 = power_at(values, dt, x1), p2 = power_at(values, dt, x2);
  for (int it = 0; it < 40; ++it) {
    if (p1 < p2) {
      lo = x1;
      x1 = x2;
      p1 = p2;
      x2 = lo + phi * (hi - lo);
      p2 = power_at(values, dt, x2);
    } else {
      hi = x2;
      x2 = x1;
      p2 = p1;
      x1 = hi - phi * (hi - lo);
      p1 = power_at(values, dt, x1);
    }
  }
  return 0.5 * (lo + hi);
}

Analysis analyze_series(std::span<const double> values, double dt, double skip_fraction) {
  Analysis out;
  const std::size_t n = values.size();
  if (n < 32) return out;
  const std::size_t skip = static_cast<std::size_t>(skip_fraction * static_cast<double>(n));
  const auto tail = values.subspan(std::min(skip, n - 16));

  double mean = 0.0, lo = tail[0], hi = tail[0];
  for (double x : tail) {
    mean += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  mean /= static_cast<double>(tail.size());
  out.mean = mean;
  out.amplitude = 0.5 * (hi - lo);

  const double scale = std::max(std::abs(mean), 1e-12);
  if (out.amplitude <= 1e-8 * scale) {
    out.settled = true;
    out.periodic = false;
    return out;
  }

  out.periodic = true;
  out.frequency = dominant_frequency(tail, dt);

  // settled when both halves agree on amplitude and frequency
  const auto h1 = tail.subspan(0, tail.size() / 2);
  const auto h2 = tail.subspan(tail.size() / 2);
  auto amp_of = [](std::span<const double> v) {
    double l = v[0], h = v[0];
    for (double x : v) {
      l = std::min(l, x);
      h = std::max(h, x);
    }
    return 0.5 * (h - l);
  };
  const double a1 = amp_of(h1), a2 = amp_of(h2);
  const double f1 = dominant_frequency(h1, dt), f2 = dominant_frequency(h2, dt);
  const bool amp_ok = std::abs(a1 - a2) <= 0.05 * std::max(a1, a2);
  const bool freq_ok =
      f1 > 0.0 && f2 > 0.0 && std::abs(f1 - f2) <= 0.05 * std::max(f1, f2);
  out.settled = amp_ok && freq_ok;
  return out;
}

}  // namespace rbcav::oscillation
