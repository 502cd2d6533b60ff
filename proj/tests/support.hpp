#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "skdv/skdv.hpp"

namespace skdv::testing {

/// Random smooth field whose spectrum lives in |index| <= band.
inline ComplexField random_band_limited(const Grid& g, std::size_t band, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ComplexField spec(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const long k = g.signed_index(j);
    if (static_cast<std::size_t>(std::abs(k)) <= band) spec[j] = {nd(rng), nd(rng)};
  }
  return g.inverse(spec);
}

inline RealField random_band_limited_real(const Grid& g, std::size_t band, unsigned seed) {
  const ComplexField z = random_band_limited(g, band, seed);
  RealField out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j].real();
  return out;
}

/// u0 = A exp(-x^2) e^{ikx}, v0 = B sech^2(x): the localized data used by the
/// conservation and budget checks.
inline FieldState gaussian_state(GridPtr g, double t = 0.0, double a = 1.0, double b = 1.0,
                                 double k = 0.0) {
  FieldState s = FieldState::zeros(g, t);
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double x = g->x(j);
    s.u[j] = std::polar(a * std::exp(-x * x), k * x);
    const double h = sech(x);
    s.v[j] = b * h * h;
  }
  return s;
}

inline double max_abs(const RealField& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (const auto& z : f) m = std::max(m, std::abs(z));
  return m;
}

inline double l2_squared(const Grid& g, const ComplexField& u) {
  double s = 0.0;
  for (const auto& z : u) s += std::norm(z);
  return s * g.dx();
}

}  // namespace skdv::testing
