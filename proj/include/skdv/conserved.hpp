#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "skdv/model.hpp"

namespace skdv {

struct ConservedTriple {
  double i1 = 0.0;  // int |u|^2
  double i2 = 0.0;  // energy
  double i3 = 0.0;  // int alpha v^2 + 2 gamma Im(u conj(u_x))
};

/// Pointwise Im(u conj(u_x)).
inline RealField momentum_density(const Grid& g, std::span<const cplx> u) {
  const ComplexField ux = spectral_derivative(g, u, 1);
  RealField out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = std::imag(u[j] * std::conj(ux[j]));
  return out;
}

inline ConservedTriple conserved_triple(const FieldState& s, const ModelParams& p) {
  s.validate();
  const Grid& g = *s.grid;
  const ComplexField ux = spectral_derivative(g, std::span<const cplx>(s.u), 1);
  const RealField vx = spectral_derivative(g, std::span<const double>(s.v), 1);

  CompensatedSum mass, energy, momentum;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double u2 = std::norm(s.u[j]);
    const double v = s.v[j];
    mass.add(u2);
    energy.add(p.alpha * p.gamma * v * u2);
    energy.add(-p.alpha / 6.0 * v * v * v);
    energy.add(0.5 * p.beta * p.gamma * u2 * u2);
    energy.add(0.5 * p.alpha * vx[j] * vx[j]);
    energy.add(p.gamma * std::norm(ux[j]));
    momentum.add(p.alpha * v * v);
    momentum.add(2.0 * p.gamma * std::imag(s.u[j] * std::conj(ux[j])));
  }
  return {g.dx() * mass.value(), g.dx() * energy.value(), g.dx() * momentum.value()};
}

/// Upper bound on ||v||_2^2 implied by conservation of I3:
/// |I3(0)|/|alpha| + 2 |gamma|/|alpha| ||u0||_2 ||u_x||_2.
inline double v_norm_bound(double i3_initial, double u0_l2, double ux_l2, const ModelParams& p) {
  if (p.alpha == 0.0 || p.gamma == 0.0) {
    throw InvalidArgument("v_norm_bound needs alpha and gamma nonzero");
  }
  return std::abs(i3_initial) / std::abs(p.alpha) +
         2.0 * std::abs(p.gamma) / std::abs(p.alpha) * u0_l2 * ux_l2;
}

inline constexpr double kDriftFloor = 1e-12;

/// max_t |I_k(t) - I_k(0)| / max(|I_k(0)|, floor) for each quantity.
inline std::array<double, 3> drift_report(std::span<const ConservedTriple> series) {
  if (series.empty()) throw InvalidArgument("drift_report: empty trajectory");
  const auto& first = series.front();
  std::array<double, 3> ref{first.i1, first.i2, first.i3};
  std::array<double, 3> out{};
  for (const auto& c : series) {
    const std::array<double, 3> now{c.i1, c.i2, c.i3};
    for (int k = 0; k < 3; ++k) {
      out[k] = std::max(out[k], std::abs(now[k] - ref[k]) / std::max(std::abs(ref[k]), kDriftFloor));
    }
  }
  return out;
}

}  // namespace skdv
