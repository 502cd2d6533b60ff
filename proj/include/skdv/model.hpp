#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "skdv/grid.hpp"

namespace skdv {

/// Coupling constants of
///   i u_t + u_xx = alpha u v + beta u |u|^2,
///   v_t + v_xxx + v v_x = gamma (|u|^2)_x.
struct ModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  bool finite() const { return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma); }

  /// alpha < 0 and gamma < 0: the regime in which local masses are known to decay.
  bool theorem_regime() const { return alpha < 0.0 && gamma < 0.0; }
};

struct FieldState {
  GridPtr grid;
  ComplexField u;
  RealField v;
  double t = 0.0;

  static FieldState zeros(GridPtr g, double t = 0.0) {
    const auto n = g->size();
    return FieldState{std::move(g), ComplexField(n), RealField(n), t};
  }

  void validate() const {
    if (!grid) throw InvalidArgument("state has no grid");
    if (u.size() != grid->size() || v.size() != grid->size()) {
      throw InvalidArgument("state fields do not match the grid (u: " + std::to_string(u.size()) +
                            ", v: " + std::to_string(v.size()) +
                            ", n: " + std::to_string(grid->size()) + ")");
    }
  }
};

/// Fractions of the half band kept when forming nonlinear products.
inline constexpr double kQuadraticKeep = 2.0 / 3.0;
inline constexpr double kCubicKeep = 0.5;

namespace detail {

inline RealField dealias_real(const Grid& g, std::span<const double> f, double keep) {
  auto s = g.forward_real(f);
  truncate_half_spectrum(g, s, keep);
  return g.inverse_real(s);
}

inline ComplexField dealias_complex(const Grid& g, std::span<const cplx> f, double keep) {
  auto s = g.forward(f);
  truncate_spectrum(g, s, keep);
  return g.inverse(s);
}

/// d/dx of a real field given as a product that still needs dealiasing.
inline RealField derivative_of_product(const Grid& g, std::span<const double> product, bool dealias) {
  auto s = g.forward_real(product);
  if (dealias) truncate_half_spectrum(g, s, kQuadraticKeep);
  const std::size_t nyq = g.size() / 2;
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] *= derivative_symbol(g.half_wavenumber(j), 1, j == nyq);
  }
  return g.inverse_real(s);
}

}  // namespace detail

inline RealField modulus_squared(std::span<const cplx> u) {
  RealField out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = std::norm(u[j]);
  return out;
}

/// W = alpha v + beta |u|^2; the NLS nonlinear substep is u <- u exp(-i W dt).
inline RealField nonlinear_phase_potential(const FieldState& s, const ModelParams& p) {
  s.validate();
  RealField w(s.v.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = p.alpha * s.v[j] + p.beta * std::norm(s.u[j]);
  return w;
}

/// Nonstiff part of the v tendency: -(v^2/2)_x + gamma (|u|^2)_x.
inline RealField kdv_nonlinear_tendency(const Grid& g, std::span<const double> v,
                                        std::span<const double> u2, double gamma, bool dealias) {
  RealField flux(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) flux[j] = -0.5 * v[j] * v[j] + gamma * u2[j];
  return detail::derivative_of_product(g, flux, dealias);
}

struct Tendency {
  ComplexField du;
  RealField dv;
};

/// Semidiscrete tendencies
///   u_t = i u_xx - i alpha u v - i beta |u|^2 u
///   v_t = -v_xxx - (v^2/2)_x + gamma (|u|^2)_x.
inline Tendency rhs(const FieldState& s, const ModelParams& p, bool dealias = true) {
  s.validate();
  const Grid& g = *s.grid;
  const std::size_t n = g.size();

  RealField u2 = modulus_squared(s.u);
  RealField u2_smooth = dealias ? detail::dealias_real(g, u2, kQuadraticKeep) : u2;

  ComplexField uv(n), cubic(n);
  for (std::size_t j = 0; j < n; ++j) {
    uv[j] = s.u[j] * s.v[j];
    cubic[j] = u2_smooth[j] * s.u[j];
  }
  if (dealias) {
    uv = detail::dealias_complex(g, uv, kQuadraticKeep);
    cubic = detail::dealias_complex(g, cubic, kCubicKeep);
  }

  Tendency out;
  out.du = spectral_derivative(g, std::span<const cplx>(s.u), 2);
  const cplx i{0.0, 1.0};
  for (std::size_t j = 0; j < n; ++j) {
    out.du[j] = i * out.du[j] - i * (p.alpha * uv[j] + p.beta * cubic[j]);
  }

  out.dv = kdv_nonlinear_tendency(g, s.v, u2, p.gamma, dealias);
  const RealField v3 = spectral_derivative(g, std::span<const double>(s.v), 3);
  for (std::size_t j = 0; j < n; ++j) out.dv[j] -= v3[j];
  return out;
}

}  // namespace skdv
