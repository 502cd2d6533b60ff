#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include "skdv/model.hpp"

namespace skdv {

/// Overflow-free sech.
inline double sech(double x) {
  const double e = std::exp(-std::abs(x));
  return 2.0 * e / (1.0 + e * e);
}

/// Explicit coupled solitary wave
///   phi(x) = sqrt(2 c* (1 + 6 alpha)) sech(sqrt(c*) x),
///   psi(x) = 12 c* sech^2(sqrt(c*) x),
/// travelling at c = 4 c* - alpha (1 + 6 alpha) / 12.
///
/// Substituting u = exp(i(omega t + kappa (x - c t))) phi(x - c t) into the
/// Schrodinger equation leaves a term i (2 kappa - c) phi', so the envelope
/// only travels with the long wave when kappa = c / 2. With that carrier the
/// profiles are exact for beta = -1, gamma = alpha / 2 and
/// omega = c* + c^2 / 4 (see companion_model()).
struct SolitaryWaveParams {
  double c_star = 1.0;
  double alpha = -1.0 / 12.0;
  double x0 = 0.0;
  std::optional<double> carrier;  // defaults to speed() / 2

  void validate() const {
    if (!(c_star > 0.0) || !std::isfinite(c_star)) {
      throw InvalidArgument("soliton c* must be positive (got " + std::to_string(c_star) + ")");
    }
    if (!(alpha > -1.0 / 6.0 && alpha < 0.0)) {
      throw InvalidArgument("explicit profile needs alpha in (-1/6, 0) (got " +
                            std::to_string(alpha) + ")");
    }
  }

  double speed() const { return 4.0 * c_star - alpha * (1.0 + 6.0 * alpha) / 12.0; }
  double carrier_wavenumber() const { return carrier.value_or(0.5 * speed()); }
  double omega() const {
    const double c = speed();
    return c_star + 0.25 * c * c;
  }
  double phi_amplitude() const { return std::sqrt(2.0 * c_star * (1.0 + 6.0 * alpha)); }
  double psi_amplitude() const { return 12.0 * c_star; }

  /// (alpha, beta, gamma) for which the explicit pair solves the system.
  ModelParams companion_model() const { return {alpha, -1.0, 0.5 * alpha}; }
};

struct ProfileValue {
  double phi;
  double psi;
};

inline ProfileValue explicit_profile(const SolitaryWaveParams& p, double x) {
  p.validate();
  const double s = sech(std::sqrt(p.c_star) * x);
  return {p.phi_amplitude() * s, p.psi_amplitude() * s * s};
}

/// Derivatives of the profile pair with respect to x.
inline ProfileValue explicit_profile_slope(const SolitaryWaveParams& p, double x) {
  p.validate();
  const double k = std::sqrt(p.c_star);
  const double s = sech(k * x);
  const double th = std::tanh(k * x);
  return {-p.phi_amplitude() * k * s * th, -2.0 * p.psi_amplitude() * k * s * s * th};
}

/// Thrown when the profile is not negligible at the box edge.
class TruncationWarning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kBoundaryTolerance = 1e-14;

/// u0 = exp(i kappa (x - x0)) phi(x - x0), v0 = psi(x - x0), at t = 0.
inline FieldState solitary_initial_data(const SolitaryWaveParams& p, GridPtr grid,
                                        bool strict = true) {
  p.validate();
  FieldState s = FieldState::zeros(grid, 0.0);
  const double kappa = p.carrier_wavenumber();
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double xi = grid->x(j) - p.x0;
    const auto [phi, psi] = explicit_profile(p, xi);
    s.u[j] = std::polar(phi, kappa * xi);
    s.v[j] = psi;
  }
  if (strict) {
    const double edge_l = grid->left() - p.x0;
    const double edge_r = grid->left() + grid->length() - p.x0;
    const auto a = explicit_profile(p, edge_l);
    const auto b = explicit_profile(p, edge_r);
    const double worst = std::max({a.phi / p.phi_amplitude(), a.psi / p.psi_amplitude(),
                                   b.phi / p.phi_amplitude(), b.psi / p.psi_amplitude()});
    if (worst > kBoundaryTolerance) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", worst);
      throw TruncationWarning(std::string("solitary profile is ") + buf +
                              " of its peak at the box edge; enlarge the box or recentre x0");
    }
  }
  return s;
}

/// Time derivative of the travelling-wave ansatz at t = 0.
inline Tendency solitary_time_derivative(const SolitaryWaveParams& p, const Grid& grid) {
  const double c = p.speed();
  const double kappa = p.carrier_wavenumber();
  const cplx i{0.0, 1.0};
  Tendency out{ComplexField(grid.size()), RealField(grid.size())};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xi = grid.x(j) - p.x0;
    const auto val = explicit_profile(p, xi);
    const auto slope = explicit_profile_slope(p, xi);
    const cplx carrier = std::polar(1.0, kappa * xi);
    out.du[j] = carrier * (i * (p.omega() - kappa * c) * val.phi - c * slope.phi);
    out.dv[j] = -c * slope.psi;
  }
  return out;
}

struct Peak {
  double x;
  double value;
  std::size_t index;
};

/// Discrete maximum refined by a three-point parabola (periodic neighbours).
inline Peak locate_peak(const Grid& g, std::span<const double> f) {
  const std::size_t n = g.size();
  std::size_t jm = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (f[j] > f[jm]) jm = j;
  }
  const double fm = f[(jm + n - 1) % n];
  const double f0 = f[jm];
  const double fp = f[(jm + 1) % n];
  const double denom = fm - 2.0 * f0 + fp;
  double offset = 0.0;
  double value = f0;
  if (denom < 0.0) {
    offset = 0.5 * (fm - fp) / denom;
    value = f0 - 0.25 * (fm - fp) * offset;
  }
  return {g.x(jm) + offset * g.dx(), value, jm};
}

/// Wraps x into [left, left + L).
inline double wrap_into_box(const Grid& g, double x) {
  const double r = std::fmod(x - g.left(), g.length());
  return g.left() + (r < 0.0 ? r + g.length() : r);
}

/// Signed periodic distance a - b mapped into [-L/2, L/2).
inline double periodic_offset(const Grid& g, double a, double b) {
  double d = std::fmod(a - b, g.length());
  if (d >= 0.5 * g.length()) d -= g.length();
  if (d < -0.5 * g.length()) d += g.length();
  return d;
}

class GroundStateError : public std::runtime_error {
 public:
  GroundStateError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

struct GroundState {
  RealField phi;
  RealField psi;
  double residual = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

struct StationarySystem {
  const Grid& g;
  ModelParams p;
  double c;
  double sigma;  // omega - c^2/4

  RealField n1(const RealField& phi, const RealField& psi) const {
    RealField out(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) {
      out[j] = -p.alpha * phi[j] * psi[j] - p.beta * phi[j] * phi[j] * phi[j];
    }
    return out;
  }
  RealField n2(const RealField& phi, const RealField& psi) const {
    RealField out(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) {
      out[j] = 0.5 * psi[j] * psi[j] - p.gamma * phi[j] * phi[j];
    }
    return out;
  }

  /// max(|phi'' - sigma phi + N1|, |psi'' - c psi + N2|).
  double residual(const RealField& phi, const RealField& psi) const {
    const RealField phi2 = spectral_derivative(g, std::span<const double>(phi), 2);
    const RealField psi2 = spectral_derivative(g, std::span<const double>(psi), 2);
    const RealField a = n1(phi, psi);
    const RealField b = n2(phi, psi);
    double r = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) {
      r = std::max(r, std::abs(phi2[j] - sigma * phi[j] + a[j]));
      r = std::max(r, std::abs(psi2[j] - c * psi[j] + b[j]));
    }
    return r;
  }

  /// <f, (shift - d_xx) f> and (shift - d_xx)^{-1} g, both spectrally.
  double energy(const RealField& f, double shift) const {
    const RealField f2 = spectral_derivative(g, std::span<const double>(f), 2);
    CompensatedSum s;
    for (std::size_t j = 0; j < f.size(); ++j) s.add(f[j] * (shift * f[j] - f2[j]));
    return s.value();
  }
  RealField solve(const RealField& rhs, double shift) const {
    auto spec = g.forward_real(rhs);
    for (std::size_t j = 0; j < spec.size(); ++j) {
      const double k = g.half_wavenumber(j);
      spec[j] /= (shift + k * k);
    }
    return g.inverse_real(spec);
  }
};

inline double dot(const RealField& a, const RealField& b) {
  CompensatedSum s;
  for (std::size_t j = 0; j < a.size(); ++j) s.add(a[j] * b[j]);
  return s.value();
}

}  // namespace detail

/// Petviashvili-type iteration for the stationary profile pair (carrier
/// c/2 removed):
///   phi'' - (omega - c^2/4) phi = alpha phi psi + beta phi^3,
///   psi'' - c psi + psi^2/2 = gamma phi^2.
/// Each component is renormalized by its own stabilizing factor squared.
inline GroundState ground_state_solve(const ModelParams& params, double c, double omega,
                                      GridPtr grid, RealField seed_phi, RealField seed_psi,
                                      double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("ground_state_solve: tol must be positive");
  if (seed_phi.size() != grid->size() || seed_psi.size() != grid->size()) {
    throw InvalidArgument("ground_state_solve: seed does not match the grid");
  }
  const double sigma = omega - 0.25 * c * c;
  if (!(c > 0.0) || !(sigma > 0.0)) {
    throw InvalidArgument("ground_state_solve needs c > 0 and omega > c^2/4");
  }
  const detail::StationarySystem sys{*grid, params, c, sigma};
  auto all_zero = [](const RealField& f) {
    return std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
  };
  if (all_zero(seed_phi) || all_zero(seed_psi)) {
    throw InvalidArgument("ground_state_solve: degenerate seed (a component is identically zero)");
  }

  GroundState gs{std::move(seed_phi), std::move(seed_psi), 0.0, 0};
  gs.residual = sys.residual(gs.phi, gs.psi);
  if (gs.residual <= tol) return gs;

  for (std::size_t it = 1; it <= max_iter; ++it) {
    const RealField a = sys.n1(gs.phi, gs.psi);
    const RealField b = sys.n2(gs.phi, gs.psi);
    const double na = detail::dot(gs.phi, a);
    const double nb = detail::dot(gs.psi, b);
    if (na == 0.0 || nb == 0.0 || !std::isfinite(na) || !std::isfinite(nb)) {
      throw InvalidArgument("ground_state_solve: degenerate seed (nonlinear projection vanishes)");
    }
    const double m1 = sys.energy(gs.phi, sigma) / na;
    const double m2 = sys.energy(gs.psi, c) / nb;
    gs.phi = sys.solve(a, sigma);
    gs.psi = sys.solve(b, c);
    for (auto& x : gs.phi) x *= m1 * m1;
    for (auto& x : gs.psi) x *= m2 * m2;
    gs.residual = sys.residual(gs.phi, gs.psi);
    gs.iterations = it;
    if (!std::isfinite(gs.residual)) break;
    if (gs.residual <= tol) return gs;
  }
  throw GroundStateError("ground_state_solve did not converge in " + std::to_string(max_iter) +
                             " iterations (residual " + std::to_string(gs.residual) + ")",
                         gs.residual, gs.iterations);
}

}  // namespace skdv
