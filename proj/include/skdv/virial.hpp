#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skdv/model.hpp"
#include "skdv/waves.hpp"

namespace skdv {

// ---------------------------------------------------------------------------
// Weights
//
//   phi(x) = (2/pi) arctan(e^x),   phi'(x) = 1 / (pi cosh x),
//   phi_s(x) = s phi(x/s)          (the "ramp", increasing from 0 to s),
//   bump_s(x) = phi'(x/s)          (the localizing weight).
// ---------------------------------------------------------------------------

namespace weights {

inline constexpr double kInvPi = std::numbers::inv_pi;

/// phi(x), written so that phi(x) + phi(-x) = 1 holds to rounding.
inline double phi(double x) {
  if (x > 0.0) return 1.0 - 2.0 * kInvPi * std::atan(std::exp(-x));
  return 2.0 * kInvPi * std::atan(std::exp(x));
}

/// k-th derivative of phi, k = 0..4, in terms of sech and tanh.
inline double phi_derivative(int k, double x) {
  if (k == 0) return phi(x);
  const double s = sech(x);
  const double th = std::tanh(x);
  switch (k) {
    case 1:
      return kInvPi * s;
    case 2:
      return -kInvPi * s * th;
    case 3:
      return kInvPi * s * (th * th - s * s);
    case 4:
      return kInvPi * s * th * (5.0 * s * s - th * th);
    default:
      throw InvalidArgument("phi_derivative: order must be 0..4");
  }
}

}  // namespace weights

enum class WeightKind { phi, dphi, d2phi, d3phi };

/// Derivatives of the scaled ramp phi_s(x) = s phi(x/s):
/// phi_s^(k)(x) = s^(1-k) phi^(k)(x/s).
inline double weight(WeightKind kind, double s, double x) {
  if (!(s > 0.0)) throw InvalidArgument("weight scale must be positive");
  const int k = static_cast<int>(kind);
  return std::pow(s, 1 - k) * weights::phi_derivative(k, x / s);
}

/// Derivatives of the bump phi'(x/s): s^(-k) phi^(k+1)(x/s), k = 0..3.
inline double bump(int order, double s, double x) {
  if (!(s > 0.0)) throw InvalidArgument("weight scale must be positive");
  if (order < 0 || order > 3) throw InvalidArgument("bump: order must be 0..3");
  return std::pow(s, -order) * weights::phi_derivative(order + 1, x / s);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct VirialConfig {
  double p1 = 0.5;
  double p2 = 2.0;
  double q1 = 1.0;
  std::optional<double> r1;  // 1 - p1 when unset
  std::optional<double> r2;  // 1 + q1 when unset
  double a = 2.0;
  double b = 2.0;
  double l = 1.0;
  double theta = 1.0;
  std::optional<double> mu;  // gamma * theta / alpha when unset
  double m = 0.5;            // ray exponent for moving regions

  double r1_value() const { return r1.value_or(1.0 - p1); }
  double r2_value() const { return r2.value_or(1.0 + q1); }

  /// Human-readable descriptions of every violated constraint.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto fmt = [](double x) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, x);
      return std::string(buf, r.ptr);
    };
    constexpr double eq_tol = 1e-12;
    if (!(q1 > 0.0)) out.push_back("virial.q1: schedule requires q1 > 0 (q1=" + fmt(q1) + ")");
    if (!(p2 > 1.0)) out.push_back("virial.p2: schedule requires p2 > 1 (p2=" + fmt(p2) + ")");
    if (std::abs(p1 + r1_value() - 1.0) > eq_tol) {
      out.push_back("virial.r1: schedule requires p1 + r1 = 1 (p1=" + fmt(p1) +
                    ", r1=" + fmt(r1_value()) + ")");
    }
    if (std::abs(r2_value() - (1.0 + q1)) > eq_tol) {
      out.push_back("virial.r2: schedule requires r2 = 1 + q1 (q1=" + fmt(q1) +
                    ", r2=" + fmt(r2_value()) + ")");
    }
    const double p1_max = 2.0 / (p2 + 2.0);
    if (!(p1 > 0.0 && p1 <= p1_max)) {
      out.push_back("virial.p1: boundedness of J requires 0 < p1 <= 2/(p2+2) (p1=" + fmt(p1) +
                    ", bound=" + fmt(p1_max) + ")");
    }
    if (!(a > 0.0 && b > 0.0 && l > 0.0)) {
      out.push_back("virial.a/b/l: weight scales must be positive (a=" + fmt(a) + ", b=" + fmt(b) +
                    ", l=" + fmt(l) + ")");
    } else if (1.0 / a + 1.0 / b > 1.0 / l * (1.0 + eq_tol)) {
      out.push_back("virial.l: weight scales require 1/a + 1/b <= 1/l (1/a+1/b=" +
                    fmt(1.0 / a + 1.0 / b) + ", 1/l=" + fmt(1.0 / l) + ")");
    }
    if (!(theta > 0.0)) out.push_back("virial.theta: requires theta > 0 (theta=" + fmt(theta) + ")");
    const double m_max = 1.0 - p1 / 2.0;
    if (!(m > 0.0 && m < m_max)) {
      out.push_back("virial.m: moving region requires 0 < m < 1 - p1/2 (m=" + fmt(m) +
                    ", bound=" + fmt(m_max) + ")");
    }
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    throw InvalidArgument(msg);
  }

  /// Copy with mu fixed; the default cancels the v_x |u|^2 terms of dI/dt.
  VirialConfig resolved(const ModelParams& p) const {
    VirialConfig c = *this;
    if (!c.mu) {
      if (p.alpha == 0.0) throw InvalidArgument("virial.mu: default gamma*theta/alpha needs alpha != 0");
      c.mu = p.gamma * theta / p.alpha;
    }
    c.r1 = r1_value();
    c.r2 = r2_value();
    return c;
  }

  double mu_value() const {
    if (!mu) throw InvalidArgument("virial.mu is unresolved; call resolved() first");
    return *mu;
  }
};

struct Scales {
  double lambda1;
  double lambda2;
  double eta;
  double rate1;    // lambda1'/lambda1
  double rate2;    // lambda2'/lambda2
  double rate_eta; // eta'/eta
};

/// lambda1 = t^p1 / ln^q1 t, lambda2 = lambda1^p2, eta = t^r1 ln^r2 t.
inline Scales scales(double t, const VirialConfig& c) {
  if (!(t > 1.0)) throw InvalidArgument("virial scales need t > 1 (got t=" + std::to_string(t) + ")");
  const double lt = std::log(t);
  const double r1 = c.r1_value(), r2 = c.r2_value();
  Scales s{};
  s.lambda1 = std::pow(t, c.p1) / std::pow(lt, c.q1);
  s.lambda2 = std::pow(s.lambda1, c.p2);
  s.eta = std::pow(t, r1) * std::pow(lt, r2);
  s.rate1 = c.p1 / t - c.q1 / (t * lt);
  s.rate2 = c.p2 * s.rate1;
  s.rate_eta = r1 / t + r2 / (t * lt);
  return s;
}

/// Centre of the moving region at time t.
inline double ray_shift(double t, double m) { return std::pow(t, m); }

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

/// J = (1/eta) int v phi_a((x-x_c)/lambda1) bump_b((x-x_c)/lambda2) dx,
/// x_c = shift (0 for the centred functional, t^m along the ray).
inline double functional_J(const FieldState& s, const VirialConfig& c, double shift = 0.0) {
  s.validate();
  const Scales sc = scales(s.t, c);
  const Grid& g = *s.grid;
  CompensatedSum acc;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j) - shift;
    acc.add(s.v[j] * weight(WeightKind::phi, c.a, x / sc.lambda1) * bump(0, c.b, x / sc.lambda2));
  }
  return g.dx() * acc.value() / sc.eta;
}

/// I = (theta/(2 eta)) int v^2 phi_l(x/lambda1) dx
///   + (mu/eta) Im int u conj(u_x) phi_l(x/lambda1) dx.
inline double functional_I(const FieldState& s, const VirialConfig& c) {
  s.validate();
  const Scales sc = scales(s.t, c);
  const Grid& g = *s.grid;
  const ComplexField ux = spectral_derivative(g, std::span<const cplx>(s.u), 1);
  CompensatedSum kdv, nls;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = weight(WeightKind::phi, c.l, g.x(j) / sc.lambda1);
    kdv.add(s.v[j] * s.v[j] * w);
    nls.add(std::imag(s.u[j] * std::conj(ux[j])) * w);
  }
  return g.dx() * (0.5 * c.theta * kdv.value() + c.mu_value() * nls.value()) / sc.eta;
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

struct BudgetJ {
  std::array<double, 8> a1{};  // A1,1 .. A1,8
  double a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double a1_direct = 0.0;  // (1/eta) int v_t W dx with v_t from rhs()
  double j = 0.0;
  double dJdt_fd = 0.0;
  double residual = 0.0;

  double a1_total() const {
    double s = 0.0;
    for (double x : a1) s += x;
    return s;
  }
  double total() const { return a1_total() + a2 + a3 + a4; }
  double max_term() const {
    double m = std::max({std::abs(a2), std::abs(a3), std::abs(a4)});
    for (double x : a1) m = std::max(m, std::abs(x));
    return m;
  }
};

struct BudgetI {
  std::array<double, 13> b{};  // B1 .. B13
  double i = 0.0;
  double dIdt_fd = 0.0;
  double residual = 0.0;

  double total() const {
    double s = 0.0;
    for (double x : b) s += x;
    return s;
  }
  double max_term() const {
    double m = 0.0;
    for (double x : b) m = std::max(m, std::abs(x));
    return m;
  }
  /// B1 + B10 relative to the larger of the two.
  double cancellation() const {
    const double scale = std::max(std::abs(b[0]), std::abs(b[9]));
    return scale == 0.0 ? 0.0 : std::abs(b[0] + b[9]) / scale;
  }
};

/// Three consecutive, uniformly spaced samples; budgets are evaluated at `mid`.
struct Window {
  const FieldState& prev;
  const FieldState& mid;
  const FieldState& next;

  double spacing() const {
    const double h1 = mid.t - prev.t;
    const double h2 = next.t - mid.t;
    if (!(h1 > 0.0) || std::abs(h1 - h2) > 1e-9 * std::max(1.0, std::abs(mid.t))) {
      throw InvalidArgument("budget window needs three uniformly spaced samples");
    }
    return 0.5 * (h1 + h2);
  }
};

/// Instantaneous dJ/dt terms at state `s`; dJdt_fd and residual left at 0.
inline BudgetJ budget_J_terms(const FieldState& s, const ModelParams& p, const VirialConfig& c,
                              bool dealias = true) {
  s.validate();
  const Grid& g = *s.grid;
  const Scales sc = scales(s.t, c);
  const double l1 = sc.lambda1, l2 = sc.lambda2, eta = sc.eta;
  const RealField vt = rhs(s, p, dealias).dv;

  std::array<CompensatedSum, 8> a1;
  CompensatedSum a2, a3, a4, direct;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j);
    const double y1 = x / l1, y2 = x / l2;
    const double r0 = weight(WeightKind::phi, c.a, y1);
    const double r1 = weight(WeightKind::dphi, c.a, y1);
    const double r2 = weight(WeightKind::d2phi, c.a, y1);
    const double r3 = weight(WeightKind::d3phi, c.a, y1);
    const double b0 = bump(0, c.b, y2);
    const double b1 = bump(1, c.b, y2);
    const double b2 = bump(2, c.b, y2);
    const double b3 = bump(3, c.b, y2);
    const double v = s.v[j];
    const double u2 = std::norm(s.u[j]);

    a1[0].add(u2 * r1 * b0);
    a1[1].add(u2 * r0 * b1);
    a1[2].add(v * v * r1 * b0);
    a1[3].add(v * v * r0 * b1);
    a1[4].add(v * r3 * b0);
    a1[5].add(v * r2 * b1);
    a1[6].add(v * r1 * b2);
    a1[7].add(v * r0 * b3);
    a2.add(v * r1 * y1 * b0);
    a3.add(v * r0 * y2 * b1);
    a4.add(v * r0 * b0);
    direct.add(vt[j] * r0 * b0);
  }
  const double h = g.dx();
  const std::array<double, 8> coef{
      -p.gamma / (l1 * eta),
      -p.gamma / (l2 * eta),
      1.0 / (2.0 * eta * l1),
      1.0 / (2.0 * eta * l2),
      1.0 / (eta * l1 * l1 * l1),
      3.0 / (eta * l1 * l1 * l2),
      3.0 / (eta * l1 * l2 * l2),
      1.0 / (eta * l2 * l2 * l2),
  };
  BudgetJ out;
  for (int k = 0; k < 8; ++k) out.a1[k] = coef[k] * h * a1[k].value();
  out.a2 = -sc.rate1 / eta * h * a2.value();
  out.a3 = -sc.rate2 / eta * h * a3.value();
  out.a4 = -sc.rate_eta / eta * h * a4.value();
  out.a1_direct = h * direct.value() / eta;
  out.j = h * a4.value() / eta;
  return out;
}

inline BudgetJ budget_J(const Window& w, const ModelParams& p, const VirialConfig& c,
                        bool dealias = true) {
  const double dt = w.spacing();
  BudgetJ out = budget_J_terms(w.mid, p, c, dealias);
  out.dJdt_fd = (functional_J(w.next, c) - functional_J(w.prev, c)) / (2.0 * dt);
  out.residual = out.dJdt_fd - out.total();
  return out;
}

/// Instantaneous dI/dt terms at state `s`; `c` must have mu resolved.
inline BudgetI budget_I_terms(const FieldState& s, const ModelParams& p, const VirialConfig& c) {
  s.validate();
  const Grid& g = *s.grid;
  const Scales sc = scales(s.t, c);
  const double l1 = sc.lambda1, eta = sc.eta;
  const double theta = c.theta, mu = c.mu_value();
  const ComplexField ux = spectral_derivative(g, std::span<const cplx>(s.u), 1);
  const RealField vx = spectral_derivative(g, std::span<const double>(s.v), 1);

  // Integrals shared between terms.
  CompensatedSum vx_u2_w, v_u2_w1, v3_w1, vx2_w1, v2_w3, v2_w1y, v2_w, mom_w, ux2_w1, u4_w1,
      u2_w3, mom_w1y, u2_w;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double y = g.x(j) / l1;
    const double w0 = weight(WeightKind::phi, c.l, y);
    const double w1 = weight(WeightKind::dphi, c.l, y);
    const double w3 = weight(WeightKind::d3phi, c.l, y);
    const double v = s.v[j];
    const double u2 = std::norm(s.u[j]);
    const double mom = std::imag(s.u[j] * std::conj(ux[j]));
    vx_u2_w.add(vx[j] * u2 * w0);
    v_u2_w1.add(v * u2 * w1);
    v3_w1.add(v * v * v * w1);
    vx2_w1.add(vx[j] * vx[j] * w1);
    v2_w3.add(v * v * w3);
    v2_w1y.add(v * v * w1 * y);
    v2_w.add(v * v * w0);
    mom_w.add(mom * w0);
    ux2_w1.add(std::norm(ux[j]) * w1);
    u4_w1.add(u2 * u2 * w1);
    u2_w3.add(u2 * w3);
    mom_w1y.add(mom * w1 * y);
    u2_w.add(u2 * w0);
  }
  const double h = g.dx();
  const double l13 = l1 * l1 * l1;
  BudgetI out;
  auto& b = out.b;
  b[0] = -theta * p.gamma / eta * h * vx_u2_w.value();
  b[1] = -theta * p.gamma / (eta * l1) * h * v_u2_w1.value();
  b[2] = theta / (3.0 * eta * l1) * h * v3_w1.value();
  b[3] = -3.0 * theta / (2.0 * eta * l1) * h * vx2_w1.value();
  b[4] = theta / (2.0 * eta * l13) * h * v2_w3.value();
  b[5] = -theta * sc.rate1 / (2.0 * eta) * h * v2_w1y.value();
  b[6] = -theta * sc.rate_eta / (2.0 * eta) * h * v2_w.value();
  b[7] = -mu * sc.rate_eta / eta * h * mom_w.value();
  b[8] = -2.0 * mu / (eta * l1) * h * ux2_w1.value();
  b[9] = p.alpha * mu / eta * h * vx_u2_w.value();
  b[10] = -mu * p.beta / (2.0 * eta * l1) * h * u4_w1.value();
  b[11] = mu / (2.0 * eta * l13) * h * u2_w3.value();
  b[12] = -mu * sc.rate1 / eta * h * mom_w1y.value();
  out.i = h * (0.5 * theta * v2_w.value() + mu * mom_w.value()) / eta;
  return out;
}

inline BudgetI budget_I(const Window& w, const ModelParams& p, const VirialConfig& c) {
  const double dt = w.spacing();
  BudgetI out = budget_I_terms(w.mid, p, c);
  out.dIdt_fd = (functional_I(w.next, c) - functional_I(w.prev, c)) / (2.0 * dt);
  out.residual = out.dIdt_fd - out.total();
  return out;
}

/// Integrands of the two time integrals whose finiteness drives decay:
///   g_J = (1/(eta lambda1)) int (v^2 + |u|^2) phi_a'(x/lambda1) bump_b(x/lambda2) dx,
///   g_I = (1/(eta lambda1)) int (|u_x|^2 + v_x^2) phi_l'(x/lambda1) dx.
struct DecayIntegrands {
  double g_j = 0.0;
  double g_i = 0.0;
};

inline DecayIntegrands decay_integrands(const FieldState& s, const VirialConfig& c) {
  s.validate();
  const Grid& g = *s.grid;
  const Scales sc = scales(s.t, c);
  const ComplexField ux = spectral_derivative(g, std::span<const cplx>(s.u), 1);
  const RealField vx = spectral_derivative(g, std::span<const double>(s.v), 1);
  CompensatedSum mass, grad;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j);
    const double wj = weight(WeightKind::dphi, c.a, x / sc.lambda1) * bump(0, c.b, x / sc.lambda2);
    const double wi = weight(WeightKind::dphi, c.l, x / sc.lambda1);
    mass.add((s.v[j] * s.v[j] + std::norm(s.u[j])) * wj);
    grad.add((std::norm(ux[j]) + vx[j] * vx[j]) * wi);
  }
  const double k = g.dx() / (sc.eta * sc.lambda1);
  return {k * mass.value(), k * grad.value()};
}

// ---------------------------------------------------------------------------
// Local comparability of the weight phi_l'(x/lambda1) on unit cells.
// ---------------------------------------------------------------------------

struct CellExtrema {
  double sup;
  double inf;
};

/// Exact sup/inf of phi_l'(x/lambda1) over [n, n+1]; the weight is even and
/// decreasing in |x|.
inline CellExtrema weight_cell_extrema(double l, double lambda1, double n) {
  auto w = [&](double x) { return weight(WeightKind::dphi, l, x / lambda1); };
  const double left = w(n), right = w(n + 1.0);
  const double sup = (n <= 0.0 && n + 1.0 >= 0.0) ? w(0.0) : std::max(left, right);
  return {sup, std::min(left, right)};
}

/// max over cells [n, n+1], n = n_lo..n_hi, of sup / (e^{1/(l lambda1)} inf);
/// a value <= 1 means the comparability bound holds on every cell. With
/// phi' = sech / pi and L = l lambda1 the ratio on a cell whose nearer end
/// lies at distance d from 0 is (1 + e^{-2(d+1)/L}) / (1 + e^{-2d/L}), and
/// (1 + e^{-2/L}) / 2 on the two cells touching 0; evaluating these forms
/// avoids the rounding of sup / inf near the bound.
inline double weight_comparability_check(double l, double lambda1, long n_lo, long n_hi) {
  if (!(lambda1 > 0.0)) throw InvalidArgument("weight_comparability_check: lambda1 must be positive");
  if (!(l > 0.0)) throw InvalidArgument("weight_comparability_check: l must be positive");
  const double L = l * lambda1;
  double worst = 0.0;
  for (long n = n_lo; n <= n_hi; ++n) {
    double log_ratio;
    if (n == 0 || n == -1) {
      log_ratio = std::log1p(std::exp(-2.0 / L)) - std::numbers::ln2;
    } else {
      const double d = static_cast<double>(n > 0 ? n : -(n + 1));
      log_ratio = std::log1p(std::exp(-2.0 * (d + 1.0) / L)) - std::log1p(std::exp(-2.0 * d / L));
    }
    worst = std::max(worst, std::exp(log_ratio));
  }
  return worst;
}

}  // namespace skdv
