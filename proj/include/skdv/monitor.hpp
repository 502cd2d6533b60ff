#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "skdv/model.hpp"

namespace skdv {

enum class RegionKind { centered, ray };

/// centered: |x| <= K t^p1;  ray: |x - t^m| <= K t^p1 with 0 < m < 1 - p1/2.
class RegionSpec {
 public:
  static RegionSpec centered(double p1, double K = 1.0) {
    return RegionSpec(RegionKind::centered, p1, K, 0.0);
  }
  static RegionSpec ray(double p1, double m, double K = 1.0) {
    return RegionSpec(RegionKind::ray, p1, K, m);
  }

  RegionKind kind() const { return kind_; }
  double p1() const { return p1_; }
  double K() const { return K_; }
  double m() const { return m_; }

  double center(double t) const { return kind_ == RegionKind::ray ? std::pow(t, m_) : 0.0; }
  double radius(double t) const { return K_ * std::pow(t, p1_); }

 private:
  RegionSpec(RegionKind kind, double p1, double K, double m) : kind_(kind), p1_(p1), K_(K), m_(m) {
    if (!(p1 > 0.0 && p1 < 2.0 / 3.0)) {
      throw InvalidArgument("region exponent p1 must lie in (0, 2/3) (got " + std::to_string(p1) + ")");
    }
    if (!(K > 0.0) || !std::isfinite(K)) throw InvalidArgument("region prefactor K must be positive");
    if (kind == RegionKind::ray && !(m > 0.0 && m < 1.0 - p1 / 2.0)) {
      throw InvalidArgument("ray exponent requires 0 < m < 1 - p1/2 (m=" + std::to_string(m) +
                            ", bound=" + std::to_string(1.0 - p1 / 2.0) + ")");
    }
  }

  RegionKind kind_;
  double p1_;
  double K_;
  double m_;
};

/// Nodal quadrature weights of the region indicator at time t: 1 inside,
/// 1/2 on the boundary, 0 outside.
inline RealField region_indicator(const Grid& g, const RegionSpec& r, double t) {
  if (!(t > 1.0)) throw InvalidArgument("region masses need t > 1 (got t=" + std::to_string(t) + ")");
  const double c = r.center(t);
  const double R = r.radius(t);
  const double right = g.left() + g.length() - g.dx();
  if (c - R < g.left() || c + R > right) {
    throw InvalidArgument("region [" + std::to_string(c - R) + ", " + std::to_string(c + R) +
                          "] at t=" + std::to_string(t) + " exceeds the box");
  }
  const double eps = 1e-9 * g.dx();
  RealField ind(g.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double d = std::abs(g.x(j) - c);
    if (std::abs(d - R) <= eps) {
      ind[j] = 0.5;
    } else if (d < R) {
      ind[j] = 1.0;
    }
  }
  return ind;
}

struct MassRecord {
  double t = 0.0;
  double v2 = 0.0;   // int_region v^2
  double u2 = 0.0;   // int_region |u|^2
  double dv2 = 0.0;  // int_region v_x^2
  double du2 = 0.0;  // int_region |u_x|^2
  double u4 = 0.0;   // int_region |u|^4

  double l2() const { return v2 + u2; }
};

inline MassRecord masses_with(const FieldState& s, std::span<const double> weights) {
  const Grid& g = *s.grid;
  const ComplexField ux = spectral_derivative(g, std::span<const cplx>(s.u), 1);
  const RealField vx = spectral_derivative(g, std::span<const double>(s.v), 1);
  CompensatedSum v2, u2, dv2, du2, u4;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = weights[j];
    if (w == 0.0) continue;
    const double a = std::norm(s.u[j]);
    v2.add(w * s.v[j] * s.v[j]);
    u2.add(w * a);
    dv2.add(w * vx[j] * vx[j]);
    du2.add(w * std::norm(ux[j]));
    u4.add(w * a * a);
  }
  const double h = g.dx();
  return {s.t, h * v2.value(), h * u2.value(), h * dv2.value(), h * du2.value(), h * u4.value()};
}

inline MassRecord region_mass(const FieldState& s, const RegionSpec& r) {
  s.validate();
  return masses_with(s, region_indicator(*s.grid, r, s.t));
}

/// Streaming trapezoid-in-time accumulation of P_J and P_I from t0 on.
class DecayAccumulator {
 public:
  explicit DecayAccumulator(double t0 = 2.0) : t0_(t0) {
    if (!(t0 > 1.0)) throw InvalidArgument("accumulation start t0 must exceed 1");
  }

  struct Value {
    double pj = 0.0;
    double pi = 0.0;
  };

  Value add(double t, double g_j, double g_i) {
    if (t < t0_) return {};
    if (has_last_) {
      if (!(t > last_.t)) throw InvalidArgument("DecayAccumulator: times must increase");
      const double h = t - last_.t;
      value_.pj += 0.5 * h * (last_.g_j + g_j);
      value_.pi += 0.5 * h * (last_.g_i + g_i);
    }
    last_ = Last{t, g_j, g_i};
    has_last_ = true;
    return value_;
  }

  Value value() const { return value_; }
  double t0() const { return t0_; }

  struct Last {
    double t = 0.0;
    double g_j = 0.0;
    double g_i = 0.0;
  };
  std::optional<Last> last() const { return has_last_ ? std::optional<Last>(last_) : std::nullopt; }
  void restore(Value v, std::optional<Last> last) {
    value_ = v;
    has_last_ = last.has_value();
    last_ = last.value_or(Last{});
  }

 private:
  double t0_;
  Value value_;
  Last last_;
  bool has_last_ = false;
};

struct DecaySample {
  double t;
  double g_j;
  double g_i;
};

inline std::vector<DecayAccumulator::Value> accumulate_weighted_integrals(
    std::span<const DecaySample> series, double t0) {
  DecayAccumulator acc(t0);
  std::vector<DecayAccumulator::Value> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(acc.add(s.t, s.g_j, s.g_i));
  return out;
}

/// Running minimum over the trailing window [T/2, T] (sliding-window deque;
/// both window ends only move forward).
class TailMinTracker {
 public:
  struct Point {
    double t;
    double value;
  };

  double add(double t, double value) {
    if (!window_.empty() && !(t > last_t_)) throw InvalidArgument("TailMinTracker: times must increase");
    last_t_ = t;
    while (!window_.empty() && window_.back().value >= value) window_.pop_back();
    window_.push_back({t, value});
    while (window_.front().t < 0.5 * t) window_.pop_front();
    return window_.front().value;
  }

  const std::deque<Point>& window() const { return window_; }
  void restore(std::deque<Point> w, double last_t) {
    window_ = std::move(w);
    last_t_ = last_t;
  }

 private:
  std::deque<Point> window_;
  double last_t_ = 0.0;
};

struct SeriesPoint {
  double t;
  double value;
};

inline std::vector<double> liminf_tracker(std::span<const SeriesPoint> series) {
  if (series.empty()) throw InvalidArgument("liminf_tracker: empty series");
  TailMinTracker tr;
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& p : series) out.push_back(tr.add(p.t, p.value));
  return out;
}

/// First time T > 1 at which a front starting at x0 with speed c satisfies
/// x0 + c T >= 2 K T^p1 + width, found by bisection.
inline double exit_time(double c, double K, double p1, double x0, double width) {
  if (!(c > 0.0)) throw InvalidArgument("exit_time needs a positive speed");
  auto gap = [&](double T) { return x0 + c * T - 2.0 * K * std::pow(T, p1) - width; };
  double lo = 1.0, hi = 2.0;
  if (gap(lo) >= 0.0) return lo;
  while (gap(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace skdv
