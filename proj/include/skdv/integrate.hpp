#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skdv/model.hpp"

namespace skdv {

enum class Scheme { strang, lie };

inline const char* to_string(Scheme s) { return s == Scheme::strang ? "strang" : "lie"; }

struct IntegratorOptions {
  double dt = 1e-3;
  double sponge_width = 0.0;     // fraction of the box length, per side
  double sponge_strength = 0.0;  // peak damping rate
  bool dealias = true;
  Scheme scheme = Scheme::strang;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("integrator.dt must be positive");
    if (!(sponge_width >= 0.0 && sponge_width <= 0.25)) {
      throw InvalidArgument("integrator.sponge_width must lie in [0, 0.25]");
    }
    if (!(sponge_strength >= 0.0) || !std::isfinite(sponge_strength)) {
      throw InvalidArgument("integrator.sponge_strength must be finite and nonnegative");
    }
    if (sponge_strength * dt > 1.0) {
      throw InvalidArgument("integrator.sponge_strength * dt must not exceed 1");
    }
  }
};

/// Thrown when a step produces non-finite values.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, std::size_t step)
      : std::runtime_error(what), t_(t), step_(step) {}
  double time() const { return t_; }
  std::size_t step() const { return step_; }

 private:
  double t_;
  std::size_t step_;
};

/// Raised-cosine damping rate, supported on the outer `width` fraction of
/// each side of the box.
inline RealField sponge_profile(const Grid& g, double width, double strength) {
  RealField sigma(g.size(), 0.0);
  const double w = width * g.length();
  if (w <= 0.0 || strength <= 0.0) return sigma;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double from_left = g.x(j) - g.left();
    const double d = std::min(from_left, g.length() - from_left);
    if (d < w) sigma[j] = strength * 0.5 * (1.0 + std::cos(std::numbers::pi * d / w));
  }
  return sigma;
}

/// Split-step integrator. The dispersive parts are applied exactly in
/// Fourier space; the nonlinear subflow keeps |u| fixed, so v follows a
/// forced Burgers flow (RK4) and u picks up the phase exp(-i int W dt),
/// with the phase integral taken by the same RK4 quadrature.
class Stepper {
 public:
  Stepper(GridPtr grid, ModelParams params, IntegratorOptions options)
      : grid_(std::move(grid)), params_(params), opt_(options) {
    opt_.validate();
    if (!params_.finite()) throw InvalidArgument("model parameters must be finite");
    const Grid& g = *grid_;
    const double tau = opt_.scheme == Scheme::strang ? 0.5 * opt_.dt : opt_.dt;
    const auto k = g.wavenumbers();
    u_phase_.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) u_phase_[j] = std::polar(1.0, -k[j] * k[j] * tau);
    v_phase_.resize(g.half_size());
    const std::size_t nyq = g.size() / 2;
    for (std::size_t j = 0; j < g.half_size(); ++j) {
      const double kj = g.half_wavenumber(j);
      v_phase_[j] = (j == nyq) ? cplx{1.0, 0.0} : std::polar(1.0, kj * kj * kj * tau);
    }
    const RealField sigma = sponge_profile(g, opt_.sponge_width, opt_.sponge_strength);
    has_sponge_ = false;
    damping_.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      damping_[j] = 1.0 - sigma[j] * opt_.dt;
      if (sigma[j] != 0.0) has_sponge_ = true;
    }
  }

  const IntegratorOptions& options() const { return opt_; }
  const ModelParams& params() const { return params_; }
  const GridPtr& grid() const { return grid_; }

  /// Advances `s` by dt in place. `step_index` only labels diagnostics.
  void step(FieldState& s, std::size_t step_index = 0) const {
    s.validate();
    if (!s.grid->same_layout(*grid_)) throw InvalidArgument("state grid differs from stepper grid");
    if (opt_.scheme == Scheme::strang) {
      linear(s);
      nonlinear(s);
      linear(s);
    } else {
      linear(s);
      nonlinear(s);
    }
    if (has_sponge_) {
      for (std::size_t j = 0; j < s.v.size(); ++j) {
        s.u[j] *= damping_[j];
        s.v[j] *= damping_[j];
      }
    }
    s.t += opt_.dt;
    check_finite(s, step_index);
  }

 private:
  void linear(FieldState& s) const {
    const Grid& g = *grid_;
    auto us = g.forward(s.u);
    for (std::size_t j = 0; j < us.size(); ++j) us[j] *= u_phase_[j];
    s.u = g.inverse(us);
    auto vs = g.forward_real(s.v);
    for (std::size_t j = 0; j < vs.size(); ++j) vs[j] *= v_phase_[j];
    s.v = g.inverse_real(vs);
  }

  void nonlinear(FieldState& s) const {
    const Grid& g = *grid_;
    const std::size_t n = g.size();
    const double h = opt_.dt;
    const double a = params_.alpha, b = params_.beta;
    const RealField u2 = modulus_squared(s.u);
    auto f = [&](const RealField& v) {
      return kdv_nonlinear_tendency(g, v, u2, params_.gamma, opt_.dealias);
    };

    const RealField& v0 = s.v;
    RealField k1 = f(v0);
    RealField tmp(n);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = v0[j] + 0.5 * h * k1[j];
    RealField k2 = f(tmp);
    RealField v2 = tmp;
    for (std::size_t j = 0; j < n; ++j) tmp[j] = v0[j] + 0.5 * h * k2[j];
    RealField k3 = f(tmp);
    RealField v3 = tmp;
    for (std::size_t j = 0; j < n; ++j) tmp[j] = v0[j] + h * k3[j];
    RealField k4 = f(tmp);
    const RealField& v4 = tmp;

    RealField v_new(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double phase =
          h / 6.0 * (a * (v0[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]) + 6.0 * b * u2[j]);
      s.u[j] *= std::polar(1.0, -phase);
      v_new[j] = v0[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    s.v = std::move(v_new);
  }

  static void check_finite(const FieldState& s, std::size_t step_index) {
    for (std::size_t j = 0; j < s.v.size(); ++j) {
      if (!std::isfinite(s.v[j]) || !std::isfinite(s.u[j].real()) ||
          !std::isfinite(s.u[j].imag())) {
        throw IntegrationError("non-finite field value at node " + std::to_string(j) +
                                   " after step " + std::to_string(step_index) +
                                   " (t = " + std::to_string(s.t) + "); reduce dt",
                               s.t, step_index);
      }
    }
  }

  GridPtr grid_;
  ModelParams params_;
  IntegratorOptions opt_;
  ComplexField u_phase_;
  ComplexField v_phase_;
  RealField damping_;
  bool has_sponge_ = false;
};

inline FieldState step(const FieldState& state, const ModelParams& params,
                       const IntegratorOptions& options) {
  Stepper stepper(state.grid, params, options);
  FieldState out = state;
  stepper.step(out);
  return out;
}

/// Receives sampled states from evolve().
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void on_sample(const FieldState& s) = 0;
  virtual void on_abort(const IntegrationError&) {}
  virtual void on_finish(const FieldState&) {}
  /// Polled after every sample; true ends the run early without on_finish.
  virtual bool wants_stop() const { return false; }
};

struct EvolveSchedule {
  double t_final = 0.0;
  double sample_interval = 0.0;  // 0: sample only the endpoints
  bool emit_initial = true;
  // Resuming: times are origin + (start_step + k) dt so that a resumed run
  // reproduces the uninterrupted one bit for bit.
  std::optional<double> origin;
  std::size_t start_step = 0;
};

namespace detail {

inline std::size_t whole_multiple(double span, double unit, const char* what) {
  const double r = span / unit;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-6) {
    throw InvalidArgument(std::string(what) + " must be an integer multiple of dt");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Repeated step() from state.t to schedule.t_final, calling every sink on
/// the sample grid t0 + k * sample_interval. Times are computed as
/// t0 + step * dt, never accumulated. Returns the final state.
inline FieldState evolve(FieldState state, const Stepper& stepper, const EvolveSchedule& schedule,
                         std::span<Sink* const> sinks = {}) {
  state.validate();
  const double dt = stepper.options().dt;
  const double t0 = schedule.origin.value_or(state.t);
  if (schedule.t_final < state.t) throw InvalidArgument("t_final precedes the initial time");
  const std::size_t total = detail::whole_multiple(schedule.t_final - t0, dt, "t_final - t0");
  const std::size_t every =
      schedule.sample_interval > 0.0
          ? detail::whole_multiple(schedule.sample_interval, dt, "sample interval")
          : std::max<std::size_t>(total, 1);
  if (every == 0) throw InvalidArgument("sample interval must be at least dt");
  if (schedule.start_step > total) throw InvalidArgument("start step lies beyond t_final");

  auto emit = [&](const FieldState& s) {
    bool stop = false;
    for (Sink* sink : sinks) {
      sink->on_sample(s);
      stop = stop || sink->wants_stop();
    }
    return stop;
  };
  if (schedule.emit_initial && emit(state) && schedule.start_step < total) return state;
  for (std::size_t k = schedule.start_step + 1; k <= total; ++k) {
    try {
      stepper.step(state, k);
    } catch (const IntegrationError& e) {
      for (Sink* sink : sinks) sink->on_abort(e);
      throw;
    }
    state.t = t0 + static_cast<double>(k) * dt;
    if ((k % every == 0 || k == total) && emit(state) && k < total) return state;
  }
  for (Sink* sink : sinks) sink->on_finish(state);
  return state;
}

inline FieldState evolve(FieldState state, const ModelParams& params,
                         const IntegratorOptions& options, const EvolveSchedule& schedule,
                         std::span<Sink* const> sinks = {}) {
  Stepper stepper(state.grid, params, options);
  return evolve(std::move(state), stepper, schedule, sinks);
}

struct ConvergenceReport {
  std::array<double, 3> errors{};  // at dt, dt/2, dt/4 against the dt/16 run
  double order = 0.0;              // log2(errors[0] / errors[1])
  double order_fine = 0.0;         // log2(errors[1] / errors[2])
  bool exact = false;              // all errors at roundoff
};

inline double max_difference(const FieldState& a, const FieldState& b) {
  double e = 0.0;
  for (std::size_t j = 0; j < a.v.size(); ++j) {
    e = std::max(e, std::abs(a.u[j] - b.u[j]));
    e = std::max(e, std::abs(a.v[j] - b.v[j]));
  }
  return e;
}

/// Temporal order of the scheme in `options` on the interval [state.t, state.t + T].
inline ConvergenceReport convergence_probe(const FieldState& state, const ModelParams& params,
                                           IntegratorOptions options, double base_dt, double T) {
  auto run = [&](double dt) {
    IntegratorOptions o = options;
    o.dt = dt;
    EvolveSchedule schedule;
    schedule.t_final = state.t + T;
    schedule.emit_initial = false;
    return evolve(state, params, o, schedule);
  };
  const FieldState ref = run(base_dt / 16.0);
  ConvergenceReport r;
  for (int i = 0; i < 3; ++i) r.errors[i] = max_difference(run(base_dt / std::pow(2.0, i)), ref);

  double scale = 1.0;
  for (std::size_t j = 0; j < ref.v.size(); ++j) {
    scale = std::max({scale, std::abs(ref.u[j]), std::abs(ref.v[j])});
  }
  r.exact = std::max({r.errors[0], r.errors[1], r.errors[2]}) <= 1e-12 * scale;
  if (!r.exact) {
    r.order = std::log2(r.errors[0] / r.errors[1]);
    r.order_fine = std::log2(r.errors[1] / r.errors[2]);
  }
  return r;
}

}  // namespace skdv
