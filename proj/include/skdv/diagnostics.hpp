#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "skdv/conserved.hpp"
#include "skdv/integrate.hpp"
#include "skdv/monitor.hpp"
#include "skdv/virial.hpp"

namespace skdv {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-sample scalars. Quantities that are undefined at a sample (virial
/// terms before t > 1, budgets at the first and last sample) are NaN.
struct DiagnosticsRecord {
  double t = 0.0;
  ConservedTriple conserved;
  double j = kNaN;
  double i = kNaN;
  BudgetJ budget_j;
  BudgetI budget_i;
  bool has_budget = false;
  MassRecord mass;
  bool has_mass = false;
  double g_j = kNaN;
  double g_i = kNaN;
  double pj = kNaN;
  double pi = kNaN;
  // tail minima over [t/2, t] of the region masses
  double tail_v2 = kNaN, tail_u2 = kNaN, tail_dv2 = kNaN, tail_du2 = kNaN, tail_u4 = kNaN,
         tail_l2 = kNaN;
};

using Trajectory = std::vector<DiagnosticsRecord>;

inline std::vector<ConservedTriple> conserved_series(const Trajectory& tr) {
  std::vector<ConservedTriple> out;
  out.reserve(tr.size());
  for (const auto& r : tr) out.push_back(r.conserved);
  return out;
}

struct DiagnosticsOptions {
  VirialConfig virial;                 // resolved against the model
  std::optional<RegionSpec> region;    // none: no mass columns
  double accumulate_from = 2.0;        // t0 of the partial integrals
  bool budgets = true;
  bool dealias = true;
};

/// Sink that turns sampled states into DiagnosticsRecords. A record is
/// emitted once the following sample is known, so the budget of every
/// interior sample can use its centred time difference.
class DiagnosticsCollector : public Sink {
 public:
  using Emit = std::function<void(const DiagnosticsRecord&)>;

  DiagnosticsCollector(ModelParams params, DiagnosticsOptions opt, Emit emit = {})
      : params_(params), opt_(std::move(opt)), acc_(opt_.accumulate_from), emit_(std::move(emit)) {
    opt_.virial = opt_.virial.resolved(params_);
  }

  void on_sample(const FieldState& s) override {
    DiagnosticsRecord rec = basic_record(s);
    if (cur_) {
      if (prev_ && opt_.budgets) fill_budgets(*pending_, *prev_, *cur_, s);
      publish(*pending_);
    }
    prev_ = std::move(cur_);
    cur_ = s;
    pending_ = rec;
  }

  void on_finish(const FieldState&) override { flush(); }
  void on_abort(const IntegrationError&) override { flush(); }

  const Trajectory& trajectory() const { return trajectory_; }
  void keep_trajectory(bool keep) { keep_ = keep; }
  std::size_t emitted() const { return emitted_; }

  // Checkpoint support: the collector is fully described by these pieces.
  struct Snapshot {
    std::optional<FieldState> prev;
    std::optional<FieldState> cur;
    std::optional<DiagnosticsRecord> pending;
    DecayAccumulator::Value acc_value;
    std::optional<DecayAccumulator::Last> acc_last;
    std::array<std::deque<TailMinTracker::Point>, 6> tails;
    std::array<double, 6> tail_last_t{};
    std::size_t emitted = 0;
  };

  Snapshot save() const {
    Snapshot s{prev_, cur_, pending_, acc_.value(), acc_.last(), {}, {}, emitted_};
    for (int k = 0; k < 6; ++k) {
      s.tails[k] = tails_[k].window();
      s.tail_last_t[k] = tails_[k].window().empty() ? 0.0 : tails_[k].window().back().t;
    }
    return s;
  }

  void restore(const Snapshot& s) {
    prev_ = s.prev;
    cur_ = s.cur;
    pending_ = s.pending;
    acc_.restore(s.acc_value, s.acc_last);
    for (int k = 0; k < 6; ++k) tails_[k].restore(s.tails[k], s.tail_last_t[k]);
    emitted_ = s.emitted;
  }

  const DiagnosticsOptions& options() const { return opt_; }

 private:
  DiagnosticsRecord basic_record(const FieldState& s) {
    DiagnosticsRecord r;
    r.t = s.t;
    r.conserved = conserved_triple(s, params_);
    if (s.t > 1.0) {
      r.j = functional_J(s, opt_.virial);
      r.i = functional_I(s, opt_.virial);
      const auto d = decay_integrands(s, opt_.virial);
      r.g_j = d.g_j;
      r.g_i = d.g_i;
      if (s.t >= acc_.t0()) {
        const auto v = acc_.add(s.t, d.g_j, d.g_i);
        r.pj = v.pj;
        r.pi = v.pi;
      }
      if (opt_.region) {
        r.mass = region_mass(s, *opt_.region);
        r.has_mass = true;
        const std::array<double, 6> m{r.mass.v2, r.mass.u2, r.mass.dv2,
                                      r.mass.du2, r.mass.u4, r.mass.l2()};
        const std::array<double*, 6> out{&r.tail_v2, &r.tail_u2, &r.tail_dv2,
                                         &r.tail_du2, &r.tail_u4, &r.tail_l2};
        for (int k = 0; k < 6; ++k) *out[k] = tails_[k].add(s.t, m[k]);
      }
    }
    return r;
  }

  void fill_budgets(DiagnosticsRecord& r, const FieldState& prev, const FieldState& mid,
                    const FieldState& next) const {
    if (!(prev.t > 1.0)) return;
    const Window w{prev, mid, next};
    r.budget_j = budget_J(w, params_, opt_.virial, opt_.dealias);
    r.budget_i = budget_I(w, params_, opt_.virial);
    r.has_budget = true;
  }

  void publish(const DiagnosticsRecord& r) {
    ++emitted_;
    if (keep_) trajectory_.push_back(r);
    if (emit_) emit_(r);
  }

  void flush() {
    if (pending_) {
      publish(*pending_);
      pending_.reset();
    }
  }

  ModelParams params_;
  DiagnosticsOptions opt_;
  DecayAccumulator acc_;
  std::array<TailMinTracker, 6> tails_;
  Emit emit_;
  std::optional<FieldState> prev_, cur_;
  std::optional<DiagnosticsRecord> pending_;
  Trajectory trajectory_;
  bool keep_ = true;
  std::size_t emitted_ = 0;
};

/// evolve() with a DiagnosticsCollector attached; returns the trajectory.
inline Trajectory evolve_with_diagnostics(const FieldState& state, const ModelParams& params,
                                          const IntegratorOptions& options,
                                          const EvolveSchedule& schedule,
                                          DiagnosticsOptions diag) {
  DiagnosticsCollector collector(params, std::move(diag));
  Sink* sinks[] = {&collector};
  evolve(state, params, options, schedule, sinks);
  return collector.trajectory();
}

}  // namespace skdv
