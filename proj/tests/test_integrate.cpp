#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace skdv;
using skdv::testing::gaussian_state;

namespace {

IntegratorOptions with_dt(double dt, Scheme scheme = Scheme::strang) {
  IntegratorOptions o;
  o.dt = dt;
  o.scheme = scheme;
  return o;
}

class Recorder : public Sink {
 public:
  void on_sample(const FieldState& s) override { states.push_back(s); }
  void on_abort(const IntegrationError& e) override { aborted_at = e.step(); }
  void on_finish(const FieldState&) override { finished = true; }
  std::vector<FieldState> states;
  std::optional<std::size_t> aborted_at;
  bool finished = false;
};

}  // namespace

TEST(Options, Validation) {
  IntegratorOptions o;
  EXPECT_NO_THROW(o.validate());
  o.dt = 0.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.sponge_width = 0.3;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.sponge_strength = -1.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
}

TEST(Sponge, RaisedCosineOnTheEdges) {
  const Grid g(400, 100.0, 0.0);
  const auto s = sponge_profile(g, 0.1, 2.0);
  EXPECT_DOUBLE_EQ(s[0], 2.0);  // the left edge node
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double d = std::min(g.x(j) - g.left(), g.length() - (g.x(j) - g.left()));
    if (d >= 10.0) {
      EXPECT_EQ(s[j], 0.0);
    } else {
      EXPECT_GT(s[j], 0.0);
      EXPECT_LE(s[j], 2.0);
    }
  }
  for (double x : sponge_profile(g, 0.0, 2.0)) EXPECT_EQ(x, 0.0);
}

TEST(Step, PlaneWaveFollowsExactSchrodingerFlow) {
  auto g = make_grid(64, 2.0 * std::numbers::pi, std::numbers::pi);
  const double k = 5.0, dt = 0.013;
  FieldState s = FieldState::zeros(g);
  for (std::size_t j = 0; j < g->size(); ++j) s.u[j] = std::polar(1.0, k * g->x(j));
  for (Scheme scheme : {Scheme::strang, Scheme::lie}) {
    const FieldState out = step(s, {0, 0, 0}, with_dt(dt, scheme));
    for (std::size_t j = 0; j < g->size(); ++j) {
      EXPECT_LT(std::abs(out.u[j] - std::polar(1.0, k * g->x(j) - k * k * dt)), 1e-13);
      EXPECT_EQ(out.v[j], 0.0);
    }
    EXPECT_DOUBLE_EQ(out.t, dt);
  }
}

TEST(Step, KdvModeAdvancesByCubicPhase) {
  auto g = make_grid(64, 2.0 * std::numbers::pi, std::numbers::pi);
  const double k = 3.0, dt = 0.01, eps = 1e-9;
  FieldState s = FieldState::zeros(g);
  for (std::size_t j = 0; j < g->size(); ++j) s.v[j] = eps * std::cos(k * g->x(j));
  const FieldState out = step(s, {0, 0, 0}, with_dt(dt));
  // v v_x contributes O(eps^2 k dt), far below the tolerance
  for (std::size_t j = 0; j < g->size(); ++j) {
    EXPECT_NEAR(out.v[j], eps * std::cos(k * g->x(j) + k * k * k * dt), 1e-10 * eps);
  }
}

TEST(Step, PreservesMassOfFullSystem) {
  auto g = make_grid(1024, 80.0, 0.0);
  const ModelParams p{-1.0, 1.0, -1.0};
  FieldState s = gaussian_state(g, 0.0, 1.0, 1.0, 1.5);
  const double before = conserved_triple(s, p).i1;
  for (Scheme scheme : {Scheme::strang, Scheme::lie}) {
    const FieldState out = step(s, p, with_dt(1e-3, scheme));
    EXPECT_LE(std::abs(conserved_triple(out, p).i1 - before), 1e-12 * before);
  }
}

TEST(Step, MeanOfVIsConservedWithoutU) {
  auto g = make_grid(512, 40.0, 0.0);
  FieldState s = FieldState::zeros(g);
  s.v = skdv::testing::random_band_limited_real(*g, 40, 3);
  for (double& x : s.v) x *= 0.3;
  const double before = quadrature(*g, s.v);
  Stepper stepper(g, {-1, 1, -1}, with_dt(1e-3));
  for (int k = 0; k < 200; ++k) stepper.step(s);
  EXPECT_NEAR(quadrature(*g, s.v), before, 1e-12 * (1.0 + std::abs(before)));
}

TEST(Step, RejectsForeignGrid) {
  auto g = make_grid(64, 10.0, 0.0);
  Stepper stepper(g, {-1, 1, -1}, with_dt(1e-3));
  FieldState s = FieldState::zeros(make_grid(128, 10.0, 0.0));
  EXPECT_THROW(stepper.step(s), InvalidArgument);
}

TEST(Evolve, IsDeterministic) {
  auto g = make_grid(512, 40.0, 0.0);
  const ModelParams p{-1.0, 1.0, -1.0};
  EvolveSchedule sch;
  sch.t_final = 0.5;
  const FieldState a = evolve(gaussian_state(g), p, with_dt(1e-3), sch);
  const FieldState b = evolve(gaussian_state(g), p, with_dt(1e-3), sch);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.t, 0.5);
}

TEST(Evolve, SamplesOnTheScheduleWithExactTimes) {
  auto g = make_grid(128, 20.0, 0.0);
  Recorder rec;
  Sink* sinks[] = {&rec};
  EvolveSchedule sch;
  sch.t_final = 0.3;
  sch.sample_interval = 0.1;
  evolve(gaussian_state(g), {-1, 1, -1}, with_dt(0.01), sch, sinks);
  ASSERT_EQ(rec.states.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(rec.states[k].t, static_cast<double>(k * 10) * 0.01);
  EXPECT_TRUE(rec.finished);
}

TEST(Evolve, ZeroLengthRunEmitsOnlyTheInitialSample) {
  auto g = make_grid(128, 20.0, 0.0);
  Recorder rec;
  Sink* sinks[] = {&rec};
  EvolveSchedule sch;
  sch.t_final = 0.0;
  sch.sample_interval = 0.1;
  const FieldState s = gaussian_state(g);
  const FieldState out = evolve(s, {-1, 1, -1}, with_dt(0.01), sch, sinks);
  ASSERT_EQ(rec.states.size(), 1u);
  EXPECT_EQ(out.u, s.u);
}

TEST(Evolve, RejectsMisalignedSchedule) {
  auto g = make_grid(128, 20.0, 0.0);
  EvolveSchedule sch;
  sch.t_final = 0.0105;
  EXPECT_THROW(evolve(gaussian_state(g), {-1, 1, -1}, with_dt(0.01), sch), InvalidArgument);
  sch.t_final = -1.0;
  EXPECT_THROW(evolve(gaussian_state(g), {-1, 1, -1}, with_dt(0.01), sch), InvalidArgument);
}

TEST(Evolve, BlowUpAbortsAndFlushesPartialTrajectory) {
  auto g = make_grid(512, 40.0, 0.0);
  FieldState s = gaussian_state(g, 0.0, 1.0, 50.0);
  const ModelParams p{-1, 1, -1};
  EvolveSchedule sch;
  sch.t_final = 50.0;
  sch.sample_interval = 0.05;

  Recorder rec;
  Sink* sinks[] = {&rec};
  try {
    evolve(s, p, with_dt(0.05), sch, sinks);
    FAIL() << "expected an IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
    ASSERT_TRUE(rec.aborted_at.has_value());
    EXPECT_EQ(*rec.aborted_at, e.step());
    EXPECT_EQ(rec.states.size(), e.step());  // every completed step was sampled
  }
  EXPECT_FALSE(rec.finished);

  // the diagnostics collector writes out what it holds
  DiagnosticsOptions opt;
  opt.budgets = false;
  DiagnosticsCollector col(p, opt);
  Sink* dsinks[] = {&col};
  EXPECT_THROW(evolve(s, p, with_dt(0.05), sch, dsinks), IntegrationError);
  EXPECT_EQ(col.trajectory().size(), rec.states.size());
}

TEST(Evolve, ResumedRunMatchesUninterruptedRunBitForBit) {
  auto g = make_grid(256, 30.0, 0.0);
  const ModelParams p{-1.0, 2.0, -0.5};
  const IntegratorOptions o = with_dt(1e-3);
  EvolveSchedule full;
  full.t_final = 0.3;
  const FieldState a = evolve(gaussian_state(g), p, o, full);

  EvolveSchedule first;
  first.t_final = 0.137;
  FieldState mid = evolve(gaussian_state(g), p, o, first);
  EvolveSchedule rest;
  rest.t_final = 0.3;
  rest.origin = 0.0;
  rest.start_step = 137;
  rest.emit_initial = false;
  const FieldState b = evolve(mid, p, o, rest);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.t, b.t);
}

TEST(Convergence, StrangIsSecondOrder) {
  auto g = make_grid(256, 40.0, 0.0);
  const auto r = convergence_probe(gaussian_state(g, 0.0, 1.0, 1.0, 1.0), {-1, 1, -1},
                                   with_dt(0.005), 0.005, 0.4);
  EXPECT_FALSE(r.exact);
  EXPECT_NEAR(r.order, 2.0, 0.2);
  EXPECT_NEAR(r.order_fine, 2.0, 0.2);
}

TEST(Convergence, LieIsFirstOrder) {
  auto g = make_grid(256, 40.0, 0.0);
  const auto r = convergence_probe(gaussian_state(g, 0.0, 1.0, 1.0, 1.0), {-1, 1, -1},
                                   with_dt(0.005, Scheme::lie), 0.005, 0.4);
  EXPECT_FALSE(r.exact);
  EXPECT_NEAR(r.order, 1.0, 0.2);
  // the dt/16 reference still carries 1/16 of the first-order error, which
  // biases the fine ratio to log2((1/2 - 1/16) / (1/4 - 1/16)) = 1.22
  EXPECT_NEAR(r.order_fine, std::log2(0.4375 / 0.1875), 0.05);
}

TEST(Convergence, LinearProblemIsExact) {
  auto g = make_grid(256, 40.0, 0.0);
  const auto r = convergence_probe(gaussian_state(g, 0.0, 1.0, 0.0, 1.0), {0, 0, 0}, with_dt(0.02),
                                   0.02, 0.4);
  EXPECT_TRUE(r.exact);
}

TEST(Drift, LinearRunKeepsMassToRoundoff) {
  auto g = make_grid(512, 40.0, 0.0);
  EvolveSchedule sch;
  sch.t_final = 1.0;
  sch.sample_interval = 0.1;
  DiagnosticsOptions opt;
  opt.budgets = false;
  opt.virial.mu = 1.0;  // the default needs alpha != 0
  const auto tr = evolve_with_diagnostics(gaussian_state(g, 0.0, 1.0, 1e-3, 2.0), {0, 0, 0},
                                          with_dt(1e-2), sch, opt);
  ASSERT_EQ(tr.size(), 11u);
  const auto series = conserved_series(tr);
  EXPECT_LE(drift_report(series)[0], 1e-12);
}
