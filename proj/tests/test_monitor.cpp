#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace skdv;
using skdv::testing::gaussian_state;

TEST(Region, Construction) {
  const auto r = RegionSpec::ray(0.5, 0.6, 2.0);
  EXPECT_EQ(r.kind(), RegionKind::ray);
  EXPECT_DOUBLE_EQ(r.center(4.0), std::pow(4.0, 0.6));
  EXPECT_DOUBLE_EQ(r.radius(4.0), 4.0);
  EXPECT_EQ(RegionSpec::centered(0.5).center(9.0), 0.0);

  EXPECT_THROW(RegionSpec::ray(0.5, 0.8), InvalidArgument);
  EXPECT_THROW(RegionSpec::ray(0.5, 0.75), InvalidArgument);
  EXPECT_THROW(RegionSpec::ray(0.5, 0.0), InvalidArgument);
  EXPECT_THROW(RegionSpec::centered(0.7), InvalidArgument);
  EXPECT_THROW(RegionSpec::centered(0.5, 0.0), InvalidArgument);
}

TEST(Region, IndicatorHalvesBoundaryNodes) {
  const Grid g(80, 40.0, 0.0);  // dx = 0.5
  const auto ind = region_indicator(g, RegionSpec::centered(0.5), 4.0);  // |x| <= 2
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = std::abs(g.x(j));
    const double want = x < 2.0 - 1e-12 ? 1.0 : (x <= 2.0 + 1e-12 ? 0.5 : 0.0);
    EXPECT_EQ(ind[j], want) << g.x(j);
  }
}

TEST(Region, RejectsEarlyTimesAndOversizedRegions) {
  const Grid g(80, 40.0, 0.0);
  EXPECT_THROW(region_indicator(g, RegionSpec::centered(0.5), 1.0), InvalidArgument);
  EXPECT_THROW(region_indicator(g, RegionSpec::centered(0.5), 401.0), InvalidArgument);
  EXPECT_THROW(region_indicator(g, RegionSpec::ray(0.5, 0.7), 100.0), InvalidArgument);
  EXPECT_NO_THROW(region_indicator(g, RegionSpec::centered(0.5), 100.0));
}

TEST(Mass, ZeroState) {
  auto g = make_grid(128, 40.0, 0.0);
  const auto m = region_mass(FieldState::zeros(g, 3.0), RegionSpec::centered(0.5));
  EXPECT_EQ(m.v2 + m.u2 + m.dv2 + m.du2 + m.u4, 0.0);
  EXPECT_EQ(m.t, 3.0);
}

TEST(Mass, UnitWeightsGiveTheMass) {
  auto g = make_grid(512, 40.0, 0.0);
  FieldState s = gaussian_state(g, 2.0, 1.0, 1.0, 2.0);
  const RealField ones(g->size(), 1.0);
  EXPECT_EQ(masses_with(s, ones).u2, conserved_triple(s, {-1, 1, -1}).i1);
}

TEST(Mass, RegionAndComplementPartitionTheMass) {
  auto g = make_grid(1024, 80.0, 0.0);
  FieldState s = FieldState::zeros(g, 0.0);
  s.u = skdv::testing::random_band_limited(*g, 80, 21);
  s.v = skdv::testing::random_band_limited_real(*g, 80, 22);
  for (double t : {1.5, 7.0, 150.0}) {
    s.t = t;
    for (const auto& r : {RegionSpec::centered(0.5, 1.3), RegionSpec::ray(0.5, 0.6)}) {
      const RealField ind = region_indicator(*g, r, t);
      RealField rest(ind.size());
      for (std::size_t j = 0; j < ind.size(); ++j) rest[j] = 1.0 - ind[j];
      const double i1 = conserved_triple(s, {-1, 1, -1}).i1;
      EXPECT_NEAR(masses_with(s, ind).u2 + masses_with(s, rest).u2, i1, 1e-12 * i1);
    }
  }
}

TEST(Mass, BoundedByWholeLineAndMonotoneInK) {
  auto g = make_grid(1024, 80.0, 0.0);
  FieldState s = gaussian_state(g, 9.0, 1.0, 2.0, 1.0);
  const RealField ones(g->size(), 1.0);
  const MassRecord all = masses_with(s, ones);
  MassRecord prev{};
  for (double K : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const MassRecord m = region_mass(s, RegionSpec::centered(0.5, K));
    for (auto [a, b, c] : {std::tuple{m.v2, prev.v2, all.v2}, std::tuple{m.u2, prev.u2, all.u2},
                           std::tuple{m.dv2, prev.dv2, all.dv2}, std::tuple{m.du2, prev.du2, all.du2},
                           std::tuple{m.u4, prev.u4, all.u4}}) {
      EXPECT_GE(a, 0.0);
      EXPECT_GE(a, b);
      EXPECT_LE(a, c * (1.0 + 1e-14));
    }
    prev = m;
  }
}

TEST(Mass, DistantGaussianIsInvisible) {
  auto g = make_grid(4096, 400.0, 0.0);
  FieldState s = FieldState::zeros(g, 4.0);
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double x = g->x(j) - 150.0;
    s.u[j] = std::exp(-x * x);
  }
  const double i1 = conserved_triple(s, {-1, 1, -1}).i1;
  EXPECT_LE(region_mass(s, RegionSpec::centered(0.5)).u2, 1e-10 * i1);
}

TEST(Accumulator, TrapezoidRule) {
  std::vector<DecaySample> series;
  for (int k = 0; k <= 40; ++k) {
    const double t = 1.5 + 0.25 * k;
    series.push_back({t, 2.0 * t, 3.0});
  }
  const auto out = accumulate_weighted_integrals(series, 2.0);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double T = series[k].t;
    if (T < 2.0) {
      EXPECT_EQ(out[k].pj, 0.0);
      continue;
    }
    EXPECT_NEAR(out[k].pj, T * T - 4.0, 1e-12);  // exact for linear integrands
    EXPECT_NEAR(out[k].pi, 3.0 * (T - 2.0), 1e-12);
  }
}

TEST(Accumulator, MonotoneForNonnegativeIntegrands) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DecayAccumulator acc(2.0);
  DecayAccumulator::Value prev;
  for (int k = 0; k < 1000; ++k) {
    const auto v = acc.add(2.0 + 0.01 * k, u(rng), u(rng));
    EXPECT_GE(v.pj, prev.pj);
    EXPECT_GE(v.pi, prev.pi);
    prev = v;
  }
  DecayAccumulator zero(3.0);
  for (int k = 0; k < 10; ++k) zero.add(3.0 + k, 0.0, 0.0);
  EXPECT_EQ(zero.value().pj, 0.0);
}

TEST(Accumulator, Errors) {
  EXPECT_THROW(DecayAccumulator(1.0), InvalidArgument);
  DecayAccumulator acc(2.0);
  acc.add(2.5, 1.0, 1.0);
  EXPECT_THROW(acc.add(2.5, 1.0, 1.0), InvalidArgument);
}

TEST(TailMin, SimpleSeries) {
  std::vector<SeriesPoint> constant, falling;
  for (int k = 1; k <= 50; ++k) {
    constant.push_back({0.1 * k, 3.5});
    falling.push_back({0.1 * k, 1.0 / k});
  }
  for (double x : liminf_tracker(constant)) EXPECT_EQ(x, 3.5);
  const auto f = liminf_tracker(falling);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(f[k], falling[k].value);
  EXPECT_THROW(liminf_tracker(std::vector<SeriesPoint>{}), InvalidArgument);
}

TEST(TailMin, MatchesBruteForceWindowMinimum) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SeriesPoint> series;
  double t = 0.5;
  for (int k = 0; k < 2000; ++k) {
    t += 0.01 + 0.05 * u(rng);
    series.push_back({t, u(rng)});
  }
  const auto fast = liminf_tracker(series);
  for (std::size_t k = 0; k < series.size(); ++k) {
    double m = series[k].value;
    for (std::size_t i = 0; i <= k; ++i) {
      if (series[i].t >= 0.5 * series[k].t) m = std::min(m, series[i].value);
    }
    ASSERT_EQ(fast[k], m) << k;
  }
}

TEST(ExitTime, SolvesTheCrossingCondition) {
  // 4 T = 2 sqrt(T) + 10  =>  sqrt(T) = (2 + sqrt(164)) / 8
  const double r = (2.0 + std::sqrt(164.0)) / 8.0;
  EXPECT_NEAR(exit_time(4.0, 1.0, 0.5, 0.0, 10.0), r * r, 1e-12);
  EXPECT_EQ(exit_time(4.0, 1.0, 0.5, 0.0, 0.0), 1.0);
  EXPECT_THROW(exit_time(0.0, 1.0, 0.5, 0.0, 1.0), InvalidArgument);
}

TEST(Mass, KdvWaveLeavesTheSublinearRegion) {
  auto g = make_grid(2048, 200.0, 0.0);
  const double cs = 1.0, x0 = -6.0, width = 4.0;
  FieldState s = FieldState::zeros(g);
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double h = sech(g->x(j) - x0);
    s.v[j] = 12.0 * cs * h * h;
  }
  const RegionSpec region = RegionSpec::centered(0.5);
  class Masses : public Sink {
   public:
    explicit Masses(RegionSpec r) : r_(r) {}
    void on_sample(const FieldState& s) override {
      if (s.t > 1.0) series.push_back({s.t, region_mass(s, r_).v2});
    }
    std::vector<SeriesPoint> series;

   private:
    RegionSpec r_;
  } masses(region);
  Sink* sinks[] = {&masses};
  IntegratorOptions o;
  o.dt = 2e-3;
  EvolveSchedule sch;
  sch.t_final = 8.0;
  sch.sample_interval = 0.05;
  evolve(s, {-1.0, -1.0, -0.5}, o, sch, sinks);

  const double T_exit = exit_time(4.0 * cs, region.K(), region.p1(), x0, width);
  ASSERT_LT(T_exit, 8.0);
  double peak = 0.0;
  for (const auto& p : masses.series) peak = std::max(peak, p.value);
  EXPECT_GT(peak, 10.0);
  for (const auto& p : masses.series) {
    if (p.t >= T_exit) {
      EXPECT_LT(p.value, 0.01 * peak) << "t=" << p.t;
    }
  }
}
