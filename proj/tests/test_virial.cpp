#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace skdv;
using skdv::testing::gaussian_state;

namespace {

// phi and phi' straight from the arctan form, for cross-checks.
double phi_ref(double x) { return 2.0 / std::numbers::pi * std::atan(std::exp(x)); }
double dphi_ref(double x) { return 1.0 / (std::numbers::pi * std::cosh(x)); }

}  // namespace

TEST(Weights, ValuesAtZero) {
  EXPECT_DOUBLE_EQ(weights::phi(0.0), 0.5);
  EXPECT_NEAR(weights::phi_derivative(1, 0.0), 0.31831, 5e-6);
  EXPECT_DOUBLE_EQ(weights::phi_derivative(1, 0.0), 1.0 / std::numbers::pi);
  EXPECT_EQ(weights::phi_derivative(2, 0.0), 0.0);
}

TEST(Weights, MatchArctanForm) {
  for (double x = -30.0; x <= 30.0; x += 0.173) {
    EXPECT_NEAR(weights::phi(x), phi_ref(x), 1e-15);
    EXPECT_NEAR(weights::phi_derivative(1, x), dphi_ref(x), 1e-15);
  }
}

TEST(Weights, ReflectionIdentityAndMonotonicity) {
  double prev = 0.0;
  for (double x = -40.0; x <= 40.0; x += 0.0137) {
    const double f = weights::phi(x);
    EXPECT_NEAR(f + weights::phi(-x), 1.0, 1e-14);
    EXPECT_GT(f, 0.0);
    if (x < 30.0) {
      EXPECT_LT(f, 1.0);  // beyond, 1 - phi is below half an ulp of 1
    }
    EXPECT_GE(f, prev);
    prev = f;
    EXPECT_GT(weights::phi_derivative(1, x), 0.0);
  }
}

TEST(Weights, ThirdDerivativeControlledByFirst) {
  double worst = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = -50.0 + 100.0 * i / (n - 1);
    worst = std::max(worst, std::abs(weights::phi_derivative(3, x)) / weights::phi_derivative(1, x));
  }
  EXPECT_LE(worst, 1.0);
}

TEST(Weights, ExponentialTail) {
  for (double x = 5.0; x <= 300.0; x += 0.5) {
    for (double s : {x, -x}) {
      const double r = weights::phi_derivative(1, s) * std::exp(std::abs(s));
      EXPECT_GE(r, 0.3);
      EXPECT_LE(r, 0.7);
    }
  }
  EXPECT_NEAR(weights::phi_derivative(1, 300.0) * std::exp(300.0), 2.0 / std::numbers::pi, 1e-12);
}

TEST(Weights, DerivativesMatchFiniteDifferences) {
  const double h = 1e-4;
  for (double s : {0.7, 2.0}) {
    for (double x = -6.0; x <= 6.0; x += 0.41) {
      const WeightKind kinds[] = {WeightKind::phi, WeightKind::dphi, WeightKind::d2phi, WeightKind::d3phi};
      for (int k = 0; k < 3; ++k) {
        const double fd = (weight(kinds[k], s, x + h) - weight(kinds[k], s, x - h)) / (2 * h);
        EXPECT_NEAR(weight(kinds[k + 1], s, x), fd, 1e-7);
        const double bd = (bump(k, s, x + h) - bump(k, s, x - h)) / (2 * h);
        EXPECT_NEAR(bump(k + 1, s, x), bd, 1e-7);
      }
      EXPECT_NEAR(weight(WeightKind::phi, s, x), s * phi_ref(x / s), 1e-14);
      EXPECT_NEAR(bump(0, s, x), dphi_ref(x / s), 1e-15);
    }
  }
  EXPECT_THROW(weight(WeightKind::phi, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(bump(0, -1.0, 1.0), InvalidArgument);
}

TEST(Scales, AtE) {
  VirialConfig c;  // p1 = 1/2, q1 = 1, p2 = 2, r1 = 1/2, r2 = 2
  const Scales s = scales(std::numbers::e, c);
  EXPECT_NEAR(s.lambda1, std::sqrt(std::numbers::e), 1e-15);
  EXPECT_NEAR(s.lambda2, std::numbers::e, 1e-14);
  EXPECT_NEAR(s.eta, std::sqrt(std::numbers::e), 1e-15);
}

TEST(Scales, RequireTimeAfterOne) {
  VirialConfig c;
  EXPECT_THROW(scales(1.0, c), InvalidArgument);
  EXPECT_THROW(scales(0.3, c), InvalidArgument);
}

TEST(Scales, LogarithmicRatesMatchDifferences) {
  VirialConfig c;
  for (double t : {1.5, 10.0, 1e4}) {
    const double h = 1e-6 * t;
    const Scales lo = scales(t - h, c), hi = scales(t + h, c), s = scales(t, c);
    EXPECT_NEAR(s.rate1, (std::log(hi.lambda1) - std::log(lo.lambda1)) / (2 * h), 1e-8 * std::abs(s.rate1) + 1e-14);
    EXPECT_NEAR(s.rate2, (std::log(hi.lambda2) - std::log(lo.lambda2)) / (2 * h), 1e-8 * std::abs(s.rate2) + 1e-14);
    EXPECT_NEAR(s.rate_eta, (std::log(hi.eta) - std::log(lo.eta)) / (2 * h), 1e-8 * s.rate_eta);
  }
}

TEST(Scales, RateApproachesPowerLaw) {
  // lambda1'/lambda1 = p1/t - q1/(t ln t); the log correction is under 1% at
  // t = 1e6 once q1 < 0.07
  VirialConfig c;
  c.q1 = 0.05;
  const double t = 1e6;
  EXPECT_NEAR(scales(t, c).rate1 * t / c.p1, 1.0, 0.01);
}

TEST(Config, DefaultsSatisfyConstraints) {
  VirialConfig c;
  EXPECT_TRUE(c.violations().empty());
  EXPECT_DOUBLE_EQ(c.resolved({-1.0, 1.0, -0.5}).mu_value(), 0.5);
  EXPECT_THROW(c.mu_value(), InvalidArgument);
  EXPECT_THROW(c.resolved({0.0, 1.0, -0.5}), InvalidArgument);
}

TEST(Config, ViolationsNameTheInequality) {
  VirialConfig c;
  c.p1 = 0.7;
  const auto v = c.violations();
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].find("0 < p1 <= 2/(p2+2)"), std::string::npos) << v[0];
  EXPECT_NE(v[0].find("bound=0.5"), std::string::npos) << v[0];
  EXPECT_THROW(c.validate(), InvalidArgument);

  VirialConfig d;
  d.m = 0.8;
  ASSERT_EQ(d.violations().size(), 1u);
  EXPECT_NE(d.violations()[0].find("m < 1 - p1/2"), std::string::npos);

  VirialConfig e;
  e.l = 1.5;
  ASSERT_EQ(e.violations().size(), 1u);
  EXPECT_NE(e.violations()[0].find("1/a + 1/b <= 1/l"), std::string::npos);

  VirialConfig f;
  f.r1 = 0.6;
  f.p2 = 1.0;
  EXPECT_EQ(f.violations().size(), 2u);
}

TEST(FunctionalJ, ZeroField) {
  auto g = make_grid(256, 40.0, 0.0);
  FieldState s = FieldState::zeros(g, 3.0);
  EXPECT_EQ(functional_J(s, VirialConfig{}), 0.0);
}

TEST(FunctionalJ, UnitFieldMatchesFineTrapezoid) {
  auto g = make_grid(4096, 400.0, 0.0);
  const VirialConfig c;
  for (double t : {2.0, 10.0, 50.0}) {
    FieldState s = FieldState::zeros(g, t);
    std::fill(s.v.begin(), s.v.end(), 1.0);
    const double lt = std::log(t);
    const double l1 = std::sqrt(t) / lt, l2 = l1 * l1, eta = std::sqrt(t) * lt * lt;
    auto integrand = [&](double x) {
      return c.a * phi_ref(x / (l1 * c.a)) * dphi_ref(x / (l2 * c.b));
    };
    const std::size_t m = 10 * g->size();
    const double h = g->length() / static_cast<double>(m);
    long double acc = 0.5L * (integrand(g->left()) + integrand(g->left() + g->length()));
    for (std::size_t j = 1; j < m; ++j) acc += integrand(g->left() + h * static_cast<double>(j));
    const double oracle = static_cast<double>(acc) * h / eta;
    EXPECT_NEAR(functional_J(s, c), oracle, 1e-8 * std::abs(oracle)) << "t=" << t;
  }
}

TEST(FunctionalJ, CauchySchwarzBoundOnRandomStates) {
  auto g = make_grid(512, 60.0, 0.0);
  const VirialConfig c;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    FieldState s = FieldState::zeros(g, 1.5 + seed);
    s.v = skdv::testing::random_band_limited_real(*g, 40, seed);
    double v2 = 0.0;
    for (double x : s.v) v2 += x * x;
    const Scales sc = scales(s.t, c);
    const double bound = std::sqrt(sc.lambda2) * std::sqrt(v2 * g->dx()) / sc.eta * c.a;
    EXPECT_LE(std::abs(functional_J(s, c)), bound);
  }
}

TEST(FunctionalJ, LinearInV) {
  auto g = make_grid(256, 40.0, 0.0);
  const VirialConfig c;
  FieldState a = gaussian_state(g, 4.0), b = a;
  b.v = skdv::testing::random_band_limited_real(*g, 30, 5);
  FieldState sum = a;
  for (std::size_t j = 0; j < g->size(); ++j) sum.v[j] = 2.0 * a.v[j] - 3.0 * b.v[j];
  EXPECT_NEAR(functional_J(sum, c), 2.0 * functional_J(a, c) - 3.0 * functional_J(b, c),
              1e-13 * (std::abs(functional_J(a, c)) + std::abs(functional_J(b, c))));
}

TEST(FunctionalI, ZeroAndRealStates) {
  auto g = make_grid(512, 40.0, 0.0);
  const VirialConfig c = VirialConfig{}.resolved({-1.0, 1.0, -1.0});
  EXPECT_EQ(functional_I(FieldState::zeros(g, 2.0), c), 0.0);

  FieldState s = gaussian_state(g, 3.0, 1.7, 0.9, 0.0);
  const Scales sc = scales(s.t, c);
  double acc = 0.0;
  for (std::size_t j = 0; j < g->size(); ++j) {
    acc += s.v[j] * s.v[j] * c.l * phi_ref(g->x(j) / (sc.lambda1 * c.l));
  }
  EXPECT_NEAR(functional_I(s, c), c.theta / (2.0 * sc.eta) * acc * g->dx(), 1e-14);
}

TEST(FunctionalI, QuadraticScaling) {
  auto g = make_grid(512, 40.0, 0.0);
  const VirialConfig c = VirialConfig{}.resolved({-1.0, 1.0, -2.0});
  FieldState s = gaussian_state(g, 3.0, 1.0, 1.0, 1.3);
  const double base = functional_I(s, c);
  for (double k : {2.0, 0.5, -3.0}) {
    FieldState t = s;
    for (auto& z : t.u) z *= k;
    for (auto& x : t.v) x *= k;
    EXPECT_NEAR(functional_I(t, c), k * k * base, 1e-13 * k * k * std::abs(base));
  }
}

TEST(FunctionalI, MomentumDensityOfModulatedProfile) {
  auto g = make_grid(4096, 400.0, 0.0);
  SolitaryWaveParams p;
  for (double k : {p.speed(), 0.5 * p.speed(), -1.0}) {
    p.carrier = k;
    const FieldState s = solitary_initial_data(p, g);
    const RealField m = momentum_density(*g, s.u);
    for (std::size_t j = 0; j < g->size(); ++j) {
      const double phi = explicit_profile(p, g->x(j)).phi;
      EXPECT_NEAR(m[j], -k * phi * phi, 1e-10);
    }
  }
}

TEST(Budgets, ZeroStateGivesZeroTerms) {
  auto g = make_grid(256, 40.0, 0.0);
  const ModelParams p{-1.0, 1.0, -1.0};
  const VirialConfig c = VirialConfig{}.resolved(p);
  const FieldState a = FieldState::zeros(g, 2.0), b = FieldState::zeros(g, 2.1),
                   d = FieldState::zeros(g, 2.2);
  const BudgetJ bj = budget_J(Window{a, b, d}, p, c);
  const BudgetI bi = budget_I(Window{a, b, d}, p, c);
  EXPECT_EQ(bj.max_term(), 0.0);
  EXPECT_EQ(bj.residual, 0.0);
  EXPECT_EQ(bi.max_term(), 0.0);
  EXPECT_EQ(bi.residual, 0.0);
}

TEST(Budgets, RejectNonUniformWindow) {
  auto g = make_grid(64, 40.0, 0.0);
  const ModelParams p{-1.0, 1.0, -1.0};
  const VirialConfig c = VirialConfig{}.resolved(p);
  const FieldState a = FieldState::zeros(g, 2.0), b = FieldState::zeros(g, 2.1),
                   d = FieldState::zeros(g, 2.3);
  EXPECT_THROW(budget_J(Window{a, b, d}, p, c), InvalidArgument);
  EXPECT_THROW(budget_I(Window{a, b, a}, p, c), InvalidArgument);
}

TEST(Budgets, A1TermsRecomposeTheDirectIntegral) {
  auto g = make_grid(1024, 80.0, 0.0);
  for (double t : {1.5, 3.0, 20.0}) {
    for (const ModelParams p : {ModelParams{-1.0, 1.0, -1.0}, ModelParams{-0.3, -2.0, -0.7}}) {
      const VirialConfig c = VirialConfig{}.resolved(p);
      FieldState s = gaussian_state(g, t, 1.2, 0.8, 0.7);
      for (std::size_t j = 0; j < g->size(); ++j) s.u[j] *= 1.0 + 0.3 * std::sin(g->x(j));
      const BudgetJ bj = budget_J_terms(s, p, c);
      EXPECT_NEAR(bj.a1_total(), bj.a1_direct, 1e-8 * std::abs(bj.a1_direct)) << "t=" << t;
    }
  }
}

TEST(Budgets, CouplingTermsCancel) {
  auto g = make_grid(1024, 80.0, 0.0);
  for (const ModelParams p : {ModelParams{-1.0, 1.0, -1.0}, ModelParams{-0.25, 3.0, -4.0}}) {
    const VirialConfig c = VirialConfig{}.resolved(p);
    const BudgetI bi = budget_I_terms(gaussian_state(g, 2.5, 1.0, 1.0, 1.0), p, c);
    EXPECT_GT(std::abs(bi.b[0]), 1e-6);
    EXPECT_LE(bi.cancellation(), 1e-12);
  }
}

namespace {

// Evolves Gaussian data across [tm - h, tm + h] and samples the five states
// needed for centred differences with spacings h and h/2.
struct BudgetRun {
  std::vector<FieldState> states;  // tm - h, tm - h/2, tm, tm + h/2, tm + h

  BudgetRun(const ModelParams& p, double tm, double h) {
    auto g = make_grid(1024, 80.0, 0.0);
    class Keep : public Sink {
     public:
      explicit Keep(std::vector<FieldState>& out) : out_(out) {}
      void on_sample(const FieldState& s) override { out_.push_back(s); }

     private:
      std::vector<FieldState>& out_;
    } keep(states);
    Sink* sinks[] = {&keep};
    IntegratorOptions o;
    o.dt = h / 40.0;
    EvolveSchedule sch;
    sch.t_final = tm + h;
    sch.sample_interval = h / 2.0;
    evolve(gaussian_state(g, tm - h, 1.0, 1.0, 1.0), p, o, sch, sinks);
  }
};

}  // namespace

TEST(Budgets, ResidualsShrinkQuadraticallyWithSampling) {
  const ModelParams p{-1.0, 1.0, -1.0};
  const VirialConfig c = VirialConfig{}.resolved(p);
  const double h = 2e-3;  // the fine window has spacing 1e-3
  const BudgetRun run(p, 2.0, h);
  ASSERT_EQ(run.states.size(), 5u);
  const auto& s = run.states;
  const BudgetJ coarse_j = budget_J(Window{s[0], s[2], s[4]}, p, c);
  const BudgetJ fine_j = budget_J(Window{s[1], s[2], s[3]}, p, c);
  const BudgetI coarse_i = budget_I(Window{s[0], s[2], s[4]}, p, c);
  const BudgetI fine_i = budget_I(Window{s[1], s[2], s[3]}, p, c);

  EXPECT_LE(std::abs(fine_j.residual), 1e-4 * fine_j.max_term());
  EXPECT_LE(std::abs(fine_i.residual), 1e-4 * fine_i.max_term());
  EXPECT_NEAR(coarse_j.residual / fine_j.residual, 4.0, 0.4);
  EXPECT_NEAR(coarse_i.residual / fine_i.residual, 4.0, 0.4);
}

TEST(Comparability, HoldsOnUnitCells) {
  EXPECT_LE(weight_comparability_check(1.0, 10.0, -100, 100), 1.0);
  EXPECT_LE(weight_comparability_check(2.0, 0.7, -50, 50), 1.0);
  EXPECT_LE(weight_comparability_check(1.0, 1.0, -100, 100), 1.0);
  EXPECT_THROW(weight_comparability_check(1.0, 0.0, 0, 1), InvalidArgument);
}

TEST(Comparability, SingleCellRatioMatchesExtrema) {
  for (double lambda1 : {0.7, 1.0, 3.0, 25.0}) {
    for (long n = -30; n <= 30; ++n) {
      const auto e = weight_cell_extrema(1.5, lambda1, static_cast<double>(n));
      const double naive = e.sup / (std::exp(1.0 / (1.5 * lambda1)) * e.inf);
      EXPECT_NEAR(weight_comparability_check(1.5, lambda1, n, n), naive, 1e-13) << lambda1 << " " << n;
    }
  }
}

TEST(Comparability, ExtremaAgreeWithDenseSampling) {
  const double l = 1.0, lambda1 = 10.0;
  for (long n = -100; n <= 100; n += 7) {
    double sup = 0.0, inf = 1e300;
    for (int k = 0; k <= 2000; ++k) {
      const double x = static_cast<double>(n) + k / 2000.0;
      const double w = dphi_ref(x / (l * lambda1));
      sup = std::max(sup, w);
      inf = std::min(inf, w);
    }
    const auto e = weight_cell_extrema(l, lambda1, static_cast<double>(n));
    EXPECT_NEAR(e.sup, sup, 1e-7 * sup) << n;
    EXPECT_NEAR(e.inf, inf, 1e-14 * inf) << n;
    EXPECT_LE(sup / inf, std::exp(1.0 / (l * lambda1)) * (1.0 + 1e-12));
  }
}

TEST(Comparability, FlattensForWideWeights) {
  EXPECT_NEAR(weight_comparability_check(1.0, 1e8, -100, 100), 1.0, 1e-7);
  // [0, 1]: the weight decreases, so sup/inf = cosh(1/(l lambda1))
  const double l = 1.5, lambda1 = 0.8;
  const auto e = weight_cell_extrema(l, lambda1, 0.0);
  EXPECT_NEAR(e.sup / e.inf, std::cosh(1.0 / (l * lambda1)), 1e-14);
}
