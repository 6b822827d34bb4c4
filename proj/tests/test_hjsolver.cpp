#include <doctest.h>

#include <cmath>
#include <limits>

#include "infotraj/errors.hpp"
#include "infotraj/hjsolver.hpp"
#include "infotraj/validation.hpp"
#include "support.hpp"

using namespace infotraj;
using namespace infotraj::hj;
using dynamics::kPi;

namespace {

std::shared_ptr<const dynamics::InformationSource> zero_source() {
  return std::make_shared<test::ConstantSource>(InfoMatrix::Zero(2, 2));
}

/// G(z) = <c, z>: no curvature, so phi(s) = G(z0 + s l) when l is constant.
class LinearMetric final : public matrixcore::TerminalMetric {
 public:
  explicit LinearMetric(InfoVector c) : c_(std::move(c)) {}
  double value(const InfoVector& z) const override { return c_.dot(z); }
  InfoVector gradient(const InfoVector&) const override { return c_; }
  InfoVector curvature(const InfoMatrix& Q, const InfoVector&) const override {
    return InfoVector::Zero(Q.size());
  }

 private:
  InfoVector c_;
};

Adjoint adj(StateVector p, int m) { return {std::move(p), InfoVector::Zero(m)}; }

}  // namespace

TEST_CASE("Hamiltonian terms") {
  const dynamics::DubinsCar car(5.0, 0.05, zero_source());
  const InfoMatrix Q0 = InfoMatrix::Zero(2, 2);
  const StateVector x{{0, 0, 0}};
  CHECK(hamiltonian(car, x, 0.03, adj(StateVector::Zero(3), 4), Q0) == 0.0);
  CHECK(hamiltonian(car, x, 0.03, adj(StateVector{{1, 0, 0}}, 4), Q0) == 5.0);
  CHECK(hamiltonian(car, x, 0.05, adj(StateVector{{0, 0, 1}}, 4), Q0) == 0.05);
  const InfoMatrix Q = Eigen::Vector2d(2, 3).asDiagonal();
  const Adjoint with_info{StateVector::Zero(3), InfoVector{{1, 0, 0, 1}}};
  CHECK(hamiltonian(car, x, 0.0, with_info, Q) == 5.0);
  // costate aligned with the heading
  const StateVector y{{0, 0, 0.8}};
  CHECK(optimal_hamiltonian(car, y, adj(StateVector{{std::cos(0.8), std::sin(0.8), 0}}, 4), Q0) ==
        doctest::Approx(5.0));
  CHECK(optimal_hamiltonian(car, y, adj(StateVector{{0.3, -0.2, 0}}, 4), Q0) ==
        optimal_hamiltonian(dynamics::DubinsCar(5.0, 9.0, zero_source()), y,
                            adj(StateVector{{0.3, -0.2, 0}}, 4), Q0));
}

TEST_CASE("optimal Hamiltonian and policy against a control grid") {
  const dynamics::DubinsCar car(5.0, 0.05, zero_source());
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const StateVector x{{100 * u01(rng), 100 * u01(rng), kPi * u01(rng)}};
    const Adjoint s{StateVector{{u01(rng), u01(rng), u01(rng)}},
                    InfoVector{{u01(rng), u01(rng), u01(rng), u01(rng)}}};
    const InfoMatrix Q = test::random_psd(rng, 2, 2);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
      best = std::min(best, hamiltonian(car, x, -0.05 + 0.001 * i, s, Q));
    }
    const double h = optimal_hamiltonian(car, x, s, Q);
    CHECK(std::abs(h - best) <= 1e-12 * std::max(1.0, std::abs(best)));
    CHECK(std::abs(hamiltonian(car, x, policy(car, x, s.p), s, Q) - h) <= 1e-12 * std::max(1.0, std::abs(h)));
  }
  CHECK(policy(car, StateVector{{0, 0, 0}}, StateVector{{0, 0, 2.0}}) == -0.05);
  CHECK(policy(car, StateVector{{0, 0, 0}}, StateVector{{0, 0, -2.0}}) == 0.05);
  CHECK(policy(car, StateVector{{0, 0, 0}}, StateVector{{1, 1, 0.0}}) == 0.0);
}

TEST_CASE("dissipation coefficients") {
  const dynamics::DubinsCar car(50.0, 0.05, zero_source());
  CHECK(dissipation_coeffs(car, DissipationMode::Global, StateVector{{0, 0, 1}}) == StateVector{{50, 50, 0.05}});
  const StateVector local = dissipation_coeffs(car, DissipationMode::Local, StateVector{{0, 0, 0}});
  CHECK(local[0] == 50.0);
  CHECK(std::abs(local[1]) < 1e-12);
  CHECK(local[2] == 0.05);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int t = 0; t < 1000; ++t) {
    const StateVector x{{0, 0, ang(rng)}};
    CHECK((dissipation_coeffs(car, DissipationMode::Local, x).array() <=
           dissipation_coeffs(car, DissipationMode::Global, x).array())
              .all());
  }
}

TEST_CASE("Lax-Friedrichs Hamiltonian") {
  const dynamics::DubinsCar car(5.0, 0.05, zero_source());
  const StateVector x{{0, 0, 0.4}};
  const InfoMatrix Q = InfoMatrix::Identity(2, 2);
  const InfoVector lam{{-1, 0, 0, -2}};
  const StateVector p{{0.3, -0.1, 2.0}};
  const StateVector alpha{{5, 5, 0.05}};
  CHECK(lf_hamiltonian(car, x, p, p, lam, Q, alpha) == optimal_hamiltonian(car, x, {p, lam}, Q));
  const StateVector pp{{0.4, -0.1, 2.5}}, pm{{0.2, 0.0, 1.0}};
  const StateVector mid = 0.5 * (pp + pm);
  CHECK(lf_hamiltonian(car, x, pp, pm, lam, Q, StateVector::Zero(3)) ==
        doctest::Approx(optimal_hamiltonian(car, x, {mid, lam}, Q)));
  // difference form is a diffusion: it raises H where p+ > p-
  CHECK(lf_hamiltonian(car, x, pp, pm, lam, Q, alpha) >
        lf_hamiltonian(car, x, pp, pm, lam, Q, StateVector::Zero(3)));
  CHECK(lf_hamiltonian(car, x, pp, pm, lam, Q, alpha, DissipationForm::Sum) !=
        lf_hamiltonian(car, x, pp, pm, lam, Q, alpha));

  // on a smooth field the dissipation vanishes linearly with the spacing
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    const double X = 0.3;
    auto f = [](double s) { return std::sin(2 * s); };
    const StateVector pplus{{(f(X + h) - f(X)) / h, 0, 0}}, pminus{{(f(X) - f(X - h)) / h, 0, 0}};
    const double diss = lf_hamiltonian(car, x, pplus, pminus, lam, Q, alpha) -
                        lf_hamiltonian(car, x, pplus, pminus, lam, Q, StateVector::Zero(3));
    if (prev > 0.0) CHECK(diss / prev == doctest::Approx(0.5).epsilon(0.05));
    prev = diss;
  }
}

TEST_CASE("CFL step") {
  const grid::GridSpec g({{0, 1, 11, false}, {0, 1, 11, false}, {-kPi, kPi, 8, true}});
  CHECK(cfl_dt(g, StateVector{{1, 0, 0}}, 0.5) == doctest::Approx(0.05));
  const grid::GridSpec g2({{0, 2, 11, false}, {0, 2, 11, false}, {-kPi, kPi, 4, true}});
  const StateVector a{{1, 2, 0.1}};
  CHECK(cfl_dt(g2, a, 0.5) == doctest::Approx(2 * cfl_dt(g, a, 0.5)));
  const auto fig = grid::GridSpec::dubins(-400, 400, 81, -400, 400, 81, 32);
  const double expect = 0.5 / (50.0 / 10.0 + 50.0 / 10.0 + 0.05 / (2 * kPi / 32));
  CHECK(cfl_dt(fig, StateVector{{50, 50, 0.05}}, 0.5) == doctest::Approx(expect));
  CHECK(expect == doctest::Approx(0.0488).epsilon(1e-3));
  CHECK_THROWS_AS(cfl_dt(g, StateVector::Zero(3), 0.5), ConfigError);
  SolverConfig bad;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(bad.check(), ConfigError);
}

TEST_CASE("information transport term") {
  const auto g = grid::GridSpec::dubins(-50, 50, 11, -50, 50, 11, 8);
  const dynamics::DubinsCar car(5.0, 0.05, zero_source());
  grid::VectorField flat(g, InfoVector{{1, 2, 2, 3}});
  CHECK(rx_term(flat, car, 0.05, 500).norm() == 0.0);

  grid::VectorField ramp(g, 4, 0.0);
  const double a = 0.7;
  for (std::size_t k = 0; k < g.size(); ++k) ramp.at(k)[1] = a * g.node(k)[0];
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(g.node(k)[2]) > 1e-12) continue;  // heading +X
    CHECK(rx_term(ramp, car, 0.0, k)[1] == doctest::Approx(a * 5.0));
  }
}

TEST_CASE("zero information keeps the terminal fields") {
  const auto g = grid::GridSpec::dubins(-100, 100, 11, -100, 100, 11, 8);
  const dynamics::DubinsCar car(5.0, 0.05, zero_source());
  const matrixcore::LogDetMetric G;
  const InfoVector z0{{0.01, 0, 0, 0.02}};
  SolverConfig cfg;
  cfg.horizon = 20.0;
  cfg.snapshot_stride = 3;
  const auto sol = hybrid_solve(car, G, g, precompute_info_field(car, g), z0, cfg);
  CHECK(sol.snapshots.size() > 2);
  CHECK(sol.final().time == doctest::Approx(20.0));
  for (const auto& s : sol.snapshots) {
    for (double v : s.phi.values) CHECK(v == G.value(z0));
    for (std::size_t k = 0; k < g.size(); k += 37) CHECK(s.Phi.at(k) == G.gradient(z0));
  }
}

TEST_CASE("linear metric with constant information rate") {
  const InfoMatrix Q{{2.0, 0.5}, {0.5, 1.0}};
  const dynamics::DubinsCar car(5.0, 0.05, std::make_shared<test::ConstantSource>(Q));
  const LinearMetric G(InfoVector{{-1.0, 0.25, 0.25, -2.0}});
  const auto g = grid::GridSpec::dubins(-50, 50, 11, -50, 50, 11, 8);
  const InfoVector z0{{1, 0, 0, 1}};
  SolverConfig cfg;
  cfg.horizon = 3.0;
  const auto sol = hybrid_solve(car, G, g, precompute_info_field(car, g), z0, cfg);
  const double exact = G.value(z0 + 3.0 * matrixcore::vec(Q));
  for (double v : sol.final().phi.values) CHECK(v == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("zero dynamics leave the value at G(z0)") {
  const dynamics::ScalarCascade still(0.0, 0.0, 1.0, [](double) { return 0.0; });
  const grid::GridSpec g({{-1, 1, 11, false}});
  const matrixcore::LogDetMetric G;
  SolverConfig cfg;
  const auto sol = hybrid_solve(still, G, g, precompute_info_field(still, g), InfoVector::Constant(1, 2.0), cfg);
  for (double v : sol.final().phi.values) CHECK(v == G.value(InfoVector::Constant(1, 2.0)));
}

TEST_CASE("toy cascade: hybrid against full-grid reference and closed form") {
  validation::ToyOptions o;
  o.workers = 1;
  const auto r = validation::compare_toy(o);
  CHECK(r.vs_classic <= 5e-2);
  CHECK(r.vs_exact <= 5e-2);
  CHECK(r.classic_vs_exact <= 5e-2);
  // sitting at x = 0 is not optimal: the value beats G(z0) = 0
  const auto sys = dynamics::ScalarCascade::toy();
  const grid::GridSpec g({{-2, 2, 81, false}});
  SolverConfig cfg;
  const auto sol = hybrid_solve(*sys, matrixcore::LogDetMetric(), g, precompute_info_field(*sys, g),
                                InfoVector::Constant(1, 1.0), cfg);
  CHECK(grid::interpolate(sol.final().phi, StateVector::Constant(1, 0.0)) < 0.0);
}

TEST_CASE("toy cascade: Phi is the z0-gradient of phi") {
  const auto sys = dynamics::ScalarCascade::toy();
  const double dx = 0.005;
  const grid::GridSpec g({{-3, 3, 1201, false}});
  SolverConfig cfg;
  const auto r = validation::z0_gradient_check(*sys, matrixcore::LogDetMetric(), g,
                                            precompute_info_field(*sys, g), InfoVector::Constant(1, 1.0),
                                            cfg, 1e-3, 1e-2, 2.0 / dx);
  CHECK(r.interior_points > 0);
  CHECK(r.fraction() >= 0.9);
}

TEST_CASE("snapshots, determinism and instability") {
  auto car = test::doppler_car();
  const auto g = grid::GridSpec::dubins(-200, 200, 11, -200, 200, 11, 8);
  const matrixcore::LogDetMetric G;
  const InfoVector z0 = matrixcore::vec(0.01 * Eigen::Matrix2d::Identity());
  const auto info = precompute_info_field(car, g, 1);
  SolverConfig cfg;
  cfg.horizon = 10.0;
  cfg.workers = 1;
  cfg.snapshot_stride = 2;
  const auto a = hybrid_solve(car, G, g, info, z0, cfg);
  cfg.workers = 3;
  const auto b = hybrid_solve(car, G, g, info, z0, cfg);
  CHECK(a.steps == b.steps);
  CHECK(a.snapshots.size() == b.snapshots.size());
  CHECK(a.final().phi.values == b.final().phi.values);
  CHECK(a.final().Phi.values == b.final().Phi.values);
  CHECK(a.snapshots.front().time == 0.0);
  for (std::size_t i = 1; i < a.snapshots.size(); ++i) CHECK(a.snapshots[i].time > a.snapshots[i - 1].time);

  cfg.integrator = Integrator::TvdRk2;
  const auto c = hybrid_solve(car, G, g, info, z0, cfg);
  CHECK(c.final().phi.all_finite());

  const dynamics::ScalarCascade bad(0.0, 1.0, 1.0, [](double x) { return x > 0.5 ? std::nan("") : 1.0; });
  const grid::GridSpec line({{-1, 1, 21, false}});
  CHECK_THROWS_AS(hybrid_solve(bad, G, line, precompute_info_field(bad, line), InfoVector::Constant(1, 1.0), SolverConfig{}),
                  InstabilityError);
}
