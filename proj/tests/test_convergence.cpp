#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "beamforge/convergence.hpp"

using namespace beamforge;

TEST_SUITE("convergence") {

TEST_CASE("fit_rate on exact power laws") {
  std::vector<double> eps, err;
  for (int m = 4; m <= 8; ++m) {
    eps.push_back(std::ldexp(1.0, -m));
    err.push_back(eps.back() * eps.back());
  }
  RateFit f = fit_rate(eps, err);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 5);

  std::vector<double> flat(eps.size(), 0.3);
  CHECK(std::abs(fit_rate(eps, flat).slope) < 1e-12);

  const double e3[] = {1e-1, 1e-2, 1e-3}, r3[] = {1e-2, 1e-4, 1e-6};
  f = fit_rate(e3, r3);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("fit_rate rejects bad input") {
  const double e2[] = {0.1, 0.05}, r2[] = {1.0, 0.5};
  CHECK_THROWS_AS(fit_rate(e2, r2), InsufficientDataError);
  const double e3[] = {0.1, 0.05, 0.025}, bad[] = {1.0, 0.0, 0.5};
  CHECK_THROWS_AS(fit_rate(e3, bad), std::domain_error);
  const double neg[] = {0.1, -0.05, 0.025}, ok[] = {1.0, 0.5, 0.25};
  CHECK_THROWS_AS(fit_rate(neg, ok), std::domain_error);
}

TEST_CASE("fit_tail drops a steep coarse head") {
  // slope 4 between the first two points, slope 1 afterwards
  const double eps[] = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  double err[5];
  err[1] = 1.0 / 32;
  err[0] = err[1] * 16.0;
  for (int i = 2; i < 5; ++i) err[i] = eps[i];
  int dropped = -1;
  RateFit f = fit_tail(eps, err, 3.0, &dropped);
  CHECK(dropped == 1);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 4);

  // never fewer than three points
  const double steep[] = {1.0, 1e-5, 1e-10, 1e-15};
  const double e4[] = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  fit_tail(e4, steep, 3.0, &dropped);
  CHECK(dropped == 1);

  fit_tail(eps, err, std::numeric_limits<double>::infinity(), &dropped);
  CHECK(dropped == 0);
}

TEST_CASE("summarize groups by order and time") {
  std::vector<SweepRecord> recs;
  for (int k = 1; k <= 2; ++k)
    for (int m = 4; m <= 6; ++m)
      for (double t : {0.5, 1.0}) {
        ErrorRecord e;
        e.epsilon = std::ldexp(1.0, -m);
        e.time = t;
        e.absolute_error = std::pow(e.epsilon, k) * (1 + t);
        recs.push_back({k, e});
      }
  const int orders[] = {1, 2};
  const double times[] = {0.5, 1.0};
  auto fits = summarize(recs, orders, times);
  REQUIRE(fits.size() == 4);
  for (const auto& s : fits) {
    CHECK(s.ok);
    CHECK(s.fit.slope == doctest::Approx(s.k).epsilon(1e-10));
  }
}

TEST_CASE("config validation lists every violation") {
  SweepConfig c = default_config(Problem::cusp);
  c.orders = {4};
  c.epsilons = {0.1, 0.2};
  try {
    c.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("orders") != std::string::npos);
    CHECK(msg.find("epsilons") != std::string::npos);
  }
}

TEST_CASE("default tables") {
  SweepConfig c = default_config(Problem::cusp);
  REQUIRE(c.epsilons.size() == 5);
  CHECK(c.epsilons.front() == 1.0 / 16);
  CHECK(c.epsilons.back() == 1.0 / 256);
  CHECK(c.times == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(c.norm == NormKind::energy);
  CHECK(c.eta_for(1) == kNoCutoff);
  CHECK(c.eta_for(2) == 0.1);
  CHECK(default_config(Problem::schrodinger_free).norm == NormKind::l2);
}

TEST_CASE("non-squeezing ratios on the cusp flow") {
  auto model = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, 1.0));
  const WkbData data = cusp_data(Box{{-1, -1}, {1, 1}});
  SqueezeResult r0 = nonsqueeze_check(*model, data, 0.0, 10000);
  CHECK(r0.pairs >= 10000);
  CHECK(r0.min_ratio >= 1.0 - 1e-9);
  CHECK(r0.max_ratio <= 3.01);

  SqueezeResult r5 = nonsqueeze_check(*model, data, 0.5, 10000);
  CHECK(r5.min_ratio > 0.05);
  CHECK(std::isfinite(r5.max_ratio));
}

TEST_CASE("single-beam errors are insensitive to the integrator tolerance") {
  SweepConfig c = default_config(Problem::single_beam);
  c.orders = {1, 2};
  c.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  c.times = {0.5};
  ConvergenceReport a = run_sweep(c);
  c.tolerance = 1e-10;
  ConvergenceReport b = run_sweep(c);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const double ea = a.records[i].error.absolute_error, eb = b.records[i].error.absolute_error;
    CHECK(std::abs(ea - eb) < 0.01 * ea);
  }
}

}  // TEST_SUITE
