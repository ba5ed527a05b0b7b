#include "doctest.h"

#include <cmath>

#include "beamforge/beam.hpp"

using namespace beamforge;

namespace {

MultiIndex mi(int a, int b = 0) { return {a, b, 0, 0}; }
const Complex I(0.0, 1.0);

BeamState study_beam(int k) {
  BeamState s = make_beam_state(2, k, 0);
  s.p = {-1.0, 0.0};
  s.phase.at(mi(1, 0)) = -1.0;
  Eigen::MatrixXcd M(2, 2);
  M << I, 0.0, 0.0, 2.0 + I;
  set_phase_hessian(s.phase, M);
  s.amps[0][0] = 1.0;
  return s;
}

BeamState free_particle(int k) {
  BeamState s = make_beam_state(1, k, 0);
  s.p = {1.0};
  s.phase.at(mi(1)) = 1.0;
  s.phase.at(mi(2)) = 0.5 * I;
  s.amps[0][0] = 1.0;
  return s;
}

std::shared_ptr<const HamiltonianModel> wave() {
  return std::make_shared<HamiltonianModel>(HamiltonianModel::wave_constant(2, 1.0));
}

}  // namespace

TEST_CASE("wave rhs at the study state") {
  auto m = wave();
  BeamState s = study_beam(1);
  BeamRates r = beam_rhs(*m, s);
  CHECK(std::abs(r.dphase[0]) < 1e-15);
  CHECK(r.dx[0] == doctest::Approx(1.0));
  CHECK(std::abs(r.dx[1]) < 1e-15);
  Eigen::MatrixXcd Mdot = phase_hessian(r.dphase);
  Eigen::MatrixXcd M = phase_hessian(s.phase);
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2, 2);
  C(1, 1) = 1.0;
  Eigen::MatrixXcd expect = M * C * M;
  CHECK((Mdot - expect).norm() < 1e-14);
  CHECK(std::abs(Mdot(1, 1) - (2.0 + I) * (2.0 + I)) < 1e-14);
  // p stays put
  CHECK(std::abs(r.dphase.at(mi(1, 0))) < 1e-15);
  CHECK(std::abs(r.dphase.at(mi(0, 1))) < 1e-15);
}

TEST_CASE("free Schrodinger rhs") {
  auto m = HamiltonianModel::schrodinger(1);
  BeamState s = free_particle(1);
  BeamRates r = beam_rhs(m, s);
  CHECK(std::abs(2.0 * r.dphase.at(mi(2)) - 1.0) < 1e-15);
  CHECK(std::abs(r.damps[0][0] / s.amps[0][0] - (-0.5 * I)) < 1e-15);
  CHECK(std::abs(r.dphase[0] - 0.5) < 1e-15);  // |p|^2/2 - V
}

TEST_CASE("Schrodinger hierarchy matches the explicit coefficient ODEs") {
  // V = cos y, third order beam with nonzero cubic/quartic phase terms
  auto V = [](std::span<const double> y, int deg) {
    Jet e = jet_exp(I * Jet::variable(1, deg, 0, y[0]));
    return 0.5 * (e + jet_reciprocal(e));
  };
  auto m = HamiltonianModel::schrodinger(1, V);
  BeamState s = make_beam_state(1, 3, 0);
  s.x = {0.3};
  s.p = {0.8};
  s.phase[0] = 0.1;
  s.phase.at(mi(1)) = 0.8;
  s.phase.at(mi(2)) = Complex(0.2, 0.6);
  s.phase.at(mi(3)) = Complex(0.05, -0.02);
  s.phase.at(mi(4)) = Complex(-0.01, 0.03);
  s.amps[0][0] = 1.0;
  s.amps[0][1] = Complex(0.2, 0.1);
  s.amps[0][2] = Complex(-0.3, 0.05);
  s.amps[1][0] = Complex(0.1, 0.0);
  BeamRates r = beam_rhs(m, s);
  auto d = to_derivatives(s.phase);
  auto dd = to_derivatives(r.dphase);
  const double x = 0.3, p = 0.8;
  // phi_0' = p^2/2 - V, p' = -V', M' = -M^2 - V''
  CHECK(std::abs(dd[0] - (0.5 * p * p - std::cos(x))) < 1e-14);
  CHECK(std::abs(dd[1] - std::sin(x)) < 1e-14);
  CHECK(std::abs(dd[2] - (-d[2] * d[2] + std::cos(x))) < 1e-14);
  // beta = 3: -(sum over gamma) = -3 M phi_3 - V'''
  CHECK(std::abs(dd[3] - (-3.0 * d[2] * d[3] - std::sin(x))) < 1e-14);
  // beta = 4: -(4 M phi_4 + 3 phi_3^2) - V''''
  CHECK(std::abs(dd[4] - (-4.0 * d[2] * d[4] - 3.0 * d[3] * d[3] - std::cos(x))) < 1e-13);
  // leading amplitude: a' = -a M / 2
  CHECK(std::abs(r.damps[0][0] - (-0.5 * d[2] * s.amps[0][0])) < 1e-14);
}

TEST_CASE("wave Riccati closed form") {
  auto m = wave();
  const double times[] = {0.0, 0.5, 1.0};
  auto traj = propagate(m, study_beam(1), times, kNoCutoff);
  const BeamState& end = traj.samples.back();
  Eigen::MatrixXcd M = phase_hessian(end.phase);
  CHECK(std::abs(M(0, 0) - I) < 1e-8);
  CHECK(std::abs(M(1, 1) - (-3.0 + I) / 2.0) < 1e-8);
  CHECK(std::abs(M(0, 1)) < 1e-8);
  CHECK(end.x[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(end.x[1]) < 1e-12);
  CHECK(end.p[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(end.phase[0]) < 1e-10);
}

TEST_CASE("free Schrodinger closed form") {
  auto m = std::make_shared<HamiltonianModel>(HamiltonianModel::schrodinger(1));
  const double times[] = {0.0, 0.25, 0.5, 1.0};
  auto traj = propagate(m, free_particle(1), times, kNoCutoff);
  for (const auto& s : traj.samples) {
    const double t = s.t;
    const Complex M = 2.0 * s.phase.at(mi(2));
    CHECK(std::abs(M - I / (1.0 + I * t)) < 1e-8);
    CHECK(std::abs(s.amps[0][0] - std::pow(1.0 + I * t, -0.5)) < 1e-8);
    CHECK(std::abs(s.x[0] - t) < 1e-10);
  }
}

TEST_CASE("invariants along higher-order trajectories") {
  auto m = wave();
  const double times[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  PropagateOptions opts;
  opts.check_eikonal = true;
  for (int k = 1; k <= 3; ++k) {
    BeamState s0 = study_beam(k);
    if (k >= 2) s0.phase.at(mi(3, 0)) = 0.1;
    if (k == 3) s0.phase.at(mi(1, 3)) = Complex(0.05, 0.02);
    auto traj = propagate(m, s0, times, 0.1, opts);
    REQUIRE(traj.samples.size() == 5);
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      const auto& s = traj.samples[i];
      Eigen::MatrixXcd M = phase_hessian(s.phase);
      CHECK((M - M.transpose()).norm() <= 1e-10 * M.norm());
      CHECK(traj.min_im_eig[i] > 0.0);
      CHECK(std::abs(std::hypot(s.p[0], s.p[1]) - 1.0) < 1e-12);
      CHECK(eikonal_residual(*m, s, traj.rates[i]) < 1e-8);
    }
  }
}

TEST_CASE("halving the tolerance barely moves M(1)") {
  auto m = wave();
  const double times[] = {0.0, 1.0};
  PropagateOptions a, b;
  a.ode.rtol = 1e-9;
  b.ode.rtol = 0.5e-9;
  auto ta = propagate(m, study_beam(3), times, 0.1, a);
  auto tb = propagate(m, study_beam(3), times, 0.1, b);
  const double diff = (phase_hessian(ta.samples.back().phase) - phase_hessian(tb.samples.back().phase)).norm();
  CHECK(diff < 10 * 1e-9);
}

TEST_CASE("cutoff profile") {
  CHECK(cutoff(0.05, 0.1).rho == 1.0);
  CHECK(cutoff(0.2, 0.1).rho == 0.0);
  CHECK(cutoff(0.25, 0.1).rho == 0.0);
  CHECK(cutoff(0.15, 0.1).rho == doctest::Approx(0.5));
  CHECK(cutoff(5.0, kNoCutoff).rho == 1.0);
  // derivatives against differences
  for (double r : {0.11, 0.13, 0.15, 0.17, 0.19}) {
    const double h = 1e-6;
    const double d1 = (cutoff(r + h, 0.1).rho - cutoff(r - h, 0.1).rho) / (2 * h);
    const double d2 = (cutoff(r + h, 0.1).drho - cutoff(r - h, 0.1).drho) / (2 * h);
    CHECK(cutoff(r, 0.1).drho == doctest::Approx(d1).epsilon(1e-6));
    CHECK(cutoff(r, 0.1).d2rho == doctest::Approx(d2).epsilon(1e-5));
  }
}

TEST_CASE("beam field examples") {
  auto m = wave();
  const double times[] = {0.0, 0.5};
  auto traj1 = propagate(m, study_beam(1), times, kNoCutoff);
  Grid g({256, 256}, {-1.6, -1.6}, {1.6, 1.6});
  const double eps = 0.01;
  auto f = beam_field(traj1, 0.0, eps, g, want_value);
  // y = x(0): index (128, 128); y = (0, 0.1): index (128, 136)
  CHECK(std::abs(f.u[128 * 256 + 128] - Complex(1.0)) < 1e-14);
  CHECK(std::abs(std::abs(f.u[128 * 256 + 136]) - std::exp(-0.5)) < 1e-12);

  // centre value at a later time
  auto f2 = beam_field(traj1, 0.5, eps, g, want_value);
  const BeamState& s = traj1.samples[1];
  const Complex expect = s.amps[0][0] * std::exp(I * s.phase[0] / eps);
  CHECK(std::abs(f2.u[static_cast<std::size_t>((128 + 40) * 256 + 128)] - expect) < 1e-12);

  // support of the cut beam
  auto traj2 = propagate(m, study_beam(2), times, 0.1);
  auto f3 = beam_field(traj2, 0.0, eps, g, want_value | want_time_derivative | want_gradient);
  for (int i = 0; i < 256; ++i)
    for (int j = 0; j < 256; ++j) {
      const double y1 = g.coord(0, i), y2 = g.coord(1, j);
      if (std::hypot(y1, y2) >= 0.2) {
        const std::size_t node = static_cast<std::size_t>(i) * 256 + static_cast<std::size_t>(j);
        CHECK(f3.u[node] == Complex(0));
        CHECK(f3.u_t[node] == Complex(0));
        CHECK(f3.grad[0][node] == Complex(0));
      }
    }
  CHECK_THROWS_AS(beam_field(traj1, 0.3, eps, g, want_value), SamplingError);
  CHECK_THROWS_AS(beam_field(traj1, 0.0, -1.0, g, want_value), std::domain_error);
}

TEST_CASE("analytic derivatives match differences of the field") {
  auto m = wave();
  const double eps = 0.02;
  const double h = 1e-5;
  for (int k = 1; k <= 3; ++k) {
    BeamState s0 = study_beam(k);
    if (k >= 2) s0.amps[0].at(mi(1, 0)) = Complex(0.3, 0.2);
    const double times[] = {0.0, 0.4, 0.4 + h};
    const double times_m[] = {0.0, 0.4 - h};
    auto traj = propagate(m, s0, times, 0.15);
    auto trajm = propagate(m, s0, times_m, 0.15);
    Grid g({128, 128}, {-1.0, -1.6}, {2.2, 1.6});
    auto f = beam_field(traj, 0.4, eps, g, want_value | want_time_derivative | want_gradient | want_laplacian);
    auto fp = beam_field(traj, 0.4 + h, eps, g, want_value);
    auto fm = beam_field(trajm, 0.4 - h, eps, g, want_value);
    double err = 0, ref = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Complex fd = (fp.u[i] - fm.u[i]) / (2 * h);
      err = std::max(err, std::abs(fd - f.u_t[i]));
      ref = std::max(ref, std::abs(f.u_t[i]));
    }
    CHECK(err < 1e-5 * ref);

    // gradient and Laplacian against centred stencils on a fine local grid
    const int N = 256;
    Grid fine({N, N}, {0.4 - 0.256, -0.256}, {0.4 + 0.256, 0.256});
    auto ff = beam_field(traj, 0.4, eps, fine, want_value | want_gradient | want_laplacian);
    double gerr = 0, gref = 0, lerr = 0, lref = 0;
    const double hy = fine.spacing(0);
    for (int i = 64; i < 192; ++i)
      for (int j = 64; j < 192; ++j) {
        auto at = [&](int a, int b) { return ff.u[static_cast<std::size_t>(a) * N + static_cast<std::size_t>(b)]; };
        const std::size_t node = static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j);
        const Complex d1 = (at(i, j + 1) - at(i, j - 1)) / (2 * hy);
        gerr = std::max(gerr, std::abs(d1 - ff.grad[1][node]));
        gref = std::max(gref, std::abs(ff.grad[1][node]));
        const Complex lap = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j)) / (hy * hy);
        lerr = std::max(lerr, std::abs(lap - ff.lap[node]));
        lref = std::max(lref, std::abs(ff.lap[node]));
      }
    // second-order stencils with k h = 0.1
    CHECK(gerr < 5e-3 * gref);
    CHECK(lerr < 5e-3 * lref);
  }
}

TEST_CASE("zero amplitude beam has zero residual") {
  auto m = wave();
  BeamState s0 = study_beam(1);
  s0.amps[0][0] = 0.0;
  const double times[] = {0.0, 0.5};
  auto traj = propagate(m, s0, times, kNoCutoff);
  Grid g({64, 64}, {-1.0, -1.0}, {1.0, 1.0});
  CHECK(pde_residual_norm(traj, 0.5, 0.05, g).norm == 0.0);
}

TEST_CASE("integrity error when Im M is not positive definite") {
  auto m = wave();
  BeamState s = study_beam(1);
  Eigen::MatrixXcd M(2, 2);
  M << I, 0.0, 0.0, Complex(2.0, -0.1);
  set_phase_hessian(s.phase, M);
  const double times[] = {0.0, 1.0};
  CHECK_THROWS_AS(propagate(m, s, times, kNoCutoff), IntegrityError);
}
