// Acceptance run: one PASS/FAIL line per criterion, measured values on "info" lines.
//
//   acceptance [--only 1,4,7] [--threads N] [--out DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "beamforge/beam.hpp"
#include "beamforge/convergence.hpp"
#include "beamforge/norms.hpp"
#include "beamforge/reference.hpp"

using namespace beamforge;
namespace fs = std::filesystem;

namespace {

// pinned tolerances
constexpr double kSingleBeamSlopeTol = 0.2;
constexpr double kCuspSlopeTol = 0.25;
constexpr double kCausticAgreeTol = 0.25;
constexpr double kRecoverySlack = 0.15;
constexpr double kResidualSlopeTol = 0.2;
constexpr double kRiccatiTol = 1e-8;
constexpr double kSymmetryTol = 1e-10;
constexpr double kMomentumTol = 1e-12;
constexpr double kEikonalTol = 1e-8;
constexpr double kSqueezeFloor = 0.05;
constexpr std::size_t kSqueezePairs = 10000;
constexpr double kSchrodingerSlack = 0.15;
constexpr double kMassTol = 1e-12;
constexpr double kFreeGaussianTol = 1e-6;
constexpr double kSymbolTol = 1e-10;
constexpr double kEnergyTol = 1e-8;
constexpr double kReversibleTol = 1e-12;

const Complex I(0.0, 1.0);

int failures = 0;
int threads = 1;
fs::path out_dir;

void info(const std::string& s) { std::cout << "  info: " << s << std::endl; }

void verdict(int id, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void show_fits(const ConvergenceReport& r) {
  for (const auto& f : r.fits) {
    std::ostringstream os;
    os << "k=" << f.k << " t=" << f.time << " slope=" << fmt("%.3f", f.fit.slope) << " r2="
       << fmt("%.4f", f.fit.r_squared) << " points=" << f.fit.n_points << " dropped=" << f.dropped;
    info(os.str());
  }
}

void keep(const ConvergenceReport& r, const std::string& name) {
  if (out_dir.empty()) return;
  const fs::path d = out_dir / name;
  fs::create_directories(d);
  write_report(r, d);
}

double slope_of(const ConvergenceReport& r, int k, double t) {
  const RateSummary* s = r.find(k, t);
  return s && s->ok ? s->fit.slope : std::nan("");
}

SampledField fill(const Grid& g, auto f) {
  SampledField s(g, 0.0, 1.0, "u");
  const int cols = g.ndim() == 2 ? g.dims[1] : 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y0 = g.coord(0, static_cast<int>(i / static_cast<std::size_t>(cols)));
    const double y1 = g.ndim() == 2 ? g.coord(1, static_cast<int>(i % static_cast<std::size_t>(cols))) : 0.0;
    s[i] = f(y0, y1);
  }
  return s;
}

double max_diff(const SampledField& a, const SampledField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

BeamState study_beam(int k) { return single_beam_study_state(k); }

void criterion1() {
  SweepConfig c = default_config(Problem::single_beam);
  c.threads = threads;
  const ConvergenceReport r = run_sweep(c);
  keep(r, "single_beam");
  show_fits(r);
  const double expect[] = {0.0, 1.0, 1.5, 2.0};
  bool ok = true;
  for (int k = 1; k <= 3; ++k)
    for (double t : c.times) ok = ok && std::abs(slope_of(r, k, t) - expect[k]) <= kSingleBeamSlopeTol;
  // smaller eps, reported only: with eta = 0.1 the cutoff tail still matters at 2^-8
  if (!ok) {
    SweepConfig x = c;
    x.epsilons = {std::ldexp(1.0, -8), std::ldexp(1.0, -9), std::ldexp(1.0, -10), std::ldexp(1.0, -11)};
    x.max_grid = 8192;
    const ConvergenceReport rx = run_sweep(x);
    keep(rx, "single_beam_small_eps");
    for (int k = 1; k <= 3; ++k)
      for (double t : x.times) {
        std::vector<double> e;
        for (const auto& rec : rx.records)
          if (rec.k == k && std::abs(rec.error.time - t) < 1e-12) e.push_back(rec.error.absolute_error);
        if (e.size() < 2) continue;
        const double last = std::log(e[e.size() - 2] / e.back()) / std::log(2.0);
        info("small eps k=" + std::to_string(k) + " t=" + fmt("%g", t) + " slope=" +
             fmt("%.3f", slope_of(rx, k, t)) + " last pair=" + fmt("%.3f", last));
      }
  }
  verdict(1, ok, "single-beam energy-norm slopes 1, 1.5, 2 (+-0.2) at t = 0.5, 1");
}

void criterion2() {
  SweepConfig c = default_config(Problem::cusp);
  c.threads = threads;
  const ConvergenceReport r = run_sweep(c, &std::cerr);
  keep(r, "cusp");
  show_fits(r);
  const double expect[] = {0.0, 1.0, 1.0, 2.0};
  bool rates = true, caustic = true;
  for (int k = 1; k <= 3; ++k) {
    const double s0 = slope_of(r, k, 0.25);
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
      const double s = slope_of(r, k, t);
      rates = rates && std::abs(s - expect[k]) <= kCuspSlopeTol;
      if (t >= 0.5) caustic = caustic && std::abs(s - s0) <= kCausticAgreeTol;
    }
  }
  info(std::string("caustic-time slopes agree with t = 0.25: ") + (caustic ? "yes" : "no"));
  verdict(2, rates && caustic, "cusp superposition slopes 1, 1, 2 (+-0.25), caustic times match t = 0.25");
}

void criterion3() {
  SweepConfig c = default_config(Problem::init_data);
  c.threads = threads;
  const ConvergenceReport r = run_sweep(c);
  keep(r, "init_data");
  show_fits(r);
  bool ok = true;
  for (int k = 1; k <= 3; ++k) ok = ok && slope_of(r, k, 0.0) >= 0.5 * k - kRecoverySlack;
  verdict(3, ok, "initial-data L2 recovery slope >= k/2 - 0.15");
}

void criterion4() {
  const int orders[] = {1, 2, 3};
  std::vector<double> eps;
  for (int m = 4; m <= 8; ++m) eps.push_back(std::ldexp(1.0, -m));
  const auto res = single_beam_residuals(orders, eps, 0.5, 0.1);
  bool ok = true;
  for (int k : orders) {
    std::vector<double> e, v;
    for (const auto& r : res)
      if (r.k == k) {
        e.push_back(r.epsilon);
        v.push_back(r.norm);
        info("k=" + std::to_string(k) + " eps=" + fmt("%.6g", r.epsilon) + " residual=" + fmt("%.4e", r.norm) +
             " richardson=" + fmt("%.2e", r.richardson_defect));
      }
    const RateFit f = fit_rate(e, v);
    info("k=" + std::to_string(k) + " residual slope=" + fmt("%.3f", f.slope));
    ok = ok && std::abs(f.slope - (0.5 * k - 0.5)) <= kResidualSlopeTol;
  }
  if (!ok) {
    std::vector<double> small;
    for (int m = 9; m <= 12; ++m) small.push_back(std::ldexp(1.0, -m));
    const auto rs = single_beam_residuals(orders, small, 0.5, 0.1);
    for (int k : orders) {
      std::vector<double> e, v;
      for (const auto& r : rs)
        if (r.k == k) {
          e.push_back(r.epsilon);
          v.push_back(r.norm);
        }
      info("small eps k=" + std::to_string(k) + " residual slope=" + fmt("%.3f", fit_rate(e, v).slope));
    }
  }
  verdict(4, ok, "single-beam PDE residual slope k/2 - 1/2 (+-0.2) at t = 0.5");
}

void criterion5() {
  auto wave = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, 1.0));
  const double wt[] = {0.0, 0.5, 1.0};
  const auto tw = propagate(wave, study_beam(1), wt, kNoCutoff);
  double werr = 0.0;
  for (const auto& s : tw.samples) {
    Eigen::MatrixXcd expect(2, 2);
    expect << I, 0.0, 0.0, (2.0 + I) / (1.0 - (2.0 + I) * s.t);
    werr = std::max(werr, (phase_hessian(s.phase) - expect).cwiseAbs().maxCoeff());
  }
  info("wave M(t) deviation " + fmt("%.3e", werr));

  auto free = std::make_shared<const HamiltonianModel>(HamiltonianModel::schrodinger(1));
  BeamState s0 = make_beam_state(1, 1, 0);
  s0.p = {1.0};
  s0.phase.at({1, 0, 0, 0}) = 1.0;
  s0.phase.at({2, 0, 0, 0}) = 0.5 * I;
  s0.amps[0][0] = 1.0;
  const double st[] = {0.0, 0.25, 0.5, 1.0};
  const auto ts = propagate(free, s0, st, kNoCutoff);
  double serr = 0.0;
  for (const auto& s : ts.samples) {
    const Complex M = 2.0 * s.phase.at({2, 0, 0, 0});
    serr = std::max(serr, std::abs(M - I / (1.0 + I * s.t)));
    serr = std::max(serr, std::abs(s.amps[0][0] - std::pow(1.0 + I * s.t, -0.5)));
  }
  info("Schrodinger M(t), a(t) deviation " + fmt("%.3e", serr));
  verdict(5, werr <= kRiccatiTol && serr <= kRiccatiTol, "Riccati closed forms to 1e-8");
}

void criterion6() {
  auto model = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, 1.0));
  const WkbData data = cusp_data(Box{{-1.25, -1.25}, {1.25, 1.25}});
  FamilyOptions fo;
  fo.h_z = 0.05;
  fo.threads = threads;
  fo.propagate.check_eikonal = true;
  fo.propagate.eikonal_tolerance = kEikonalTol;
  const double times[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  double sym = 0.0, mom = 0.0, eik = 0.0, min_im = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  auto visit = [&](const BeamTrajectory& tr) {
    const double p0 = std::hypot(tr.samples.front().p[0], tr.samples.front().p[1]);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      const BeamState& s = tr.samples[i];
      const Eigen::MatrixXcd M = phase_hessian(s.phase);
      sym = std::max(sym, (M - M.transpose()).norm() / M.norm());
      mom = std::max(mom, std::abs(std::hypot(s.p[0], s.p[1]) - p0));
      eik = std::max(eik, eikonal_residual(*model, s, tr.rates[i]));
      min_im = std::min(min_im, tr.min_im_eig[i]);
    }
    ++count;
  };
  bool ok = true;
  for (int k = 1; k <= 3; ++k) {
    const double eta = k == 1 ? kNoCutoff : 0.1;
    try {
      const BeamFamily f = build_family(data, model, k, 1.0 / 16, eta, times, fo);
      for (const auto& tr : f.trajectories) visit(tr);
      visit(propagate(model, study_beam(k), times, eta, fo.propagate));
    } catch (const std::exception& e) {
      info(std::string("propagation rejected: ") + e.what());
      ok = false;
    }
  }
  info(std::to_string(count) + " trajectories; min eig Im M " + fmt("%.3e", min_im) + ", symmetry " + fmt("%.2e", sym) +
       ", |p| drift " + fmt("%.2e", mom) + ", eikonal " + fmt("%.2e", eik));
  ok = ok && min_im > 0.0 && sym <= kSymmetryTol && mom <= kMomentumTol && eik <= kEikonalTol;
  verdict(6, ok, "Im M > 0, M symmetric, |p| constant, eikonal residual <= 1e-8 along every trajectory");
}

void criterion7() {
  const HamiltonianModel model = HamiltonianModel::wave_constant(2, 1.0);
  const WkbData data = cusp_data(Box{{-1, -1}, {1, 1}});
  bool ok = true;
  for (double t : {0.0, 0.5, 1.0}) {
    const SqueezeResult r = nonsqueeze_check(model, data, t, kSqueezePairs);
    info("t=" + fmt("%g", t) + " pairs=" + std::to_string(r.pairs) + " min=" + fmt("%.4f", r.min_ratio) +
         " max=" + fmt("%.4f", r.max_ratio));
    ok = ok && r.pairs >= kSqueezePairs && std::isfinite(r.max_ratio) && r.min_ratio > 0.0;
    if (t == 0.5) ok = ok && r.min_ratio >= kSqueezeFloor;
  }
  verdict(7, ok, "non-squeezing ratios finite and positive, min >= 0.05 at t = 0.5");
}

void criterion8() {
  bool ok = true;
  for (Problem p : {Problem::schrodinger_free, Problem::schrodinger_potential}) {
    SweepConfig c = default_config(p);
    c.threads = threads;
    const ConvergenceReport r = run_sweep(c);
    keep(r, to_string(p));
    info(to_string(p) + ":");
    show_fits(r);
    for (int k = 1; k <= 3; ++k)
      for (double t : c.times) ok = ok && slope_of(r, k, t) >= 0.5 * k - kSchrodingerSlack;
  }

  // reference checks
  const double eps = 1.0 / 64, p0 = 1.0, t = 0.5;
  const Grid g{{1024}, {-4}, {4}};
  const auto u0 = fill(g, [&](double y, double) { return std::exp(-y * y / (2 * eps)) * std::exp(I * p0 * y / eps); });
  const SampledField V0(g, 0.0, eps, "V");
  const auto u = schrodinger_split_step(u0, V0, eps, t, split_step_count(g, eps, t));
  auto diff = fill(g, [&](double y, double) {
    const Complex M = I / (1.0 + I * t);
    const double d = y - p0 * t;
    return std::exp(I * (p0 * d + 0.5 * p0 * p0 * t + 0.5 * M * d * d) / eps) / std::sqrt(1.0 + I * t);
  });
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] -= u[i];
  const double gauss = grid_l2(diff);

  const Grid gp{{2048}, {-2 * std::numbers::pi}, {2 * std::numbers::pi}};
  const auto w0 = fill(gp, [&](double y, double) { return std::exp(-10 * y * y) * std::exp(I * 0.5 * y * y / eps); });
  const auto V = fill(gp, [](double y, double) { return Complex(std::cos(y)); });
  const auto w = schrodinger_split_step(w0, V, eps, 1.0, split_step_count(gp, eps, 1.0));
  const double mass = std::abs(grid_l2(w) - grid_l2(w0)) / grid_l2(w0);
  info("free Gaussian deviation " + fmt("%.3e", gauss) + ", relative mass drift " + fmt("%.3e", mass));
  ok = ok && gauss <= kFreeGaussianTol && mass <= kMassTol;
  verdict(8, ok, "Schrodinger L2 slopes >= k/2 - 0.15; split-step mass and free Gaussian checks");
}

void criterion9() {
  const double pi = std::numbers::pi;
  const Grid g{{32, 32}, {-pi, -pi}, {pi, pi}};
  const double x1 = 3, x2 = -2, xn = std::hypot(x1, x2);
  const auto mode = fill(g, [&](double a, double b) { return std::exp(I * (x1 * a + x2 * b)); });
  const auto zero = fill(g, [](double, double) { return Complex(0); });
  double sym = 0.0;
  for (double t : {0.3, 1.0, 2.7}) {
    auto expect = mode;
    for (auto& v : expect.values) v *= std::cos(xn * t);
    sym = std::max(sym, max_diff(wave_exact_constant_c(mode, zero, 1.0, t).u, expect));
    expect = mode;
    for (auto& v : expect.values) v *= std::sin(xn * t) / xn;
    sym = std::max(sym, max_diff(wave_exact_constant_c(zero, mode, 1.0, t).u, expect));
  }

  const Grid h{{128, 128}, {-2, -2.5}, {3, 2.5}};
  const auto u0 = fill(h, [](double a, double b) { return std::exp(-4 * (a * a + b * b)) * std::exp(I * (3 * a - b)); });
  const auto u1 = fill(h, [](double a, double b) {
    return Complex(0.5 * a, 1.0) * std::exp(-5 * ((a - 0.3) * (a - 0.3) + b * b));
  });
  const double c = 1.0;
  auto energy = [&](double t) {
    const WaveSolution w = wave_exact_constant_c(u0, u1, c, t);
    return energy_norm(w.u_t, spectral_gradient(w.u), c, 1.0);
  };
  const double e0 = energy(0.0);
  double drift = 0.0;
  for (double t : {0.25, 0.5, 1.0, 2.0}) drift = std::max(drift, std::abs(energy(t) - e0) / e0);
  const auto fwd = wave_exact_constant_c(u0, u1, c, 0.7);
  const auto back = wave_exact_constant_c(fwd.u, fwd.u_t, c, -0.7);
  const double rev = std::max(max_diff(back.u, u0), max_diff(back.u_t, u1));
  info("plane-wave deviation " + fmt("%.2e", sym) + ", energy drift " + fmt("%.2e", drift) + ", reversal " +
       fmt("%.2e", rev));
  verdict(9, sym <= kSymbolTol && drift <= kEnergyTol && rev <= kReversibleTol,
          "spectral wave solver: symbols 1e-10, energy 1e-8, reversibility 1e-12");
}

std::string records_csv(const ConvergenceReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_report(r, dir);
  std::ifstream in(dir / "records.csv", std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void criterion10() {
  SweepConfig c = default_config(Problem::cusp);
  c.epsilons = {1.0 / 16, 1.0 / 32};
  c.times = {0.0, 0.5};
  const fs::path base = out_dir.empty() ? fs::temp_directory_path() / "beamforge_determinism" : out_dir / "determinism";
  std::set<std::string> seen;
  std::size_t bytes = 0;
  const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
  for (int n : {1, static_cast<int>(hw), 1}) {
    c.threads = n;
    const std::string csv = records_csv(run_sweep(c), base / ("threads_" + std::to_string(n)));
    bytes = csv.size();
    seen.insert(csv);
  }
  info("three runs, " + std::to_string(bytes) + " bytes of records, distinct outputs: " + std::to_string(seen.size()));
  verdict(10, seen.size() == 1 && bytes > 0, "records.csv bitwise identical across runs and thread counts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamforge acceptance run"};
  std::vector<int> only;
  std::string out;
  threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "keep sweep reports here");
  CLI11_PARSE(app, argc, argv);
  out_dir = out;

  void (*const table[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                             criterion6, criterion7, criterion8, criterion9, criterion10};
  for (int id = 1; id <= 10; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      table[id - 1]();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("aborted: ") + e.what());
    }
    info("criterion " + std::to_string(id) + " took " +
         fmt("%.1f s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
