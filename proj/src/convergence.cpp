#include "beamforge/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "beamforge/reference.hpp"

namespace beamforge {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> with_zero(std::span<const double> times) {
  std::vector<double> t{0.0};
  for (double x : times)
    if (x > 0.0) t.push_back(x);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Power-of-two node count with spacing at most min(2 pi eps / ppw, sqrt(eps)/4).
int grid_size(double length, double eps, double ppw, int max_grid) {
  const double h = std::min(2.0 * kPi * eps / ppw, 0.25 * std::sqrt(eps));
  const int n = next_power_of_two(static_cast<int>(std::ceil(length / h)));
  if (n > max_grid)
    throw ResolutionError("grid of " + std::to_string(n) + " points per axis exceeds the limit of " +
                          std::to_string(max_grid));
  return n;
}

PropagateOptions propagate_options(const SweepConfig& cfg) {
  PropagateOptions po;
  po.ode.rtol = cfg.tolerance;
  po.ode.atol = 1e-3 * cfg.tolerance;
  return po;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string grid_text(const Grid& g) {
  std::ostringstream os;
  for (int a = 0; a < g.ndim(); ++a) os << (a ? "x" : "") << g.dims[static_cast<std::size_t>(a)];
  os << " on [";
  for (int a = 0; a < g.ndim(); ++a)
    os << (a ? "]x[" : "") << g.lower[static_cast<std::size_t>(a)] << "," << g.upper[static_cast<std::size_t>(a)];
  os << "]";
  return os.str();
}

FieldBundle reference_bundle(WaveSolution w) {
  FieldBundle b;
  b.grad = spectral_gradient(w.u);
  b.u = std::move(w.u);
  b.u_t = std::move(w.u_t);
  return b;
}

void dump(const std::filesystem::path* dir, const std::string& name, const SampledField& f) {
  if (dir) write_gbf1(f, (*dir / name).string());
}

std::string cell_name(const std::string& what, int k, double eps, double t) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_k%d_eps%.6g_t%.4g.gbf", what.c_str(), k, eps, t);
  return buf;
}

struct Context {
  const SweepConfig& cfg;
  std::ostream* log;
  const std::filesystem::path* dump_dir;
  ConvergenceReport& report;
  EvalOptions eval;
  // trajectories do not depend on eps; families with equal node spacing are reused
  std::map<int, BeamFamily> families;

  const BeamFamily& family(const WkbData& data, std::shared_ptr<const HamiltonianModel> model, int k, double eps,
                           double eta, std::span<const double> times, const FamilyOptions& fo) {
    const double h = fo.h_z > 0.0 ? fo.h_z : node_spacing(eps, eta, fo.hz_factor);
    auto it = families.find(k);
    if (it != families.end() && it->second.h_z == h && it->second.eta == eta &&
        std::equal(times.begin(), times.end(), it->second.times.begin(), it->second.times.end())) {
      it->second.eps = eps;
      return it->second;
    }
    families.erase(k);
    return families.emplace(k, build_family(data, model, k, eps, eta, times, fo)).first->second;
  }

  void note(const std::string& s) {
    if (log) *log << s << std::endl;
  }
  void record(int k, const ErrorRecord& r) {
    report.records.push_back({k, r});
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  k=%d eps=%-10.6g t=%-5.3g abs=%.6e rel=%.6e", k, r.epsilon, r.time,
                    r.absolute_error, r.relative_error);
      *log << buf << std::endl;
    }
  }
};

void run_single_beam(Context& c, double eps) {
  const SweepConfig& cfg = c.cfg;
  auto model = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, cfg.wave_speed));
  const auto times = with_zero(cfg.times);
  const double T = times.back();
  std::map<int, BeamTrajectory> trajs;
  double lam = 1.0;
  for (int k : cfg.orders) {
    BeamTrajectory tr = propagate(model, single_beam_study_state(k), times, cfg.eta_for(k), propagate_options(cfg));
    for (double v : tr.min_im_eig) lam = std::min(lam, v);
    trajs.emplace(k, std::move(tr));
  }
  // the beam travels along y1; across it the Gaussian tail sets the width
  double R = 11.0 * std::sqrt(eps / lam);
  for (int k : cfg.orders)
    if (std::isfinite(cfg.eta_for(k))) R = std::max(R, 2.1 * cfg.eta_for(k));
  const double L1 = 2.0 * (cfg.wave_speed * T + R), L2 = 2.0 * R;
  const Grid g{{grid_size(L1, eps, cfg.points_per_wavelength, cfg.max_grid),
                grid_size(L2, eps, cfg.points_per_wavelength, cfg.max_grid)},
               {-0.5 * L1, -0.5 * L2},
               {0.5 * L1, 0.5 * L2}};
  c.report.environment.push_back("single_beam eps=" + fmt("%.6g", eps) + " grid " + grid_text(g));
  for (int k : cfg.orders) {
    const BeamTrajectory& traj = trajs.at(k);
    BeamTrajectory uncut = traj;
    uncut.eta = kNoCutoff;
    FieldBundle init = beam_field(uncut, 0.0, eps, g, want_value | want_time_derivative, c.eval);
    for (double t : cfg.times) {
      FieldBundle ref = reference_bundle(wave_exact_constant_c(init.u, init.u_t, cfg.wave_speed, t));
      FieldBundle beam = beam_field(traj, t, eps, g, want_value | want_time_derivative | want_gradient, c.eval);
      dump(c.dump_dir, cell_name("beam", k, eps, t), beam.u);
      dump(c.dump_dir, cell_name("reference", k, eps, t), ref.u);
      c.record(k, error_between(beam, ref, cfg.norm, cfg.wave_speed, eps));
    }
  }
}

void run_cusp(Context& c, double eps, bool initial_only) {
  const SweepConfig& cfg = c.cfg;
  auto model = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, cfg.wave_speed));
  const WkbData data = cusp_data(cfg.k0());
  const Grid g = [&] {
    const int N = grid_size(5.0, eps, cfg.points_per_wavelength, cfg.max_grid);
    return Grid{{N, N}, {-2.0, -2.5}, {3.0, 2.5}};
  }();
  const std::vector<double> times = initial_only ? std::vector<double>{0.0} : cfg.times;
  const auto prop_times = with_zero(times);
  WkbFields w = sample_wkb(data, *model, g, eps, 1e-14, !initial_only);

  FamilyOptions fo;
  fo.hz_factor = cfg.hz_factor;
  fo.threads = cfg.threads;
  fo.propagate = propagate_options(cfg);
  std::map<int, const BeamFamily*> fam;
  for (int k : cfg.orders) {
    const BeamFamily& f = c.family(data, model, k, eps, cfg.eta_for(k), prop_times, fo);
    fam[k] = &f;
    c.report.environment.push_back(to_string(cfg.problem) + " eps=" + fmt("%.6g", eps) + " k=" + std::to_string(k) +
                                   " grid " + grid_text(g) + " h_z=" + fmt("%.6g", f.h_z) +
                                   " beams=" + std::to_string(f.trajectories.size()) +
                                   " pruned=" + std::to_string(f.pruned));
  }
  for (double t : times) {
    FieldBundle ref;
    if (initial_only) {
      ref.u = w.u0;
    } else {
      ref = reference_bundle(wave_exact_constant_c(w.u0, w.u1, cfg.wave_speed, t));
    }
    const unsigned want = cfg.norm == NormKind::energy ? want_value | want_time_derivative | want_gradient : want_value;
    for (int k : cfg.orders) {
      FieldBundle u = superpose(*fam.at(k), t, g, want, c.eval);
      dump(c.dump_dir, cell_name("superposition", k, eps, t), u.u);
      c.record(k, error_between(u, ref, cfg.norm, cfg.wave_speed, eps));
    }
    dump(c.dump_dir, cell_name("reference", 0, eps, t), ref.u);
  }
}

void run_schrodinger(Context& c, double eps, bool potential) {
  const SweepConfig& cfg = c.cfg;
  auto model = std::make_shared<const HamiltonianModel>(
      potential ? HamiltonianModel::schrodinger(1, cosine_potential()) : HamiltonianModel::schrodinger(1));
  const WkbData data = schrodinger_study_data(cfg.k0());
  const double L = 4.0 * kPi;
  const int N = grid_size(L, eps, cfg.points_per_wavelength, 1 << 22);
  const Grid g{{N}, {-0.5 * L}, {0.5 * L}};
  SampledField V(g, 0.0, eps, "V");
  if (potential)
    for (std::size_t i = 0; i < g.size(); ++i) V[i] = std::cos(g.coord(0, static_cast<int>(i)));
  SampledField u = sample_wkb(data, *model, g, eps).u0;

  const auto prop_times = with_zero(cfg.times);
  FamilyOptions fo;
  fo.hz_factor = cfg.hz_factor;
  fo.threads = cfg.threads;
  fo.propagate = propagate_options(cfg);
  std::map<int, BeamFamily> fam;
  for (int k : cfg.orders) fam.emplace(k, build_family(data, model, k, eps, cfg.eta_for(k), prop_times, fo));
  c.report.environment.push_back(to_string(cfg.problem) + " eps=" + fmt("%.6g", eps) + " grid " + grid_text(g) +
                                 " h_z=" + fmt("%.6g", fam.begin()->second.h_z));
  double now = 0.0;
  for (double t : prop_times) {
    if (t > now) {
      u = schrodinger_split_step(u, V, eps, t - now, split_step_count(g, eps, t - now));
      now = t;
    }
    if (std::find(cfg.times.begin(), cfg.times.end(), t) == cfg.times.end()) continue;
    FieldBundle ref;
    ref.u = u;
    ref.u.time = t;
    for (int k : cfg.orders) {
      FieldBundle b = superpose(fam.at(k), t, g, want_value, c.eval);
      dump(c.dump_dir, cell_name("superposition", k, eps, t), b.u);
      c.record(k, error_between(b, ref, NormKind::l2, 1.0, eps));
    }
  }
}

}  // namespace

std::string to_string(Problem p) {
  switch (p) {
    case Problem::single_beam: return "single_beam";
    case Problem::cusp: return "cusp";
    case Problem::schrodinger_free: return "schrodinger_free";
    case Problem::schrodinger_potential: return "schrodinger_potential";
    case Problem::init_data: return "init_data";
  }
  return "unknown";
}

Problem parse_problem(const std::string& s) {
  for (Problem p : {Problem::single_beam, Problem::cusp, Problem::schrodinger_free, Problem::schrodinger_potential,
                    Problem::init_data})
    if (to_string(p) == s) return p;
  throw ValidationError("unknown problem '" + s + "'");
}

double SweepConfig::eta_for(int k) const {
  if (eta) return *eta;
  return k == 1 ? kNoCutoff : 0.1;
}

Box SweepConfig::k0() const {
  if (!k0_lower.empty()) return Box{k0_lower, k0_upper};
  if (problem == Problem::schrodinger_free || problem == Problem::schrodinger_potential) return Box{{-1.5}, {1.5}};
  return Box{{-1.25, -1.25}, {1.25, 1.25}};
}

void SweepConfig::validate() const {
  std::vector<std::string> errs;
  if (orders.empty()) errs.push_back("orders: empty");
  for (int k : orders)
    if (k < 1 || k > kMaxBeamOrder) errs.push_back("orders: " + std::to_string(k) + " is outside 1..3");
  for (std::size_t i = 0; i < orders.size(); ++i)
    for (std::size_t j = i + 1; j < orders.size(); ++j)
      if (orders[i] == orders[j]) errs.push_back("orders: duplicate " + std::to_string(orders[i]));
  if (epsilons.empty()) errs.push_back("epsilons: empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) errs.push_back("epsilons: values must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) errs.push_back("epsilons: must be strictly decreasing");
  }
  if (times.empty()) errs.push_back("times: empty");
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) errs.push_back("times: values must be finite and non-negative");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) errs.push_back("times: must be strictly increasing");
  if (eta && !(*eta > 0.0)) errs.push_back("eta: must be positive");
  if (!(tolerance > 0.0 && tolerance < 1e-2)) errs.push_back("tolerance: must lie in (0, 1e-2)");
  if (!(hz_factor > 0.0 && hz_factor <= 0.5)) errs.push_back("hz_factor: must lie in (0, 0.5]");
  if (!(points_per_wavelength >= 2.0)) errs.push_back("points_per_wavelength: must be at least 2");
  if (!(wave_speed > 0.0)) errs.push_back("wave_speed: must be positive");
  if (threads < 1) errs.push_back("threads: must be at least 1");
  if (max_grid < 16) errs.push_back("max_grid: must be at least 16");
  if (k0_lower.size() != k0_upper.size()) errs.push_back("k0: lower and upper differ in length");
  const bool one_d = problem == Problem::schrodinger_free || problem == Problem::schrodinger_potential;
  if (!k0_lower.empty()) {
    if (static_cast<int>(k0_lower.size()) != (one_d ? 1 : 2)) errs.push_back("k0: wrong dimension for the problem");
    for (std::size_t a = 0; a < std::min(k0_lower.size(), k0_upper.size()); ++a)
      if (!(k0_upper[a] > k0_lower[a])) errs.push_back("k0: upper must exceed lower");
  }
  if (problem == Problem::init_data && norm != NormKind::l2) errs.push_back("norm: init_data uses l2");
  if (one_d && norm != NormKind::l2) errs.push_back("norm: Schrodinger problems use l2");
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ValidationError(msg);
  }
}

SweepConfig default_config(Problem p) {
  SweepConfig c;
  c.problem = p;
  c.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  switch (p) {
    case Problem::single_beam:
      c.times = {0.5, 1.0};
      break;
    case Problem::cusp:
      c.times = {0.0, 0.25, 0.5, 0.75, 1.0};
      break;
    case Problem::init_data:
      c.times = {0.0};
      c.norm = NormKind::l2;
      break;
    case Problem::schrodinger_free:
    case Problem::schrodinger_potential:
      c.times = {0.5, 1.0};
      c.norm = NormKind::l2;
      break;
  }
  return c;
}

RateFit fit_rate(std::span<const double> eps, std::span<const double> err) {
  if (eps.size() != err.size()) throw std::invalid_argument("fit_rate: length mismatch");
  if (eps.size() < 3) throw InsufficientDataError("fit_rate: at least three points are needed");
  const double n = static_cast<double>(eps.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(err[i] > 0.0)) throw std::domain_error("fit_rate: values must be positive");
    sx += std::log(eps[i]);
    sy += std::log(err[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dx = std::log(eps[i]) - mx, dy = std::log(err[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::domain_error("fit_rate: epsilons must not all coincide");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ssr = std::max(0.0, syy - f.slope * sxy);
  f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  f.n_points = static_cast<int>(eps.size());
  return f;
}

RateFit fit_tail(std::span<const double> eps, std::span<const double> err, double threshold, int* dropped) {
  std::size_t first = 0;
  while (eps.size() - first > 3) {
    const double s = std::log(err[first] / err[first + 1]) / std::log(eps[first] / eps[first + 1]);
    if (!(s > threshold)) break;
    ++first;
  }
  if (dropped) *dropped = static_cast<int>(first);
  return fit_rate(eps.subspan(first), err.subspan(first));
}

const RateSummary* ConvergenceReport::find(int k, double t) const {
  for (const auto& f : fits)
    if (f.k == k && std::abs(f.time - t) < 1e-12) return &f;
  return nullptr;
}

std::vector<RateSummary> summarize(const std::vector<SweepRecord>& records, std::span<const int> orders,
                                   std::span<const double> times) {
  std::vector<RateSummary> out;
  for (int k : orders)
    for (double t : times) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& r : records)
        if (r.k == k && std::abs(r.error.time - t) < 1e-12) pts.emplace_back(r.error.epsilon, r.error.absolute_error);
      std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first > b.first; });
      RateSummary s;
      s.k = k;
      s.time = t;
      std::vector<double> e, v;
      for (auto& [x, y] : pts)
        if (y > 0.0) {
          e.push_back(x);
          v.push_back(y);
        }
      if (e.size() >= 3) {
        s.fit = fit_tail(e, v, k >= 2 ? 3.0 : std::numeric_limits<double>::infinity(), &s.dropped);
        s.ok = true;
      }
      out.push_back(s);
    }
  return out;
}

ConvergenceReport run_sweep(const SweepConfig& cfg, std::ostream* log, const std::filesystem::path* dump_dir) {
  cfg.validate();
  ConvergenceReport report;
  Context c{cfg, log, cfg.dump_fields ? dump_dir : nullptr, report, EvalOptions{}, {}};
  c.eval.threads = cfg.threads;
  report.environment.push_back("tolerance rtol=" + fmt("%.3g", cfg.tolerance) +
                               " atol=" + fmt("%.3g", 1e-3 * cfg.tolerance) + " hz_factor=" +
                               fmt("%.3g", cfg.hz_factor) + " points_per_wavelength=" +
                               fmt("%.3g", cfg.points_per_wavelength));
  for (double eps : cfg.epsilons) {
    c.note(to_string(cfg.problem) + ": eps = " + fmt("%.6g", eps));
    switch (cfg.problem) {
      case Problem::single_beam: run_single_beam(c, eps); break;
      case Problem::cusp: run_cusp(c, eps, false); break;
      case Problem::init_data: run_cusp(c, eps, true); break;
      case Problem::schrodinger_free: run_schrodinger(c, eps, false); break;
      case Problem::schrodinger_potential: run_schrodinger(c, eps, true); break;
    }
  }
  // deterministic (k, eps, t) order
  std::stable_sort(report.records.begin(), report.records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.error.epsilon != b.error.epsilon) return a.error.epsilon > b.error.epsilon;
    return a.error.time < b.error.time;
  });
  const std::vector<double> fit_times = cfg.problem == Problem::init_data ? std::vector<double>{0.0} : cfg.times;
  report.fits = summarize(report.records, cfg.orders, fit_times);
  return report;
}

void write_report(const ConvergenceReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "records.csv");
    os << "k,";
    write_csv_header(os);
    for (const auto& r : report.records) {
      os << r.k << ",";
      write_csv_row(os, r.error);
    }
    if (!os) throw std::runtime_error("failed to write records.csv");
  }
  std::ofstream os(dir / "summary.txt");
  for (const auto& e : report.environment) os << "# " << e << "\n";
  os << "k t slope intercept r2 n_points\n";
  char buf[256];
  for (const auto& f : report.fits) {
    if (f.ok)
      std::snprintf(buf, sizeof buf, "%d %.6g %.6f %.6f %.6f %d\n", f.k, f.time, f.fit.slope, f.fit.intercept,
                    f.fit.r_squared, f.fit.n_points);
    else
      std::snprintf(buf, sizeof buf, "%d %.6g nan nan nan 0\n", f.k, f.time);
    os << buf;
  }
  if (!os) throw std::runtime_error("failed to write summary.txt");
}

SqueezeResult nonsqueeze_check(const HamiltonianModel& model, const WkbData& data, double t, std::size_t n_pairs,
                               std::uint64_t seed) {
  const int n = data.dim();
  if (n != model.dim()) throw ShapeError("nonsqueeze_check: data and model dimensions differ");
  // bicharacteristic of the first mode only: x' = dH/dp, p' = -dH/dx
  auto flow = [&](std::span<const double> z) {
    std::vector<double> y(static_cast<std::size_t>(2 * n));
    const Jet phi = data.phase(z, 1);
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];
      MultiIndex e{};
      e[static_cast<std::size_t>(i)] = 1;
      y[static_cast<std::size_t>(n + i)] = phi.at(e).real();
    }
    if (t == 0.0) return y;
    OdeRhs rhs = [&](const OdeState& s, OdeState& ds, double) {
      const Jet h = model.phase_space_jet(0, std::span(s.data(), static_cast<std::size_t>(n)),
                                          std::span(s.data() + n, static_cast<std::size_t>(n)), 1);
      for (int i = 0; i < n; ++i) {
        MultiIndex ex{}, ep{};
        ex[static_cast<std::size_t>(i)] = 1;
        ep[static_cast<std::size_t>(n + i)] = 1;
        ds[static_cast<std::size_t>(i)] = h.at(ep).real();
        ds[static_cast<std::size_t>(n + i)] = -h.at(ex).real();
      }
    };
    const double times[] = {0.0, t};
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    integrate_samples(rhs, y, times, o, {}, [&](double s, const OdeState& v) {
      if (s == t) y = v;
    });
    return y;
  };
  auto ratio = [&](std::span<const double> z, std::span<const double> w) {
    const auto a = flow(z), b = flow(w);
    double dx = 0, dp = 0, dz = 0;
    for (int i = 0; i < n; ++i) {
      dx += std::pow(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)], 2);
      dp += std::pow(a[static_cast<std::size_t>(n + i)] - b[static_cast<std::size_t>(n + i)], 2);
      dz += std::pow(z[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)], 2);
    }
    return (std::sqrt(dx) + std::sqrt(dp)) / std::sqrt(dz);
  };
  SqueezeResult r;
  r.min_ratio = std::numeric_limits<double>::infinity();
  r.max_ratio = 0.0;
  auto take = [&](std::span<const double> z, std::span<const double> w) {
    const double q = ratio(z, w);
    r.min_ratio = std::min(r.min_ratio, q);
    r.max_ratio = std::max(r.max_ratio, q);
    ++r.pairs;
  };
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> u;
  for (int a = 0; a < n; ++a)
    u.emplace_back(data.K0.lower[static_cast<std::size_t>(a)], data.K0.upper[static_cast<std::size_t>(a)]);
  std::vector<double> z(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  while (r.pairs < n_pairs) {
    double dz = 0;
    for (int a = 0; a < n; ++a) {
      z[static_cast<std::size_t>(a)] = u[static_cast<std::size_t>(a)](rng);
      w[static_cast<std::size_t>(a)] = u[static_cast<std::size_t>(a)](rng);
      dz += std::pow(z[static_cast<std::size_t>(a)] - w[static_cast<std::size_t>(a)], 2);
    }
    if (std::sqrt(dz) < 1e-6) continue;
    take(z, w);
  }
  // structured pairs across the last axis through the centre line, shrinking separations
  const int last = n - 1;
  const double lo = data.K0.lower[static_cast<std::size_t>(last)], hi = data.K0.upper[static_cast<std::size_t>(last)];
  for (int i = 0; i <= 20; ++i) {
    const double s = lo + (hi - lo) * i / 20.0;
    for (double sep : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      if (s + sep > hi) continue;
      for (int a = 0; a < n; ++a)
        z[static_cast<std::size_t>(a)] = w[static_cast<std::size_t>(a)] =
            0.5 * (data.K0.lower[static_cast<std::size_t>(a)] + data.K0.upper[static_cast<std::size_t>(a)]);
      z[static_cast<std::size_t>(last)] = s;
      w[static_cast<std::size_t>(last)] = s + sep;
      take(z, w);
    }
  }
  return r;
}

std::vector<ResidualRecord> single_beam_residuals(std::span<const int> orders, std::span<const double> epsilons,
                                                  double t, double eta, double points_per_wavelength,
                                                  std::ostream* log) {
  auto model = std::make_shared<const HamiltonianModel>(HamiltonianModel::wave_constant(2, 1.0));
  std::vector<ResidualRecord> out;
  const double times[] = {0.0, t};
  for (int k : orders) {
    const double e = k == 1 ? kNoCutoff : eta;
    const BeamTrajectory traj = propagate(model, single_beam_study_state(k), times, e);
    const BeamState& s = traj.samples.back();
    for (double eps : epsilons) {
      // local box around the centre wide enough for the cutoff support or the Gaussian tail
      double half = 11.0 * std::sqrt(eps / std::max(1e-3, traj.min_im_eig.back()));
      if (std::isfinite(e)) half = std::min(half, 2.0 * e * 1.05);
      const int N = grid_size(2.0 * half, eps, points_per_wavelength, 1 << 13);
      const Grid g{{N, N}, {s.x[0] - half, s.x[1] - half}, {s.x[0] + half, s.x[1] + half}};
      const ResidualReport rep = pde_residual_norm(traj, t, eps, g);
      out.push_back({k, eps, t, e, rep.norm, rep.richardson_defect});
      if (log)
        *log << "  residual k=" << k << " eps=" << eps << " norm=" << rep.norm
             << " richardson=" << rep.richardson_defect << std::endl;
    }
  }
  return out;
}

}  // namespace beamforge
