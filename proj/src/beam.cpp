#include "beamforge/beam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace beamforge {

namespace {

std::vector<int> shifted_vars(int n, int offset) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), offset);
  return m;
}

MultiIndex unit(int axis) {
  MultiIndex e{};
  e[static_cast<std::size_t>(axis)] = 1;
  return e;
}

Jet laplacian(const Jet& j, int first_axis, int n) {
  Jet out(j.nvars(), j.degree());
  for (int i = 0; i < n; ++i) out += jet_partial(jet_partial(j, first_axis + i), first_axis + i);
  return out;
}

void check_shapes(const BeamState& s) {
  const int n = s.dim();
  if (n < 1 || n > 2 || static_cast<int>(s.p.size()) != n) throw ShapeError("beam state: bad x/p dimensions");
  if (s.order < 1 || s.order > kMaxBeamOrder)
    throw CapabilityError("beam order must be 1, 2 or 3 (got " + std::to_string(s.order) + ")");
  if (s.phase.nvars() != n || s.phase.degree() != s.order + 1) throw ShapeError("beam state: phase jet shape");
  if (static_cast<int>(s.amps.size()) != amplitude_count(s.order)) throw ShapeError("beam state: amplitude count");
  for (int j = 0; j < amplitude_count(s.order); ++j) {
    const Jet& a = s.amps[static_cast<std::size_t>(j)];
    if (a.nvars() != n || a.degree() != amplitude_degree(s.order, j)) throw ShapeError("beam state: amplitude shape");
  }
}

// H(x + delta, g) for full gradient jets g; coef is c (wave) or V (Schrodinger)
// as a jet in the same variables.
Jet symbol_on(const HamiltonianModel& model, int mode, const Jet& coef, const std::vector<Jet>& g) {
  Jet sumsq(coef.nvars(), coef.degree());
  for (const auto& gi : g) sumsq += gi * gi;
  if (!model.is_wave()) return 0.5 * sumsq + coef;
  Jet h = coef * jet_sqrt(sumsq);
  h *= HamiltonianModel::branch_sign(mode);
  return h;
}

double discrete_l2(const std::vector<Complex>& v, const Grid& g) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s * g.cell_volume());
}

}  // namespace

BeamState make_beam_state(int n, int k, int mode) {
  BeamState s;
  s.x.assign(static_cast<std::size_t>(n), 0.0);
  s.p.assign(static_cast<std::size_t>(n), 0.0);
  s.order = k;
  s.mode = mode;
  s.phase = Jet(n, k + 1);
  for (int j = 0; j < amplitude_count(k); ++j) s.amps.emplace_back(n, amplitude_degree(k, j));
  return s;
}

Eigen::MatrixXcd phase_hessian(const Jet& phase) {
  const int n = phase.nvars();
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MultiIndex b{};
      b[static_cast<std::size_t>(i)] += 1;
      b[static_cast<std::size_t>(j)] += 1;
      M(i, j) = (i == j ? 2.0 : 1.0) * phase.at(b);
    }
  return M;
}

void set_phase_hessian(Jet& phase, const Eigen::MatrixXcd& M) {
  const int n = phase.nvars();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      MultiIndex b{};
      b[static_cast<std::size_t>(i)] += 1;
      b[static_cast<std::size_t>(j)] += 1;
      phase.at(b) = (i == j) ? 0.5 * M(i, i) : 0.5 * (M(i, j) + M(j, i));
    }
}

double min_imag_eigenvalue(const Jet& phase) {
  const Eigen::MatrixXd im = phase_hessian(phase).imag();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(im, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_beam_state(const HamiltonianModel& model, const BeamState& s) {
  check_shapes(s);
  if (s.dim() != model.dim()) throw ShapeError("beam state dimension does not match the model");
  if (s.mode < 0 || s.mode >= model.mode_count()) throw std::invalid_argument("beam mode out of range");
  const std::string at = " at t = " + std::to_string(s.t);
  const double lam = min_imag_eigenvalue(s.phase);
  if (!(lam > 0.0)) throw IntegrityError("Im M lost positive definiteness" + at);
  double pn = 0.0;
  for (int i = 0; i < s.dim(); ++i) {
    const Complex c = s.phase.at(unit(i));
    const double pi = s.p[static_cast<std::size_t>(i)];
    pn = std::max(pn, std::abs(pi));
    if (std::abs(c - pi) > 1e-12 * std::max(1.0, std::abs(pi)))
      throw IntegrityError("degree-1 phase coefficients differ from p" + at);
  }
  if (model.is_wave() && !(pn > 0.0)) throw DegenerateMomentum("|p| = 0" + at);
}

BeamRates beam_rhs(const HamiltonianModel& model, const BeamState& s) {
  check_shapes(s);
  const int n = s.dim();
  const int k = s.order;
  const int K = k + 1;
  const int J = amplitude_count(k);

  const Jet H1 = model.phase_space_jet(s.mode, s.x, s.p, 1);
  const Jet coef = model.is_wave() ? model.speed_jet(s.x, K) : model.potential_jet(s.x, K);

  std::vector<Jet> grad;
  for (int i = 0; i < n; ++i) grad.push_back(jet_partial(s.phase, i));
  const Jet G = symbol_on(model, s.mode, coef, grad);

  BeamRates r;
  r.dx.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) r.dx[static_cast<std::size_t>(i)] = H1.at(unit(n + i)).real();

  r.phase_t = -G;
  r.dphase = r.phase_t;
  for (int i = 0; i < n; ++i) r.dphase += r.dx[static_cast<std::size_t>(i)] * grad[static_cast<std::size_t>(i)];

  r.amps_t.resize(static_cast<std::size_t>(J));
  r.damps.resize(static_cast<std::size_t>(J));
  const Complex I(0.0, 1.0);

  if (!model.is_wave()) {
    Jet lap_phi(n, K);
    for (int i = 0; i < n; ++i) lap_phi += jet_partial(grad[static_cast<std::size_t>(i)], i);
    for (int j = 0; j < J; ++j) {
      const int D = amplitude_degree(k, j);
      const Jet& a = s.amps[static_cast<std::size_t>(j)];
      Jet at = (-0.5) * (lap_phi.with_degree(D) * a);
      for (int i = 0; i < n; ++i)
        at -= grad[static_cast<std::size_t>(i)].with_degree(D) * jet_partial(a, i);
      if (j > 0) at += (0.5 * I) * laplacian(s.amps[static_cast<std::size_t>(j - 1)], 0, n).with_degree(D);
      Jet da = at;
      for (int i = 0; i < n; ++i) da += r.dx[static_cast<std::size_t>(i)] * jet_partial(a, i);
      r.amps_t[static_cast<std::size_t>(j)] = std::move(at);
      r.damps[static_cast<std::size_t>(j)] = std::move(da);
    }
    return r;
  }

  // Wave transport needs time derivatives of phi and a at fixed y. Build jets
  // in (s, delta) by stepping the eikonal and transport equations in s.
  const int m = n + 1;
  const auto dvars = shifted_vars(n, 1);
  Jet phi = embed(s.phase, m, dvars, K);
  const Jet cj = embed(coef, m, dvars, K);
  for (int level = 0; level < K; ++level) {
    std::vector<Jet> g;
    for (int i = 0; i < n; ++i) g.push_back(jet_partial(phi, 1 + i));
    Jet part = slice_power(symbol_on(model, s.mode, cj, g), 0, level);
    part *= -1.0 / (level + 1);
    phi += lift_power(part, 0, level + 1, K);
  }
  const Jet phi_s = jet_partial(phi, 0);
  const Jet phi_ss = jet_partial(phi_s, 0);
  std::vector<Jet> gphi;
  for (int i = 0; i < n; ++i) gphi.push_back(jet_partial(phi, 1 + i));
  const Jet lphi = laplacian(phi, 1, n);
  const Jet c2 = cj * cj;

  std::vector<Jet> ast(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    const int D = amplitude_degree(k, j);
    const int T = D + 1;
    Jet a = embed(s.amps[static_cast<std::size_t>(j)], m, dvars, T);
    Jet forcing(m, T);
    if (j > 0) {
      const Jet& prev = ast[static_cast<std::size_t>(j - 1)];
      Jet pa = jet_partial(jet_partial(prev, 0), 0) - c2.with_degree(prev.degree()) * laplacian(prev, 1, n);
      forcing = I * pa.with_degree(T);
    }
    const Jet inv = jet_reciprocal(2.0 * phi_s.with_degree(T));
    const Jet c2T = c2.with_degree(T);
    const Jet lT = lphi.with_degree(T);
    const Jet ssT = phi_ss.with_degree(T);
    for (int level = 0; level < T; ++level) {
      Jet adv(m, T);
      for (int i = 0; i < n; ++i) adv += gphi[static_cast<std::size_t>(i)].with_degree(T) * jet_partial(a, 1 + i);
      Jet rhs = c2T * (2.0 * adv + lT * a) - ssT * a + forcing;
      rhs = rhs * inv;
      Jet part = slice_power(rhs, 0, level);
      part *= 1.0 / (level + 1);
      a += lift_power(part, 0, level + 1, T);
    }
    Jet at = slice_power(a, 0, 1);
    Jet da = at;
    for (int i = 0; i < n; ++i)
      da += r.dx[static_cast<std::size_t>(i)] * jet_partial(s.amps[static_cast<std::size_t>(j)], i);
    r.amps_t[static_cast<std::size_t>(j)] = std::move(at);
    r.damps[static_cast<std::size_t>(j)] = std::move(da);
    ast[static_cast<std::size_t>(j)] = std::move(a);
  }
  return r;
}

double eikonal_residual(const HamiltonianModel& model, const BeamState& s, const BeamRates& r) {
  // independent route: compose the phase-space Taylor jet of H with (delta, grad phi - p)
  const int n = s.dim();
  const int K = s.order + 1;
  const Jet H = model.phase_space_jet(s.mode, s.x, s.p, K);
  std::vector<Jet> inner, grad;
  for (int i = 0; i < n; ++i) inner.push_back(Jet::variable(n, K, i));
  for (int i = 0; i < n; ++i) {
    grad.push_back(jet_partial(s.phase, i));
    Jet g = grad.back();
    g[0] = 0.0;
    inner.push_back(std::move(g));
  }
  Jet res = r.dphase + compose(H, inner);
  for (int i = 0; i < n; ++i) res -= r.dx[static_cast<std::size_t>(i)] * grad[static_cast<std::size_t>(i)];
  return res.max_abs();
}

std::vector<double> pack_state(const BeamState& s) {
  std::vector<double> y(s.x.begin(), s.x.end());
  auto put = [&](const Jet& j) {
    for (const auto& c : j.coeffs()) {
      y.push_back(c.real());
      y.push_back(c.imag());
    }
  };
  put(s.phase);
  for (const auto& a : s.amps) put(a);
  return y;
}

void unpack_state(std::span<const double> y, BeamState& s) {
  const int n = s.dim();
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) s.x[static_cast<std::size_t>(i)] = y[pos++];
  auto get = [&](Jet& j) {
    for (auto& c : j.coeffs()) {
      c = Complex(y[pos], y[pos + 1]);
      pos += 2;
    }
  };
  get(s.phase);
  for (auto& a : s.amps) get(a);
  if (pos != y.size()) throw ShapeError("unpack_state: state vector length mismatch");
  for (int i = 0; i < n; ++i) s.p[static_cast<std::size_t>(i)] = s.phase.at(unit(i)).real();
}

namespace {

void pack_rates(const BeamRates& r, std::vector<double>& dy) {
  std::size_t pos = 0;
  for (double v : r.dx) dy[pos++] = v;
  auto put = [&](const Jet& j) {
    for (const auto& c : j.coeffs()) {
      dy[pos++] = c.real();
      dy[pos++] = c.imag();
    }
  };
  put(r.dphase);
  for (const auto& a : r.damps) put(a);
}

OdeRhs make_rhs(const HamiltonianModel& model, BeamState& scratch) {
  return [&model, &scratch](const OdeState& y, OdeState& dy, double t) {
    unpack_state(y, scratch);
    scratch.t = t;
    pack_rates(beam_rhs(model, scratch), dy);
  };
}

}  // namespace

std::size_t BeamTrajectory::sample_index(double t) const {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (std::abs(samples[i].t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  throw SamplingError("time " + std::to_string(t) + " is not a stored sample");
}

BeamTrajectory propagate(std::shared_ptr<const HamiltonianModel> model, const BeamState& s0,
                         std::span<const double> sample_times, double eta, const PropagateOptions& opts) {
  if (!model) throw std::invalid_argument("propagate: null model");
  if (sample_times.empty() || std::abs(sample_times[0] - s0.t) > 1e-14 * std::max(1.0, std::abs(s0.t)))
    throw std::invalid_argument("propagate: sample_times[0] must equal the initial time");
  if (!(eta > 0.0)) throw std::invalid_argument("propagate: cutoff radius must be positive");
  check_beam_state(*model, s0);

  BeamTrajectory traj;
  traj.model = model;
  traj.eta = eta;
  const HamiltonianModel& hm = *model;
  BeamState scratch = s0;
  const int n = s0.dim();
  // offsets of the degree-1 phase coefficients inside the packed state
  std::vector<std::size_t> p_offsets;
  for (int i = 0; i < n; ++i)
    p_offsets.push_back(static_cast<std::size_t>(n) + 2 * s0.phase.layout().index(unit(i)));

  OdeRhs rhs = make_rhs(hm, scratch);
  BeamState checker = s0;

  auto on_step = [&](double t, OdeState& y) {
    for (std::size_t off : p_offsets) {
      const double drift = std::abs(y[off + 1]);
      const double scale = std::max(1.0, std::abs(y[off]));
      if (drift > 1e-9 * scale)
        throw IntegrityError("degree-1 phase coefficients left the real axis at t = " + std::to_string(t));
      traj.max_momentum_projection = std::max(traj.max_momentum_projection, drift);
      y[off + 1] = 0.0;
    }
    unpack_state(y, checker);
    checker.t = t;
    check_beam_state(hm, checker);
  };
  auto on_sample = [&](double t, const OdeState& y) {
    BeamState s = s0;
    unpack_state(y, s);
    s.t = t;
    check_beam_state(hm, s);
    BeamRates r = beam_rhs(hm, s);
    if (opts.check_eikonal) {
      const double res = eikonal_residual(hm, s, r);
      if (res > opts.eikonal_tolerance)
        throw IntegrityError("eikonal residual " + std::to_string(res) + " at t = " + std::to_string(t));
    }
    traj.min_im_eig.push_back(min_imag_eigenvalue(s.phase));
    traj.samples.push_back(std::move(s));
    traj.rates.push_back(std::move(r));
  };
  traj.stats = integrate_samples(rhs, pack_state(s0), sample_times, opts.ode, on_step, on_sample);
  return traj;
}

CutoffValue cutoff(double r, double eta) {
  if (!std::isfinite(eta) || r <= eta) return {1.0, 0.0, 0.0};
  if (r >= 2.0 * eta) return {0.0, 0.0, 0.0};
  const double u = (r - eta) / eta;
  const double v = 1.0 - u;
  // S(u) = f(u) / (f(u) + f(1-u)), f(s) = exp(-1/s); S = 1/(1 + e^h)
  const double h = 1.0 / u - 1.0 / v;
  const double e = std::exp(-std::abs(h));
  const double S = h > 0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
  const double SS = e / ((1.0 + e) * (1.0 + e));  // S(1-S)
  const double h1 = -1.0 / (u * u) - 1.0 / (v * v);
  const double h2 = 2.0 / (u * u * u) - 2.0 / (v * v * v);
  const double dS = -SS * h1;
  const double d2S = -(dS * (1.0 - 2.0 * S) * h1 + SS * h2);
  return {1.0 - S, -dS / eta, -d2S / (eta * eta)};
}

double BeamSnapshot::skip_radius(double eps, double factor) const {
  double r = factor * std::sqrt(eps / min_im_eig);
  if (std::isfinite(eta)) r = std::min(r, 2.0 * eta);
  return r;
}

BeamSnapshot make_snapshot(const BeamState& s, const BeamRates& r, double eta) {
  BeamSnapshot b;
  b.n = s.dim();
  b.k = s.order;
  b.eta = eta;
  b.x = s.x;
  b.dx = r.dx;
  b.min_im_eig = min_imag_eigenvalue(s.phase);
  const int K = s.order + 1;
  b.phase = s.phase;
  b.phase_t = r.phase_t.with_degree(K);
  for (int i = 0; i < b.n; ++i) b.grad_phase.push_back(jet_partial(s.phase, i));
  b.lap_phase = laplacian(s.phase, 0, b.n);
  b.zero = true;
  for (std::size_t j = 0; j < s.amps.size(); ++j) {
    const Jet a = s.amps[j].with_degree(K);
    if (!a.is_zero()) b.zero = false;
    std::vector<Jet> ga;
    for (int i = 0; i < b.n; ++i) ga.push_back(jet_partial(a, i));
    b.grad_amps.push_back(std::move(ga));
    b.lap_amps.push_back(laplacian(a, 0, b.n));
    b.amps_t.push_back(r.amps_t[j].with_degree(K));
    b.amps.push_back(a);
  }
  return b;
}

namespace {

// eps-weighted amplitude sums for one evaluation
struct EvalJets {
  const BeamSnapshot* b;
  double weight;
  Jet A, At, lapA;
  std::vector<Jet> gradA;
  double radius;
  int lo[2], hi[2];
  bool full[2];
};

int wrap_index(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

double min_image(double d, double L) { return d - L * std::floor(d / L + 0.5); }

}  // namespace

void accumulate_beams(std::span<const BeamSnapshot* const> beams, std::span<const double> weights, double eps,
                      double scale, unsigned want, FieldBundle& out, const EvalOptions& opts) {
  if (!(eps > 0.0)) throw std::domain_error("epsilon must be positive");
  if (beams.size() != weights.size()) throw std::invalid_argument("accumulate_beams: weight count mismatch");
  const Grid& g = out.u.grid;
  const int n = g.ndim();
  if (n < 1 || n > 2) throw GeometryError("beam evaluation supports 1D and 2D grids");
  for (int a = 0; a < n; ++a)
    if (g.spacing(a) > 0.25 * std::sqrt(eps))
      throw ResolutionError("grid spacing " + std::to_string(g.spacing(a)) + " does not resolve sqrt(eps)/4");

  std::vector<EvalJets> list;
  list.reserve(beams.size());
  for (std::size_t bi = 0; bi < beams.size(); ++bi) {
    const BeamSnapshot& b = *beams[bi];
    if (b.zero || weights[bi] == 0.0) continue;
    if (b.n != n) throw GeometryError("beam and grid dimensions differ");
    EvalJets e{&b, weights[bi], {}, {}, {}, {}, 0.0, {0, 0}, {0, 0}, {false, false}};
    const int K = b.k + 1;
    e.A = Jet(n, K);
    e.At = Jet(n, K);
    e.lapA = Jet(n, K);
    e.gradA.assign(static_cast<std::size_t>(n), Jet(n, K));
    double ej = 1.0;
    for (std::size_t j = 0; j < b.amps.size(); ++j, ej *= eps) {
      e.A += ej * b.amps[j];
      e.At += ej * b.amps_t[j];
      e.lapA += ej * b.lap_amps[j];
      for (int a = 0; a < n; ++a) e.gradA[static_cast<std::size_t>(a)] += ej * b.grad_amps[j][static_cast<std::size_t>(a)];
    }
    e.radius = b.skip_radius(eps, opts.skip_factor);
    for (int a = 0; a < n; ++a) {
      const double L = g.length(a), h = g.spacing(a);
      const int N = g.dims[static_cast<std::size_t>(a)];
      if (2.0 * e.radius >= L) {
        e.full[a] = true;
        e.lo[a] = 0;
        e.hi[a] = N - 1;
      } else {
        const double c = (b.x[static_cast<std::size_t>(a)] - g.lower[static_cast<std::size_t>(a)]) / h;
        e.lo[a] = static_cast<int>(std::ceil(c - e.radius / h));
        e.hi[a] = static_cast<int>(std::floor(c + e.radius / h));
      }
    }
    list.push_back(std::move(e));
  }

  const int rows = g.dims[0];
  const int cols = n == 2 ? g.dims[1] : 1;
  const bool wv = want & want_value, wt = want & want_time_derivative, wg = want & want_gradient,
             wl = want & want_laplacian;
  const Complex I(0.0, 1.0);

  auto worker = [&](int row_begin, int row_end) {
    std::vector<MonomialBasis> bases;
    for (int d = 0; d <= kMaxBeamOrder + 1; ++d) bases.emplace_back(n, d);
    double delta[2] = {0.0, 0.0};
    for (const EvalJets& e : list) {
      const BeamSnapshot& b = *e.b;
      MonomialBasis& basis = bases[static_cast<std::size_t>(b.k + 1)];
      const double r2max = e.radius * e.radius;
      for (int i0 = e.lo[0]; i0 <= e.hi[0]; ++i0) {
        const int idx0 = wrap_index(i0, rows);
        if (idx0 < row_begin || idx0 >= row_end) continue;
        const double y0 = g.lower[0] + i0 * g.spacing(0);
        delta[0] = e.full[0] ? min_image(g.coord(0, idx0) - b.x[0], g.length(0)) : y0 - b.x[0];
        const int jlo = n == 2 ? e.lo[1] : 0, jhi = n == 2 ? e.hi[1] : 0;
        for (int i1 = jlo; i1 <= jhi; ++i1) {
          int idx1 = 0;
          if (n == 2) {
            idx1 = wrap_index(i1, cols);
            const double y1 = g.lower[1] + i1 * g.spacing(1);
            delta[1] = e.full[1] ? min_image(g.coord(1, idx1) - b.x[1], g.length(1)) : y1 - b.x[1];
          }
          const double r2 = delta[0] * delta[0] + (n == 2 ? delta[1] * delta[1] : 0.0);
          if (r2 > r2max) continue;
          const double r = std::sqrt(r2);
          const CutoffValue cv = cutoff(r, b.eta);
          if (cv.rho == 0.0 && cv.drho == 0.0) continue;
          basis.set_point(std::span<const double>(delta, static_cast<std::size_t>(n)));
          const Complex phi = basis.apply(b.phase);
          const double decay = phi.imag() / eps;
          if (decay > 40.0) continue;
          const double mag = std::exp(-decay) * scale * e.weight;
          const Complex E = Complex(mag * std::cos(phi.real() / eps), mag * std::sin(phi.real() / eps));
          const Complex A = basis.apply(e.A);
          const std::size_t node = static_cast<std::size_t>(idx0) * static_cast<std::size_t>(cols) +
                                   static_cast<std::size_t>(idx1);
          if (wv) out.u.values[node] += cv.rho * A * E;
          double gr[2] = {0.0, 0.0};
          if (r > 0.0)
            for (int a = 0; a < n; ++a) gr[a] = cv.drho * delta[a] / r;
          if (wt) {
            double rho_t = 0.0;
            for (int a = 0; a < n; ++a) rho_t -= b.dx[static_cast<std::size_t>(a)] * gr[a];
            const Complex At = basis.apply(e.At);
            const Complex psi = basis.apply(b.phase_t);
            out.u_t.values[node] += (rho_t * A + cv.rho * At + cv.rho * A * I * psi / eps) * E;
          }
          if (wg || wl) {
            Complex gA[2], gphi[2];
            for (int a = 0; a < n; ++a) {
              gA[a] = basis.apply(e.gradA[static_cast<std::size_t>(a)]);
              gphi[a] = basis.apply(b.grad_phase[static_cast<std::size_t>(a)]);
            }
            if (wg)
              for (int a = 0; a < n; ++a)
                out.grad[static_cast<std::size_t>(a)].values[node] +=
                    (gr[a] * A + cv.rho * gA[a] + cv.rho * A * I * gphi[a] / eps) * E;
            if (wl) {
              const double lap_rho = cv.d2rho + (r > 0.0 ? (n - 1) * cv.drho / r : 0.0);
              Complex cross = 0.0, mix = 0.0, gg = 0.0;
              for (int a = 0; a < n; ++a) {
                cross += gr[a] * gA[a];
                mix += (gr[a] * A + cv.rho * gA[a]) * gphi[a];
                gg += gphi[a] * gphi[a];
              }
              const Complex lapA = basis.apply(e.lapA);
              const Complex lphi = basis.apply(b.lap_phase);
              out.lap.values[node] += (lap_rho * A + 2.0 * cross + cv.rho * lapA + (2.0 * I / eps) * mix +
                                       cv.rho * A * (I * lphi / eps - gg / (eps * eps))) *
                                      E;
            }
          }
        }
      }
    }
  };

  const int threads = std::max(1, std::min(opts.threads, rows));
  if (threads == 1) {
    worker(0, rows);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int b = rows * t / threads, e = rows * (t + 1) / threads;
    pool.emplace_back(worker, b, e);
  }
  for (auto& th : pool) th.join();
}

FieldBundle beam_field(const BeamTrajectory& traj, double t, double eps, const Grid& grid, unsigned want,
                       const EvalOptions& opts) {
  if (!(eps > 0.0)) throw std::domain_error("epsilon must be positive");
  const std::size_t i = traj.sample_index(t);
  const BeamSnapshot snap = make_snapshot(traj.samples[i], traj.rates[i], traj.eta);
  FieldBundle out = make_bundle(grid, t, eps, want);
  const BeamSnapshot* ptr = &snap;
  const double w = 1.0;
  accumulate_beams(std::span(&ptr, 1), std::span(&w, 1), eps, 1.0, want, out, opts);
  return out;
}

ResidualReport pde_residual_norm(const BeamTrajectory& traj, double t, double eps, const Grid& grid,
                                 const EvalOptions& opts) {
  const HamiltonianModel& model = *traj.model;
  if (model.kind() == ModelKind::wave_variable_c)
    throw std::invalid_argument("pde_residual_norm needs a constant-speed wave or a Schrodinger model");
  const std::size_t idx = traj.sample_index(t);
  const BeamState& s = traj.samples[idx];

  FieldBundle centre = beam_field(traj, t, eps, grid, want_value | want_time_derivative | want_laplacian, opts);
  ResidualReport rep;
  std::vector<Complex> res(grid.size());

  if (model.is_wave()) {
    const double dt = 1e-4 * std::min(1.0, std::sqrt(eps));
    rep.dt = dt;
    BeamState scratch = s;
    OdeRhs rhs = make_rhs(model, scratch);
    const std::vector<double> y0 = pack_state(s);
    auto ut_at = [&](double h) {
      BeamState st = s;
      unpack_state(dopri5_step(rhs, y0, t, h), st);
      st.t = t + h;
      const BeamRates r = beam_rhs(model, st);
      const BeamSnapshot snap = make_snapshot(st, r, traj.eta);
      FieldBundle f = make_bundle(grid, t + h, eps, want_time_derivative);
      const BeamSnapshot* ptr = &snap;
      const double w = 1.0;
      accumulate_beams(std::span(&ptr, 1), std::span(&w, 1), eps, 1.0, want_time_derivative, f, opts);
      return std::move(f.u_t.values);
    };
    const auto p1 = ut_at(dt), m1 = ut_at(-dt), p2 = ut_at(2 * dt), m2 = ut_at(-2 * dt);
    const double c2 = model.constant_speed() * model.constant_speed();
    std::vector<Complex> d1(grid.size()), diff(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      d1[i] = (p1[i] - m1[i]) / (2 * dt);
      const Complex d2 = (p2[i] - m2[i]) / (4 * dt);
      const Complex rich = (4.0 * d1[i] - d2) / 3.0;
      diff[i] = d1[i] - rich;
      res[i] = rich - c2 * centre.lap.values[i];
      d1[i] = rich;
    }
    const double base = discrete_l2(d1, grid);
    rep.richardson_defect = base > 0.0 ? discrete_l2(diff, grid) / base : 0.0;
  } else {
    const Complex I(0.0, 1.0);
    const int n = grid.ndim();
    const int cols = n == 2 ? grid.dims[1] : 1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double y[2] = {grid.coord(0, static_cast<int>(i / static_cast<std::size_t>(cols))), 0.0};
      if (n == 2) y[1] = grid.coord(1, static_cast<int>(i % static_cast<std::size_t>(cols)));
      const double V = model.has_potential() ? model.potential(std::span<const double>(y, static_cast<std::size_t>(n))) : 0.0;
      res[i] = -I * eps * centre.u_t.values[i] - 0.5 * eps * eps * centre.lap.values[i] + V * centre.u.values[i];
    }
  }
  rep.norm = discrete_l2(res, grid);
  return rep;
}

}  // namespace beamforge
