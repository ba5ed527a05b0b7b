#include "beamforge/initdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace beamforge {

namespace {

const Complex I(0.0, 1.0);

MultiIndex unit(int axis) {
  MultiIndex e{};
  e[static_cast<std::size_t>(axis)] = 1;
  return e;
}

Jet provider_jet(const JetProvider& f, std::span<const double> z, int n, int degree) {
  if (!f) return Jet(n, degree);
  Jet j = f(z, degree);
  if (j.nvars() != n || j.degree() < degree) throw ShapeError("jet provider returned a jet of the wrong shape");
  return j.with_degree(degree);
}

// Phase jet at z with the i*gamma/2 |delta|^2 term added.
Jet initial_phase(const WkbData& data, std::span<const double> z, int k) {
  const int n = data.dim();
  Jet phi = provider_jet(data.phase, z, n, k + 1);
  for (auto& c : phi.coeffs()) c = Complex(c.real(), 0.0);
  for (int i = 0; i < n; ++i) {
    MultiIndex b{};
    b[static_cast<std::size_t>(i)] = 2;
    phi.at(b) += 0.5 * I * data.gamma;
  }
  return phi;
}

BeamState blank_state(const WkbData& data, std::span<const double> z, int k, int mode) {
  const int n = data.dim();
  BeamState s = make_beam_state(n, k, mode);
  s.x.assign(z.begin(), z.end());
  s.phase = initial_phase(data, z, k);
  for (int i = 0; i < n; ++i) s.p[static_cast<std::size_t>(i)] = s.phase.at(unit(i)).real();
  return s;
}

Jet gaussian_jet(std::span<const double> z, int degree, double alpha) {
  const int n = static_cast<int>(z.size());
  Jet q(n, degree);
  for (int i = 0; i < n; ++i) {
    Jet y = Jet::variable(n, degree, i, z[static_cast<std::size_t>(i)]);
    q += y * y;
  }
  return jet_exp((-alpha) * q);
}

}  // namespace

bool Box::contains(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim()) return false;
  for (int a = 0; a < dim(); ++a)
    if (z[static_cast<std::size_t>(a)] < lower[static_cast<std::size_t>(a)] ||
        z[static_cast<std::size_t>(a)] > upper[static_cast<std::size_t>(a)])
      return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= upper[static_cast<std::size_t>(a)] - lower[static_cast<std::size_t>(a)];
  return v;
}

std::vector<Complex> vandermonde_split(std::span<const double> taus, std::span<const Complex> rhs) {
  const int m = static_cast<int>(taus.size());
  if (m < 1 || static_cast<int>(rhs.size()) != m) throw std::invalid_argument("vandermonde_split: size mismatch");
  if (m == 1) return {rhs[0]};
  double scale = 0.0;
  for (double t : taus) scale = std::max(scale, std::abs(t));
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      if (std::abs(taus[static_cast<std::size_t>(a)] - taus[static_cast<std::size_t>(b)]) < 1e-8 * scale)
        throw ConditioningError("vandermonde_split: nearly coincident roots");
  Eigen::MatrixXcd V(m, m);
  Eigen::VectorXcd b(m);
  for (int l = 0; l < m; ++l) {
    Complex pw = 1.0;
    for (int r = 0; r < m; ++r) {
      V(r, l) = pw;
      pw *= I * taus[static_cast<std::size_t>(l)];
    }
  }
  for (int r = 0; r < m; ++r) b(r) = rhs[static_cast<std::size_t>(r)];
  Eigen::VectorXcd a = V.fullPivLu().solve(b);
  return std::vector<Complex>(a.data(), a.data() + m);
}

std::vector<BeamState> build_initial_beams(const WkbData& data, const HamiltonianModel& model,
                                           std::span<const double> z, int k) {
  const int n = data.dim();
  if (n != model.dim()) throw ShapeError("WKB data and model dimensions differ");
  if (k < 1 || k > kMaxBeamOrder) throw CapabilityError("beam order must be 1, 2 or 3");
  if (!data.K0.contains(z)) throw std::domain_error("initial point lies outside K0");
  const int J = amplitude_count(k);
  auto amp0 = [&](int j, int degree) {
    return j < static_cast<int>(data.amp0.size()) ? provider_jet(data.amp0[static_cast<std::size_t>(j)], z, n, degree)
                                                   : Jet(n, degree);
  };

  if (!model.is_wave()) {
    BeamState s = blank_state(data, z, k, 0);
    for (int j = 0; j < J; ++j) s.amps[static_cast<std::size_t>(j)] = amp0(j, amplitude_degree(k, j));
    return {s};
  }

  double pn = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = blank_state(data, z, k, 0).p[static_cast<std::size_t>(i)];
    pn += p * p;
  }
  if (std::sqrt(pn) < data.min_gradient)
    throw DegenerateMomentum("|grad Phi| below the lower bound at the initial point");

  const int modes = model.mode_count();
  std::vector<BeamState> st;
  std::vector<Jet> psi;
  std::vector<double> taus;
  for (int m = 0; m < modes; ++m) {
    st.push_back(blank_state(data, z, k, m));
    psi.push_back(beam_rhs(model, st.back()).phase_t);
    taus.push_back(psi.back()[0].real());
  }
  int selected = -1;
  if (data.time_data == TimeData::one_way_plus) selected = 0;
  if (data.time_data == TimeData::one_way_minus) selected = 1;

  for (int j = 0; j < J; ++j) {
    const int D = amplitude_degree(k, j);
    const Jet A0 = amp0(j, D);
    // lower-order time derivatives at fixed y
    std::vector<Jet> lower_t;
    if (j > 0)
      for (int m = 0; m < modes; ++m)
        lower_t.push_back(
            beam_rhs(model, st[static_cast<std::size_t>(m)]).amps_t[static_cast<std::size_t>(j - 1)].with_degree(D));
    Jet A1;
    if (selected >= 0) {
      A1 = (I * psi[static_cast<std::size_t>(selected)].with_degree(D)) * A0;
      if (j > 0) A1 += lower_t[static_cast<std::size_t>(selected)];
    } else {
      A1 = j < static_cast<int>(data.amp1.size()) ? provider_jet(data.amp1[static_cast<std::size_t>(j)], z, n, D)
                                                  : Jet(n, D);
    }
    Jet rhs1 = A1;
    for (const auto& lt : lower_t) rhs1 -= lt;

    std::vector<Jet> a(static_cast<std::size_t>(modes), Jet(n, D));
    const auto& lay = A0.layout();
    for (int d = 0; d <= D; ++d) {
      // coupling through the non-constant part of Psi uses only lower degrees
      Jet coupling(n, D);
      for (int m = 0; m < modes; ++m) {
        Jet dpsi = psi[static_cast<std::size_t>(m)].with_degree(D);
        dpsi[0] = 0.0;
        coupling += (I * dpsi) * a[static_cast<std::size_t>(m)];
      }
      for (std::size_t i = lay.degree_begin(d); i < lay.degree_end(d); ++i) {
        const Complex rhs[2] = {A0[i], rhs1[i] - coupling[i]};
        const auto sol = vandermonde_split(taus, rhs);
        for (int m = 0; m < modes; ++m) a[static_cast<std::size_t>(m)][i] = sol[static_cast<std::size_t>(m)];
      }
    }
    for (int m = 0; m < modes; ++m) st[static_cast<std::size_t>(m)].amps[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(m)];
  }
  return st;
}

BeamState build_initial_beam(const WkbData& data, const HamiltonianModel& model, std::span<const double> z, int k,
                             int mode) {
  auto all = build_initial_beams(data, model, z, k);
  if (mode < 0 || mode >= static_cast<int>(all.size())) throw std::invalid_argument("mode out of range");
  return all[static_cast<std::size_t>(mode)];
}

WkbFields sample_wkb(const WkbData& data, const HamiltonianModel& model, const Grid& grid, double eps,
                     double amp_floor, bool time_derivative) {
  const int n = grid.ndim();
  if (n != data.dim()) throw GeometryError("sample_wkb: grid and data dimensions differ");
  WkbFields out{SampledField(grid, 0.0, eps, "u"), SampledField()};
  const bool wave = model.is_wave() && time_derivative;
  if (wave) out.u1 = SampledField(grid, 0.0, eps, "u_t");
  const int cols = n == 2 ? grid.dims[1] : 1;
  const int N = static_cast<int>(data.amp0.size());

  std::vector<double> lead(grid.size(), 0.0);
  double peak = 0.0;
  auto point = [&](std::size_t node, double* y) {
    y[0] = grid.coord(0, static_cast<int>(node / static_cast<std::size_t>(cols)));
    if (n == 2) y[1] = grid.coord(1, static_cast<int>(node % static_cast<std::size_t>(cols)));
  };
  for (std::size_t node = 0; node < grid.size(); ++node) {
    double y[2];
    point(node, y);
    const std::span<const double> ys(y, static_cast<std::size_t>(n));
    const double Phi = data.phase(ys, 0)[0].real();
    const Complex E = std::exp(I * Phi / eps);
    Complex A = 0.0;
    double ej = 1.0;
    for (int j = 0; j < N; ++j, ej *= eps) A += ej * data.amp0[static_cast<std::size_t>(j)](ys, 0)[0];
    out.u0[node] = A * E;
    lead[node] = std::abs(A);
    peak = std::max(peak, lead[node]);
    if (wave && data.time_data == TimeData::explicit_amplitudes) {
      Complex B = 0.0;
      double ek = 1.0;
      for (std::size_t j = 0; j < data.amp1.size(); ++j, ek *= eps) B += ek * data.amp1[j](ys, 0)[0];
      out.u1[node] = B * E / eps;
    }
  }
  if (!wave || data.time_data == TimeData::explicit_amplitudes) return out;

  const int sel = data.time_data == TimeData::one_way_plus ? 0 : 1;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (lead[node] <= amp_floor * peak) continue;
    double y[2];
    point(node, y);
    const std::span<const double> ys(y, static_cast<std::size_t>(n));
    BeamState s = make_beam_state(n, 3, sel);
    s.x.assign(ys.begin(), ys.end());
    s.phase = provider_jet(data.phase, ys, n, 4);
    for (auto& c : s.phase.coeffs()) c = Complex(c.real(), 0.0);
    for (int i = 0; i < n; ++i) s.p[static_cast<std::size_t>(i)] = s.phase.at(unit(i)).real();
    s.amps[0] = N > 0 ? provider_jet(data.amp0[0], ys, n, 2) : Jet(n, 2);
    s.amps[1] = N > 1 ? provider_jet(data.amp0[1], ys, n, 0) : Jet(n, 0);
    const BeamRates r = beam_rhs(model, s);
    const double Phi = s.phase[0].real();
    const Complex E = std::exp(I * Phi / eps);
    const Complex A = s.amps[0][0] + eps * s.amps[1][0];
    out.u1[node] = ((I / eps) * r.phase_t[0] * A + r.amps_t[0][0] + eps * r.amps_t[1][0]) * E;
  }
  return out;
}

WkbData cusp_data(const Box& K0) {
  WkbData d;
  d.K0 = K0;
  d.phase = [](std::span<const double> z, int degree) {
    Jet y1 = Jet::variable(2, degree, 0, z[0]);
    Jet y2 = Jet::variable(2, degree, 1, z[1]);
    return y2 * y2 - y1;
  };
  d.amp0 = {[](std::span<const double> z, int degree) { return gaussian_jet(z, degree, 10.0); }};
  d.time_data = TimeData::one_way_plus;
  return d;
}

WkbData schrodinger_study_data(const Box& K0) {
  WkbData d;
  d.K0 = K0;
  d.phase = [](std::span<const double> z, int degree) {
    Jet y = Jet::variable(1, degree, 0, z[0]);
    return 0.5 * (y * y);
  };
  d.amp0 = {[](std::span<const double> z, int degree) { return gaussian_jet(z, degree, 10.0); }};
  return d;
}

JetProvider cosine_potential() {
  return [](std::span<const double> z, int degree) {
    Jet j(1, degree);
    for (int m = 0; m <= degree; ++m)
      j[static_cast<std::size_t>(m)] = std::cos(z[0] + 0.5 * m * std::numbers::pi) / factorial(m);
    return j;
  };
}

BeamState single_beam_study_state(int k) {
  BeamState s = make_beam_state(2, k, 0);
  s.p = {-1.0, 0.0};
  s.phase.at(unit(0)) = -1.0;
  Eigen::MatrixXcd M(2, 2);
  M << I, 0.0, 0.0, 2.0 + I;
  set_phase_hessian(s.phase, M);
  s.amps[0][0] = 1.0;
  return s;
}

}  // namespace beamforge
