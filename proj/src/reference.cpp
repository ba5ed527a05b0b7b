#include "beamforge/reference.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

namespace beamforge {

namespace {

std::mutex planner_mutex;

void transform(const Grid& g, std::vector<Complex>& data, int sign) {
  require_power_of_two(g);
  if (data.size() != g.size()) throw GeometryError("transform: data size does not match the grid");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    plan = fftw_plan_dft(g.ndim(), g.dims.data(), p, p, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex);
  fftw_destroy_plan(plan);
}

// |xi|^2 per node in FFT order.
std::vector<double> xi_squared(const Grid& g) {
  std::vector<double> out(g.size(), 0.0);
  const auto k0 = wavenumbers(g.dims[0], g.length(0));
  const int cols = g.ndim() == 2 ? g.dims[1] : 1;
  const auto k1 = g.ndim() == 2 ? wavenumbers(g.dims[1], g.length(1)) : std::vector<double>{0.0};
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)] =
          k0[static_cast<std::size_t>(i)] * k0[static_cast<std::size_t>(i)] +
          k1[static_cast<std::size_t>(j)] * k1[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace

std::vector<double> wavenumbers(int n, double length) {
  std::vector<double> k(static_cast<std::size_t>(n));
  const double base = 2.0 * std::numbers::pi / length;
  for (int m = 0; m < n; ++m) k[static_cast<std::size_t>(m)] = base * (m < n / 2 ? m : m - n);
  return k;
}

void require_power_of_two(const Grid& g) {
  if (g.ndim() < 1 || g.ndim() > 2) throw GeometryError("spectral solvers support 1D and 2D grids");
  for (int d : g.dims)
    if (d < 1 || (d & (d - 1)) != 0)
      throw GeometryError("grid dimension " + std::to_string(d) + " is not a power of two");
}

void fft_forward(const Grid& g, std::vector<Complex>& data) { transform(g, data, FFTW_FORWARD); }

void fft_inverse(const Grid& g, std::vector<Complex>& data) {
  transform(g, data, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(g.size());
  for (auto& v : data) v *= s;
}

std::vector<SampledField> spectral_gradient(const SampledField& u) {
  const Grid& g = u.grid;
  std::vector<Complex> hat = u.values;
  fft_forward(g, hat);
  const int n = g.ndim();
  const int cols = n == 2 ? g.dims[1] : 1;
  std::vector<SampledField> out;
  for (int a = 0; a < n; ++a) {
    const auto k = wavenumbers(g.dims[static_cast<std::size_t>(a)], g.length(a));
    SampledField f(g, u.time, u.epsilon, "grad_" + std::to_string(a));
    for (std::size_t node = 0; node < g.size(); ++node) {
      const std::size_t idx = a == 0 ? node / static_cast<std::size_t>(cols) : node % static_cast<std::size_t>(cols);
      f[node] = Complex(0.0, k[idx]) * hat[node];
    }
    fft_inverse(g, f.values);
    out.push_back(std::move(f));
  }
  return out;
}

WaveSolution wave_exact_constant_c(const SampledField& u0, const SampledField& u1, double c, double t) {
  require_same_grid(u0, u1, "wave_exact_constant_c");
  if (!(c > 0.0)) throw std::domain_error("wave speed must be positive");
  const Grid& g = u0.grid;
  std::vector<Complex> a = u0.values, b = u1.values;
  fft_forward(g, a);
  fft_forward(g, b);
  const auto xi2 = xi_squared(g);
  WaveSolution out{SampledField(g, t, u0.epsilon, "u"), SampledField(g, t, u0.epsilon, "u_t")};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = c * std::sqrt(xi2[i]);
    if (w == 0.0) {
      out.u[i] = a[i] + t * b[i];
      out.u_t[i] = b[i];
      continue;
    }
    const double cs = std::cos(w * t), sn = std::sin(w * t);
    out.u[i] = cs * a[i] + (sn / w) * b[i];
    out.u_t[i] = -w * sn * a[i] + cs * b[i];
  }
  fft_inverse(g, out.u.values);
  fft_inverse(g, out.u_t.values);
  return out;
}

int split_step_count(const Grid& g, double eps, double t) {
  double h = g.spacing(0);
  for (int a = 1; a < g.ndim(); ++a) h = std::min(h, g.spacing(a));
  return std::max(1, static_cast<int>(std::ceil(std::abs(t) / (eps * h) - 1e-9)));
}

SampledField schrodinger_split_step(const SampledField& u0, const SampledField& V, double eps, double t,
                                    int n_steps) {
  require_same_grid(u0, V, "schrodinger_split_step");
  if (!(eps > 0.0)) throw std::domain_error("epsilon must be positive");
  if (n_steps < split_step_count(u0.grid, eps, t))
    throw ResolutionError("split-step needs dt <= eps*h: at least " + std::to_string(split_step_count(u0.grid, eps, t)) +
                          " steps");
  const Grid& g = u0.grid;
  const double dt = t / n_steps;
  const auto xi2 = xi_squared(g);
  std::vector<Complex> half(g.size()), kin(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    half[i] = std::polar(1.0, -0.5 * V[i].real() * dt / eps);
    kin[i] = std::polar(1.0, -0.5 * eps * xi2[i] * dt);
  }
  SampledField u = u0;
  u.time = u0.time + t;
  for (int s = 0; s < n_steps; ++s) {
    for (std::size_t i = 0; i < g.size(); ++i) u[i] *= half[i];
    fft_forward(g, u.values);
    for (std::size_t i = 0; i < g.size(); ++i) u[i] *= kin[i];
    fft_inverse(g, u.values);
    for (std::size_t i = 0; i < g.size(); ++i) u[i] *= half[i];
  }
  return u;
}

}  // namespace beamforge
