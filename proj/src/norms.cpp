#include "beamforge/norms.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace beamforge {

namespace {

SampledField difference(const SampledField& a, const SampledField& b, const char* what) {
  require_same_grid(a, b, what);
  SampledField d = a;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return d;
}

double energy_sum(const SampledField& u_t, std::span<const SampledField> grad, const SampledField* cf, double c,
                  double eps) {
  const Grid& g = u_t.grid;
  if (static_cast<int>(grad.size()) != g.ndim()) throw GeometryError("energy_norm: one gradient field per axis");
  for (const auto& f : grad) require_same_grid(u_t, f, "energy_norm");
  if (cf) require_same_grid(u_t, *cf, "energy_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ci = cf ? (*cf)[i].real() : c;
    if (!(ci > 0.0)) throw std::domain_error("energy_norm: wave speed must be positive");
    double v = std::norm(u_t[i]) / (ci * ci);
    for (const auto& f : grad) v += std::norm(f[i]);
    s += v;
  }
  return std::sqrt(0.5 * eps * eps * s * g.cell_volume());
}

}  // namespace

std::string to_string(NormKind k) { return k == NormKind::l2 ? "l2" : "energy"; }

NormKind parse_norm_kind(const std::string& s) {
  if (s == "l2") return NormKind::l2;
  if (s == "energy") return NormKind::energy;
  throw std::invalid_argument("unknown norm kind '" + s + "' (expected l2 or energy)");
}

double grid_l2(const SampledField& f) {
  double s = 0.0;
  for (const auto& v : f.values) s += std::norm(v);
  return std::sqrt(s * f.grid.cell_volume());
}

double energy_norm(const SampledField& u_t, std::span<const SampledField> grad, double c, double eps) {
  if (!(c > 0.0)) throw std::domain_error("energy_norm: wave speed must be positive");
  return energy_sum(u_t, grad, nullptr, c, eps);
}

double energy_norm(const SampledField& u_t, std::span<const SampledField> grad, const SampledField& c, double eps) {
  return energy_sum(u_t, grad, &c, 0.0, eps);
}

ErrorRecord error_between(const FieldBundle& beam, const FieldBundle& ref, NormKind kind, double c, double eps) {
  ErrorRecord r;
  r.epsilon = eps;
  r.time = ref.u.time;
  r.kind = kind;
  if (std::abs(beam.u.time - ref.u.time) > 1e-12) throw GeometryError("error_between: fields at different times");
  if (kind == NormKind::l2) {
    r.absolute_error = grid_l2(difference(beam.u, ref.u, "error_between"));
    r.reference_norm = grid_l2(ref.u);
  } else {
    if (beam.grad.size() != ref.grad.size()) throw GeometryError("error_between: gradient count mismatch");
    std::vector<SampledField> dg;
    for (std::size_t a = 0; a < ref.grad.size(); ++a)
      dg.push_back(difference(beam.grad[a], ref.grad[a], "error_between"));
    r.absolute_error = energy_norm(difference(beam.u_t, ref.u_t, "error_between"), dg, c, eps);
    r.reference_norm = energy_norm(ref.u_t, ref.grad, c, eps);
  }
  r.relative_error = r.reference_norm > 0.0 ? r.absolute_error / r.reference_norm : 0.0;
  return r;
}

void write_csv_header(std::ostream& os) { os << "epsilon,time,kind,abs,ref,rel\n"; }

void write_csv_row(std::ostream& os, const ErrorRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g,%.17g,%.17g\n", r.epsilon, r.time, to_string(r.kind).c_str(),
                r.absolute_error, r.reference_norm, r.relative_error);
  os << buf;
}

}  // namespace beamforge
