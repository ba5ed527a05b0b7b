#include "beamforge/hamiltonian.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace beamforge {

namespace {

double norm2(std::span<const double> p) {
  return std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
}

void require_momentum(std::span<const double> p) {
  if (!(norm2(p) > 0.0)) throw DegenerateMomentum("wave Hamiltonian needs |p| > 0");
}

}  // namespace

HamiltonianModel::HamiltonianModel(ModelKind kind, int n, double c, JetProvider field)
    : kind_(kind), n_(n), c_(c), field_(std::move(field)) {
  if (n < 1 || n > 2) throw std::invalid_argument("spatial dimension must be 1 or 2");
}

HamiltonianModel HamiltonianModel::wave_constant(int n, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("wave speed must be positive");
  return HamiltonianModel(ModelKind::wave_constant_c, n, c, {});
}

HamiltonianModel HamiltonianModel::wave_variable(int n, JetProvider c) {
  if (!c) throw std::invalid_argument("variable speed needs a jet provider");
  return HamiltonianModel(ModelKind::wave_variable_c, n, 0.0, std::move(c));
}

HamiltonianModel HamiltonianModel::schrodinger(int n, JetProvider V) {
  return HamiltonianModel(ModelKind::schrodinger, n, 0.0, std::move(V));
}

void HamiltonianModel::check_mode(int mode) const {
  if (mode < 0 || mode >= mode_count())
    throw std::invalid_argument("mode " + std::to_string(mode) + " out of range");
}

Jet HamiltonianModel::speed_jet(std::span<const double> x, int degree) const {
  if (kind_ == ModelKind::wave_constant_c) return Jet::constant(n_, degree, c_);
  if (kind_ != ModelKind::wave_variable_c) throw std::logic_error("speed_jet on a Schrodinger model");
  Jet j = field_(x, degree);
  if (j.nvars() != n_ || j.degree() < degree) throw ShapeError("speed provider returned a jet of the wrong shape");
  return j.with_degree(degree);
}

Jet HamiltonianModel::potential_jet(std::span<const double> x, int degree) const {
  if (kind_ != ModelKind::schrodinger) throw std::logic_error("potential_jet on a wave model");
  if (!field_) return Jet(n_, degree);
  Jet j = field_(x, degree);
  if (j.nvars() != n_ || j.degree() < degree) throw ShapeError("potential provider returned a jet of the wrong shape");
  return j.with_degree(degree);
}

double HamiltonianModel::speed(std::span<const double> x) const {
  if (kind_ == ModelKind::wave_constant_c) return c_;
  return speed_jet(x, 0)[0].real();
}

double HamiltonianModel::potential(std::span<const double> x) const {
  if (!field_) return 0.0;
  return potential_jet(x, 0)[0].real();
}

double HamiltonianModel::value(int mode, std::span<const double> x, std::span<const double> p) const {
  check_mode(mode);
  if (is_wave()) {
    require_momentum(p);
    return branch_sign(mode) * speed(x) * norm2(p);
  }
  const double pp = norm2(p);
  return 0.5 * pp * pp + potential(x);
}

Jet HamiltonianModel::phase_space_jet(int mode, std::span<const double> x, std::span<const double> p,
                                      int order) const {
  check_mode(mode);
  if (order < 0 || order > kMaxHamiltonianOrder)
    throw CapabilityError("Hamiltonian jets are supported up to order " + std::to_string(kMaxHamiltonianOrder));
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(p.size()) != n_)
    throw ShapeError("phase_space_jet: point dimension mismatch");
  const int nv = 2 * n_;
  // |p + dp|^2 as a jet in the dp variables
  Jet pp(nv, order);
  for (int i = 0; i < n_; ++i) {
    Jet pi = Jet::variable(nv, order, n_ + i, p[static_cast<std::size_t>(i)]);
    pp += pi * pi;
  }
  std::vector<int> space_map(static_cast<std::size_t>(n_));
  std::iota(space_map.begin(), space_map.end(), 0);

  if (is_wave()) {
    require_momentum(p);
    Jet absp = jet_sqrt(pp);
    Jet c = embed(speed_jet(x, order), nv, space_map, order);
    Jet h = c * absp;
    h *= branch_sign(mode);
    return h;
  }
  Jet h = 0.5 * pp;
  if (field_) h += embed(potential_jet(x, order), nv, space_map, order);
  return h;
}

std::vector<double> HamiltonianModel::mode_roots(std::span<const double> x, std::span<const double> p) const {
  std::vector<double> taus;
  for (int mode = 0; mode < mode_count(); ++mode) taus.push_back(-value(mode, x, p));
  return taus;
}

}  // namespace beamforge
