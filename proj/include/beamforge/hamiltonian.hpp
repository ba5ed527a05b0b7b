// Hamiltonians for the wave equation (H = sigma c(y)|p|) and the semiclassical
// Schrodinger equation (H = |p|^2/2 + V(y)), with local jet expansions.
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "beamforge/jet.hpp"

namespace beamforge {

// Returns the Taylor jet (in n variables, given degree) of a scalar field at a point.
using JetProvider = std::function<Jet(std::span<const double> point, int degree)>;

enum class ModelKind { wave_constant_c, wave_variable_c, schrodinger };

class DegenerateMomentum : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CapabilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxHamiltonianOrder = 6;

class HamiltonianModel {
 public:
  static HamiltonianModel wave_constant(int n, double c);
  static HamiltonianModel wave_variable(int n, JetProvider c);
  // V may be empty for the free particle.
  static HamiltonianModel schrodinger(int n, JetProvider V = {});

  ModelKind kind() const { return kind_; }
  int dim() const { return n_; }
  bool is_wave() const { return kind_ != ModelKind::schrodinger; }
  int mode_count() const { return is_wave() ? 2 : 1; }
  double constant_speed() const { return c_; }
  bool has_potential() const { return static_cast<bool>(field_); }

  // wave: mode 0 is H = -c|p| (tau = +c|p|), mode 1 is H = +c|p|.
  static double branch_sign(int mode) { return mode == 0 ? -1.0 : 1.0; }

  double speed(std::span<const double> x) const;
  double potential(std::span<const double> x) const;
  Jet speed_jet(std::span<const double> x, int degree) const;
  Jet potential_jet(std::span<const double> x, int degree) const;

  double value(int mode, std::span<const double> x, std::span<const double> p) const;

  // Jet of H(x + dy, p + dp) in 2n variables ordered (dy_1..dy_n, dp_1..dp_n).
  Jet phase_space_jet(int mode, std::span<const double> x, std::span<const double> p, int order) const;

  // tau_l = -H_l(x, p); wave order is [+c|p|, -c|p|].
  std::vector<double> mode_roots(std::span<const double> x, std::span<const double> p) const;

 private:
  HamiltonianModel(ModelKind kind, int n, double c, JetProvider field);
  void check_mode(int mode) const;

  ModelKind kind_;
  int n_;
  double c_ = 0.0;
  JetProvider field_;  // c(y) or V(y)
};

}  // namespace beamforge
