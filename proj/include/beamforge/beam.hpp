// A single Gaussian beam of order k in {1,2,3}: state, coefficient ODEs,
// propagation, cutoff, and analytic field evaluation.
//
// Phase and amplitude jets live in the moving frame: phase(delta) is
// phi(t, x(t) + delta). The phase jet has degree k+1 (degree-1 part = p,
// degree-2 part = M/2); amplitude a_j has degree k-2j-1.
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "beamforge/field.hpp"
#include "beamforge/hamiltonian.hpp"
#include "beamforge/jet.hpp"
#include "beamforge/ode.hpp"

namespace beamforge {

inline constexpr int kMaxBeamOrder = 3;
inline constexpr double kNoCutoff = std::numeric_limits<double>::infinity();

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};


inline int amplitude_count(int k) { return (k + 1) / 2; }
inline int amplitude_degree(int k, int j) { return k - 2 * j - 1; }

struct BeamState {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> p;
  Jet phase;
  std::vector<Jet> amps;
  int order = 1;
  int mode = 0;

  int dim() const { return static_cast<int>(x.size()); }
};

// Blank state with correctly shaped zero jets.
BeamState make_beam_state(int n, int k, int mode);

Eigen::MatrixXcd phase_hessian(const Jet& phase);
void set_phase_hessian(Jet& phase, const Eigen::MatrixXcd& M);
// Smallest eigenvalue of Im M.
double min_imag_eigenvalue(const Jet& phase);

// Throws IntegrityError if the state violates the beam invariants.
void check_beam_state(const HamiltonianModel& model, const BeamState& s);

// Time derivative of a beam state, plus the fixed-frame quantities needed for
// analytic time derivatives of the field.
struct BeamRates {
  std::vector<double> dx;       // dH/dp
  Jet dphase;                   // d/dt of the moving-frame phase coefficients
  std::vector<Jet> damps;       // d/dt of the moving-frame amplitude coefficients
  Jet phase_t;                  // d_t phi at fixed y, as a jet in delta
  std::vector<Jet> amps_t;      // d_t a_j at fixed y
};

BeamRates beam_rhs(const HamiltonianModel& model, const BeamState& s);

// Coefficients of d_t phi + H(y, grad phi) through degree k+1, with H
// substituted directly (no phase-space jet composition). Max modulus.
double eikonal_residual(const HamiltonianModel& model, const BeamState& s, const BeamRates& r);

struct BeamTrajectory {
  std::shared_ptr<const HamiltonianModel> model;
  std::vector<BeamState> samples;
  std::vector<BeamRates> rates;
  std::vector<double> min_im_eig;  // smallest eigenvalue of Im M per sample
  double eta = kNoCutoff;
  OdeStats stats;
  double max_symmetry_correction = 0.0;
  double max_momentum_projection = 0.0;

  std::size_t sample_index(double t) const;
};

struct PropagateOptions {
  OdeOptions ode;
  bool check_eikonal = false;  // evaluate eikonal_residual at every sample
  double eikonal_tolerance = 1e-8;
};

std::vector<double> pack_state(const BeamState& s);
void unpack_state(std::span<const double> y, BeamState& s);

BeamTrajectory propagate(std::shared_ptr<const HamiltonianModel> model, const BeamState& s0,
                         std::span<const double> sample_times, double eta, const PropagateOptions& opts = {});

// Cutoff rho_eta(r) and its first two radial derivatives.
struct CutoffValue {
  double rho, drho, d2rho;
};
CutoffValue cutoff(double r, double eta);

// Precomputed evaluation data for one beam at one time.
struct BeamSnapshot {
  int n = 0;
  int k = 1;
  double eta = kNoCutoff;
  double min_im_eig = 0.0;
  std::vector<double> x, dx;
  Jet phase, lap_phase, phase_t;
  std::vector<Jet> grad_phase;
  std::vector<Jet> amps, lap_amps, amps_t;
  std::vector<std::vector<Jet>> grad_amps;
  bool zero = false;

  double skip_radius(double eps, double factor) const;
};

BeamSnapshot make_snapshot(const BeamState& s, const BeamRates& r, double eta);

// Gaussian envelope at the default skip radius is below e^-18.
inline constexpr double kDefaultSkipFactor = 6.0;

struct EvalOptions {
  double skip_factor = kDefaultSkipFactor;
  int threads = 1;
};

// out += scale * sum_b weights[b] * v_b for each requested component.
void accumulate_beams(std::span<const BeamSnapshot* const> beams, std::span<const double> weights, double eps,
                      double scale, unsigned want, FieldBundle& out, const EvalOptions& opts);

FieldBundle beam_field(const BeamTrajectory& traj, double t, double eps, const Grid& grid, unsigned want,
                       const EvalOptions& opts = {});

struct ResidualReport {
  double norm = 0.0;
  double richardson_defect = 0.0;  // relative change of d_tt between step sizes
  double dt = 0.0;
};

// Discrete L2 norm of (d_tt - c^2 Lap) v (wave, constant c) or of
// -i eps v_t - eps^2/2 Lap v + V v (Schrodinger) at a stored sample.
ResidualReport pde_residual_norm(const BeamTrajectory& traj, double t, double eps, const Grid& grid,
                                 const EvalOptions& opts = {});

}  // namespace beamforge
