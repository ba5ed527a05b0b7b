// WKB initial data and per-mode initial beam states.
#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "beamforge/beam.hpp"
#include "beamforge/field.hpp"
#include "beamforge/hamiltonian.hpp"

namespace beamforge {

class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Box {
  std::vector<double> lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(std::span<const double> z) const;
  double volume() const;
};

// How u_t data is supplied for wave models.
enum class TimeData {
  explicit_amplitudes,  // A_{1,j} given
  one_way_plus,         // Phi_t = +c|grad Phi|
  one_way_minus,        // Phi_t = -c|grad Phi|
};

struct WkbData {
  Box K0;
  JetProvider phase;                // Phi, real coefficients
  std::vector<JetProvider> amp0;    // A_{0,j}
  std::vector<JetProvider> amp1;    // A_{1,j}, explicit wave data only
  TimeData time_data = TimeData::one_way_plus;
  double gamma = 1.0;               // Im M(0) = gamma I
  double min_gradient = 1e-8;       // lower bound on |grad Phi| for wave models

  int dim() const { return K0.dim(); }
};

// Solves sum_l (i tau_l)^r a_l = rhs_r, r = 0..m-1.
std::vector<Complex> vandermonde_split(std::span<const double> taus, std::span<const Complex> rhs);

// One state per mode (wave: two, Schrodinger: one), all at t = 0.
std::vector<BeamState> build_initial_beams(const WkbData& data, const HamiltonianModel& model,
                                           std::span<const double> z, int k);
BeamState build_initial_beam(const WkbData& data, const HamiltonianModel& model, std::span<const double> z, int k,
                             int mode);

// WKB data sampled on a grid: u(0) and, for wave models, u_t(0). For one-way
// data u_t = (i Phi_t (A_0 + eps A_1) / eps + d_t a_0 + eps d_t a_1) e^{i Phi/eps}
// with the amplitude rates taken from the transport equations of the selected
// mode; nodes where the amplitude is below amp_floor times its
// grid maximum are left at zero. time_derivative = false skips u_t.
struct WkbFields {
  SampledField u0;
  SampledField u1;
};
WkbFields sample_wkb(const WkbData& data, const HamiltonianModel& model, const Grid& grid, double eps,
                     double amp_floor = 1e-14, bool time_derivative = true);

// Built-in study cases.
WkbData cusp_data(const Box& K0);
// Phi = y^2/2, A_0 = exp(-10 y^2)
WkbData schrodinger_study_data(const Box& K0);
// V(y) = cos y in 1D
JetProvider cosine_potential();
// Single-beam study state: z = 0, p = (-1, 0), M = [[i,0],[0,2+i]], a_00 = 1, H = -|p|.
BeamState single_beam_study_state(int k);

}  // namespace beamforge
