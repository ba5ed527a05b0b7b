// Beam families over a z-quadrature of K0 and their superposed field.
#pragma once

#include <memory>
#include <vector>

#include "beamforge/beam.hpp"
#include "beamforge/initdata.hpp"

namespace beamforge {

struct FamilyOptions {
  double hz_factor = 0.5;  // h_z = hz_factor * sqrt(eps)
  double h_z = 0.0;        // explicit spacing; 0 selects the rule above
  double prune_threshold = 1e-14;
  int threads = 1;
  PropagateOptions propagate;
};

struct BeamFamily {
  std::vector<std::vector<double>> z_nodes;
  std::vector<double> z_weights;
  std::vector<BeamTrajectory> trajectories;
  std::vector<std::size_t> node_of;  // z node of each trajectory
  std::vector<int> mode_of;
  std::vector<int> modes;            // modes with at least one live beam
  std::vector<double> times;
  int k = 1;
  double eps = 0.0;
  double eta = kNoCutoff;
  double h_z = 0.0;
  std::size_t pruned = 0;

  double weight_sum() const;
};

// Spacing rule: min(factor*sqrt(eps), eta/2).
double node_spacing(double eps, double eta, double factor);

// Midpoint product nodes on K0 with spacing at most h; weights are cell volumes.
void midpoint_nodes(const Box& K0, double h, std::vector<std::vector<double>>& nodes, std::vector<double>& weights);

BeamFamily build_family(const WkbData& data, std::shared_ptr<const HamiltonianModel> model, int k, double eps,
                        double eta, std::span<const double> times, const FamilyOptions& opts = {});

// u_k(t) = (2 pi eps)^{-n/2} sum_b w_b v_b(t) with the requested derivative fields.
FieldBundle superpose(const BeamFamily& family, double t, const Grid& grid, unsigned want,
                      const EvalOptions& opts = {});

}  // namespace beamforge
