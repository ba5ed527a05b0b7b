// Epsilon sweeps, log-log rate fits, and flow/residual checks.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beamforge/initdata.hpp"
#include "beamforge/norms.hpp"
#include "beamforge/superposition.hpp"

namespace beamforge {

enum class Problem { single_beam, cusp, schrodinger_free, schrodinger_potential, init_data };

std::string to_string(Problem p);
Problem parse_problem(const std::string& s);

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
  Problem problem = Problem::cusp;
  std::vector<int> orders{1, 2, 3};
  std::vector<double> epsilons;  // strictly decreasing
  std::vector<double> times;
  std::optional<double> eta;     // unset: 0.1 for k >= 2, no cutoff for k = 1
  NormKind norm = NormKind::energy;
  double tolerance = 1e-9;       // ODE relative tolerance; absolute is 1e-3 of it
  double hz_factor = 0.5;
  double points_per_wavelength = 8.0;
  std::vector<double> k0_lower, k0_upper;  // empty: problem default
  double wave_speed = 1.0;
  int threads = 1;
  int max_grid = 4096;           // per axis
  bool dump_fields = false;

  double eta_for(int k) const;
  Box k0() const;
  // Throws ValidationError listing every violated invariant.
  void validate() const;
};

// Problem defaults for epsilons, times and norm.
SweepConfig default_config(Problem p);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

// Least squares of log(error) against log(eps).
RateFit fit_rate(std::span<const double> eps, std::span<const double> err);

// Drops leading (coarse) points while the slope between the two coarsest
// exceeds `threshold` and more than three points remain; returns the fit of the rest.
RateFit fit_tail(std::span<const double> eps, std::span<const double> err, double threshold, int* dropped = nullptr);

struct SweepRecord {
  int k = 1;
  ErrorRecord error;
};

struct RateSummary {
  int k = 1;
  double time = 0.0;
  RateFit fit;
  int dropped = 0;
  bool ok = false;  // false when fewer than three positive errors
};

struct ConvergenceReport {
  std::vector<SweepRecord> records;
  std::vector<RateSummary> fits;
  std::vector<std::string> environment;

  const RateSummary* find(int k, double t) const;
};

ConvergenceReport run_sweep(const SweepConfig& cfg, std::ostream* log = nullptr,
                            const std::filesystem::path* dump_dir = nullptr);

// Fits per (k, t) from the records; the cutoff-regime heuristic applies for k >= 2.
std::vector<RateSummary> summarize(const std::vector<SweepRecord>& records, std::span<const int> orders,
                                   std::span<const double> times);

// records.csv (k prefixed to the ErrorRecord columns) and summary.txt.
void write_report(const ConvergenceReport& report, const std::filesystem::path& dir);

struct SqueezeResult {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t pairs = 0;
};

// Ratios (|p(t;z) - p(t;z')| + |x(t;z) - x(t;z')|) / |z - z'| over random pairs
// in K0 plus pairs along the z2 axis at decreasing separations down to 1e-6.
SqueezeResult nonsqueeze_check(const HamiltonianModel& model, const WkbData& data, double t, std::size_t n_pairs,
                               std::uint64_t seed = 20240601);

// L2 norm of the PDE residual of the single-beam study state at time t.
struct ResidualRecord {
  int k = 1;
  double epsilon = 0.0;
  double time = 0.0;
  double eta = kNoCutoff;
  double norm = 0.0;
  double richardson_defect = 0.0;
};
std::vector<ResidualRecord> single_beam_residuals(std::span<const int> orders, std::span<const double> epsilons,
                                                  double t, double eta, double points_per_wavelength = 8.0,
                                                  std::ostream* log = nullptr);

}  // namespace beamforge
