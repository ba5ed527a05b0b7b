#include "beamforge/superposition.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>

namespace beamforge {

namespace {

bool all_zero(const BeamState& s, double threshold) {
  for (const auto& a : s.amps)
    for (auto c : a.coeffs())
      if (std::abs(c) >= threshold) return false;
  return true;
}

}  // namespace

double BeamFamily::weight_sum() const {
  double s = 0.0;
  for (double w : z_weights) s += w;
  return s;
}

double node_spacing(double eps, double eta, double factor) {
  if (!(eps > 0.0)) throw std::domain_error("epsilon must be positive");
  double h = factor * std::sqrt(eps);
  if (std::isfinite(eta)) h = std::min(h, 0.5 * eta);
  return h;
}

void midpoint_nodes(const Box& K0, double h, std::vector<std::vector<double>>& nodes, std::vector<double>& weights) {
  const int n = K0.dim();
  if (n < 1 || n > 2) throw GeometryError("K0 must be 1D or 2D");
  if (!(h > 0.0)) throw std::domain_error("node spacing must be positive");
  int counts[2] = {1, 1};
  double step[2] = {0.0, 0.0};
  double cell = 1.0;
  for (int a = 0; a < n; ++a) {
    const double L = K0.upper[static_cast<std::size_t>(a)] - K0.lower[static_cast<std::size_t>(a)];
    if (!(L > 0.0)) throw GeometryError("K0 has an empty side");
    counts[a] = static_cast<int>(std::ceil(L / h - 1e-9));
    step[a] = L / counts[a];
    cell *= step[a];
  }
  nodes.clear();
  weights.clear();
  for (int i = 0; i < counts[0]; ++i)
    for (int j = 0; j < counts[1]; ++j) {
      std::vector<double> z{K0.lower[0] + (i + 0.5) * step[0]};
      if (n == 2) z.push_back(K0.lower[1] + (j + 0.5) * step[1]);
      nodes.push_back(std::move(z));
      weights.push_back(cell);
    }
}

BeamFamily build_family(const WkbData& data, std::shared_ptr<const HamiltonianModel> model, int k, double eps,
                        double eta, std::span<const double> times, const FamilyOptions& opts) {
  BeamFamily f;
  f.k = k;
  f.eps = eps;
  f.eta = eta;
  f.times.assign(times.begin(), times.end());
  const double rule = node_spacing(eps, eta, opts.hz_factor);
  if (opts.h_z > 0.0) {
    double limit = 0.5 * std::sqrt(eps);
    if (std::isfinite(eta)) limit = std::min(limit, 0.5 * eta);
    if (opts.h_z > limit * (1 + 1e-12))
      throw ResolutionError("node spacing " + std::to_string(opts.h_z) + " exceeds min(sqrt(eps)/2, eta/2)");
    f.h_z = opts.h_z;
  } else {
    f.h_z = rule;
  }
  midpoint_nodes(data.K0, f.h_z, f.z_nodes, f.z_weights);

  // initial states, in node order then mode order
  const std::size_t N = f.z_nodes.size();
  std::vector<std::vector<BeamState>> init(N);
  for (std::size_t i = 0; i < N; ++i) init[i] = build_initial_beams(data, *model, f.z_nodes[i], k);
  std::vector<std::pair<std::size_t, int>> live;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t m = 0; m < init[i].size(); ++m) {
      if (all_zero(init[i][m], opts.prune_threshold)) {
        ++f.pruned;
        continue;
      }
      live.emplace_back(i, static_cast<int>(m));
    }

  f.trajectories.resize(live.size());
  std::vector<std::exception_ptr> errors(live.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < live.size(); b = next++) {
      try {
        f.trajectories[b] = propagate(model, init[live[b].first][static_cast<std::size_t>(live[b].second)], times,
                                      eta, opts.propagate);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<bool> seen;
  for (const auto& [node, mode] : live) {
    f.node_of.push_back(node);
    f.mode_of.push_back(mode);
    if (static_cast<std::size_t>(mode) >= seen.size()) seen.resize(static_cast<std::size_t>(mode) + 1, false);
    seen[static_cast<std::size_t>(mode)] = true;
  }
  for (std::size_t m = 0; m < seen.size(); ++m)
    if (seen[m]) f.modes.push_back(static_cast<int>(m));
  return f;
}

FieldBundle superpose(const BeamFamily& family, double t, const Grid& grid, unsigned want, const EvalOptions& opts) {
  const int n = grid.ndim();
  FieldBundle out = make_bundle(grid, t, family.eps, want);
  std::vector<BeamSnapshot> snaps;
  snaps.reserve(family.trajectories.size());
  for (const auto& tr : family.trajectories) {
    const std::size_t i = tr.sample_index(t);
    snaps.push_back(make_snapshot(tr.samples[i], tr.rates[i], tr.eta));
  }
  std::vector<const BeamSnapshot*> ptrs;
  std::vector<double> w;
  for (std::size_t b = 0; b < snaps.size(); ++b) {
    ptrs.push_back(&snaps[b]);
    w.push_back(family.z_weights[family.node_of[b]]);
  }
  const double scale = std::pow(2.0 * std::numbers::pi * family.eps, -0.5 * n);
  accumulate_beams(ptrs, w, family.eps, scale, want, out, opts);
  return out;
}

}  // namespace beamforge
