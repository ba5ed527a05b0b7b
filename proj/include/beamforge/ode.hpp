// Adaptive Dormand-Prince (4,5) integration that lands exactly on requested
// sample times. Stepping and error control come from Boost.Odeint; this layer
// adds sample-time clamping, per-step hooks and underflow detection.
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace beamforge {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState& y, OdeState& dydt, double t)>;

class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 1e-2;
  double min_step = 1e-13;  // relative to max(1, |t|)
  long max_steps = 2'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
};

// Called after every accepted step; may modify the state (projection) or throw.
using StepHook = std::function<void(double t, OdeState& y)>;
// Called once per sample time, including times[0].
using SampleHook = std::function<void(double t, const OdeState& y)>;

OdeStats integrate_samples(const OdeRhs& rhs, OdeState y, std::span<const double> times, const OdeOptions& opts,
                           const StepHook& on_step, const SampleHook& on_sample);

// One explicit Dormand-Prince step of size dt (no error control).
OdeState dopri5_step(const OdeRhs& rhs, const OdeState& y, double t, double dt);

}  // namespace beamforge
