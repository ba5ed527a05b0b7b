#include "beamforge/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/numeric/odeint.hpp>

namespace beamforge {

namespace odeint = boost::numeric::odeint;

namespace {

using Stepper = odeint::runge_kutta_dopri5<OdeState>;

struct SystemRef {
  const OdeRhs* rhs;
  void operator()(const OdeState& y, OdeState& dydt, double t) const { (*rhs)(y, dydt, t); }
};

}  // namespace

OdeStats integrate_samples(const OdeRhs& rhs, OdeState y, std::span<const double> times, const OdeOptions& opts,
                           const StepHook& on_step, const SampleHook& on_sample) {
  OdeStats stats;
  if (times.empty()) return stats;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("sample times must be strictly increasing");

  auto stepper = odeint::make_controlled(opts.atol, opts.rtol, Stepper());
  SystemRef sys{&rhs};
  double t = times[0];
  double dt = opts.initial_step;
  OdeState dydt(y.size());
  rhs(y, dydt, t);
  if (on_sample) on_sample(t, y);

  for (std::size_t k = 1; k < times.size(); ++k) {
    const double target = times[k];
    while (t < target) {
      const double remaining = target - t;
      const bool clamped = dt >= remaining;
      double h = clamped ? remaining : dt;
      const double h_before = h;
      if (stepper.try_step(sys, y, dydt, t, h) == odeint::success) {
        ++stats.accepted;
        if (clamped && h_before == remaining) t = target;  // avoid round-off short of the sample
        if (on_step) {
          on_step(t, y);
          rhs(y, dydt, t);
        }
        dt = clamped ? std::max(dt, h) : h;
      } else {
        ++stats.rejected;
        dt = h;
      }
      if (dt < opts.min_step * std::max(1.0, std::abs(t)))
        throw StiffnessError("step size underflow at t = " + std::to_string(t));
      if (stats.accepted + stats.rejected > opts.max_steps)
        throw StiffnessError("step budget exhausted at t = " + std::to_string(t));
    }
    if (on_sample) on_sample(t, y);
  }
  return stats;
}

OdeState dopri5_step(const OdeRhs& rhs, const OdeState& y, double t, double dt) {
  Stepper stepper;
  OdeState out = y;
  stepper.do_step(SystemRef{&rhs}, out, t, dt);
  return out;
}

}  // namespace beamforge
