// Spectral reference solutions on periodic boxes.
#pragma once

#include <vector>

#include "beamforge/field.hpp"

namespace beamforge {

// Angular wavenumbers 2 pi m / L in FFT order, m = 0..N/2-1, -N/2..-1.
std::vector<double> wavenumbers(int n, double length);

// Throws GeometryError unless every dimension is a power of two.
void require_power_of_two(const Grid& g);

// In-place unnormalized forward (sign -1) and normalized inverse transforms.
void fft_forward(const Grid& g, std::vector<Complex>& data);
void fft_inverse(const Grid& g, std::vector<Complex>& data);

// Gradient components by Fourier multiplication.
std::vector<SampledField> spectral_gradient(const SampledField& u);

struct WaveSolution {
  SampledField u;
  SampledField u_t;
};

// Exact evolution of u_tt = c^2 Lap u for Fourier-band-limited data.
WaveSolution wave_exact_constant_c(const SampledField& u0, const SampledField& u1, double c, double t);

// Smallest step count with t / n <= eps * h_min.
int split_step_count(const Grid& g, double eps, double t);

// Strang splitting for -i eps u_t - eps^2/2 Lap u + V u = 0: half potential,
// exact kinetic step, half potential. V is sampled on the same grid (real part used).
SampledField schrodinger_split_step(const SampledField& u0, const SampledField& V, double eps, double t,
                                    int n_steps);

}  // namespace beamforge
