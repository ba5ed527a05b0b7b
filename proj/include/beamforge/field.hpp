// Uniform periodic grids, complex sampled fields, and the GBF1 dump format.
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamforge {

using Complex = std::complex<double>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nodes sit at lower + i*h for i = 0..dims-1 with h = (upper - lower)/dims,
// i.e. the upper edge is the periodic image of the lower one.
struct Grid {
  std::vector<int> dims;
  std::vector<double> lower;
  std::vector<double> upper;

  Grid() = default;
  Grid(std::vector<int> dims, std::vector<double> lower, std::vector<double> upper);

  int ndim() const { return static_cast<int>(dims.size()); }
  std::size_t size() const;
  double length(int axis) const { return upper[static_cast<std::size_t>(axis)] - lower[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return length(axis) / dims[static_cast<std::size_t>(axis)]; }
  double cell_volume() const;
  double coord(int axis, int i) const { return lower[static_cast<std::size_t>(axis)] + i * spacing(axis); }
  bool same_as(const Grid& other) const;
};

struct SampledField {
  Grid grid;
  std::vector<Complex> values;  // row-major, axis 0 slowest
  double time = 0.0;
  double epsilon = 0.0;
  std::string role = "u";

  SampledField() = default;
  SampledField(const Grid& g, double time, double epsilon, std::string role);

  std::size_t size() const { return values.size(); }
  Complex& operator[](std::size_t i) { return values[i]; }
  const Complex& operator[](std::size_t i) const { return values[i]; }
};

enum FieldWant : unsigned {
  want_value = 1u,
  want_time_derivative = 2u,
  want_gradient = 4u,
  want_laplacian = 8u,
};

struct FieldBundle {
  SampledField u;
  SampledField u_t;                // empty unless requested
  std::vector<SampledField> grad;  // empty unless requested
  SampledField lap;                // empty unless requested
};

FieldBundle make_bundle(const Grid& grid, double t, double eps, unsigned want);

void require_same_grid(const SampledField& a, const SampledField& b, const char* what);

// Smallest power of two >= n.
int next_power_of_two(int n);

void write_gbf1(const SampledField& f, const std::string& path);
SampledField read_gbf1(const std::string& path);
// One row per node: coordinates, then re, im.
void write_field_csv(const SampledField& f, const std::string& path);

}  // namespace beamforge
