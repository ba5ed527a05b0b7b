#include "beamforge/field.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace beamforge {

static_assert(std::endian::native == std::endian::little, "GBF1 I/O assumes a little-endian host");

Grid::Grid(std::vector<int> d, std::vector<double> lo, std::vector<double> hi)
    : dims(std::move(d)), lower(std::move(lo)), upper(std::move(hi)) {
  if (dims.empty() || dims.size() != lower.size() || dims.size() != upper.size())
    throw GeometryError("grid: dims/lower/upper must be non-empty and of equal length");
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (dims[a] < 1) throw GeometryError("grid: dims must be positive");
    if (!(upper[a] > lower[a])) throw GeometryError("grid: box lengths must be positive");
  }
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int d : dims) s *= static_cast<std::size_t>(d);
  return s;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < ndim(); ++a) v *= spacing(a);
  return v;
}

bool Grid::same_as(const Grid& o) const { return dims == o.dims && lower == o.lower && upper == o.upper; }

SampledField::SampledField(const Grid& g, double t, double eps, std::string r)
    : grid(g), values(g.size()), time(t), epsilon(eps), role(std::move(r)) {}

FieldBundle make_bundle(const Grid& grid, double t, double eps, unsigned want) {
  FieldBundle f;
  f.u = SampledField(grid, t, eps, "u");
  if (want & want_time_derivative) f.u_t = SampledField(grid, t, eps, "u_t");
  if (want & want_gradient)
    for (int a = 0; a < grid.ndim(); ++a) f.grad.emplace_back(grid, t, eps, "grad_" + std::to_string(a));
  if (want & want_laplacian) f.lap = SampledField(grid, t, eps, "lap");
  return f;
}

void require_same_grid(const SampledField& a, const SampledField& b, const char* what) {
  if (!a.grid.same_as(b.grid)) throw GeometryError(std::string(what) + ": grid mismatch");
}

int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("GBF1: truncated file");
  return v;
}

}  // namespace

void write_gbf1(const SampledField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write("GBF1", 4);
  put<std::int64_t>(out, f.grid.ndim());
  for (int d : f.grid.dims) put<std::int64_t>(out, d);
  for (int a = 0; a < f.grid.ndim(); ++a) {
    put<double>(out, f.grid.lower[static_cast<std::size_t>(a)]);
    put<double>(out, f.grid.upper[static_cast<std::size_t>(a)]);
  }
  put<double>(out, f.time);
  put<double>(out, f.epsilon);
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(Complex)));
  if (!out) throw std::runtime_error("write failed for " + path);
}

SampledField read_gbf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GBF1", 4) != 0) throw std::runtime_error(path + ": not a GBF1 file");
  const auto nd = get<std::int64_t>(in);
  if (nd < 1 || nd > 3) throw std::runtime_error(path + ": bad dimension count");
  std::vector<int> dims;
  for (std::int64_t a = 0; a < nd; ++a) dims.push_back(static_cast<int>(get<std::int64_t>(in)));
  std::vector<double> lo, hi;
  for (std::int64_t a = 0; a < nd; ++a) {
    lo.push_back(get<double>(in));
    hi.push_back(get<double>(in));
  }
  SampledField f(Grid(dims, lo, hi), 0.0, 0.0, "u");
  f.time = get<double>(in);
  f.epsilon = get<double>(in);
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(Complex)));
  if (!in) throw std::runtime_error(path + ": truncated payload");
  return f;
}

void write_field_csv(const SampledField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const int nd = f.grid.ndim();
  for (int a = 0; a < nd; ++a) out << "y" << (a + 1) << ",";
  out << "re,im\n" << std::setprecision(17);
  std::vector<int> idx(static_cast<std::size_t>(nd), 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::size_t rem = i;
    for (int a = nd - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(f.grid.dims[static_cast<std::size_t>(a)]));
      rem /= static_cast<std::size_t>(f.grid.dims[static_cast<std::size_t>(a)]);
    }
    for (int a = 0; a < nd; ++a) out << f.grid.coord(a, idx[static_cast<std::size_t>(a)]) << ",";
    out << f.values[i].real() << "," << f.values[i].imag() << "\n";
  }
}

}  // namespace beamforge
