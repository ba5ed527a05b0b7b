#include "beamforge/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace beamforge {

namespace {

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

void check_nvars_degree(int nvars, int degree) {
  if (nvars < 1 || nvars > kMaxJetVars)
    throw ShapeError("jet: nvars must be in [1, " + std::to_string(kMaxJetVars) + "], got " +
                     std::to_string(nvars));
  if (degree < 0 || degree > kMaxJetDegree)
    throw ShapeError("jet: degree must be in [0, " + std::to_string(kMaxJetDegree) + "], got " +
                     std::to_string(degree));
}

// All multi-indices of total degree d in lexicographically descending order.
void append_degree_block(int nvars, int d, std::vector<MultiIndex>& out) {
  MultiIndex beta{};
  // recursive fill: variable v receives values from remaining down to 0
  auto rec = [&](auto&& self, int v, int remaining) -> void {
    if (v == nvars - 1) {
      beta[static_cast<std::size_t>(v)] = remaining;
      out.push_back(beta);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      beta[static_cast<std::size_t>(v)] = e;
      self(self, v + 1, remaining - e);
    }
  };
  rec(rec, 0, d);
}

void require_same_shape(const Jet& a, const Jet& b, const char* op) {
  if (a.empty() || b.empty()) throw ShapeError(std::string(op) + ": empty jet");
  if (a.nvars() != b.nvars() || a.degree() != b.degree())
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.nvars()) + "," +
                     std::to_string(a.degree()) + ") vs (" + std::to_string(b.nvars()) + "," +
                     std::to_string(b.degree()) + ")");
}

}  // namespace

std::size_t jet_size(int nvars, int degree) {
  if (degree < 0) return 0;
  return binomial(nvars + degree, degree);
}

// ---------------------------------------------------------------------------
// JetLayout

const JetLayout& JetLayout::get(int nvars, int degree) {
  check_nvars_degree(nvars, degree);
  thread_local std::array<std::array<const JetLayout*, kMaxJetDegree + 1>, kMaxJetVars + 1> cache{};
  const JetLayout*& hit = cache[static_cast<std::size_t>(nvars)][static_cast<std::size_t>(degree)];
  if (hit) return *hit;
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;
  std::lock_guard lock(mutex);
  auto& slot = registry[{nvars, degree}];
  if (!slot) slot.reset(new JetLayout(nvars, degree));
  hit = slot.get();
  return *slot;
}

JetLayout::JetLayout(int nvars, int degree) : nvars_(nvars), degree_(degree) {
  for (int d = 0; d <= degree; ++d) append_degree_block(nvars, d, exponents_);
  const std::size_t n = exponents_.size();
  orders_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int s = 0;
    for (int v = 0; v < nvars; ++v) s += exponents_[i][static_cast<std::size_t>(v)];
    orders_[i] = s;
  }

  // dense lookup on the packed exponent, base (degree+1)
  std::size_t lookup_size = 1;
  for (int v = 0; v < nvars; ++v) lookup_size *= static_cast<std::size_t>(degree + 1);
  lookup_.assign(lookup_size, -1);
  auto pack = [&](const MultiIndex& b) {
    std::size_t key = 0;
    for (int v = 0; v < nvars; ++v) key = key * static_cast<std::size_t>(degree + 1) + static_cast<std::size_t>(b[static_cast<std::size_t>(v)]);
    return key;
  };
  for (std::size_t i = 0; i < n; ++i) lookup_[pack(exponents_[i])] = static_cast<std::int32_t>(i);

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (orders_[a] + orders_[b] > degree) continue;
      MultiIndex s{};
      for (int v = 0; v < nvars; ++v) s[static_cast<std::size_t>(v)] = exponents_[a][static_cast<std::size_t>(v)] + exponents_[b][static_cast<std::size_t>(v)];
      products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                           static_cast<std::uint32_t>(lookup_[pack(s)])});
    }
  }

  std::stable_sort(products_.begin(), products_.end(),
                   [](const ProductTerm& x, const ProductTerm& y) { return x.out < y.out; });
  output_offsets_.assign(n + 1, 0);
  for (const auto& t : products_) ++output_offsets_[t.out + 1];
  for (std::size_t i = 0; i < n; ++i) output_offsets_[i + 1] += output_offsets_[i];

  derivatives_.resize(static_cast<std::size_t>(nvars));
  for (int axis = 0; axis < nvars; ++axis) {
    for (std::size_t i = 0; i < n; ++i) {
      const int e = exponents_[i][static_cast<std::size_t>(axis)];
      if (e == 0) continue;
      MultiIndex lower = exponents_[i];
      lower[static_cast<std::size_t>(axis)] -= 1;
      derivatives_[static_cast<std::size_t>(axis)].push_back(
          {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(lookup_[pack(lower)]), static_cast<double>(e)});
    }
  }

  parents_.assign(n, 0);
  parent_vars_.assign(n, -1);
  for (std::size_t i = 1; i < n; ++i) {
    for (int v = 0; v < nvars; ++v) {
      if (exponents_[i][static_cast<std::size_t>(v)] > 0) {
        MultiIndex lower = exponents_[i];
        lower[static_cast<std::size_t>(v)] -= 1;
        parents_[i] = static_cast<std::uint32_t>(lookup_[pack(lower)]);
        parent_vars_[i] = v;
        break;
      }
    }
  }
}

std::size_t JetLayout::jet_size_before(int d) const { return jet_size(nvars_, d - 1); }

std::size_t JetLayout::index(const MultiIndex& beta) const {
  std::size_t key = 0;
  int total = 0;
  for (int v = 0; v < nvars_; ++v) {
    const int e = beta[static_cast<std::size_t>(v)];
    if (e < 0) throw ShapeError("jet: negative exponent");
    total += e;
    key = key * static_cast<std::size_t>(degree_ + 1) + static_cast<std::size_t>(e);
  }
  for (int v = nvars_; v < kMaxJetVars; ++v)
    if (beta[static_cast<std::size_t>(v)] != 0) throw ShapeError("jet: exponent on unused variable");
  if (total > degree_) throw ShapeError("jet: multi-index degree exceeds jet degree");
  return static_cast<std::size_t>(lookup_[key]);
}

// ---------------------------------------------------------------------------
// Jet

Jet::Jet(int nvars, int degree)
    : layout_(&JetLayout::get(nvars, degree)), coeffs_(layout_->size(), Complex{}) {}

Jet Jet::constant(int nvars, int degree, Complex value) {
  Jet j(nvars, degree);
  j.coeffs_[0] = value;
  return j;
}

Jet Jet::variable(int nvars, int degree, int axis, Complex offset) {
  if (axis < 0 || axis >= nvars) throw ShapeError("jet: variable axis out of range");
  Jet j(nvars, degree);
  j.coeffs_[0] = offset;
  if (degree >= 1) {
    MultiIndex e{};
    e[static_cast<std::size_t>(axis)] = 1;
    j.at(e) = 1.0;
  }
  return j;
}

const JetLayout& Jet::layout() const {
  if (!layout_) throw ShapeError("jet: empty jet has no layout");
  return *layout_;
}

Complex Jet::at(const MultiIndex& beta) const {
  int total = 0;
  for (int v = 0; v < nvars(); ++v) total += beta[static_cast<std::size_t>(v)];
  if (total > degree()) return {};
  return coeffs_[layout().index(beta)];
}

Jet& Jet::operator+=(const Jet& other) {
  require_same_shape(*this, other, "jet +");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  require_same_shape(*this, other, "jet -");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

Jet& Jet::operator*=(Complex s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Jet Jet::with_degree(int degree) const {
  Jet out(nvars(), degree);
  const std::size_t n = std::min(out.size(), size());
  std::copy_n(coeffs_.begin(), n, out.coeffs_.begin());
  return out;
}

double Jet::max_abs() const {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

bool Jet::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) { return c == Complex{}; });
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator-(Jet a) { return a *= -1.0; }
Jet operator*(Complex s, Jet a) { return a *= s; }
Jet operator*(const Jet& a, const Jet& b) { return jet_product(a, b); }

Jet jet_product(const Jet& a, const Jet& b) {
  require_same_shape(a, b, "jet_product");
  auto only_constant = [](const Jet& j) {
    for (std::size_t i = 1; i < j.size(); ++i)
      if (j[i] != Complex{}) return false;
    return true;
  };
  if (only_constant(b)) {
    Jet out = a;
    out *= b[0];
    return out;
  }
  if (only_constant(a)) {
    Jet out = b;
    out *= a[0];
    return out;
  }
  const auto& lay = a.layout();
  Jet out(a.nvars(), a.degree());
  const auto terms = lay.product_terms();
  const Complex* pa = a.coeffs().data();
  const Complex* pb = b.coeffs().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double re = 0.0, im = 0.0;
    for (std::size_t q = lay.output_begin(i); q < lay.output_begin(i + 1); ++q) {
      const Complex x = pa[terms[q].lhs], y = pb[terms[q].rhs];
      re += x.real() * y.real() - x.imag() * y.imag();
      im += x.real() * y.imag() + x.imag() * y.real();
    }
    out[i] = Complex(re, im);
  }
  return out;
}

Complex jet_eval(const Jet& j, std::span<const double> delta) {
  if (j.empty()) throw ShapeError("jet_eval: empty jet");
  if (static_cast<int>(delta.size()) != j.nvars())
    throw ShapeError("jet_eval: point has " + std::to_string(delta.size()) + " components, jet has " +
                     std::to_string(j.nvars()) + " variables");
  MonomialBasis basis(j.nvars(), j.degree());
  basis.set_point(delta);
  return basis.apply(j);
}

Jet jet_partial(const Jet& j, int axis) {
  if (j.empty()) throw ShapeError("jet_partial: empty jet");
  if (axis < 0 || axis >= j.nvars()) throw ShapeError("jet_partial: axis out of range");
  Jet out(j.nvars(), j.degree());
  for (const auto& t : j.layout().derivative_terms(axis)) out[t.to] += t.factor * j[t.from];
  return out;
}

Jet multiply_monomial(const Jet& j, const MultiIndex& beta, Complex coeff) {
  const auto& lay = j.layout();
  Jet out(j.nvars(), j.degree());
  int shift = 0;
  for (int v = 0; v < j.nvars(); ++v) shift += beta[static_cast<std::size_t>(v)];
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (lay.order_of(i) + shift > lay.degree()) break;
    if (j[i] == Complex{}) continue;
    MultiIndex s = lay.exponent(i);
    for (int v = 0; v < j.nvars(); ++v) s[static_cast<std::size_t>(v)] += beta[static_cast<std::size_t>(v)];
    out[lay.index(s)] += coeff * j[i];
  }
  return out;
}

Jet compose(const Jet& outer, std::span<const Jet> inner) {
  if (outer.empty()) throw ShapeError("compose: empty outer jet");
  if (static_cast<int>(inner.size()) != outer.nvars())
    throw ShapeError("compose: outer has " + std::to_string(outer.nvars()) + " variables but " +
                     std::to_string(inner.size()) + " inner jets were given");
  const int nv = inner[0].nvars();
  const int deg = inner[0].degree();
  for (const auto& in : inner) require_same_shape(inner[0], in, "compose");

  const int m = outer.nvars();
  // powers[v][e] = inner_v^e, built lazily up to the largest exponent used
  std::vector<std::vector<Jet>> powers(static_cast<std::size_t>(m));
  auto power = [&](int v, int e) -> const Jet& {
    auto& pv = powers[static_cast<std::size_t>(v)];
    if (pv.empty()) pv.push_back(Jet::constant(nv, deg, 1.0));
    while (static_cast<int>(pv.size()) <= e) pv.push_back(jet_product(pv.back(), inner[static_cast<std::size_t>(v)]));
    return pv[static_cast<std::size_t>(e)];
  };

  const auto& lay = outer.layout();
  Jet out(nv, deg);
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const Complex c = outer[i];
    if (c == Complex{}) continue;
    const MultiIndex& g = lay.exponent(i);
    Jet term;
    bool first = true;
    for (int v = 0; v < m; ++v) {
      const int e = g[static_cast<std::size_t>(v)];
      if (e == 0) continue;
      if (first) {
        term = power(v, e);
        first = false;
      } else {
        term = jet_product(term, power(v, e));
      }
    }
    if (first) {
      out[0] += c;
    } else {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * term[k];
    }
  }
  return out;
}

Jet apply_series(const Jet& f, std::span<const Complex> series) {
  Jet g = f;
  g[0] = 0.0;
  Jet acc = Jet::constant(f.nvars(), f.degree(), series.empty() ? Complex{} : series.back());
  for (int m = static_cast<int>(series.size()) - 2; m >= 0; --m) {
    acc = jet_product(acc, g);
    acc[0] += series[static_cast<std::size_t>(m)];
  }
  return acc;
}

Jet jet_sqrt(const Jet& f) {
  if (f.empty()) throw ShapeError("jet_sqrt: empty jet");
  const Complex f0 = f[0];
  if (f0 == Complex{}) throw std::domain_error("jet_sqrt: zero constant term");
  const auto& lay = f.layout();
  Jet s(f.nvars(), f.degree());
  s[0] = std::sqrt(f0);
  const Complex inv2s0 = 1.0 / (2.0 * s[0]);
  // coefficient recurrence in graded order: f_beta = sum_{a+b=beta} s_a s_b
  const auto terms = lay.product_terms();
  for (std::size_t i = 1; i < f.size(); ++i) {
    double re = 0.0, im = 0.0;
    for (std::size_t q = lay.output_begin(i); q < lay.output_begin(i + 1); ++q) {
      const auto& t = terms[q];
      if (t.lhs == 0 || t.rhs == 0) continue;
      const Complex x = s[t.lhs], y = s[t.rhs];
      re += x.real() * y.real() - x.imag() * y.imag();
      im += x.real() * y.imag() + x.imag() * y.real();
    }
    s[i] = (f[i] - Complex(re, im)) * inv2s0;
  }
  return s;
}

Jet jet_reciprocal(const Jet& f) {
  const Complex f0 = f.constant_term();
  if (f0 == Complex{}) throw std::domain_error("jet_reciprocal: zero constant term");
  // 1/(f0 + g) = sum_m (-1)^m g^m / f0^(m+1)
  std::vector<Complex> series(static_cast<std::size_t>(f.degree()) + 1);
  Complex c = 1.0 / f0;
  for (auto& s : series) {
    s = c;
    c *= -1.0 / f0;
  }
  return apply_series(f, series);
}

Jet jet_divide(const Jet& num, const Jet& den) { return jet_product(num, jet_reciprocal(den)); }

Jet jet_exp(const Jet& f) {
  std::vector<Complex> series(static_cast<std::size_t>(f.degree()) + 1);
  const Complex e0 = std::exp(f.constant_term());
  for (std::size_t m = 0; m < series.size(); ++m) series[m] = e0 / factorial(static_cast<int>(m));
  return apply_series(f, series);
}

Jet embed(const Jet& j, int new_nvars, std::span<const int> var_map, int new_degree) {
  if (static_cast<int>(var_map.size()) != j.nvars()) throw ShapeError("embed: var_map size mismatch");
  const int deg = new_degree >= 0 ? new_degree : j.degree();
  Jet out(new_nvars, deg);
  const auto& lay = j.layout();
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (lay.order_of(i) > deg) break;
    if (j[i] == Complex{}) continue;
    MultiIndex b{};
    for (int v = 0; v < j.nvars(); ++v) {
      const int target = var_map[static_cast<std::size_t>(v)];
      if (target < 0 || target >= new_nvars) throw ShapeError("embed: target variable out of range");
      b[static_cast<std::size_t>(target)] += lay.exponent(i)[static_cast<std::size_t>(v)];
    }
    out.at(b) += j[i];
  }
  return out;
}

Jet slice_power(const Jet& j, int axis, int power) {
  if (j.nvars() < 2) throw ShapeError("slice_power: need at least two variables");
  if (axis < 0 || axis >= j.nvars()) throw ShapeError("slice_power: axis out of range");
  const int deg = std::max(0, j.degree() - power);
  Jet out(j.nvars() - 1, deg);
  const auto& lay = j.layout();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const MultiIndex& b = lay.exponent(i);
    if (b[static_cast<std::size_t>(axis)] != power) continue;
    MultiIndex r{};
    for (int v = 0, w = 0; v < j.nvars(); ++v) {
      if (v == axis) continue;
      r[static_cast<std::size_t>(w++)] = b[static_cast<std::size_t>(v)];
    }
    out.at(r) = j[i];
  }
  return out;
}

Jet lift_power(const Jet& part, int axis, int power, int degree) {
  const int nv = part.nvars() + 1;
  Jet out(nv, degree);
  const auto& lay = part.layout();
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (lay.order_of(i) + power > degree) break;
    MultiIndex b{};
    for (int v = 0, w = 0; v < nv; ++v) {
      b[static_cast<std::size_t>(v)] = (v == axis) ? power : lay.exponent(i)[static_cast<std::size_t>(w++)];
    }
    out.at(b) = part[i];
  }
  return out;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double multi_factorial(const MultiIndex& beta, int nvars) {
  double r = 1.0;
  for (int v = 0; v < nvars; ++v) r *= factorial(beta[static_cast<std::size_t>(v)]);
  return r;
}

Jet from_derivatives(int nvars, int degree, std::span<const Complex> derivatives) {
  Jet out(nvars, degree);
  if (derivatives.size() != out.size()) throw ShapeError("from_derivatives: wrong number of values");
  const auto& lay = out.layout();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = derivatives[i] / multi_factorial(lay.exponent(i), nvars);
  return out;
}

std::vector<Complex> to_derivatives(const Jet& j) {
  std::vector<Complex> out(j.size());
  const auto& lay = j.layout();
  for (std::size_t i = 0; i < j.size(); ++i) out[i] = j[i] * multi_factorial(lay.exponent(i), j.nvars());
  return out;
}

// ---------------------------------------------------------------------------
// MonomialBasis

MonomialBasis::MonomialBasis(int nvars, int degree)
    : layout_(&JetLayout::get(nvars, degree)), values_(layout_->size(), 0.0) {
  values_[0] = 1.0;
}

void MonomialBasis::set_point(std::span<const double> delta) {
  const std::size_t n = values_.size();
  values_[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i)
    values_[i] = values_[layout_->parent(i)] * delta[static_cast<std::size_t>(layout_->parent_var(i))];
}

Complex MonomialBasis::apply(const Jet& j) const {
  const std::size_t n = std::min(j.size(), values_.size());
  double re = 0.0, im = 0.0;
  const auto c = j.coeffs();
  for (std::size_t i = 0; i < n; ++i) {
    re += c[i].real() * values_[i];
    im += c[i].imag() * values_[i];
  }
  return {re, im};
}

}  // namespace beamforge
