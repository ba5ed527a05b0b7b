// Truncated multivariate Taylor polynomials ("jets") over complex coefficients.
//
// A Jet in n variables of maximal degree K stores the monomial coefficients
// c_beta of sum_{|beta| <= K} c_beta y^beta. Coefficients are *monomial*
// coefficients, i.e. the 1/beta! factor of a Taylor expansion is already
// folded in: c_beta = (d^beta f)(0) / beta!. Use from_derivatives() and
// to_derivatives() to convert.
//
// Storage is dense in graded-lexicographic order: all multi-indices of total
// degree d precede those of degree d+1, and within one degree the order is
// lexicographically descending in (beta_0, beta_1, ...). The position of a
// multi-index depends only on the number of variables, never on K, so a jet of
// degree K' < K is a prefix of the same jet stored at degree K.

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamforge {

using Complex = std::complex<double>;

inline constexpr int kMaxJetVars = 4;
inline constexpr int kMaxJetDegree = 8;

using MultiIndex = std::array<int, kMaxJetVars>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Number of multi-indices in `nvars` variables with total degree <= degree.
std::size_t jet_size(int nvars, int degree);

/// Index tables for one (nvars, degree) pair. Instances are created once and
/// shared; they are immutable and safe to use from any thread.
class JetLayout {
 public:
  struct ProductTerm {
    std::uint32_t lhs, rhs, out;
  };
  struct DerivativeTerm {
    std::uint32_t from, to;
    double factor;
  };

  static const JetLayout& get(int nvars, int degree);

  int nvars() const { return nvars_; }
  int degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }

  const MultiIndex& exponent(std::size_t i) const { return exponents_[i]; }
  int order_of(std::size_t i) const { return orders_[i]; }
  std::size_t index(const MultiIndex& beta) const;

  /// Position where the block of total degree `d` begins.
  std::size_t degree_begin(int d) const { return jet_size_before(d); }
  std::size_t degree_end(int d) const { return jet_size_before(d + 1); }

  // Sorted by output index; terms producing index i are
  // product_terms()[output_begin(i) .. output_begin(i + 1)).
  std::span<const ProductTerm> product_terms() const { return products_; }
  std::size_t output_begin(std::size_t i) const { return output_offsets_[i]; }
  std::span<const DerivativeTerm> derivative_terms(int axis) const {
    return derivatives_[static_cast<std::size_t>(axis)];
  }

  // For i > 0: monomial(i) = monomial(parent(i)) * y[parent_var(i)].
  std::uint32_t parent(std::size_t i) const { return parents_[i]; }
  int parent_var(std::size_t i) const { return parent_vars_[i]; }

 private:
  JetLayout(int nvars, int degree);
  std::size_t jet_size_before(int d) const;

  int nvars_;
  int degree_;
  std::vector<MultiIndex> exponents_;
  std::vector<int> orders_;
  std::vector<std::int32_t> lookup_;  // packed exponent -> index
  std::vector<ProductTerm> products_;
  std::vector<std::size_t> output_offsets_;
  std::vector<std::vector<DerivativeTerm>> derivatives_;
  std::vector<std::uint32_t> parents_;
  std::vector<int> parent_vars_;
};

class Jet {
 public:
  Jet() = default;
  Jet(int nvars, int degree);

  static Jet constant(int nvars, int degree, Complex value);
  /// The jet `offset + y_axis`.
  static Jet variable(int nvars, int degree, int axis, Complex offset = 0.0);

  int nvars() const { return layout_ ? layout_->nvars() : 0; }
  int degree() const { return layout_ ? layout_->degree() : -1; }
  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return layout_ == nullptr; }
  const JetLayout& layout() const;

  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }
  Complex& at(const MultiIndex& beta) { return coeffs_[layout().index(beta)]; }
  Complex at(const MultiIndex& beta) const;

  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  Complex constant_term() const { return coeffs_.empty() ? Complex{} : coeffs_[0]; }

  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(Complex s);

  /// Same polynomial stored at another maximal degree (truncates or pads).
  Jet with_degree(int degree) const;

  double max_abs() const;
  bool is_zero() const;

 private:
  const JetLayout* layout_ = nullptr;
  std::vector<Complex> coeffs_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator-(Jet a);
Jet operator*(Complex s, Jet a);
Jet operator*(const Jet& a, const Jet& b);

/// Degree-truncated product. Both operands must share nvars and degree.
Jet jet_product(const Jet& a, const Jet& b);

/// sum_beta c_beta delta^beta.
Complex jet_eval(const Jet& j, std::span<const double> delta);

/// d/dy_axis, stored at the same degree (the top block becomes zero).
Jet jet_partial(const Jet& j, int axis);

/// outer(inner_0(y), ..., inner_{m-1}(y)) truncated at the inners' degree.
/// `outer` has m variables. The result is the truncated Taylor polynomial of
/// the composite only if every inner jet has zero constant term; otherwise it
/// is the truncation of the polynomial composite.
Jet compose(const Jet& outer, std::span<const Jet> inner);

/// sum_m series[m] (f - f(0))^m.
Jet apply_series(const Jet& f, std::span<const Complex> series);

/// Square root via the coefficient recurrence s*s = f, seeded with the
/// principal root of f(0) != 0.
Jet jet_sqrt(const Jet& f);
Jet jet_reciprocal(const Jet& f);
Jet jet_divide(const Jet& num, const Jet& den);
Jet jet_exp(const Jet& f);

/// Multiply by the monomial coeff * y^beta (exact shift, truncated).
Jet multiply_monomial(const Jet& j, const MultiIndex& beta, Complex coeff = 1.0);

/// Re-express a jet in `new_nvars` variables: old variable i becomes new
/// variable var_map[i]. Degree is kept unless `new_degree` >= 0.
Jet embed(const Jet& j, int new_nvars, std::span<const int> var_map, int new_degree = -1);

/// Coefficient slice along one variable: returns the jet (in the remaining
/// nvars-1 variables, degree `degree - power` unless given) of the coefficient
/// of y_axis^power.
Jet slice_power(const Jet& j, int axis, int power);

/// Inverse of slice_power: builds y_axis^power * part as a jet with
/// `nvars` = part.nvars()+1 variables, inserting the new variable at `axis`.
Jet lift_power(const Jet& part, int axis, int power, int degree);

/// Monomial-basis jet from derivative values d^beta f (layout order).
Jet from_derivatives(int nvars, int degree, std::span<const Complex> derivatives);
std::vector<Complex> to_derivatives(const Jet& j);

double factorial(int n);
double multi_factorial(const MultiIndex& beta, int nvars);

/// Evaluates every monomial y^beta of a layout at a point; the basis can be
/// reused to evaluate many jets sharing the point.
class MonomialBasis {
 public:
  MonomialBasis(int nvars, int degree);
  void set_point(std::span<const double> delta);
  std::span<const double> values() const { return values_; }
  /// Dot product with a jet of degree <= the basis degree.
  Complex apply(const Jet& j) const;

 private:
  const JetLayout* layout_;
  std::vector<double> values_;
};

}  // namespace beamforge
