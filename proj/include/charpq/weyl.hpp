#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "charpq/field.hpp"

namespace charpq {

/// Exponent vector (a_1..a_n, b_1..b_n, m) of x^a y^b hbar^m.
using Exponents = std::vector<std::uint16_t>;

/// Parameters shared by all elements of one truncated Weyl algebra W_{n,hbar}.
struct WeylSpace {
  Field field;
  unsigned n;
  unsigned truncation;  // M: monomials of filtration degree >= M are zero

  WeylSpace(std::uint32_t p, unsigned n, unsigned truncation);
  std::uint32_t p() const noexcept { return field.p(); }
  bool operator==(const WeylSpace& o) const noexcept {
    return field == o.field && n == o.n && truncation == o.truncation;
  }

  /// |a| + |b| + 2m.
  unsigned degree(const Exponents& e) const noexcept;
  Exponents unit_exponents() const { return Exponents(2 * n + 1, 0); }
};

/// Graded order: filtration degree first, then lexicographic on exponents.
struct GradedLess {
  bool operator()(const Exponents& l, const Exponents& r) const;
};

/// Element of the truncated Weyl algebra in PBW normal form (x's left of y's,
/// hbar central). Coefficients of filtration degree below `precision()` are
/// exact; nothing is stored at or above it.
class WeylElement {
public:
  using Terms = std::map<Exponents, Scalar, GradedLess>;

  explicit WeylElement(const WeylSpace& space);
  WeylElement(const WeylSpace& space, Terms terms, unsigned precision);

  static WeylElement constant(const WeylSpace& s, Scalar c);
  static WeylElement monomial(const WeylSpace& s, const Exponents& e, Scalar c = 1);
  static WeylElement x(const WeylSpace& s, unsigned i);
  static WeylElement y(const WeylSpace& s, unsigned i);
  static WeylElement hbar(const WeylSpace& s);

  const WeylSpace& space() const noexcept { return space_; }
  const Terms& terms() const noexcept { return terms_; }
  unsigned precision() const noexcept { return precision_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  Scalar coefficient(const Exponents& e) const;

  /// Lowest filtration degree of a stored term; the precision for zero (M when exact).
  unsigned valuation() const noexcept;

  /// Same element known only below `p` (p clipped to the current precision).
  WeylElement with_precision(unsigned p) const;

  WeylElement operator+(const WeylElement& o) const;
  WeylElement operator-(const WeylElement& o) const;
  WeylElement operator-() const;
  WeylElement scaled(Scalar c) const;

  /// Equality at the common (minimum) precision.
  bool equals(const WeylElement& o) const;
  /// Exact equality of stored data including precision.
  bool operator==(const WeylElement& o) const noexcept {
    return space_ == o.space_ && precision_ == o.precision_ && terms_ == o.terms_;
  }

private:
  void insert(const Exponents& e, Scalar c);
  void check_space(const WeylElement& o) const;

  WeylSpace space_;
  Terms terms_;
  unsigned precision_;
};

WeylElement multiply(const WeylElement& a, const WeylElement& b);
WeylElement commutator(const WeylElement& a, const WeylElement& b);
/// ad(a)^k (b).
WeylElement ad_power(const WeylElement& a, unsigned k, const WeylElement& b);
/// Exact division by hbar; throws NotDivisible if a stored term has m = 0.
WeylElement div_hbar(const WeylElement& a);
/// a^p; throws PrecisionExhausted if the result carries no information.
WeylElement pth_power(const WeylElement& a);
WeylElement power(const WeylElement& a, unsigned k);

/// Image under hbar -> 1 in the ordinary Weyl algebra W_n: exponents (a, b)
/// with coefficients summed over m.
std::map<Exponents, Scalar> at_hbar_one(const WeylElement& a);

/// Text form: header `p n M P`, then one line `coeff a1..an b1..bn m` per term
/// in graded order.
std::string to_text(const WeylElement& a);
WeylElement weyl_from_text(const std::string& text);

std::ostream& operator<<(std::ostream& os, const WeylElement& a);

}  // namespace charpq
