#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "charpq/linalg.hpp"
#include "charpq/weyl.hpp"

namespace charpq {

/// One structure constant: e_i * e_j has coefficient c on e_k.
struct StructureConstant {
  std::uint32_t i, j, k;
  Scalar c;
  auto operator<=>(const StructureConstant&) const = default;
};

/// Raw description of a finite-dimensional filtered algebra. The basis must be
/// sorted by filtration degree so that every F_k = span{e_i : deg e_i >= k} is a
/// tail of the basis.
struct AlgebraData {
  std::uint32_t p = 5;
  std::vector<unsigned> degrees;
  std::vector<std::string> labels;
  Vec unit;
  Vec hbar;
  std::vector<StructureConstant> mult;  // sorted, no zero coefficients
};

/// Finite-dimensional associative algebra over F_p given by structure
/// constants, with unit, a distinguished central element hbar of degree 2 and
/// a multiplicative filtration. Immutable once validated.
class FdAlgebra {
public:
  struct Entry {
    std::uint32_t k;
    Scalar c;
  };

  /// Validates associativity (every triple up to dim 64, a deterministic
  /// sample beyond), unit, centrality of hbar, degree conventions and
  /// filtration multiplicativity.
  explicit FdAlgebra(AlgebraData data);

  std::size_t dim() const noexcept { return degrees_.size(); }
  const Field& field() const noexcept { return field_; }
  std::uint32_t p() const noexcept { return field_.p(); }
  unsigned degree(std::size_t i) const { return degrees_.at(i); }
  const std::vector<unsigned>& degrees() const noexcept { return degrees_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Vec& unit() const noexcept { return unit_; }
  const Vec& hbar() const noexcept { return hbar_; }
  /// One more than the largest basis degree.
  unsigned truncation() const noexcept { return truncation_; }

  Vec basis(std::size_t i) const;
  Vec zero() const { return Vec(dim(), 0); }
  /// Index of the basis element with this label, if any.
  std::optional<std::size_t> find_label(const std::string& label) const;
  const std::vector<Entry>& product(std::size_t i, std::size_t j) const { return table_[i * dim() + j]; }

  Vec mul(const Vec& u, const Vec& v) const;
  Vec commutator(const Vec& u, const Vec& v) const;
  Vec power(const Vec& u, unsigned k) const;
  Vec add(const Vec& u, const Vec& v) const { return charpq::add(field_, u, v); }
  Vec sub(const Vec& u, const Vec& v) const { return charpq::sub(field_, u, v); }
  Vec scale(Scalar c, const Vec& u) const { return charpq::scale(field_, c, u); }

  /// Matrix of v -> u*v (left) or v -> [u, v] (ad) in the standard basis.
  Matrix left_matrix(const Vec& u) const;
  Matrix ad_matrix(const Vec& u) const;

  /// Lowest degree in the support of v; truncation() for zero.
  unsigned valuation(const Vec& v) const;
  /// F_k as a subspace.
  Subspace filtration(unsigned k) const;
  bool is_commutative() const;
  /// True when the degree-0 part is spanned by the unit (so F_1 is the unique
  /// maximal ideal).
  bool is_local() const;

  /// A generating set as a unital algebra (the unit is implied).
  const std::vector<Vec>& generators() const noexcept { return generators_; }

  AlgebraData data() const;
  std::string to_json() const;
  static FdAlgebra from_json(const std::string& text);

private:
  void validate() const;
  void compute_generators();

  Field field_;
  std::vector<unsigned> degrees_;
  std::vector<std::string> labels_;
  Vec unit_, hbar_;
  unsigned truncation_ = 0;
  std::vector<std::vector<Entry>> table_;
  std::vector<Vec> generators_;
};

/// Element with its filtration precision (coordinates on basis elements of
/// degree >= precision are unknown and stored as zero).
struct AlgebraElement {
  Vec coords;
  unsigned precision;
};

/// Division by hbar, prepared once per algebra. Quotients are reduced modulo
/// the hbar-torsion {u : hbar u = 0}, which is where the ambiguity lives.
class HbarDivision {
public:
  explicit HbarDivision(const FdAlgebra& a);
  std::optional<Vec> divide(const Vec& v) const;
  const Subspace& image() const noexcept { return image_; }
  const Subspace& torsion() const noexcept { return torsion_; }

private:
  Subspace image_, torsion_;
  std::vector<Vec> preimages_;  // of the echelon basis of image_
};

/// Solves hbar * u = v for u, canonical modulo hbar-torsion; precision drops
/// by 2. Throws NotDivisible when v is not in hbar*A.
AlgebraElement div_hbar(const FdAlgebra& a, const Vec& v);

/// Two-sided ideal with the generators it was built from.
struct Ideal {
  Subspace space;
  std::vector<Vec> generators;
  bool two_sided = false;  // certified on construction
};

struct RestrictedWitness {
  Vec element;
  Vec witness;       // a^[p]
  Vec central_part;  // a^p - hbar^(p-1) a^[p]
  std::size_t solution_space_dim = 0;
};

struct WeaklyCentralReport {
  bool pass = true;
  std::size_t checked = 0;
  std::vector<std::string> failures;
  std::size_t max_solution_space_dim = 0;
};

// -- constructions ----------------------------------------------------------

/// Normal monomials of W_{n,hbar} of degree < M, multiplied with the Weyl rules.
FdAlgebra from_weyl_truncation(std::uint32_t p, unsigned n, unsigned truncation,
                               std::size_t max_dim = 4096);
/// W_{n,hbar} over F_p[hbar]/(hbar^k) modulo the central x_i^p, y_i^p: basis
/// x^a y^b hbar^m with a_i, b_i < p and m < k. No degree truncation, so the
/// only hbar-torsion is hbar^(k-1) A.
FdAlgebra reduced_weyl(std::uint32_t p, unsigned n, unsigned hbar_order, std::size_t max_dim = 4096);
/// Exponent vectors of the basis of from_weyl_truncation, in basis order.
std::vector<Exponents> weyl_truncation_basis(const WeylSpace& space);

/// A (x) C for commutative C; hbar comes from A. Basis re-sorted by degree.
FdAlgebra tensor_with_central(const FdAlgebra& a, const FdAlgebra& c);
/// Commutative algebra F_p[z]/(z^k) with deg z = `degree`, hbar = 0.
FdAlgebra truncated_polynomial(std::uint32_t p, unsigned k, unsigned degree = 1,
                               const std::string& name = "z");
FdAlgebra quotient_by_ideal(const FdAlgebra& a, const Ideal& ideal);
/// Subalgebra on a subspace closed under multiplication and containing 1.
/// The echelon basis of `s` (in degree-sorted coordinates) becomes the new basis.
FdAlgebra subalgebra(const FdAlgebra& a, const Subspace& s);

// -- subspaces ------------------------------------------------------------------

Subspace centralizer(const FdAlgebra& a, const std::vector<Vec>& elements);
Subspace center(const FdAlgebra& a);
/// Smallest subalgebra (with unit) containing `gens`.
Subspace generated_subalgebra(const FdAlgebra& a, const std::vector<Vec>& gens);

Ideal ideal_generated(const FdAlgebra& a, const std::vector<Vec>& gens);
Ideal ideal_power(const FdAlgebra& a, const Ideal& ideal, unsigned k);
Ideal ideal_product(const FdAlgebra& a, const Ideal& lhs, const Ideal& rhs);
/// Certifies two-sidedness of an arbitrary subspace.
Ideal make_ideal(const FdAlgebra& a, const Subspace& s);
bool is_two_sided(const FdAlgebra& a, const Subspace& s);

/// hbar * A.
Ideal hbar_ideal(const FdAlgebra& a);
/// F_1 = rho^{-1}(m) for local A: all positive-degree elements.
Ideal maximal_ideal(const FdAlgebra& a);

/// Coordinates for B = A / hbar A: the basis of B is the set of basis elements
/// of A that are not pivots of hbar A.
struct HbarQuotient {
  Subspace hbar_a;
  std::vector<std::size_t> basis;  // indices into A's basis
  Vec project(const Vec& v) const;  // A-coords -> B-coords
  Vec lift(const Vec& b, std::size_t ambient) const;
};
HbarQuotient hbar_quotient(const FdAlgebra& a);

/// rho^{-1}(I) for I a subspace of B = A/hbar A given in HbarQuotient coords.
Ideal hbar_preimage(const FdAlgebra& a, const HbarQuotient& q, const Subspace& ideal_in_b);

/// The ideal generated by p-th powers of a spanning set of `ideal`.
Ideal pth_power_ideal(const FdAlgebra& a, const Ideal& ideal);

// -- weakly central structure -----------------------------------------------------

/// Finds a^[p] with a^p - hbar^(p-1) a^[p] central, pivot-canonically. With
/// `within`, the witness is restricted to that subspace. Throws NotWeaklyCentral.
RestrictedWitness restricted_power(const FdAlgebra& a, const Vec& element,
                                   const Subspace* within = nullptr);

WeaklyCentralReport check_weakly_central(const FdAlgebra& a, std::size_t random_samples = 8,
                                         std::uint64_t seed = 1);

/// Pretty form of an element using basis labels.
std::string format_element(const FdAlgebra& a, const Vec& v);

}  // namespace charpq
