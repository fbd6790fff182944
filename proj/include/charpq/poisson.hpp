#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "charpq/fdalgebra.hpp"

namespace charpq {

/// Commutative filtered algebra with a Poisson bracket, both by structure
/// constants. The bracket lowers filtration degree by at most 2.
class PoissonTruncation {
public:
  /// `algebra` must be commutative with hbar = 0. Validates antisymmetry,
  /// Leibniz and Jacobi on basis triples (all up to dim 96, sampled beyond).
  PoissonTruncation(FdAlgebra algebra, std::vector<StructureConstant> bracket);

  const FdAlgebra& algebra() const noexcept { return algebra_; }
  std::size_t dim() const noexcept { return algebra_.dim(); }
  const Field& field() const noexcept { return algebra_.field(); }
  std::uint32_t p() const noexcept { return algebra_.p(); }

  Vec mul(const Vec& u, const Vec& v) const { return algebra_.mul(u, v); }
  Vec bracket(const Vec& u, const Vec& v) const;
  /// Matrix of v -> {u, v}.
  Matrix ad_matrix(const Vec& u) const;
  const std::vector<FdAlgebra::Entry>& bracket_entry(std::size_t i, std::size_t j) const {
    return table_[i * dim() + j];
  }
  std::vector<StructureConstant> bracket_data() const;

  std::string to_json() const;
  static PoissonTruncation from_json(const std::string& text);

private:
  void validate() const;

  FdAlgebra algebra_;
  std::vector<std::vector<FdAlgebra::Entry>> table_;
};

/// Ideal closed under multiplication and under {b, -} for all b.
struct PoissonIdeal {
  Subspace space;
  bool poisson_closed = false;
};

PoissonIdeal poisson_ideal_generated(const PoissonTruncation& b, const std::vector<Vec>& gens);
/// Certifies an arbitrary subspace; throws ClosureViolation.
PoissonIdeal make_poisson_ideal(const PoissonTruncation& b, const Subspace& s);
PoissonTruncation poisson_quotient(const PoissonTruncation& b, const PoissonIdeal& ideal);
/// Poisson subalgebra on a subspace closed under product and bracket, with the
/// echelon basis of `s` as new basis.
PoissonTruncation poisson_subalgebra(const PoissonTruncation& b, const Subspace& s);
/// {v : {s, v} = 0 for all s in `elements`}.
Subspace poisson_centralizer(const PoissonTruncation& b, const std::vector<Vec>& elements);

// -- test instances ---------------------------------------------------------

struct PoissonVariable {
  std::string name;
  unsigned bound;       // name^bound = 0
  unsigned degree = 1;
};
/// Polynomial in the variables: exponent vector -> coefficient.
using Polynomial = std::map<std::vector<unsigned>, Scalar>;
struct GeneratorBracket {
  std::size_t i, j;  // {var_i, var_j} = value
  Polynomial value;
};

/// F_p[vars]/(var^bound) with the bracket extended from the generators by
/// Leibniz. Validation rejects data whose truncation is not a Poisson ideal.
PoissonTruncation polynomial_poisson(std::uint32_t p, const std::vector<PoissonVariable>& vars,
                                     const std::vector<GeneratorBracket>& brackets);
/// F_p[x_i, y_i]/(x_i^(pk), y_i^(pk)) with {x_i, y_j} = delta_ij.
PoissonTruncation symplectic_truncation(std::uint32_t p, unsigned n, unsigned k);

// -- reduction of a quantization ----------------------------------------------

/// B = A / K where K is the smallest Poisson ideal containing hbar*A and the
/// hbar-torsion of A (the part of A where (1/hbar)[a, b] is ambiguous).
struct PoissonReduction {
  PoissonTruncation poisson;
  Subspace kernel;                  // K, in A coordinates
  std::vector<std::size_t> basis;   // A-basis indices forming the basis of B
  Vec project(const Vec& a_coords) const;
  Vec lift(const Vec& b_coords) const;
};

/// Throws BracketIllDefined when A/hbar A is not commutative and
/// PrecisionExhausted when K is all of A.
PoissonReduction reduce_mod_hbar(const FdAlgebra& a);

/// (1/hbar)[a, b] in A coordinates, defined modulo hbar-torsion; throws
/// BracketIllDefined when [a, b] is not divisible by hbar.
Vec hbar_bracket(const FdAlgebra& a, const HbarDivision& div, const Vec& u, const Vec& v);

// -- restricted structure -------------------------------------------------------

struct PoissonWitness {
  Vec element;
  Vec witness;  // f^[p] with ad(f)^p = ad(f^[p])
  std::size_t solution_space_dim = 0;
};

/// Pivot-canonical f^[p], optionally restricted to `within`.
/// Throws NotWeaklyRestricted.
PoissonWitness restricted_witness_poisson(const PoissonTruncation& b, const Vec& f,
                                          const Subspace* within = nullptr);

/// Matrix of ad(f)^p.
Matrix ad_power_matrix(const PoissonTruncation& b, const Vec& f, unsigned k);

// -- Darboux data -----------------------------------------------------------------

using Pair = std::pair<Vec, Vec>;

struct DarbouxCheck {
  std::string name;
  bool pass;
  std::string detail;
};

struct DarbouxReport {
  bool pass = true;
  std::vector<DarbouxCheck> checks;
  /// First basis element outside the span of monomials in the pairs, if any.
  std::string missing_monomial;
};

DarbouxReport verify_darboux_form(const PoissonTruncation& b, const std::vector<Pair>& pairs);

struct PoissonLiftStep {
  std::size_t pair;
  std::string phase;  // "bracket", "restrict-x", "restrict-y"
  unsigned level;     // ideal power the defect was in
  Vec correction;
};

struct PoissonLift {
  std::vector<Pair> pairs;
  std::vector<PoissonLiftStep> steps;
};

/// Lifts Darboux pairs of B/I (given by representatives in B) to exact Darboux
/// pairs of B congruent to them modulo I.
PoissonLift poisson_darboux_lift(const PoissonTruncation& b, const PoissonIdeal& ideal,
                                 const std::vector<Pair>& pairs);

}  // namespace charpq
