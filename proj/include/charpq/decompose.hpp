#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "charpq/lift.hpp"

namespace charpq {

struct SplitCertificate {
  std::size_t algebra = 0, h = 0, center_h = 0, s_prime = 0;
  std::size_t product_rank = 0;     // dim span{h s : h in H, s in S'}
  bool surjective = false;          // product_rank == algebra
  bool dimension_identity = false;  // dim A * dim Z(H) == dim H * dim S'
  bool s_prime_contains_center = false;
  bool h_meets_s_prime_in_center = false;  // H cap S' == Z(H)
  bool pass() const {
    return surjective && dimension_identity && s_prime_contains_center && h_meets_s_prime_in_center;
  }
};

/// A = H (x)_{Z(H)} S', with H generated by Weyl pairs and S' their centralizer.
struct SplitResult {
  std::vector<Pair> pairs;
  Subspace h{Field(3), 0};
  Subspace center_h{Field(3), 0};
  Subspace s_prime{Field(3), 0};
  SplitCertificate certificate;
  std::vector<std::pair<Subspace, Subspace>> ideal_splits;  // (I, I')
};

/// Checks the pair relations with `planck` in place of hbar (defaults to
/// a.hbar(); the unit gives the hbar = 1 slice), then certifies the split by
/// rank. Throws PreconditionViolation naming the failed relation, or
/// DecompositionMismatch with a basis element outside H S'.
SplitResult split_by_weyl_pairs(const FdAlgebra& a, const std::vector<Pair>& pairs,
                                const std::optional<Vec>& planck = std::nullopt);

struct IdealSplit {
  Ideal restricted;           // I' = I cap S'
  bool closed_in_s_prime = false;  // [s, I'] in hbar I' for s in S'
};

/// I' = I cap S' with I = span(H I') checked exactly; appends (I, I') to
/// split.ideal_splits. Throws ClosureViolation unless [a, I] lies in hbar I
/// for every basis element a, and DecompositionMismatch if the span differs.
IdealSplit split_ideal(const FdAlgebra& a, SplitResult& split, const Ideal& ideal);

/// Unital F_p-algebra generated by square matrices, with basis the first
/// independent words in the generators (breadth first). Degrees are all 0 and
/// hbar is 0; pass the unit as `planck` to split it.
FdAlgebra matrix_algebra(const Field& f, const std::vector<Matrix>& gens,
                         const std::vector<std::string>& names);

struct LocalModel {
  LiftReport lift;
  SplitResult split;
  FdAlgebra a_plus;          // the centralizer S' as an algebra
  PoissonReduction l;        // L = A+ / hbar A+
  Subspace m_prime;          // maximal ideal of L
  Subspace ideal_in_l;       // image of J' cap A+ in L
  WeaklyCentralReport a_plus_weakly_central;
  bool m_prime_poisson = false;       // {m', m'} in I_L and I_L in m'
  bool restricted_closed = false;     // a^[p] can be chosen in A+ for a in A+
  bool pass() const {
    return a_plus_weakly_central.pass && m_prime_poisson && restricted_closed && split.certificate.pass();
  }
};

/// reduce -> Darboux check on B/I -> lift -> split -> A+ -> weakly central ->
/// L with its maximal ideal. `pairs` are in B coordinates and may be empty.
/// Errors from a stage are rethrown with the stage name prefixed.
LocalModel localize_pipeline(const FdAlgebra& a, const PoissonIdeal& ideal, const std::vector<Pair>& pairs);

/// Action of W_{n,hbar} on a finite-dimensional space: x_i, y_i and hbar.
struct WeylModule {
  std::vector<Matrix> x, y;
  Matrix hbar;
};

struct KwReport {
  std::size_t dim = 0;       // over F_p
  std::size_t rank = 0;      // over the coefficient ring
  unsigned hbar_order = 0;   // N with hbar^N = 0, or 0 when hbar is invertible
  unsigned n = 0;
  std::size_t p_power = 0;   // p^n
  bool divisible = false;
};

/// Checks the Weyl relations exactly (RepresentationInvalid names the first
/// failure) and nilpotency of every x_i, y_i (PreconditionViolation), then
/// measures the rank: dim over F_p when hbar acts invertibly, else the rank of
/// a free F_p[hbar]/(hbar^N)-module (RepresentationInvalid if not free).
KwReport kw_divisibility_check(const Field& f, const WeylModule& m);

}  // namespace charpq
