#pragma once

#include <string>
#include <vector>

#include "charpq/fdalgebra.hpp"
#include "charpq/poisson.hpp"

namespace charpq {

/// Left module over k<x, y>/([x, y] - 1), given by action matrices.
struct W1Module {
  std::uint32_t p = 3;
  Matrix x, y;
  std::size_t dim() const noexcept { return x.rows; }
};

/// Checks XY - YX = I exactly; throws RepresentationInvalid otherwise (which
/// also covers dim not divisible by p, since the trace of I must vanish).
W1Module make_w1_module(const Field& f, Matrix x, Matrix y);

struct QowDecomposition {
  Vec m1;  // m'
  Vec m2;  // m''
};

/// Pivot-canonical (m', m'') with m = X^(p-1) m' + Y m''. An inconsistent
/// system is an InvariantViolation.
QowDecomposition qow_decompose(const Field& f, const W1Module& m, const Vec& v);

struct LiftOptions {
  /// Exponent e in g <- g + f^e g^[p]. 0 means p - 1.
  unsigned g_exponent = 0;
};

struct LiftStep {
  std::size_t pair = 0;
  std::string phase;   // bracket-f, bracket-g, cleanup, restrict-f, restrict-g
  unsigned level = 0;  // defect level (bracket phases) or witness valuation
  Vec correction;
  std::string note;
};

struct CommutatorCorrection {
  Vec f, g;
  std::vector<LiftStep> steps;
  unsigned iterations = 0;
  bool cleanup_used = false;
  /// Why the module step stopped before the defect vanished, if it did.
  std::string module_note;
};

/// Makes [f, g] = hbar exactly, keeping f, g modulo J'. Main loop: decompose
/// the defect on hbar J'^k modulo hbar J'^(k+1) + [g, torsion], as a module
/// with X = f and Y = ad(g)/hbar, when that quotient is one; otherwise a
/// stacked linear solve. A step must raise the defect level. What is left is
/// removed by solving [f, g'] = -defect with g' in J', then by Newton rounds
/// on both f and g.
CommutatorCorrection commutator_correct(const FdAlgebra& a, const Ideal& jprime, const Vec& f1,
                                        const Vec& g1, const LiftOptions& options = {});

struct RestrictedNormalization {
  Vec z, w;
  std::vector<LiftStep> steps;
};

/// From [f, g] = hbar, reaches z^p, w^p central by phi <- phi + g^(p-1) phi^[p],
/// first for f then for g. Witnesses are taken in J' and commuting with the
/// pair, so the bracket is preserved and residues mod J' are kept.
RestrictedNormalization restricted_normalize(const FdAlgebra& a, const Ideal& jprime, const Vec& f,
                                             const Vec& g);
/// J' = the maximal ideal.
RestrictedNormalization restricted_normalize(const FdAlgebra& a, const Vec& f, const Vec& g);

struct LiftCertificate {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct LiftReport {
  std::vector<Pair> initial;
  std::vector<Pair> pairs;
  std::vector<LiftStep> steps;
  std::vector<LiftCertificate> certificates;
  Subspace terminal{Field(3), 0};  // centralizer of all lifted pairs
  unsigned precision = 0;
  bool cleanup_used = false;
  struct Descent {
    std::size_t algebra, h, center_h, centralizer, product_rank;
    bool dimension_identity;
  };
  std::vector<Descent> descents;
  bool pass = false;
};

/// Re-checks a lift from its endpoints only: [z_i, w_j] = delta_ij hbar,
/// [z_i, z_j] = [w_i, w_j] = 0, z_i^p and w_i^p central, and residues mod J'.
std::vector<LiftCertificate> certify_lift(const FdAlgebra& a, const Subspace& jprime,
                                          const std::vector<Pair>& initial,
                                          const std::vector<Pair>& pairs);

/// Lifts n pairs one at a time, descending to the centralizer A_1 of the pairs
/// already lifted. Throws DecompositionMismatch when a descent has A != H A_1
/// (H generated by the lifted pair); the tensor identity
/// dim A * dim Z(H) = dim H * dim A_1 is recorded per descent, since degree
/// truncation breaks it once H is a proper subalgebra.
LiftReport darboux_lift_full(const FdAlgebra& a, const Ideal& jprime, const std::vector<Pair>& pairs,
                             const LiftOptions& options = {});
/// Same with J' = rho^{-1}(I) and pairs given in B coordinates.
LiftReport darboux_lift_full(const FdAlgebra& a, const PoissonReduction& reduction,
                             const PoissonIdeal& ideal, const std::vector<Pair>& pairs,
                             const LiftOptions& options = {});

/// dim A, dim H, dim Z(H), dim A_1 = centralizer of H and dim H A_1 for H
/// generated by `gens`.
struct SplitDims {
  std::size_t algebra = 0, h = 0, center_h = 0, centralizer = 0, product_rank = 0;
  bool holds() const { return algebra * center_h == h * centralizer; }
};
SplitDims split_dimensions(const FdAlgebra& a, const std::vector<Vec>& gens);

}  // namespace charpq
