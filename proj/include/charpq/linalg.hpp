#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "charpq/field.hpp"

namespace charpq {

/// Dense row-major matrix over F_p.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Vec> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r, Vec(c, 0)) {}
  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::vector<Vec> rows, std::size_t cols);
  /// Matrix whose k-th column is `columns[k]`.
  static Matrix from_columns(const std::vector<Vec>& columns, std::size_t rows);

  Scalar& at(std::size_t r, std::size_t c) { return data[r][c]; }
  Scalar at(std::size_t r, std::size_t c) const { return data[r][c]; }

  Matrix transpose() const;
  bool operator==(const Matrix& o) const = default;
};

Matrix multiply(const Field& f, const Matrix& a, const Matrix& b);
Vec apply(const Field& f, const Matrix& a, const Vec& x);
Matrix subtract(const Field& f, const Matrix& a, const Matrix& b);
Matrix add(const Field& f, const Matrix& a, const Matrix& b);
Matrix power(const Field& f, const Matrix& a, unsigned k);
std::size_t rank(const Field& f, const Matrix& a);

/// Incremental row reduction. Rows are kept in semi-echelon form keyed by
/// pivot (first nonzero column); `rref()` back-substitutes to the canonical form.
class EchelonBuilder {
public:
  EchelonBuilder(const Field& f, std::size_t cols) : field_(f), cols_(cols) {}

  /// Reduces `v` against the current rows; returns true if it was independent.
  bool insert(Vec v);
  /// Residue of `v` modulo the current row space.
  Vec reduce(Vec v) const;
  std::size_t rank() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  const Field& field() const noexcept { return field_; }

  /// Reduced row-echelon rows sorted by pivot, with their pivot columns.
  std::pair<std::vector<Vec>, std::vector<std::size_t>> rref() const;

private:
  Field field_;
  std::size_t cols_;
  std::map<std::size_t, Vec> rows_;
};

/// A linear subspace of F_p^n in canonical reduced echelon form.
class Subspace {
public:
  Subspace(const Field& f, std::size_t ambient);  // zero subspace
  static Subspace span(const Field& f, std::size_t ambient, const std::vector<Vec>& gens);
  static Subspace full(const Field& f, std::size_t ambient);

  std::size_t ambient() const noexcept { return ambient_; }
  std::size_t dim() const noexcept { return basis_.size(); }
  const std::vector<Vec>& basis() const noexcept { return basis_; }
  const std::vector<std::size_t>& pivots() const noexcept { return pivots_; }
  const Field& field() const noexcept { return field_; }

  bool contains(const Vec& v) const;
  bool contains(const Subspace& other) const;
  /// Residue of `v` against the basis (zero iff v is a member).
  Vec reduce(Vec v) const;
  /// Coefficients of `v` in the echelon basis, if v is a member.
  std::optional<Vec> coordinates(const Vec& v) const;

  Subspace sum(const Subspace& other) const;
  Subspace intersect(const Subspace& other) const;

  bool operator==(const Subspace& o) const {
    return ambient_ == o.ambient_ && basis_ == o.basis_;
  }

private:
  void check_same(const Subspace& other) const;

  Field field_;
  std::size_t ambient_;
  std::vector<Vec> basis_;
  std::vector<std::size_t> pivots_;
};

/// Vectors of U completing a basis of U∩V to a basis of U. The returned vectors
/// are the canonical basis rows of U whose pivots are not pivots of (U∩V)
/// reduced modulo V; their classes form a basis of U/(U∩V).
std::vector<Vec> quotient_basis(const Subspace& u, const Subspace& v);

/// One solution of A x = b with free variables zero, or nothing if inconsistent.
std::optional<Vec> solve(const Field& f, const Matrix& a, const Vec& b);

/// Canonical basis of {x : A x = 0}.
Subspace kernel(const Field& f, const Matrix& a);

/// Kernel of a linear map given as a stream of rows (each of length `cols`).
Subspace kernel_of_rows(const Field& f, std::size_t cols, const std::vector<Vec>& rows);

/// Kernel from an already reduced row space.
Subspace kernel_of(const EchelonBuilder& rows);

/// Solve from an EchelonBuilder fed with augmented rows [A | b] (cols = n + 1).
std::optional<Vec> solve_augmented(const EchelonBuilder& augmented);

}  // namespace charpq
