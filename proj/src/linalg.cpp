#include "charpq/linalg.hpp"

#include <algorithm>

namespace charpq {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.data[i][i] = 1;
  return m;
}

Matrix Matrix::from_rows(std::vector<Vec> rows, std::size_t cols) {
  Matrix m;
  m.rows = rows.size();
  m.cols = cols;
  for (const auto& r : rows)
    if (r.size() != cols) throw Error(Error::Kind::DimensionMismatch, "ragged matrix rows");
  m.data = std::move(rows);
  return m;
}

Matrix Matrix::from_columns(const std::vector<Vec>& columns, std::size_t rows) {
  Matrix m(rows, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != rows)
      throw Error(Error::Kind::DimensionMismatch, "column length mismatch");
    for (std::size_t r = 0; r < rows; ++r) m.data[r][c] = columns[c][r];
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t.data[c][r] = data[r][c];
  return t;
}

Matrix multiply(const Field& f, const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw Error(Error::Kind::DimensionMismatch, "matrix product shape");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      Scalar s = a.data[i][k];
      if (s == 0) continue;
      for (std::size_t j = 0; j < b.cols; ++j)
        if (b.data[k][j]) c.data[i][j] = f.add(c.data[i][j], f.mul(s, b.data[k][j]));
    }
  return c;
}

Vec apply(const Field& f, const Matrix& a, const Vec& x) {
  if (a.cols != x.size()) throw Error(Error::Kind::DimensionMismatch, "matrix-vector shape");
  Vec y(a.rows, 0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < a.cols; ++k) acc += static_cast<std::uint64_t>(a.data[i][k]) * x[k];
    y[i] = static_cast<Scalar>(acc % f.p());
  }
  return y;
}

Matrix subtract(const Field& f, const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw Error(Error::Kind::DimensionMismatch, "matrix difference shape");
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) c.data[i] = sub(f, a.data[i], b.data[i]);
  return c;
}

Matrix add(const Field& f, const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw Error(Error::Kind::DimensionMismatch, "matrix sum shape");
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) c.data[i] = charpq::add(f, a.data[i], b.data[i]);
  return c;
}

Matrix power(const Field& f, const Matrix& a, unsigned k) {
  Matrix r = Matrix::identity(a.rows);
  for (unsigned i = 0; i < k; ++i) r = multiply(f, r, a);
  return r;
}

std::size_t rank(const Field& f, const Matrix& a) {
  EchelonBuilder b(f, a.cols);
  for (const auto& row : a.data) b.insert(row);
  return b.rank();
}

// ---------------------------------------------------------------------------

Vec EchelonBuilder::reduce(Vec v) const {
  for (const auto& [pivot, row] : rows_) {
    Scalar c = v[pivot];
    if (c == 0) continue;
    Scalar m = field_.neg(c);
    for (std::size_t j = pivot; j < cols_; ++j)
      if (row[j]) v[j] = field_.add(v[j], field_.mul(m, row[j]));
  }
  return v;
}

bool EchelonBuilder::insert(Vec v) {
  if (v.size() != cols_) throw Error(Error::Kind::DimensionMismatch, "row length mismatch");
  v = reduce(std::move(v));
  auto it = std::find_if(v.begin(), v.end(), [](Scalar s) { return s != 0; });
  if (it == v.end()) return false;
  std::size_t pivot = static_cast<std::size_t>(it - v.begin());
  v = scale(field_, field_.inv(*it), std::move(v));
  rows_.emplace(pivot, std::move(v));
  return true;
}

std::pair<std::vector<Vec>, std::vector<std::size_t>> EchelonBuilder::rref() const {
  std::vector<Vec> rows;
  std::vector<std::size_t> pivots;
  rows.reserve(rows_.size());
  for (const auto& [p, r] : rows_) {
    pivots.push_back(p);
    rows.push_back(r);
  }
  // eliminate above each pivot, last pivot first
  for (std::size_t i = rows.size(); i-- > 0;) {
    std::size_t pc = pivots[i];
    for (std::size_t k = 0; k < i; ++k) {
      Scalar c = rows[k][pc];
      if (c == 0) continue;
      rows[k] = axpy(field_, field_.neg(c), rows[i], std::move(rows[k]));
    }
  }
  return {std::move(rows), std::move(pivots)};
}

// ---------------------------------------------------------------------------

Subspace::Subspace(const Field& f, std::size_t ambient) : field_(f), ambient_(ambient) {}

Subspace Subspace::span(const Field& f, std::size_t ambient, const std::vector<Vec>& gens) {
  EchelonBuilder b(f, ambient);
  for (const auto& g : gens) {
    if (b.rank() == ambient) break;
    b.insert(g);
  }
  Subspace s(f, ambient);
  auto [rows, pivots] = b.rref();
  s.basis_ = std::move(rows);
  s.pivots_ = std::move(pivots);
  return s;
}

Subspace Subspace::full(const Field& f, std::size_t ambient) {
  Subspace s(f, ambient);
  for (std::size_t i = 0; i < ambient; ++i) {
    Vec e(ambient, 0);
    e[i] = 1;
    s.basis_.push_back(std::move(e));
    s.pivots_.push_back(i);
  }
  return s;
}

Vec Subspace::reduce(Vec v) const {
  if (v.size() != ambient_) throw Error(Error::Kind::DimensionMismatch, "vector/subspace dimension");
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    Scalar c = v[pivots_[i]];
    if (c) v = axpy(field_, field_.neg(c), basis_[i], std::move(v));
  }
  return v;
}

bool Subspace::contains(const Vec& v) const { return is_zero(reduce(v)); }

bool Subspace::contains(const Subspace& other) const {
  check_same(other);
  return std::all_of(other.basis_.begin(), other.basis_.end(),
                     [&](const Vec& v) { return contains(v); });
}

std::optional<Vec> Subspace::coordinates(const Vec& v) const {
  Vec c(basis_.size(), 0);
  for (std::size_t i = 0; i < basis_.size(); ++i) c[i] = v[pivots_[i]];
  Vec recon(ambient_, 0);
  for (std::size_t i = 0; i < basis_.size(); ++i) recon = axpy(field_, c[i], basis_[i], std::move(recon));
  if (recon != v) return std::nullopt;
  return c;
}

void Subspace::check_same(const Subspace& other) const {
  if (ambient_ != other.ambient_ || !(field_ == other.field_))
    throw Error(Error::Kind::DimensionMismatch, "subspaces live in different ambient spaces");
}

Subspace Subspace::sum(const Subspace& other) const {
  check_same(other);
  std::vector<Vec> gens = basis_;
  gens.insert(gens.end(), other.basis_.begin(), other.basis_.end());
  return span(field_, ambient_, gens);
}

Subspace Subspace::intersect(const Subspace& other) const {
  check_same(other);
  if (dim() == 0 || other.dim() == 0) return Subspace(field_, ambient_);
  // kernel of [U^T | -V^T]: pairs (a, b) with sum a_i u_i = sum b_j v_j
  std::vector<Vec> columns = basis_;
  for (const auto& v : other.basis_) columns.push_back(scale(field_, field_.p() - 1, v));
  Subspace ker = kernel(field_, Matrix::from_columns(columns, ambient_));
  std::vector<Vec> gens;
  for (const auto& k : ker.basis()) {
    Vec w(ambient_, 0);
    for (std::size_t i = 0; i < basis_.size(); ++i) w = axpy(field_, k[i], basis_[i], std::move(w));
    gens.push_back(std::move(w));
  }
  return span(field_, ambient_, gens);
}

std::vector<Vec> quotient_basis(const Subspace& u, const Subspace& v) {
  Subspace common = u.intersect(v);
  EchelonBuilder b(u.field(), u.ambient());
  for (const auto& w : common.basis()) b.insert(w);
  std::vector<Vec> out;
  for (const auto& w : u.basis())
    if (b.insert(w)) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Subspace kernel_from_rref(const Field& f, std::size_t n, const std::vector<Vec>& rref,
                          const std::vector<std::size_t>& pivots) {
  std::vector<bool> is_pivot(n, false);
  for (auto pc : pivots) is_pivot[pc] = true;
  std::vector<Vec> gens;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_pivot[j]) continue;
    Vec x(n, 0);
    x[j] = 1;
    for (std::size_t i = 0; i < rref.size(); ++i) x[pivots[i]] = f.neg(rref[i][j]);
    gens.push_back(std::move(x));
  }
  return Subspace::span(f, n, gens);
}

}  // namespace

Subspace kernel_of_rows(const Field& f, std::size_t cols, const std::vector<Vec>& rows) {
  EchelonBuilder b(f, cols);
  for (const auto& r : rows) {
    if (b.rank() == cols) break;
    b.insert(r);
  }
  auto [rref, pivots] = b.rref();
  return kernel_from_rref(f, cols, rref, pivots);
}

Subspace kernel_of(const EchelonBuilder& rows) {
  auto [rref, pivots] = rows.rref();
  return kernel_from_rref(rows.field(), rows.cols(), rref, pivots);
}

Subspace kernel(const Field& f, const Matrix& a) { return kernel_of_rows(f, a.cols, a.data); }

std::optional<Vec> solve_augmented(const EchelonBuilder& augmented) {
  const std::size_t n = augmented.cols() - 1;
  auto [rref, pivots] = augmented.rref();
  Vec x(n, 0);
  for (std::size_t i = 0; i < rref.size(); ++i) {
    if (pivots[i] == n) return std::nullopt;
    x[pivots[i]] = rref[i][n];
  }
  return x;
}

std::optional<Vec> solve(const Field& f, const Matrix& a, const Vec& b) {
  if (a.rows != b.size()) throw Error(Error::Kind::DimensionMismatch, "solve: rows != length(b)");
  EchelonBuilder aug(f, a.cols + 1);
  for (std::size_t r = 0; r < a.rows; ++r) {
    Vec row = a.data[r];
    row.push_back(b[r]);
    aug.insert(std::move(row));
  }
  return solve_augmented(aug);
}

}  // namespace charpq
