#include "charpq/fdalgebra.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sparse.hpp"

namespace charpq {

namespace {

Vec unit_vector(std::size_t n, std::size_t i) {
  Vec e(n, 0);
  e[i] = 1;
  return e;
}

std::string join_labels(const std::string& a, const std::string& b) {
  if (a == "1") return b;
  if (b == "1") return a;
  return a + "*" + b;
}

}  // namespace

// ---------------------------------------------------------------------------

FdAlgebra::FdAlgebra(AlgebraData data)
    : field_(data.p), degrees_(std::move(data.degrees)), labels_(std::move(data.labels)),
      unit_(std::move(data.unit)), hbar_(std::move(data.hbar)) {
  const std::size_t n = degrees_.size();
  if (n == 0) throw Error(Error::Kind::InvalidArgument, "algebra must have positive dimension");
  if (labels_.empty()) {
    for (std::size_t i = 0; i < n; ++i) labels_.push_back("e" + std::to_string(i));
  }
  if (labels_.size() != n || unit_.size() != n || hbar_.size() != n)
    throw Error(Error::Kind::DimensionMismatch, "algebra data arrays disagree on dimension");
  if (!std::is_sorted(degrees_.begin(), degrees_.end()))
    throw Error(Error::Kind::InvalidArgument, "basis must be sorted by filtration degree");
  for (auto& v : unit_) v %= field_.p();
  for (auto& v : hbar_) v %= field_.p();
  truncation_ = degrees_.back() + 1;

  table_.assign(n * n, {});
  std::map<std::array<std::uint32_t, 3>, Scalar> merged;
  for (const auto& sc : data.mult) {
    if (sc.i >= n || sc.j >= n || sc.k >= n)
      throw Error(Error::Kind::InvalidArgument, "structure constant index out of range");
    Scalar& slot = merged[{sc.i, sc.j, sc.k}];
    slot = field_.add(slot, sc.c % field_.p());
  }
  for (const auto& [key, c] : merged)
    if (c) table_[key[0] * n + key[1]].push_back({key[2], c});

  validate();
  compute_generators();
}

Vec FdAlgebra::basis(std::size_t i) const { return unit_vector(dim(), i); }

std::optional<std::size_t> FdAlgebra::find_label(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

Vec FdAlgebra::mul(const Vec& u, const Vec& v) const {
  const std::size_t n = dim();
  std::vector<std::uint64_t> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!u[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!v[j]) continue;
      std::uint64_t uv = static_cast<std::uint64_t>(u[i]) * v[j] % field_.p();
      for (const auto& e : table_[i * n + j]) acc[e.k] += uv * e.c;
    }
  }
  Vec r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = static_cast<Scalar>(acc[k] % field_.p());
  return r;
}

Vec FdAlgebra::commutator(const Vec& u, const Vec& v) const { return sub(mul(u, v), mul(v, u)); }

Vec FdAlgebra::power(const Vec& u, unsigned k) const {
  Vec r = unit_;
  for (unsigned i = 0; i < k; ++i) r = mul(r, u);
  return r;
}

Matrix FdAlgebra::left_matrix(const Vec& u) const {
  const std::size_t n = dim();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!u[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& e : table_[i * n + j]) m.data[e.k][j] = field_.add(m.data[e.k][j], field_.mul(u[i], e.c));
  }
  return m;
}

Matrix FdAlgebra::ad_matrix(const Vec& u) const {
  const std::size_t n = dim();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!u[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& e : table_[i * n + j]) m.data[e.k][j] = field_.add(m.data[e.k][j], field_.mul(u[i], e.c));
      for (const auto& e : table_[j * n + i]) m.data[e.k][j] = field_.sub(m.data[e.k][j], field_.mul(u[i], e.c));
    }
  }
  return m;
}

unsigned FdAlgebra::valuation(const Vec& v) const {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) return degrees_[i];
  return truncation_;
}

Subspace FdAlgebra::filtration(unsigned k) const {
  std::vector<Vec> gens;
  for (std::size_t i = 0; i < dim(); ++i)
    if (degrees_[i] >= k) gens.push_back(basis(i));
  return Subspace::span(field_, dim(), gens);
}

bool FdAlgebra::is_commutative() const {
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = i + 1; j < dim(); ++j) {
      auto a = table_[i * dim() + j], b = table_[j * dim() + i];
      auto key = [](const Entry& x, const Entry& y) { return x.k < y.k; };
      std::sort(a.begin(), a.end(), key);
      std::sort(b.begin(), b.end(), key);
      if (a.size() != b.size()) return false;
      for (std::size_t t = 0; t < a.size(); ++t)
        if (a[t].k != b[t].k || a[t].c != b[t].c) return false;
    }
  return true;
}

bool FdAlgebra::is_local() const {
  std::size_t zero_degree = static_cast<std::size_t>(std::count(degrees_.begin(), degrees_.end(), 0u));
  return zero_degree == 1;
}

void FdAlgebra::validate() const {
  const std::size_t n = dim();
  auto name = [&](std::size_t i) { return labels_[i]; };

  if (valuation(unit_) != 0) throw Error(Error::Kind::InvalidArgument, "unit must have degree 0");
  if (!is_zero(hbar_) && valuation(hbar_) != 2)
    throw Error(Error::Kind::InvalidArgument, "hbar must have filtration degree 2");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& e : table_[i * n + j])
        if (degrees_[e.k] < degrees_[i] + degrees_[j])
          throw Error(Error::Kind::InvalidArgument,
                      "filtration not multiplicative at " + name(i) + "*" + name(j));

  for (std::size_t i = 0; i < n; ++i) {
    Vec e = basis(i);
    if (mul(unit_, e) != e || mul(e, unit_) != e)
      throw Error(Error::Kind::InvalidArgument, "unit does not act as identity on " + name(i));
    if (!is_zero(commutator(hbar_, e)))
      throw Error(Error::Kind::InvalidArgument, "hbar is not central (fails against " + name(i) + ")");
  }

  detail::Accumulator acc(n, field_.p());
  auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
    for (const auto& [l, c] : table_[i * n + j])
      for (const auto& [m, d] : table_[l * n + k]) acc.add(m, std::uint64_t(c) * d);
    for (const auto& [l, c] : table_[j * n + k])
      for (const auto& [m, d] : table_[i * n + l]) acc.sub(m, std::uint64_t(c) * d);
    if (!acc.take().empty())
      throw Error(Error::Kind::NotAssociative,
                  "associativity fails on (" + name(i) + ", " + name(j) + ", " + name(k) + ")");
  };
  if (n <= 64) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) check(i, j, k);
  } else {
    std::mt19937_64 rng(0x5eed);
    for (int t = 0; t < 200000; ++t) check(rng() % n, rng() % n, rng() % n);
  }
}

void FdAlgebra::compute_generators() {
  const std::size_t n = dim();
  generators_.clear();
  if (!is_local()) {
    for (std::size_t i = 0; i < n; ++i) generators_.push_back(basis(i));
    return;
  }
  // lifts of a basis of F_1 / F_1^2 generate F_1, which is nilpotent
  EchelonBuilder square(field_, n);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j)
      if (!table_[i * n + j].empty()) square.insert(mul(basis(i), basis(j)));
  for (std::size_t i = 1; i < n; ++i)
    if (square.insert(basis(i))) generators_.push_back(basis(i));
}

AlgebraData FdAlgebra::data() const {
  AlgebraData d;
  d.p = field_.p();
  d.degrees = degrees_;
  d.labels = labels_;
  d.unit = unit_;
  d.hbar = hbar_;
  const std::size_t n = dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& e : table_[i * n + j])
        d.mult.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), e.k, e.c});
  std::sort(d.mult.begin(), d.mult.end());
  return d;
}

namespace {

template <class T>
void write_array(std::ostream& os, const std::vector<T>& v) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
}

}  // namespace

std::string FdAlgebra::to_json() const {
  AlgebraData d = data();
  std::ostringstream os;
  os << "{\n  \"schema_version\": 1,\n  \"p\": " << d.p << ",\n  \"dim\": " << dim() << ",\n  \"degrees\": ";
  write_array(os, d.degrees);
  os << ",\n  \"labels\": [";
  for (std::size_t i = 0; i < d.labels.size(); ++i) os << (i ? ", " : "") << nlohmann::json(d.labels[i]).dump();
  os << "],\n  \"unit\": ";
  write_array(os, d.unit);
  os << ",\n  \"hbar\": ";
  write_array(os, d.hbar);
  os << ",\n  \"mult\": [";
  for (std::size_t t = 0; t < d.mult.size(); ++t) {
    const auto& m = d.mult[t];
    os << (t ? ",\n    " : "\n    ") << '[' << m.i << ", " << m.j << ", " << m.k << ", " << m.c << ']';
  }
  os << (d.mult.empty() ? "]" : "\n  ]") << "\n}\n";
  return os.str();
}

FdAlgebra FdAlgebra::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(Error::Kind::Parse, std::string("algebra json: ") + e.what());
  }
  try {
    AlgebraData d;
    d.p = j.at("p").get<std::uint32_t>();
    d.degrees = j.at("degrees").get<std::vector<unsigned>>();
    if (j.contains("labels")) d.labels = j.at("labels").get<std::vector<std::string>>();
    d.unit = j.at("unit").get<Vec>();
    d.hbar = j.at("hbar").get<Vec>();
    if (j.at("dim").get<std::size_t>() != d.degrees.size())
      throw Error(Error::Kind::Parse, "algebra json: dim disagrees with degrees");
    for (const auto& t : j.at("mult")) {
      auto v = t.get<std::vector<std::uint64_t>>();
      if (v.size() != 4) throw Error(Error::Kind::Parse, "algebra json: mult entries are [i,j,k,c]");
      d.mult.push_back({static_cast<std::uint32_t>(v[0]), static_cast<std::uint32_t>(v[1]),
                        static_cast<std::uint32_t>(v[2]), static_cast<Scalar>(v[3] % d.p)});
    }
    return FdAlgebra(std::move(d));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("algebra json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

HbarDivision::HbarDivision(const FdAlgebra& a)
    : image_(a.field(), a.dim()), torsion_(a.field(), a.dim()) {
  Matrix l = a.left_matrix(a.hbar());
  torsion_ = kernel(a.field(), l);
  image_ = Subspace::span(a.field(), a.dim(), l.transpose().data);
  for (const auto& b : image_.basis()) preimages_.push_back(torsion_.reduce(*solve(a.field(), l, b)));
}

std::optional<Vec> HbarDivision::divide(const Vec& v) const {
  if (!image_.contains(v)) return std::nullopt;
  const Field& f = image_.field();
  Vec u(v.size(), 0);
  for (std::size_t k = 0; k < preimages_.size(); ++k)
    if (Scalar c = v[image_.pivots()[k]]) u = axpy(f, c, preimages_[k], std::move(u));
  return u;
}

AlgebraElement div_hbar(const FdAlgebra& a, const Vec& v) {
  auto u = HbarDivision(a).divide(v);
  if (!u) throw Error(Error::Kind::NotDivisible, "element is not in hbar*A");
  return {std::move(*u), a.truncation() >= 2 ? a.truncation() - 2 : 0};
}

// ---------------------------------------------------------------------------

std::vector<Exponents> weyl_truncation_basis(const WeylSpace& space) {
  const unsigned len = 2 * space.n + 1;
  std::vector<Exponents> out;
  Exponents e(len, 0);
  // odometer over bounded exponents
  while (true) {
    if (space.degree(e) < space.truncation) out.push_back(e);
    unsigned k = 0;
    while (k < len) {
      ++e[k];
      if (space.degree(e) < space.truncation) break;
      e[k] = 0;
      ++k;
    }
    if (k == len) break;
  }
  std::sort(out.begin(), out.end(), GradedLess{});
  return out;
}

namespace {

std::string weyl_label(const WeylSpace& s, const Exponents& e) {
  std::string out;
  auto factor = [&](const std::string& base, unsigned exp) {
    if (!exp) return;
    if (!out.empty()) out += "*";
    out += base;
    if (exp > 1) out += "^" + std::to_string(exp);
  };
  for (unsigned i = 0; i < s.n; ++i) factor(s.n == 1 ? "x" : "x" + std::to_string(i + 1), e[i]);
  for (unsigned i = 0; i < s.n; ++i) factor(s.n == 1 ? "y" : "y" + std::to_string(i + 1), e[s.n + i]);
  factor("h", e[2 * s.n]);
  return out.empty() ? "1" : out;
}

}  // namespace

FdAlgebra from_weyl_truncation(std::uint32_t p, unsigned n, unsigned truncation, std::size_t max_dim) {
  if (truncation < 3)
    throw Error(Error::Kind::InvalidArgument, "Weyl truncation needs M >= 3 so that hbar survives");
  WeylSpace s(p, n, truncation);
  auto monomials = weyl_truncation_basis(s);
  if (monomials.size() > max_dim)
    throw Error(Error::Kind::SizeOverflow,
                "Weyl truncation has " + std::to_string(monomials.size()) + " monomials, cap is " +
                    std::to_string(max_dim));
  std::map<Exponents, std::uint32_t> index;
  for (std::size_t i = 0; i < monomials.size(); ++i) index[monomials[i]] = static_cast<std::uint32_t>(i);

  AlgebraData d;
  d.p = p;
  for (const auto& m : monomials) {
    d.degrees.push_back(s.degree(m));
    d.labels.push_back(weyl_label(s, m));
  }
  const std::size_t dim = monomials.size();
  d.unit = unit_vector(dim, 0);
  Exponents h = s.unit_exponents();
  h[2 * n] = 1;
  d.hbar = unit_vector(dim, index.at(h));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      if (s.degree(monomials[i]) + s.degree(monomials[j]) >= truncation) continue;
      auto prod = multiply(WeylElement::monomial(s, monomials[i]), WeylElement::monomial(s, monomials[j]));
      for (const auto& [e, c] : prod.terms())
        d.mult.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), index.at(e), c});
    }
  return FdAlgebra(std::move(d));
}

FdAlgebra reduced_weyl(std::uint32_t p, unsigned n, unsigned hbar_order, std::size_t max_dim) {
  if (hbar_order < 2) throw Error(Error::Kind::InvalidArgument, "reduced Weyl algebra needs hbar != 0");
  // large enough that no product of two basis monomials is cut off
  const unsigned top = 2 * n * (p - 1) + 2 * (hbar_order - 1);
  WeylSpace s(p, n, 2 * top + 1);
  auto keep = [&](const Exponents& e) {
    for (unsigned i = 0; i < 2 * n; ++i)
      if (e[i] >= p) return false;
    return e[2 * n] < hbar_order;
  };
  std::vector<Exponents> monomials;
  for (const auto& e : weyl_truncation_basis(WeylSpace(p, n, top + 1)))
    if (keep(e)) monomials.push_back(e);
  if (monomials.size() > max_dim)
    throw Error(Error::Kind::SizeOverflow, "reduced Weyl algebra has " + std::to_string(monomials.size()) +
                                               " monomials, cap is " + std::to_string(max_dim));
  std::map<Exponents, std::uint32_t> index;
  for (std::size_t i = 0; i < monomials.size(); ++i) index[monomials[i]] = static_cast<std::uint32_t>(i);

  AlgebraData d;
  d.p = p;
  for (const auto& m : monomials) {
    d.degrees.push_back(s.degree(m));
    d.labels.push_back(weyl_label(s, m));
  }
  const std::size_t dim = monomials.size();
  d.unit = unit_vector(dim, 0);
  Exponents h = s.unit_exponents();
  h[2 * n] = 1;
  d.hbar = unit_vector(dim, index.at(h));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      auto prod = multiply(WeylElement::monomial(s, monomials[i]), WeylElement::monomial(s, monomials[j]));
      for (const auto& [e, c] : prod.terms())
        if (keep(e)) d.mult.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), index.at(e), c});
    }
  return FdAlgebra(std::move(d));
}

FdAlgebra truncated_polynomial(std::uint32_t p, unsigned k, unsigned degree, const std::string& name) {
  if (k == 0 || degree == 0) throw Error(Error::Kind::InvalidArgument, "truncated polynomial needs k, degree >= 1");
  AlgebraData d;
  d.p = p;
  for (unsigned i = 0; i < k; ++i) {
    d.degrees.push_back(i * degree);
    d.labels.push_back(i == 0 ? "1" : (i == 1 ? name : name + "^" + std::to_string(i)));
  }
  d.unit = unit_vector(k, 0);
  d.hbar = Vec(k, 0);
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; i + j < k; ++j) d.mult.push_back({i, j, i + j, 1});
  return FdAlgebra(std::move(d));
}

FdAlgebra tensor_with_central(const FdAlgebra& a, const FdAlgebra& c) {
  if (!(a.field() == c.field())) throw Error(Error::Kind::DimensionMismatch, "tensor factors over different fields");
  if (!c.is_commutative()) throw Error(Error::Kind::NotCommutative, "central tensor factor must be commutative");
  const std::size_t na = a.dim(), nc = c.dim();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nc; ++j) pairs.emplace_back(i, j);
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& l, const auto& r) {
    return a.degree(l.first) + c.degree(l.second) < a.degree(r.first) + c.degree(r.second);
  });
  std::vector<std::uint32_t> index(na * nc);
  for (std::size_t t = 0; t < pairs.size(); ++t) index[pairs[t].first * nc + pairs[t].second] = static_cast<std::uint32_t>(t);

  const Field& f = a.field();
  AlgebraData d;
  d.p = a.p();
  d.unit.assign(na * nc, 0);
  d.hbar.assign(na * nc, 0);
  for (const auto& [i, j] : pairs) {
    d.degrees.push_back(a.degree(i) + c.degree(j));
    d.labels.push_back(join_labels(a.label(i), c.label(j)));
  }
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      d.unit[index[i * nc + j]] = f.mul(a.unit()[i], c.unit()[j]);
      d.hbar[index[i * nc + j]] = f.mul(a.hbar()[i], c.unit()[j]);
    }
  for (const auto& [i1, j1] : pairs)
    for (const auto& [i2, j2] : pairs)
      for (const auto& ea : a.product(i1, i2))
        for (const auto& ec : c.product(j1, j2))
          d.mult.push_back({index[i1 * nc + j1], index[i2 * nc + j2], index[ea.k * nc + ec.k], f.mul(ea.c, ec.c)});
  return FdAlgebra(std::move(d));
}

FdAlgebra quotient_by_ideal(const FdAlgebra& a, const Ideal& ideal) {
  if (!ideal.two_sided || !is_two_sided(a, ideal.space))
    throw Error(Error::Kind::NotTwoSided, "quotient needs a two-sided ideal");
  std::vector<bool> pivot(a.dim(), false);
  for (auto pc : ideal.space.pivots()) pivot[pc] = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (!pivot[i]) keep.push_back(i);
  if (keep.empty()) throw Error(Error::Kind::InvalidArgument, "quotient by the whole algebra is zero");
  auto project = [&](const Vec& v) {
    Vec r = ideal.space.reduce(v);
    Vec out(keep.size());
    for (std::size_t t = 0; t < keep.size(); ++t) out[t] = r[keep[t]];
    return out;
  };
  AlgebraData d;
  d.p = a.p();
  for (auto i : keep) {
    d.degrees.push_back(a.degree(i));
    d.labels.push_back(a.label(i));
  }
  d.unit = project(a.unit());
  d.hbar = project(a.hbar());
  for (std::size_t s = 0; s < keep.size(); ++s)
    for (std::size_t t = 0; t < keep.size(); ++t) {
      Vec prod = project(a.mul(a.basis(keep[s]), a.basis(keep[t])));
      for (std::size_t k = 0; k < prod.size(); ++k)
        if (prod[k])
          d.mult.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(k), prod[k]});
    }
  return FdAlgebra(std::move(d));
}

FdAlgebra subalgebra(const FdAlgebra& a, const Subspace& s) {
  if (!s.contains(a.unit())) throw Error(Error::Kind::InvalidArgument, "subalgebra must contain the unit");
  const auto& basis = s.basis();
  auto coords = [&](const Vec& v) {
    auto c = s.coordinates(v);
    if (!c) throw Error(Error::Kind::InvalidArgument, "subspace is not closed under multiplication");
    return *c;
  };
  AlgebraData d;
  d.p = a.p();
  for (std::size_t t = 0; t < basis.size(); ++t) {
    d.degrees.push_back(a.degree(s.pivots()[t]));
    // label by the leading basis element, marking non-monomial rows
    std::size_t nnz = static_cast<std::size_t>(std::count_if(basis[t].begin(), basis[t].end(), [](Scalar x) { return x != 0; }));
    d.labels.push_back(nnz == 1 ? a.label(s.pivots()[t]) : "[" + format_element(a, basis[t]) + "]");
  }
  d.unit = coords(a.unit());
  d.hbar = s.contains(a.hbar()) ? coords(a.hbar()) : Vec(basis.size(), 0);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j) {
      Vec c = coords(a.mul(basis[i], basis[j]));
      for (std::size_t k = 0; k < c.size(); ++k)
        if (c[k]) d.mult.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k), c[k]});
    }
  return FdAlgebra(std::move(d));
}

// ---------------------------------------------------------------------------

Subspace centralizer(const FdAlgebra& a, const std::vector<Vec>& elements) {
  EchelonBuilder rows(a.field(), a.dim());
  for (const auto& s : elements) {
    Matrix ad = a.ad_matrix(s);
    for (auto& r : ad.data) {
      if (rows.rank() == a.dim()) break;
      if (!is_zero(r)) rows.insert(std::move(r));
    }
  }
  return kernel_of(rows);
}

Subspace center(const FdAlgebra& a) { return centralizer(a, a.generators()); }

Subspace generated_subalgebra(const FdAlgebra& a, const std::vector<Vec>& gens) {
  EchelonBuilder span(a.field(), a.dim());
  std::vector<Vec> queue;
  auto push = [&](const Vec& v) {
    if (span.insert(v)) queue.push_back(v);
  };
  push(a.unit());
  for (std::size_t q = 0; q < queue.size(); ++q) {
    Vec v = queue[q];
    for (const auto& g : gens) push(a.mul(v, g));
  }
  auto [rows, pivots] = span.rref();
  return Subspace::span(a.field(), a.dim(), rows);
}

Ideal ideal_generated(const FdAlgebra& a, const std::vector<Vec>& gens) {
  EchelonBuilder span(a.field(), a.dim());
  std::vector<Vec> queue;
  auto push = [&](const Vec& v) {
    if (span.rank() < a.dim() && span.insert(v)) queue.push_back(v);
  };
  for (const auto& g : gens) push(g);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    Vec v = queue[q];
    for (const auto& g : a.generators()) {
      push(a.mul(g, v));
      push(a.mul(v, g));
    }
  }
  auto [rows, pivots] = span.rref();
  return Ideal{Subspace::span(a.field(), a.dim(), rows), gens, true};
}

bool is_two_sided(const FdAlgebra& a, const Subspace& s) {
  for (const auto& b : s.basis())
    for (const auto& g : a.generators())
      if (!s.contains(a.mul(g, b)) || !s.contains(a.mul(b, g))) return false;
  return true;
}

Ideal make_ideal(const FdAlgebra& a, const Subspace& s) {
  if (!is_two_sided(a, s)) throw Error(Error::Kind::NotTwoSided, "subspace is not a two-sided ideal");
  return Ideal{s, s.basis(), true};
}

Ideal ideal_product(const FdAlgebra& a, const Ideal& lhs, const Ideal& rhs) {
  std::vector<Vec> gens;
  for (const auto& u : lhs.space.basis())
    for (const auto& g : rhs.generators) {
      Vec w = a.mul(u, g);
      if (!is_zero(w)) gens.push_back(std::move(w));
    }
  Ideal out = ideal_generated(a, gens);
  return out;
}

Ideal ideal_power(const FdAlgebra& a, const Ideal& ideal, unsigned k) {
  if (k == 0) return ideal_generated(a, {a.unit()});
  Ideal r = ideal;
  for (unsigned i = 1; i < k; ++i) {
    if (r.space.dim() == 0) break;
    r = ideal_product(a, r, ideal);
  }
  return r;
}

Ideal hbar_ideal(const FdAlgebra& a) {
  std::vector<Vec> gens;
  for (std::size_t i = 0; i < a.dim(); ++i) gens.push_back(a.mul(a.hbar(), a.basis(i)));
  return Ideal{Subspace::span(a.field(), a.dim(), gens), {a.hbar()}, true};
}

Ideal maximal_ideal(const FdAlgebra& a) {
  if (!a.is_local()) throw Error(Error::Kind::PreconditionViolation, "algebra is not local");
  return make_ideal(a, a.filtration(1));
}

Vec HbarQuotient::project(const Vec& v) const {
  Vec r = hbar_a.reduce(v);
  Vec out(basis.size());
  for (std::size_t t = 0; t < basis.size(); ++t) out[t] = r[basis[t]];
  return out;
}

Vec HbarQuotient::lift(const Vec& b, std::size_t ambient) const {
  Vec out(ambient, 0);
  for (std::size_t t = 0; t < basis.size(); ++t) out[basis[t]] = b[t];
  return out;
}

HbarQuotient hbar_quotient(const FdAlgebra& a) {
  HbarQuotient q{hbar_ideal(a).space, {}};
  std::vector<bool> pivot(a.dim(), false);
  for (auto pc : q.hbar_a.pivots()) pivot[pc] = true;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (!pivot[i]) q.basis.push_back(i);
  return q;
}

Ideal hbar_preimage(const FdAlgebra& a, const HbarQuotient& q, const Subspace& ideal_in_b) {
  std::vector<Vec> gens = q.hbar_a.basis();
  for (const auto& b : ideal_in_b.basis()) gens.push_back(q.lift(b, a.dim()));
  Ideal out = make_ideal(a, Subspace::span(a.field(), a.dim(), gens));
  return out;
}

Ideal pth_power_ideal(const FdAlgebra& a, const Ideal& ideal) {
  std::vector<Vec> gens;
  for (const auto& u : ideal.space.basis()) {
    Vec w = a.power(u, a.p());
    if (!is_zero(w)) gens.push_back(std::move(w));
  }
  return ideal_generated(a, gens);
}

// ---------------------------------------------------------------------------

RestrictedWitness restricted_power(const FdAlgebra& a, const Vec& element, const Subspace* within) {
  const Field& f = a.field();
  const std::size_t n = a.dim();
  Vec ap = a.power(element, a.p());
  Vec hp = a.power(a.hbar(), a.p() - 1);
  Matrix h = a.left_matrix(hp);

  std::vector<Vec> domain;
  if (within) domain = within->basis();
  else
    for (std::size_t i = 0; i < n; ++i) domain.push_back(a.basis(i));

  // columns: [g, hbar^(p-1) d] stacked over the generators g
  std::vector<Matrix> ads;
  for (const auto& g : a.generators()) ads.push_back(a.ad_matrix(g));
  std::size_t rows = n * ads.size();
  std::vector<Vec> columns;
  columns.reserve(domain.size());
  for (const auto& d : domain) {
    Vec hd = apply(f, h, d);
    Vec col;
    col.reserve(rows);
    for (const auto& ad : ads) {
      Vec part = apply(f, ad, hd);
      col.insert(col.end(), part.begin(), part.end());
    }
    columns.push_back(std::move(col));
  }
  Vec rhs;
  rhs.reserve(rows);
  for (const auto& ad : ads) {
    Vec part = apply(f, ad, ap);
    rhs.insert(rhs.end(), part.begin(), part.end());
  }
  Matrix m = Matrix::from_columns(columns, rows);
  auto t = solve(f, m, rhs);
  if (!t)
    throw Error(Error::Kind::NotWeaklyCentral,
                "no restricted power for " + format_element(a, element) + (within ? " in the given subspace" : ""));
  RestrictedWitness w;
  w.element = element;
  w.witness = Vec(n, 0);
  for (std::size_t k = 0; k < domain.size(); ++k) w.witness = axpy(f, (*t)[k], domain[k], std::move(w.witness));
  w.central_part = a.sub(ap, a.mul(hp, w.witness));
  w.solution_space_dim = kernel(f, m).dim();
  return w;
}

WeaklyCentralReport check_weakly_central(const FdAlgebra& a, std::size_t random_samples, std::uint64_t seed) {
  std::vector<std::pair<std::string, Vec>> work;
  for (std::size_t i = 0; i < a.dim(); ++i) work.emplace_back(a.label(i), a.basis(i));
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < random_samples; ++s) {
    Vec v(a.dim());
    for (auto& x : v) x = static_cast<Scalar>(rng() % a.p());
    work.emplace_back("sample#" + std::to_string(s), std::move(v));
  }
  HbarQuotient q = hbar_quotient(a);
  Subspace z = center(a);

  struct Outcome {
    std::string failure;
    std::size_t solution_dim = 0;
  };
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<Outcome> out;
    for (std::size_t t = begin; t < end; ++t) {
      Outcome o;
      try {
        auto w = restricted_power(a, work[t].second);
        o.solution_dim = w.solution_space_dim;
        if (!z.contains(w.central_part)) o.failure = work[t].first + ": central part not central";
        // a^p and its central part agree modulo hbar, so B^p lies in Z(A) mod hbar
        else if (!q.hbar_a.contains(a.sub(w.central_part, a.power(work[t].second, a.p()))))
          o.failure = work[t].first + ": central part differs from a^p modulo hbar";
      } catch (const Error& e) {
        o.failure = work[t].first + ": " + e.what();
      }
      out.push_back(std::move(o));
    }
    return out;
  };

  std::size_t threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::size_t chunk = (work.size() + threads - 1) / threads;
  std::vector<std::future<std::vector<Outcome>>> futures;
  for (std::size_t b = 0; b < work.size(); b += chunk)
    futures.push_back(std::async(std::launch::async, run, b, std::min(work.size(), b + chunk)));

  WeaklyCentralReport report;
  for (auto& fut : futures)
    for (auto& o : fut.get()) {
      ++report.checked;
      report.max_solution_space_dim = std::max(report.max_solution_space_dim, o.solution_dim);
      if (!o.failure.empty()) {
        report.pass = false;
        report.failures.push_back(std::move(o.failure));
      }
    }
  return report;
}

std::string format_element(const FdAlgebra& a, const Vec& v) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) continue;
    if (!first) os << " + ";
    first = false;
    if (a.label(i) == "1") os << v[i];
    else if (v[i] == 1) os << a.label(i);
    else os << v[i] << "*" << a.label(i);
  }
  return first ? "0" : os.str();
}

}  // namespace charpq
