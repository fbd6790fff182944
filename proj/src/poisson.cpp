#include "charpq/poisson.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sparse.hpp"

namespace charpq {

namespace {

Vec unit_vector(std::size_t n, std::size_t i) {
  Vec e(n, 0);
  e[i] = 1;
  return e;
}

}  // namespace

PoissonTruncation::PoissonTruncation(FdAlgebra algebra, std::vector<StructureConstant> bracket)
    : algebra_(std::move(algebra)) {
  const std::size_t n = dim();
  if (!is_zero(algebra_.hbar()))
    throw Error(Error::Kind::InvalidArgument, "Poisson truncation carries no hbar");
  if (!algebra_.is_commutative())
    throw Error(Error::Kind::NotCommutative, "Poisson truncation needs a commutative product");
  table_.assign(n * n, {});
  std::map<std::array<std::uint32_t, 3>, Scalar> merged;
  for (const auto& sc : bracket) {
    if (sc.i >= n || sc.j >= n || sc.k >= n)
      throw Error(Error::Kind::InvalidArgument, "bracket index out of range");
    Scalar& slot = merged[{sc.i, sc.j, sc.k}];
    slot = field().add(slot, sc.c % p());
  }
  for (const auto& [key, c] : merged)
    if (c) table_[key[0] * n + key[1]].push_back({key[2], c});
  validate();
}

void PoissonTruncation::validate() const {
  const std::size_t n = dim();
  const FdAlgebra& a = algebra_;
  auto name = [&](std::size_t i) { return a.label(i); };
  auto fail = [&](const std::string& what) { throw Error(Error::Kind::InvariantViolation, what); };

  detail::Accumulator acc(n, p());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& [k, c] : table_[i * n + j]) {
        acc.add(k, c);
        if (a.degree(k) + 2 < a.degree(i) + a.degree(j))
          fail("bracket lowers degree by more than 2 at {" + name(i) + ", " + name(j) + "}");
      }
      for (const auto& [k, c] : table_[j * n + i]) acc.add(k, c);
      if (!acc.take().empty()) fail("bracket not antisymmetric at {" + name(i) + ", " + name(j) + "}");
    }

  auto br = [&](std::size_t i, std::size_t j) -> const std::vector<FdAlgebra::Entry>& { return table_[i * n + j]; };
  auto leibniz = [&](std::size_t i, std::size_t j, std::size_t k) {
    // {e_i, e_j e_k} - {e_i, e_j} e_k - e_j {e_i, e_k}
    for (const auto& [l, c] : a.product(j, k))
      for (const auto& [m, d] : br(i, l)) acc.add(m, std::uint64_t(c) * d);
    for (const auto& [l, c] : br(i, j))
      for (const auto& [m, d] : a.product(l, k)) acc.sub(m, std::uint64_t(c) * d);
    for (const auto& [l, c] : br(i, k))
      for (const auto& [m, d] : a.product(j, l)) acc.sub(m, std::uint64_t(c) * d);
    if (!acc.take().empty()) fail("Leibniz rule fails on (" + name(i) + ", " + name(j) + ", " + name(k) + ")");
  };
  auto jacobi = [&](std::size_t i, std::size_t j, std::size_t k) {
    for (auto [u, v, w] : {std::array{i, j, k}, std::array{j, k, i}, std::array{k, i, j}})
      for (const auto& [l, c] : br(v, w))
        for (const auto& [m, d] : br(u, l)) acc.add(m, std::uint64_t(c) * d);
    if (!acc.take().empty()) fail("Jacobi identity fails on (" + name(i) + ", " + name(j) + ", " + name(k) + ")");
  };
  if (n <= 96) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          leibniz(i, j, k);
          if (i < j && j < k) jacobi(i, j, k);
        }
  } else {
    std::mt19937_64 rng(0x5eed);
    for (int t = 0; t < 200000; ++t) {
      std::size_t i = rng() % n, j = rng() % n, k = rng() % n;
      leibniz(i, j, k);
      jacobi(i, j, k);
    }
  }
}

Vec PoissonTruncation::bracket(const Vec& u, const Vec& v) const {
  const std::size_t n = dim();
  std::vector<std::uint64_t> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!u[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!v[j]) continue;
      std::uint64_t uv = std::uint64_t(u[i]) * v[j] % p();
      for (const auto& e : table_[i * n + j]) acc[e.k] += uv * e.c;
    }
  }
  Vec r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = static_cast<Scalar>(acc[k] % p());
  return r;
}

Matrix PoissonTruncation::ad_matrix(const Vec& u) const {
  const std::size_t n = dim();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!u[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& e : table_[i * n + j]) m.data[e.k][j] = field().add(m.data[e.k][j], field().mul(u[i], e.c));
  }
  return m;
}

std::vector<StructureConstant> PoissonTruncation::bracket_data() const {
  std::vector<StructureConstant> out;
  const std::size_t n = dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& e : table_[i * n + j])
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), e.k, e.c});
  std::sort(out.begin(), out.end());
  return out;
}

std::string PoissonTruncation::to_json() const {
  std::string text = algebra_.to_json();
  // the algebra document ends with "\n}\n"; splice the bracket table in before it
  text.resize(text.size() - 3);
  std::ostringstream os;
  os << text << ",\n  \"bracket\": [";
  auto data = bracket_data();
  for (std::size_t t = 0; t < data.size(); ++t) {
    const auto& b = data[t];
    os << (t ? ",\n    " : "\n    ") << '[' << b.i << ", " << b.j << ", " << b.k << ", " << b.c << ']';
  }
  os << (data.empty() ? "]" : "\n  ]") << "\n}\n";
  return os.str();
}

PoissonTruncation PoissonTruncation::from_json(const std::string& text) {
  FdAlgebra a = FdAlgebra::from_json(text);
  std::vector<StructureConstant> bracket;
  try {
    auto j = nlohmann::json::parse(text);
    for (const auto& t : j.at("bracket")) {
      auto v = t.get<std::vector<std::uint64_t>>();
      if (v.size() != 4) throw Error(Error::Kind::Parse, "poisson json: bracket entries are [i,j,k,c]");
      bracket.push_back({static_cast<std::uint32_t>(v[0]), static_cast<std::uint32_t>(v[1]),
                         static_cast<std::uint32_t>(v[2]), static_cast<Scalar>(v[3] % a.p())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("poisson json: ") + e.what());
  }
  return PoissonTruncation(std::move(a), std::move(bracket));
}

// ---------------------------------------------------------------------------

PoissonIdeal poisson_ideal_generated(const PoissonTruncation& b, const std::vector<Vec>& gens) {
  const FdAlgebra& a = b.algebra();
  EchelonBuilder span(b.field(), b.dim());
  std::vector<Vec> queue;
  auto push = [&](const Vec& v) {
    if (span.rank() < b.dim() && span.insert(v)) queue.push_back(v);
  };
  for (const auto& g : gens) push(g);
  // products and brackets with algebra generators suffice by Leibniz
  for (std::size_t q = 0; q < queue.size(); ++q) {
    Vec v = queue[q];
    for (const auto& g : a.generators()) {
      push(a.mul(g, v));
      push(b.bracket(g, v));
    }
  }
  auto [rows, pivots] = span.rref();
  return PoissonIdeal{Subspace::span(b.field(), b.dim(), rows), true};
}

PoissonIdeal make_poisson_ideal(const PoissonTruncation& b, const Subspace& s) {
  for (const auto& v : s.basis())
    for (std::size_t i = 0; i < b.dim(); ++i) {
      Vec e = unit_vector(b.dim(), i);
      if (!s.contains(b.mul(e, v)))
        throw Error(Error::Kind::ClosureViolation, "subspace is not an ideal (fails against " + b.algebra().label(i) + ")");
      if (!s.contains(b.bracket(e, v)))
        throw Error(Error::Kind::ClosureViolation, "subspace is not bracket-closed (fails against " + b.algebra().label(i) + ")");
    }
  return PoissonIdeal{s, true};
}

PoissonTruncation poisson_quotient(const PoissonTruncation& b, const PoissonIdeal& ideal) {
  if (!ideal.poisson_closed) throw Error(Error::Kind::ClosureViolation, "quotient needs a Poisson ideal");
  FdAlgebra q = quotient_by_ideal(b.algebra(), Ideal{ideal.space, ideal.space.basis(), true});
  std::vector<bool> pivot(b.dim(), false);
  for (auto pc : ideal.space.pivots()) pivot[pc] = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (!pivot[i]) keep.push_back(i);
  std::vector<StructureConstant> br;
  for (std::size_t s = 0; s < keep.size(); ++s)
    for (std::size_t t = 0; t < keep.size(); ++t) {
      Vec r = ideal.space.reduce(b.bracket(unit_vector(b.dim(), keep[s]), unit_vector(b.dim(), keep[t])));
      for (std::size_t k = 0; k < keep.size(); ++k)
        if (r[keep[k]])
          br.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(k), r[keep[k]]});
    }
  return PoissonTruncation(std::move(q), std::move(br));
}

PoissonTruncation poisson_subalgebra(const PoissonTruncation& b, const Subspace& s) {
  FdAlgebra sub = subalgebra(b.algebra(), s);
  const auto& basis = s.basis();
  std::vector<StructureConstant> br;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j) {
      auto c = s.coordinates(b.bracket(basis[i], basis[j]));
      if (!c) throw Error(Error::Kind::ClosureViolation, "subspace is not closed under the bracket");
      for (std::size_t k = 0; k < c->size(); ++k)
        if ((*c)[k])
          br.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k), (*c)[k]});
    }
  return PoissonTruncation(std::move(sub), std::move(br));
}

Subspace poisson_centralizer(const PoissonTruncation& b, const std::vector<Vec>& elements) {
  EchelonBuilder rows(b.field(), b.dim());
  for (const auto& s : elements)
    for (auto& r : b.ad_matrix(s).data)
      if (!is_zero(r)) rows.insert(std::move(r));
  return kernel_of(rows);
}

// ---------------------------------------------------------------------------

PoissonTruncation polynomial_poisson(std::uint32_t p, const std::vector<PoissonVariable>& vars,
                                     const std::vector<GeneratorBracket>& brackets) {
  const std::size_t nv = vars.size();
  Field f(p);
  for (const auto& v : vars)
    if (v.bound == 0 || v.degree == 0) throw Error(Error::Kind::InvalidArgument, "variable bounds and degrees must be positive");

  using Mono = std::vector<unsigned>;
  auto degree = [&](const Mono& m) {
    unsigned d = 0;
    for (std::size_t i = 0; i < nv; ++i) d += m[i] * vars[i].degree;
    return d;
  };
  std::vector<Mono> monos;
  Mono m(nv, 0);
  while (true) {
    monos.push_back(m);
    std::size_t k = 0;
    while (k < nv && ++m[k] == vars[k].bound) m[k++] = 0;
    if (k == nv) break;
  }
  std::sort(monos.begin(), monos.end(), [&](const Mono& l, const Mono& r) {
    unsigned dl = degree(l), dr = degree(r);
    return dl != dr ? dl < dr : l < r;
  });
  std::map<Mono, std::uint32_t> index;
  for (std::size_t i = 0; i < monos.size(); ++i) index[monos[i]] = static_cast<std::uint32_t>(i);
  auto find = [&](const Mono& e) -> std::optional<std::uint32_t> {
    for (std::size_t i = 0; i < nv; ++i)
      if (e[i] >= vars[i].bound) return std::nullopt;
    return index.at(e);
  };

  AlgebraData d;
  d.p = p;
  for (const auto& mono : monos) {
    d.degrees.push_back(degree(mono));
    std::string label;
    for (std::size_t i = 0; i < nv; ++i) {
      if (!mono[i]) continue;
      if (!label.empty()) label += "*";
      label += vars[i].name + (mono[i] > 1 ? "^" + std::to_string(mono[i]) : "");
    }
    d.labels.push_back(label.empty() ? "1" : label);
  }
  const std::size_t n = monos.size();
  d.unit = unit_vector(n, 0);
  d.hbar = Vec(n, 0);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      Mono s(nv);
      for (std::size_t t = 0; t < nv; ++t) s[t] = monos[i][t] + monos[j][t];
      if (auto k = find(s)) d.mult.push_back({i, j, *k, 1});
    }

  // generator bracket table, antisymmetrized
  std::vector<std::vector<Polynomial>> gen(nv, std::vector<Polynomial>(nv));
  for (const auto& gb : brackets) {
    if (gb.i >= nv || gb.j >= nv || gb.i == gb.j) throw Error(Error::Kind::InvalidArgument, "bad generator bracket");
    for (const auto& [e, c] : gb.value) {
      if (e.size() != nv) throw Error(Error::Kind::DimensionMismatch, "bracket polynomial exponent length");
      Scalar& fwd = gen[gb.i][gb.j][e];
      fwd = f.add(fwd, c % p);
      Scalar& bwd = gen[gb.j][gb.i][e];
      bwd = f.sub(bwd, c % p);
    }
  }
  std::vector<StructureConstant> br;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      std::map<std::uint32_t, Scalar> out;
      for (std::size_t i = 0; i < nv; ++i) {
        if (!monos[a][i]) continue;
        for (std::size_t j = 0; j < nv; ++j) {
          if (!monos[b][j] || gen[i][j].empty()) continue;
          Scalar coeff = f.mul(monos[a][i] % p, monos[b][j] % p);
          if (!coeff) continue;
          Mono base(nv);
          for (std::size_t t = 0; t < nv; ++t) base[t] = monos[a][t] + monos[b][t];
          --base[i];
          --base[j];
          for (const auto& [e, c] : gen[i][j]) {
            Mono s(nv);
            for (std::size_t t = 0; t < nv; ++t) s[t] = base[t] + e[t];
            if (auto k = find(s)) out[*k] = f.add(out[*k], f.mul(coeff, c));
          }
        }
      }
      for (const auto& [k, c] : out)
        if (c) br.push_back({a, b, k, c});
    }
  return PoissonTruncation(FdAlgebra(std::move(d)), std::move(br));
}

PoissonTruncation symplectic_truncation(std::uint32_t p, unsigned n, unsigned k) {
  std::vector<PoissonVariable> vars;
  for (unsigned i = 0; i < n; ++i) vars.push_back({n == 1 ? "x" : "x" + std::to_string(i + 1), p * k});
  for (unsigned i = 0; i < n; ++i) vars.push_back({n == 1 ? "y" : "y" + std::to_string(i + 1), p * k});
  std::vector<GeneratorBracket> br;
  for (unsigned i = 0; i < n; ++i) br.push_back({i, n + i, {{std::vector<unsigned>(2 * n, 0), 1}}});
  return polynomial_poisson(p, vars, br);
}

// ---------------------------------------------------------------------------

Vec hbar_bracket(const FdAlgebra& a, const HbarDivision& div, const Vec& u, const Vec& v) {
  auto q = div.divide(a.commutator(u, v));
  if (!q) throw Error(Error::Kind::BracketIllDefined, "[" + format_element(a, u) + ", " + format_element(a, v) + "] is not in hbar*A");
  return std::move(*q);
}

Vec PoissonReduction::project(const Vec& a_coords) const {
  Vec r = kernel.reduce(a_coords);
  Vec out(basis.size());
  for (std::size_t t = 0; t < basis.size(); ++t) out[t] = r[basis[t]];
  return out;
}

Vec PoissonReduction::lift(const Vec& b_coords) const {
  Vec out(kernel.ambient(), 0);
  for (std::size_t t = 0; t < basis.size(); ++t) out[basis[t]] = b_coords[t];
  return out;
}

PoissonReduction reduce_mod_hbar(const FdAlgebra& a) {
  HbarDivision div(a);
  const std::size_t n = a.dim();

  // K: closure of hbar*A + torsion under two-sided multiplication and under
  // (1/hbar)ad of the generators
  EchelonBuilder span(a.field(), n);
  std::vector<Vec> queue;
  auto push = [&](const Vec& v) {
    if (span.rank() < n && span.insert(v)) queue.push_back(v);
  };
  for (const auto& v : div.image().basis()) push(v);
  for (const auto& v : div.torsion().basis()) push(v);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    Vec v = queue[q];
    for (const auto& g : a.generators()) {
      push(a.mul(g, v));
      push(a.mul(v, g));
      push(hbar_bracket(a, div, g, v));
    }
  }
  auto [rows, pivots] = span.rref();
  Subspace k = Subspace::span(a.field(), n, rows);
  if (k.dim() == n)
    throw Error(Error::Kind::PrecisionExhausted,
                "truncation too shallow: the Poisson reduction of this algebra is zero");

  std::vector<bool> pivot(n, false);
  for (auto pc : k.pivots()) pivot[pc] = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (!pivot[i]) keep.push_back(i);

  auto project = [&](const Vec& v) {
    Vec r = k.reduce(v);
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
  d.hbar = Vec(keep.size(), 0);
  std::vector<StructureConstant> br;
  for (std::uint32_t s = 0; s < keep.size(); ++s)
    for (std::uint32_t t = 0; t < keep.size(); ++t) {
      Vec es = a.basis(keep[s]), et = a.basis(keep[t]);
      Vec prod = project(a.mul(es, et));
      for (std::uint32_t c = 0; c < prod.size(); ++c)
        if (prod[c]) d.mult.push_back({s, t, c, prod[c]});
      Vec b = project(hbar_bracket(a, div, es, et));
      for (std::uint32_t c = 0; c < b.size(); ++c)
        if (b[c]) br.push_back({s, t, c, b[c]});
    }
  return PoissonReduction{PoissonTruncation(FdAlgebra(std::move(d)), std::move(br)), std::move(k), std::move(keep)};
}

// ---------------------------------------------------------------------------

Matrix ad_power_matrix(const PoissonTruncation& b, const Vec& f, unsigned k) {
  return power(b.field(), b.ad_matrix(f), k);
}

PoissonWitness restricted_witness_poisson(const PoissonTruncation& b, const Vec& f, const Subspace* within) {
  const Field& fld = b.field();
  const std::size_t n = b.dim();
  Matrix dp = ad_power_matrix(b, f, b.p());
  std::vector<Vec> domain;
  if (within) domain = within->basis();
  else
    for (std::size_t i = 0; i < n; ++i) domain.push_back(unit_vector(n, i));

  // ad(f)^p and ad(c) are derivations, so they agree once they agree on generators
  const auto& gens = b.algebra().generators();
  std::vector<Vec> columns;
  for (const auto& d : domain) {
    Vec col;
    for (const auto& g : gens) {
      Vec part = b.bracket(d, g);
      col.insert(col.end(), part.begin(), part.end());
    }
    columns.push_back(std::move(col));
  }
  Vec rhs;
  for (const auto& g : gens) {
    Vec part = apply(fld, dp, g);
    rhs.insert(rhs.end(), part.begin(), part.end());
  }
  Matrix m = Matrix::from_columns(columns, n * gens.size());
  auto t = solve(fld, m, rhs);
  if (!t)
    throw Error(Error::Kind::NotWeaklyRestricted,
                "no restricted witness for " + format_element(b.algebra(), f) + (within ? " in the given subspace" : ""));
  PoissonWitness w{f, Vec(n, 0), kernel(fld, m).dim()};
  for (std::size_t k = 0; k < domain.size(); ++k) w.witness = axpy(fld, (*t)[k], domain[k], std::move(w.witness));
  return w;
}

// ---------------------------------------------------------------------------

DarbouxReport verify_darboux_form(const PoissonTruncation& b, const std::vector<Pair>& pairs) {
  DarbouxReport r;
  const FdAlgebra& a = b.algebra();
  auto record = [&](std::string name, bool ok, std::string detail) {
    r.pass = r.pass && ok;
    r.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  auto tag = [](const char* s, std::size_t i) { return std::string(s) + std::to_string(i + 1); };
  const std::size_t n = pairs.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Vec expected = i == j ? a.unit() : a.zero();
      Vec got = b.bracket(pairs[i].first, pairs[j].second);
      record("{" + tag("z", i) + ", " + tag("w", j) + "}", got == expected, format_element(a, got));
      if (i < j) {
        Vec zz = b.bracket(pairs[i].first, pairs[j].first);
        record("{" + tag("z", i) + ", " + tag("z", j) + "}", is_zero(zz), format_element(a, zz));
        Vec ww = b.bracket(pairs[i].second, pairs[j].second);
        record("{" + tag("w", i) + ", " + tag("w", j) + "}", is_zero(ww), format_element(a, ww));
      }
    }
  const Matrix zero(b.dim(), b.dim());
  for (std::size_t i = 0; i < n; ++i) {
    record("ad(" + tag("z", i) + ")^p = 0", ad_power_matrix(b, pairs[i].first, b.p()) == zero, "");
    record("ad(" + tag("w", i) + ")^p = 0", ad_power_matrix(b, pairs[i].second, b.p()) == zero, "");
  }
  std::vector<Vec> gens;
  for (const auto& [z, w] : pairs) {
    gens.push_back(z);
    gens.push_back(w);
  }
  Subspace span = generated_subalgebra(a, gens);
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (!span.contains(a.basis(i))) {
      r.missing_monomial = a.label(i);
      break;
    }
  record("monomials in the pairs span B", r.missing_monomial.empty(),
         r.missing_monomial.empty() ? "" : "missing " + r.missing_monomial);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Echelon-basis columns for a linear solve over several subspaces at once.
std::optional<std::vector<Vec>> solve_in_blocks(const Field& f, const std::vector<std::vector<Vec>>& blocks, const Vec& rhs) {
  std::vector<Vec> columns;
  for (const auto& b : blocks) columns.insert(columns.end(), b.begin(), b.end());
  if (columns.empty()) {
    if (is_zero(rhs)) return std::vector<Vec>(blocks.size());
    return std::nullopt;
  }
  auto t = solve(f, Matrix::from_columns(columns, rhs.size()), rhs);
  if (!t) return std::nullopt;
  std::vector<Vec> out;
  std::size_t k = 0;
  for (const auto& b : blocks) {
    out.emplace_back((*t).begin() + k, (*t).begin() + k + b.size());
    k += b.size();
  }
  return out;
}

Vec combine(const Field& f, const std::vector<Vec>& basis, const Vec& coeffs, std::size_t n) {
  Vec out(n, 0);
  for (std::size_t k = 0; k < basis.size(); ++k)
    if (coeffs[k]) out = axpy(f, coeffs[k], basis[k], std::move(out));
  return out;
}

struct PoissonLifter {
  const PoissonTruncation& b;
  const Subspace& jprime;  // I
  std::vector<PoissonLiftStep>& steps;
  std::size_t pair_index;

  const Field& f() const { return b.field(); }
  const FdAlgebra& a() const { return b.algebra(); }

  std::vector<Subspace> j_ladder() const {
    // J = I + (p-th powers of m) B; the p-th power map is additive here
    std::vector<Vec> gens = jprime.basis();
    for (std::size_t i = 0; i < b.dim(); ++i)
      if (a().degree(i) >= 1) gens.push_back(a().power(a().basis(i), b.p()));
    Ideal j = ideal_generated(a(), gens);
    std::vector<Subspace> ladder{Subspace::full(f(), b.dim()), j.space};
    Ideal cur = j;
    while (ladder.back().dim() > 0) {
      cur = ideal_product(a(), cur, j);
      ladder.push_back(cur.space);
    }
    return ladder;
  }

  static unsigned level(const std::vector<Subspace>& ladder, const Vec& v) {
    unsigned k = 0;
    while (k + 1 < ladder.size() && ladder[k + 1].contains(v)) ++k;
    return k;
  }

  // Phase 1: make {f, g} = 1 by the decomposition of the defect.
  void bracket_phase(Vec& fx, Vec& gy) {
    auto ladder = j_ladder();
    for (std::size_t guard = 0; guard <= ladder.size() + 1; ++guard) {
      Vec defect = a().sub(b.bracket(fx, gy), a().unit());
      if (is_zero(defect)) return;
      unsigned k = level(ladder, defect);
      if (k == 0) throw Error(Error::Kind::PreconditionDefectNotInIdeal, "bracket defect is not in J");
      const Subspace& jk = ladder[k];
      const Subspace& jk1 = ladder[k + 1];
      Vec fpm1 = a().power(fx, b.p() - 1);
      std::vector<Vec> b1, b2, b3;
      for (const auto& v : jk.basis()) b1.push_back(a().mul(fpm1, v));
      Subspace narrow = jprime.intersect(jk);
      for (const auto& v : narrow.basis()) b2.push_back(b.bracket(gy, v));
      b3 = jk1.basis();
      auto sol = solve_in_blocks(f(), {b1, b2, b3}, defect);
      if (!sol)
        throw Error(Error::Kind::InvariantViolation,
                    "defect has no decomposition f^(p-1) J^k + {g, J' cap J^k} + J^(k+1) at level " + std::to_string(k));
      Vec z2 = combine(f(), narrow.basis(), (*sol)[1], b.dim());
      fx = a().add(fx, z2);
      steps.push_back({pair_index, "bracket-f", k, z2});

      auto w = restricted_witness_poisson(b, gy, &jprime);
      Vec shift = a().mul(a().power(fx, b.p() - 1), w.witness);
      gy = a().add(gy, shift);
      steps.push_back({pair_index, "bracket-g", k, shift});

      Vec next = a().sub(b.bracket(fx, gy), a().unit());
      if (!jk1.contains(next))
        throw Error(Error::Kind::InvariantViolation, "bracket defect did not move from J^" + std::to_string(k) + " to J^" + std::to_string(k + 1));
    }
    throw Error(Error::Kind::PrecisionExhausted, "bracket correction did not terminate");
  }

  // Phase 2: x <- x + y^(p-1) x^[p] until ad(x)^p = 0. `sign` handles the
  // swapped pair (g, -f), whose (p-1)-th power is the same.
  void restrict_phase(Vec& moving, const Vec& other, const char* name) {
    const Matrix zero(b.dim(), b.dim());
    Vec opm1 = a().power(other, b.p() - 1);
    for (unsigned guard = 0; guard <= a().truncation() + 1; ++guard) {
      if (ad_power_matrix(b, moving, b.p()) == zero) return;
      auto w = restricted_witness_poisson(b, moving, &jprime);
      Vec shift = a().mul(opm1, w.witness);
      moving = a().add(moving, shift);
      steps.push_back({pair_index, name, a().valuation(w.witness), shift});
    }
    throw Error(Error::Kind::PrecisionExhausted, std::string(name) + " did not terminate");
  }
};

// Projection to the centralizer of an exact pair {z, w} = 1 with
// ad(z)^p = ad(w)^p = 0: a -> sum_k (-1)^k w^k ad(z)^k a / k!, then the same
// with z^k ad(w)^k.
Vec project_to_centralizer(const PoissonTruncation& b, const Vec& z, const Vec& w, Vec v) {
  const Field& f = b.field();
  const FdAlgebra& a = b.algebra();
  auto sweep = [&](const Vec& mover, const Vec& mult, bool alternate, const Vec& in) {
    Vec out = in, term = in, powk = a.unit();
    Scalar fact = 1;
    for (unsigned k = 1; k < b.p(); ++k) {
      term = b.bracket(mover, term);
      powk = a.mul(powk, mult);
      fact = f.mul(fact, k);
      Scalar c = f.inv(fact);
      if (alternate && k % 2) c = f.neg(c);
      out = axpy(f, c, a.mul(powk, term), std::move(out));
    }
    return out;
  };
  v = sweep(z, w, true, v);
  return sweep(w, z, false, v);
}

void lift_recursive(const PoissonTruncation& b, const Subspace& ideal, std::vector<Pair> pairs,
                    std::size_t offset, PoissonLift& out, const std::vector<Vec>& embed) {
  if (pairs.empty()) return;
  auto [fx, gy] = pairs.front();
  PoissonLifter lifter{b, ideal, out.steps, offset};
  lifter.bracket_phase(fx, gy);
  lifter.restrict_phase(fx, gy, "restrict-x");
  lifter.restrict_phase(gy, fx, "restrict-y");

  auto to_top = [&](const Vec& v) { return combine(b.field(), embed, v, embed.empty() ? 0 : embed.front().size()); };
  out.pairs.emplace_back(to_top(fx), to_top(gy));
  if (pairs.size() == 1) return;

  Subspace cent = poisson_centralizer(b, {fx, gy});
  PoissonTruncation sub = poisson_subalgebra(b, cent);
  Subspace sub_ideal(b.field(), cent.dim());
  {
    std::vector<Vec> gens;
    Subspace inside = ideal.intersect(cent);
    for (const auto& v : inside.basis()) gens.push_back(*cent.coordinates(v));
    sub_ideal = Subspace::span(b.field(), cent.dim(), gens);
  }
  std::vector<Pair> rest;
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    Pair projected;
    for (auto [src, dst] : {std::pair{&pairs[i].first, &projected.first}, std::pair{&pairs[i].second, &projected.second}}) {
      Vec v = project_to_centralizer(b, fx, gy, *src);
      if (!ideal.contains(b.algebra().sub(v, *src)))
        throw Error(Error::Kind::PreconditionViolation, "projection of a later pair left its residue class");
      *dst = *cent.coordinates(v);
    }
    rest.push_back(std::move(projected));
  }
  std::vector<Vec> sub_embed;
  for (const auto& v : cent.basis()) sub_embed.push_back(to_top(v));
  lift_recursive(sub, sub_ideal, std::move(rest), offset + 1, out, sub_embed);
}

}  // namespace

PoissonLift poisson_darboux_lift(const PoissonTruncation& b, const PoissonIdeal& ideal, const std::vector<Pair>& pairs) {
  const FdAlgebra& a = b.algebra();
  if (!ideal.poisson_closed) throw Error(Error::Kind::ClosureViolation, "lift needs a Poisson ideal");
  if (!a.is_local()) throw Error(Error::Kind::PreconditionViolation, "B must be local");
  if (!a.filtration(1).contains(ideal.space)) throw Error(Error::Kind::PreconditionViolation, "I must lie in the maximal ideal");
  const Subspace& i = ideal.space;
  const std::size_t n = pairs.size();
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw Error(Error::Kind::PreconditionViolation, what + " fails modulo I");
  };
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      Vec expected = s == t ? a.unit() : a.zero();
      need(i.contains(a.sub(b.bracket(pairs[s].first, pairs[t].second), expected)), "{x_i, y_j} = delta_ij");
      need(i.contains(b.bracket(pairs[s].first, pairs[t].first)), "{x_i, x_j} = 0");
      need(i.contains(b.bracket(pairs[s].second, pairs[t].second)), "{y_i, y_j} = 0");
    }
  for (const auto& [x, y] : pairs)
    for (const Vec* v : {&x, &y}) {
      Matrix m = ad_power_matrix(b, *v, b.p());
      for (std::size_t k = 0; k < b.dim(); ++k) need(i.contains(apply(b.field(), m, a.basis(k))), "ad(x)^p = 0");
    }

  PoissonLift out;
  std::vector<Vec> embed;
  for (std::size_t k = 0; k < b.dim(); ++k) embed.push_back(a.basis(k));
  lift_recursive(b, i, pairs, 0, out, embed);
  return out;
}

}  // namespace charpq
