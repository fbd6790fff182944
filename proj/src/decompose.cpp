#include "charpq/decompose.hpp"

namespace charpq {

namespace {

bool is_central(const FdAlgebra& a, const Vec& v) {
  for (const auto& g : a.generators())
    if (!is_zero(a.commutator(g, v))) return false;
  return true;
}

std::string pair_name(const char* s, std::size_t i) { return std::string(s) + std::to_string(i + 1); }

// span{u v : u in U, v in V}, stopping once it fills the ambient space
EchelonBuilder product_span(const FdAlgebra& a, const Subspace& u, const Subspace& v) {
  EchelonBuilder span(a.field(), a.dim());
  for (const auto& x : u.basis())
    for (const auto& y : v.basis()) {
      if (span.rank() == a.dim()) return span;
      span.insert(a.mul(x, y));
    }
  return span;
}

Error staged(const std::string& stage, const Error& e) { return Error(e.kind(), stage + ": " + e.what()); }

}  // namespace

SplitResult split_by_weyl_pairs(const FdAlgebra& a, const std::vector<Pair>& pairs,
                                const std::optional<Vec>& planck) {
  const Vec h = planck ? *planck : a.hbar();
  const std::uint32_t p = a.p();
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [zi, wi] = pairs[i];
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const auto& [zj, wj] = pairs[j];
      Vec want = i == j ? h : a.zero();
      if (a.commutator(zi, wj) != want) failed.push_back("[" + pair_name("z", i) + ", " + pair_name("w", j) + "]");
      if (i < j && !is_zero(a.commutator(zi, zj))) failed.push_back("[" + pair_name("z", i) + ", " + pair_name("z", j) + "]");
      if (i < j && !is_zero(a.commutator(wi, wj))) failed.push_back("[" + pair_name("w", i) + ", " + pair_name("w", j) + "]");
    }
    if (!is_central(a, a.power(zi, p))) failed.push_back(pair_name("z", i) + "^p central");
    if (!is_central(a, a.power(wi, p))) failed.push_back(pair_name("w", i) + "^p central");
  }

  SplitResult out;
  out.pairs = pairs;
  std::vector<Vec> gens;
  for (const auto& [z, w] : pairs) {
    gens.push_back(z);
    gens.push_back(w);
  }
  out.h = generated_subalgebra(a, gens);
  Subspace cent = centralizer(a, gens);
  out.center_h = out.h.intersect(cent);
  for (const auto& c : out.center_h.basis())
    if (!is_central(a, c)) {
      failed.push_back("Z(H) in Z(A) (fails at " + format_element(a, c) + ")");
      break;
    }
  if (!failed.empty()) {
    std::string msg = "Weyl pair relations fail:";
    for (const auto& f : failed) msg += " " + f;
    throw Error(Error::Kind::PreconditionViolation, msg);
  }
  out.s_prime = std::move(cent);

  auto& c = out.certificate;
  c.algebra = a.dim();
  c.h = out.h.dim();
  c.center_h = out.center_h.dim();
  c.s_prime = out.s_prime.dim();
  EchelonBuilder image = product_span(a, out.h, out.s_prime);
  c.product_rank = image.rank();
  c.surjective = c.product_rank == c.algebra;
  c.dimension_identity = c.algebra * c.center_h == c.h * c.s_prime;
  c.s_prime_contains_center = out.s_prime.contains(center(a));
  c.h_meets_s_prime_in_center = out.h.intersect(out.s_prime) == out.center_h;

  if (!c.surjective) {
    for (std::size_t i = 0; i < a.dim(); ++i)
      if (!is_zero(image.reduce(a.basis(i))))
        throw Error(Error::Kind::DecompositionMismatch, "H S' misses " + a.label(i) + " (rank " +
                                                            std::to_string(c.product_rank) + " of " +
                                                            std::to_string(c.algebra) + ")");
  }
  if (!c.dimension_identity)
    throw Error(Error::Kind::DecompositionMismatch,
                "dim A * dim Z(H) = " + std::to_string(c.algebra * c.center_h) + " but dim H * dim S' = " +
                    std::to_string(c.h * c.s_prime));
  return out;
}

IdealSplit split_ideal(const FdAlgebra& a, SplitResult& split, const Ideal& ideal) {
  if (!ideal.two_sided) throw Error(Error::Kind::ClosureViolation, "ideal is not certified two-sided");
  const Field& f = a.field();
  auto hbar_times = [&](const Subspace& s) {
    std::vector<Vec> v;
    for (const auto& b : s.basis()) v.push_back(a.mul(a.hbar(), b));
    return Subspace::span(f, a.dim(), v);
  };
  Subspace hi = hbar_times(ideal.space);
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (const auto& v : ideal.space.basis())
      if (!hi.contains(a.commutator(a.basis(i), v)))
        throw Error(Error::Kind::ClosureViolation,
                    "(1/hbar)[" + a.label(i) + ", -] leaves the ideal at " + format_element(a, v));

  Subspace restricted = ideal.space.intersect(split.s_prime);
  EchelonBuilder span = product_span(a, split.h, restricted);
  auto [rows, piv] = span.rref();
  if (Subspace::span(f, a.dim(), rows) != ideal.space)
    throw Error(Error::Kind::DecompositionMismatch,
                "H I' has dim " + std::to_string(rows.size()) + ", I has dim " + std::to_string(ideal.space.dim()));

  Subspace hr = hbar_times(restricted);
  bool closed = true;
  for (const auto& s : split.s_prime.basis())
    for (const auto& v : restricted.basis())
      if (!hr.contains(a.commutator(s, v))) closed = false;
  split.ideal_splits.emplace_back(ideal.space, restricted);
  bool two_sided = is_two_sided(a, restricted);
  return IdealSplit{Ideal{restricted, restricted.basis(), two_sided}, closed};
}

FdAlgebra matrix_algebra(const Field& f, const std::vector<Matrix>& gens, const std::vector<std::string>& names) {
  if (gens.empty() || gens.size() != names.size())
    throw Error(Error::Kind::InvalidArgument, "need one name per generator");
  const std::size_t n = gens[0].rows;
  for (const auto& g : gens)
    if (g.rows != n || g.cols != n) throw Error(Error::Kind::DimensionMismatch, "generators must be square of one size");
  auto flat = [&](const Matrix& m) {
    Vec v;
    v.reserve(n * n);
    for (const auto& r : m.data) v.insert(v.end(), r.begin(), r.end());
    return v;
  };

  struct Word {
    std::vector<std::size_t> letters;
    Matrix m;
  };
  std::vector<Word> basis{{{}, Matrix::identity(n)}};
  EchelonBuilder seen(f, n * n);
  seen.insert(flat(basis[0].m));
  for (std::size_t next = 0; next < basis.size(); ++next)
    for (std::size_t g = 0; g < gens.size(); ++g) {
      Matrix m = multiply(f, basis[next].m, gens[g]);
      if (!seen.insert(flat(m))) continue;
      auto letters = basis[next].letters;
      letters.push_back(g);
      basis.push_back({std::move(letters), std::move(m)});
    }

  auto label = [&](const std::vector<std::size_t>& w) {
    if (w.empty()) return std::string("1");
    std::string s;
    for (std::size_t i = 0; i < w.size();) {
      std::size_t j = i;
      while (j < w.size() && w[j] == w[i]) ++j;
      if (!s.empty()) s += "*";
      s += names[w[i]];
      if (j - i > 1) s += "^" + std::to_string(j - i);
      i = j;
    }
    return s;
  };

  std::vector<Vec> cols;
  for (const auto& w : basis) cols.push_back(flat(w.m));
  Matrix coords = Matrix::from_columns(cols, n * n);
  const std::size_t d = basis.size();
  AlgebraData data;
  data.p = f.p();
  data.degrees.assign(d, 0);
  data.unit = Vec(d, 0);
  data.unit[0] = 1;
  data.hbar = Vec(d, 0);
  for (const auto& w : basis) data.labels.push_back(label(w.letters));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      auto c = solve(f, coords, flat(multiply(f, basis[i].m, basis[j].m)));
      if (!c) throw Error(Error::Kind::InvariantViolation, "word span is not closed under products");
      for (std::size_t k = 0; k < d; ++k)
        if ((*c)[k])
          data.mult.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                               static_cast<std::uint32_t>(k), (*c)[k]});
    }
  return FdAlgebra(std::move(data));
}

LocalModel localize_pipeline(const FdAlgebra& a, const PoissonIdeal& ideal, const std::vector<Pair>& pairs) {
  auto wc = check_weakly_central(a);
  if (!wc.pass)
    throw Error(Error::Kind::PreconditionViolation,
                "weakly-central: " + (wc.failures.empty() ? std::string("failed") : wc.failures.front()));
  if (!a.is_local()) throw Error(Error::Kind::PreconditionViolation, "local: A/hbar A is not local");

  std::optional<PoissonReduction> red;
  try {
    red = reduce_mod_hbar(a);
  } catch (const Error& e) {
    throw staged("reduce", e);
  }
  const auto& b = red->poisson;

  if (!pairs.empty()) {
    try {
      PoissonTruncation q = poisson_quotient(b, ideal);
      std::vector<bool> pivot(b.dim(), false);
      for (auto pc : ideal.space.pivots()) pivot[pc] = true;
      auto project = [&](const Vec& v) {
        Vec r = ideal.space.reduce(v), out;
        for (std::size_t i = 0; i < b.dim(); ++i)
          if (!pivot[i]) out.push_back(r[i]);
        return out;
      };
      std::vector<Pair> qp;
      for (const auto& [x, y] : pairs) qp.emplace_back(project(x), project(y));
      auto dr = verify_darboux_form(q, qp);
      if (!dr.pass) {
        std::string msg = "pairs are not Darboux on B/I:";
        for (const auto& c : dr.checks)
          if (!c.pass) msg += " " + c.name;
        throw Error(Error::Kind::PreconditionViolation, msg);
      }
    } catch (const Error& e) {
      throw staged("poisson", e);
    }
  }

  LiftReport lift;
  std::vector<Pair> lifted;
  if (!pairs.empty()) {
    try {
      lift = darboux_lift_full(a, *red, ideal, pairs);
    } catch (const Error& e) {
      throw staged("lift", e);
    }
    if (!lift.pass) throw Error(Error::Kind::InvariantViolation, "lift: certificates failed");
    lifted = lift.pairs;
  }

  std::optional<SplitResult> split;
  try {
    split = split_by_weyl_pairs(a, lifted);
  } catch (const Error& e) {
    throw staged("split", e);
  }

  std::optional<FdAlgebra> a_plus;
  try {
    a_plus = subalgebra(a, split->s_prime);
  } catch (const Error& e) {
    throw staged("a-plus", e);
  }
  auto a_plus_wc = check_weakly_central(*a_plus);

  bool restricted_closed = true;
  for (const auto& s : split->s_prime.basis()) {
    try {
      restricted_power(a, s, &split->s_prime);
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::NotWeaklyCentral) throw staged("restricted", e);
      restricted_closed = false;
      break;
    }
  }

  std::optional<PoissonReduction> l;
  try {
    l = reduce_mod_hbar(*a_plus);
  } catch (const Error& e) {
    throw staged("local-poisson", e);
  }
  const auto& la = l->poisson.algebra();

  // J' = rho^{-1}(I), then its trace on A+ pushed down to L
  std::vector<Vec> jgens = red->kernel.basis();
  for (const auto& v : ideal.space.basis()) jgens.push_back(red->lift(v));
  Subspace jprime = Subspace::span(a.field(), a.dim(), jgens);
  Subspace jplus = jprime.intersect(split->s_prime);
  std::vector<Vec> il;
  for (const auto& v : jplus.basis()) il.push_back(l->project(*split->s_prime.coordinates(v)));
  Subspace ideal_in_l = Subspace::span(la.field(), la.dim(), il);

  Subspace m_prime(la.field(), la.dim());
  bool m_ok = la.is_local();
  if (m_ok) {
    m_prime = la.filtration(1);
    m_ok = m_prime.contains(ideal_in_l);
    for (const auto& u : m_prime.basis()) {
      if (!m_ok) break;
      for (const auto& v : m_prime.basis())
        if (!ideal_in_l.contains(l->poisson.bracket(u, v))) {
          m_ok = false;
          break;
        }
    }
  }

  return LocalModel{std::move(lift),  std::move(*split),       std::move(*a_plus),
                    std::move(*l),    std::move(m_prime),      std::move(ideal_in_l),
                    std::move(a_plus_wc), m_ok, restricted_closed};
}

KwReport kw_divisibility_check(const Field& f, const WeylModule& m) {
  const std::size_t n = m.x.size(), d = m.hbar.rows;
  if (m.y.size() != n) throw Error(Error::Kind::RepresentationInvalid, "need as many y_i as x_i");
  auto square = [&](const Matrix& g) { return g.rows == d && g.cols == d; };
  if (!square(m.hbar)) throw Error(Error::Kind::RepresentationInvalid, "hbar action is not square");
  for (std::size_t i = 0; i < n; ++i)
    if (!square(m.x[i]) || !square(m.y[i]))
      throw Error(Error::Kind::RepresentationInvalid, "generator " + std::to_string(i + 1) + " has the wrong size");

  const Matrix zero(d, d);
  auto bracket = [&](const Matrix& u, const Matrix& v) { return subtract(f, multiply(f, u, v), multiply(f, v, u)); };
  auto require = [&](bool ok, const std::string& rel) {
    if (!ok) throw Error(Error::Kind::RepresentationInvalid, "relation " + rel + " fails");
  };
  for (std::size_t i = 0; i < n; ++i) {
    require(bracket(m.hbar, m.x[i]) == zero, "[hbar, " + pair_name("x", i) + "] = 0");
    require(bracket(m.hbar, m.y[i]) == zero, "[hbar, " + pair_name("y", i) + "] = 0");
    for (std::size_t j = 0; j < n; ++j) {
      require(bracket(m.x[i], m.y[j]) == (i == j ? m.hbar : zero),
              "[" + pair_name("x", i) + ", " + pair_name("y", j) + "] = " + (i == j ? "hbar" : "0"));
      if (i < j) {
        require(bracket(m.x[i], m.x[j]) == zero, "[" + pair_name("x", i) + ", " + pair_name("x", j) + "] = 0");
        require(bracket(m.y[i], m.y[j]) == zero, "[" + pair_name("y", i) + ", " + pair_name("y", j) + "] = 0");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(power(f, m.x[i], static_cast<unsigned>(d)) == zero))
      throw Error(Error::Kind::PreconditionViolation, pair_name("x", i) + " does not act nilpotently");
    if (!(power(f, m.y[i], static_cast<unsigned>(d)) == zero))
      throw Error(Error::Kind::PreconditionViolation, pair_name("y", i) + " does not act nilpotently");
  }

  KwReport r;
  r.dim = d;
  r.n = static_cast<unsigned>(n);
  if (rank(f, m.hbar) == d) {
    r.rank = d;
  } else {
    Matrix hk = m.hbar;
    unsigned order = 1;
    while (!(hk == zero) && order <= d) {
      hk = multiply(f, hk, m.hbar);
      ++order;
    }
    if (!(hk == zero)) throw Error(Error::Kind::RepresentationInvalid, "hbar acts neither invertibly nor nilpotently");
    r.hbar_order = order;
    std::size_t top = d - rank(f, m.hbar);
    if (top * order != d)
      throw Error(Error::Kind::RepresentationInvalid, "module is not free over F_p[hbar]/(hbar^" + std::to_string(order) + ")");
    r.rank = top;
  }
  r.p_power = 1;
  for (unsigned i = 0; i < n; ++i) r.p_power *= f.p();
  r.divisible = r.rank % r.p_power == 0;
  return r;
}

}  // namespace charpq
