#include <algorithm>
#include <functional>
#include <random>

#include "charpq/fdalgebra.hpp"
#include "doctest.h"

using namespace charpq;

namespace {

Vec el(const FdAlgebra& a, const std::string& label) {
  auto i = a.find_label(label);
  REQUIRE_MESSAGE(i.has_value(), "missing basis label " << label);
  return a.basis(*i);
}

Vec random_vec(std::mt19937& rng, const FdAlgebra& a, unsigned min_degree = 0) {
  Vec v(a.dim(), 0);
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a.degree(i) >= min_degree) v[i] = static_cast<Scalar>(rng() % a.p());
  return v;
}

// Brute-force centrality: commutes with every basis element.
bool commutes_with_all(const FdAlgebra& a, const Vec& v) {
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (!is_zero(a.commutator(v, a.basis(i)))) return false;
  return true;
}

// Upper triangular 2x2 matrices: basis e11, e12, e22, all of degree 0, hbar = 0.
FdAlgebra upper_triangular(std::uint32_t p) {
  AlgebraData d;
  d.p = p;
  d.degrees = {0, 0, 0};
  d.labels = {"e11", "e12", "e22"};
  d.unit = {1, 0, 1};
  d.hbar = {0, 0, 0};
  d.mult = {{0, 0, 0, 1}, {0, 1, 1, 1}, {1, 2, 1, 1}, {2, 2, 2, 1}};
  return FdAlgebra(d);
}

std::size_t count_monomials(unsigned n, unsigned below) {
  // weight |a|+|b|+2m < below, by direct enumeration
  std::size_t count = 0;
  std::vector<unsigned> e(2 * n + 1, 0);
  std::function<void(unsigned, unsigned)> rec = [&](unsigned k, unsigned w) {
    if (k == e.size()) {
      ++count;
      return;
    }
    unsigned step = k == 2 * n ? 2 : 1;
    for (unsigned v = 0; w + v * step < below; ++v) rec(k + 1, w + v * step);
  };
  rec(0, 0);
  return count;
}

}  // namespace

TEST_CASE("Weyl truncation dimensions and labels") {
  auto a = from_weyl_truncation(3, 1, 3);
  CHECK(a.dim() == 7);
  auto labels = a.labels();
  std::sort(labels.begin(), labels.end());
  CHECK(labels == std::vector<std::string>{"1", "h", "x", "x*y", "x^2", "y", "y^2"});
  CHECK(a.commutator(el(a, "x"), el(a, "y")) == el(a, "h"));
  // 35 monomials in x1,x2,y1,y2 of degree <= 3, plus h times the 5 of degree <= 1
  CHECK(count_monomials(2, 4) == 40);
  CHECK(from_weyl_truncation(5, 2, 4).dim() == 40);
  CHECK(from_weyl_truncation(3, 2, 7).dim() == count_monomials(2, 7));
  try {
    from_weyl_truncation(3, 1, 2);
    FAIL("M = 2 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::InvalidArgument);
  }
  try {
    from_weyl_truncation(3, 2, 12, 100);
    FAIL("cap ignored");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::SizeOverflow);
  }
}

TEST_CASE("construction rejects corrupted tables") {
  auto data = from_weyl_truncation(3, 1, 4).data();
  // y*x = x*y - h - x breaks the filtration
  auto bad = data;
  bad.mult.push_back({2, 1, 1, 2});
  CHECK_THROWS_AS(FdAlgebra{bad}, Error);
  // change one coefficient of x*x -> 2 x^2: associativity fails on (x, x, y)
  bad = data;
  for (auto& sc : bad.mult)
    if (sc.i == 1 && sc.j == 1) sc.c = 2;
  try {
    FdAlgebra broken(bad);
    FAIL("corrupted table accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::NotAssociative);
  }
  bad = data;
  bad.hbar = bad.unit;
  CHECK_THROWS_AS(FdAlgebra{bad}, Error);
}

TEST_CASE("json round trip") {
  auto a = from_weyl_truncation(3, 1, 5);
  auto text = a.to_json();
  auto b = FdAlgebra::from_json(text);
  CHECK(b.to_json() == text);
  CHECK(b.dim() == a.dim());
  auto t = tensor_with_central(from_weyl_truncation(5, 1, 4), truncated_polynomial(5, 3));
  CHECK(FdAlgebra::from_json(t.to_json()).to_json() == t.to_json());
  try {
    FdAlgebra::from_json("{\"p\": 3}");
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Parse);
  }
}

TEST_CASE("center and centralizer examples") {
  auto a = from_weyl_truncation(3, 1, 6);
  auto z = center(a);
  for (const char* s : {"1", "h", "x^3", "y^3"}) CHECK(z.contains(el(a, s)));
  for (const auto& v : z.basis()) CHECK(commutes_with_all(a, v));
  // rank of the stacked ad maps, computed with a different routine
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (auto& r : a.ad_matrix(a.basis(i)).data) rows.push_back(r);
  CHECK(z.dim() == a.dim() - rank(a.field(), Matrix::from_rows(rows, a.dim())));

  CHECK(centralizer(a, {a.unit()}) == Subspace::full(a.field(), a.dim()));
  Vec x = el(a, "x");
  auto cx = centralizer(a, {x});
  for (const auto& v : cx.basis()) CHECK(is_zero(a.commutator(x, v)));
  CHECK(cx.dim() == a.dim() - rank(a.field(), a.ad_matrix(x)));
  for (const char* s : {"x", "x^2", "x^5", "x*h", "y^3", "x*y^3", "h^2"}) CHECK(cx.contains(el(a, s)));
  CHECK(!cx.contains(el(a, "y")));
  // y^5 commutes with x only because h*y^4 falls off the truncation
  CHECK(cx.contains(el(a, "y^5")));
}

TEST_CASE("ideal examples") {
  auto a = from_weyl_truncation(3, 1, 6);
  CHECK(ideal_generated(a, {a.unit()}).space.dim() == a.dim());

  auto h = ideal_generated(a, {el(a, "h")});
  CHECK(h.space.dim() == count_monomials(1, 4));
  std::vector<Vec> with_h;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a.label(i).find('h') != std::string::npos) with_h.push_back(a.basis(i));
  CHECK(h.space == Subspace::span(a.field(), a.dim(), with_h));
  CHECK(h.space == hbar_ideal(a).space);

  auto m = ideal_generated(a, {el(a, "x"), el(a, "y"), el(a, "h")});
  CHECK(m.space == a.filtration(1));
  CHECK(ideal_power(a, m, 2).space == a.filtration(2));
  CHECK(ideal_power(a, m, 0).space.dim() == a.dim());
  CHECK(make_ideal(a, a.filtration(3)).two_sided);
  CHECK_THROWS_AS(make_ideal(a, Subspace::span(a.field(), a.dim(), {el(a, "x")})), Error);
}

TEST_CASE("tensor and quotient examples") {
  auto a = from_weyl_truncation(3, 1, 5);
  auto trivial = tensor_with_central(a, truncated_polynomial(3, 1));
  CHECK(trivial.to_json() == a.to_json());

  auto t = tensor_with_central(a, truncated_polynomial(3, 2));
  CHECK(t.dim() == 2 * a.dim());
  Vec zv = el(t, "z");
  CHECK(commutes_with_all(t, zv));
  CHECK(t.commutator(el(t, "x"), el(t, "y")) == t.hbar());
  CHECK(is_zero(t.mul(zv, zv)));
  CHECK_THROWS_AS(tensor_with_central(a, a), Error);

  auto b = quotient_by_ideal(a, hbar_ideal(a));
  CHECK(b.is_commutative());
  CHECK(is_zero(b.hbar()));
  CHECK(b.dim() == a.dim() - hbar_ideal(a).space.dim());
  Ideal fake{Subspace::span(a.field(), a.dim(), {el(a, "x")}), {}, true};
  CHECK_THROWS_AS(quotient_by_ideal(a, fake), Error);
}

TEST_CASE("restricted power examples") {
  auto a = from_weyl_truncation(3, 1, 9);
  auto wx = restricted_power(a, el(a, "x"));
  CHECK(is_zero(wx.witness));
  CHECK(wx.central_part == el(a, "x^3"));

  auto f = a.add(el(a, "x"), el(a, "y^2"));
  auto w = restricted_power(a, f);
  CHECK(is_zero(a.commutator(w.central_part, el(a, "x"))));
  CHECK(is_zero(a.commutator(w.central_part, el(a, "y"))));
  CHECK(commutes_with_all(a, w.central_part));

  // commutative quotient: zero witness, central part a^p
  auto b = quotient_by_ideal(a, hbar_ideal(a));
  std::mt19937 rng(3);
  for (int t = 0; t < 5; ++t) {
    Vec v = random_vec(rng, b);
    auto r = restricted_power(b, v);
    CHECK(is_zero(r.witness));
    CHECK(r.central_part == b.power(v, 3));
  }
}

TEST_CASE("restricted power of x*y against exhaustive search") {
  // hbar^2 c only sees c of degree < 4, so every candidate lives in F_3^13.
  // Enumerate all 3^13 of them with an odometer, tracking [g, a^3 - hbar^2 c]
  // for g in {x, y} incrementally.
  auto a = from_weyl_truncation(3, 1, 8);
  const Field& f = a.field();
  Vec xy = el(a, "x*y");
  Vec fp = a.power(xy, 3);
  Vec h2 = a.power(a.hbar(), 2);
  std::vector<Vec> gens{el(a, "x"), el(a, "y")};
  auto stacked = [&](const Vec& v) {
    Vec out;
    for (const auto& g : gens) {
      Vec c = a.commutator(g, v);
      out.insert(out.end(), c.begin(), c.end());
    }
    return out;
  };
  std::vector<std::size_t> low;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a.degree(i) < 4) low.push_back(i);
  REQUIRE(low.size() == 13);
  std::vector<Vec> step;
  for (auto i : low) step.push_back(stacked(a.mul(h2, a.basis(i))));
  Vec current = stacked(fp);  // c = 0
  CHECK(!is_zero(current));
  std::vector<unsigned> digits(low.size(), 0);
  std::size_t working = 0;
  while (true) {
    if (is_zero(current)) ++working;
    std::size_t k = 0;
    while (k < digits.size()) {
      current = sub(f, current, step[k]);
      if (++digits[k] < 3) break;
      digits[k++] = 0;
    }
    if (k == digits.size()) break;
  }
  auto w = restricted_power(a, xy);
  CHECK(commutes_with_all(a, w.central_part));
  // solutions form an affine space; columns of degree >= 4 are all free
  std::size_t expected = 1;
  for (std::size_t i = a.dim() - low.size(); i < w.solution_space_dim; ++i) expected *= 3;
  CHECK(working == expected);
  CHECK(working > 0);
}

TEST_CASE("check_weakly_central") {
  auto a = from_weyl_truncation(3, 1, 6);
  auto report = check_weakly_central(a);
  CHECK(report.pass);
  CHECK(report.checked == a.dim() + 8);

  auto b = quotient_by_ideal(a, hbar_ideal(a));
  CHECK(check_weakly_central(b).pass);

  auto bad = upper_triangular(3);
  auto r = check_weakly_central(bad, 0);
  CHECK(!r.pass);
  CHECK(!r.failures.empty());
  try {
    restricted_power(bad, bad.basis(0));
    FAIL("e11 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::NotWeaklyCentral);
  }
}

TEST_CASE("center sits in every centralizer, which shrinks as S grows") {
  std::mt19937 rng(7);
  auto a = from_weyl_truncation(3, 1, 8);
  auto z = center(a);
  for (int t = 0; t < 6; ++t) {
    Vec s1 = random_vec(rng, a), s2 = random_vec(rng, a);
    auto c1 = centralizer(a, {s1});
    auto c12 = centralizer(a, {s1, s2});
    CHECK(c1.contains(z));
    CHECK(c1.contains(c12));
  }
}

TEST_CASE("ideal powers decrease and respect degree") {
  for (auto [p, n, m] : {std::tuple{3u, 1u, 8u}, std::tuple{5u, 1u, 8u}, std::tuple{3u, 2u, 5u}}) {
    auto a = from_weyl_truncation(p, n, m);
    auto mm = maximal_ideal(a);
    Subspace prev = Subspace::full(a.field(), a.dim());
    for (unsigned k = 1; k <= m; ++k) {
      auto pk = ideal_power(a, mm, k);
      CHECK(prev.contains(pk.space));
      CHECK(a.filtration(k).contains(pk.space));
      prev = pk.space;
    }
    CHECK(prev.dim() == 0);
  }
}

TEST_CASE("ad(a)^p = hbar^(p-1) ad(a^[p]) on sampled vectors") {
  std::mt19937 rng(11);
  for (auto [p, m] : {std::pair{3u, 8u}, std::pair{5u, 9u}}) {
    auto a = from_weyl_truncation(p, 1, m);
    Vec hp = a.power(a.hbar(), p - 1);
    for (int t = 0; t < 4; ++t) {
      Vec f = random_vec(rng, a, 1);
      auto w = restricted_power(a, f);
      for (int s = 0; s < 4; ++s) {
        Vec v = random_vec(rng, a);
        Vec lhs = v;
        for (unsigned i = 0; i < p; ++i) lhs = a.commutator(f, lhs);
        CHECK(lhs == a.mul(hp, a.commutator(w.witness, v)));
      }
    }
  }
}

TEST_CASE("elements of m^n admit witnesses in m^n") {
  std::mt19937 rng(13);
  auto a = from_weyl_truncation(3, 1, 9);
  auto mm = maximal_ideal(a);
  for (unsigned n = 1; n <= 4; ++n) {
    auto mn = ideal_power(a, mm, n);
    for (int t = 0; t < 3; ++t) {
      Vec f(a.dim(), 0);
      for (const auto& b : mn.space.basis()) f = axpy(a.field(), static_cast<Scalar>(rng() % 3), b, f);
      auto w = restricted_power(a, f, &mn.space);
      CHECK(mn.space.contains(w.witness));
      CHECK(commutes_with_all(a, w.central_part));
    }
  }
}

TEST_CASE("J = J' + m'^[p] A does not depend on the spanning set of m'") {
  std::mt19937 rng(17);
  auto a = from_weyl_truncation(3, 1, 9);
  auto q = hbar_quotient(a);
  auto mm = maximal_ideal(a);
  // J' = preimage of the ideal of B generated by the image of x
  auto b = quotient_by_ideal(a, hbar_ideal(a));
  auto ib = ideal_generated(b, {el(b, "x")});
  auto jprime = hbar_preimage(a, q, ib.space);
  CHECK(jprime.space.contains(el(a, "x")));
  CHECK(jprime.space.contains(el(a, "h")));
  CHECK(!jprime.space.contains(el(a, "y")));

  auto j_canonical = jprime.space.sum(pth_power_ideal(a, mm).space);
  for (int t = 0; t < 4; ++t) {
    // random spanning set: random combinations plus the basis shuffled
    std::vector<Vec> span;
    auto basis = mm.space.basis();
    std::shuffle(basis.begin(), basis.end(), rng);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      Vec v = basis[i];
      for (std::size_t k = i + 1; k < basis.size(); ++k) v = axpy(a.field(), static_cast<Scalar>(rng() % 3), basis[k], v);
      span.push_back(v);
    }
    CHECK(Subspace::span(a.field(), a.dim(), span) == mm.space);
    std::vector<Vec> powers;
    for (const auto& v : span) powers.push_back(a.power(v, 3));
    auto j = jprime.space.sum(ideal_generated(a, powers).space);
    CHECK(j == j_canonical);
  }
}

TEST_CASE("(f + g^(p-1) f^[p])^p - (g^(p-1) f^[p])^p is central") {
  // f = x1 + x2*y2, g = y1: [f, g] = h and f^p is not central
  auto a = from_weyl_truncation(3, 2, 8);
  Vec f = a.add(el(a, "x1"), el(a, "x2*y2"));
  Vec g = el(a, "y1");
  REQUIRE(a.commutator(f, g) == a.hbar());
  REQUIRE(!commutes_with_all(a, a.power(f, 3)));
  auto cfg = centralizer(a, {f, g});
  auto w = restricted_power(a, f, &cfg);
  Vec shift = a.mul(a.power(g, 2), w.witness);
  Vec lhs = a.sub(a.power(a.add(f, shift), 3), a.power(shift, 3));
  CHECK(commutes_with_all(a, lhs));
  CHECK(lhs == w.central_part);
}

TEST_CASE("division by hbar") {
  auto a = from_weyl_truncation(3, 1, 7);
  HbarDivision div(a);
  CHECK(div.torsion() == a.filtration(5));
  Vec x = el(a, "x"), y = el(a, "y");
  auto u = div.divide(a.commutator(a.power(x, 2), y));
  REQUIRE(u.has_value());
  CHECK(*u == a.scale(2, x));
  CHECK(!div.divide(x).has_value());
  auto q = div_hbar(a, a.hbar());
  CHECK(q.coords == a.unit());
  CHECK(q.precision == 5);
  std::mt19937 rng(19);
  for (int t = 0; t < 10; ++t) {
    Vec v = random_vec(rng, a);
    auto w = div.divide(a.mul(a.hbar(), v));
    REQUIRE(w.has_value());
    CHECK(a.mul(a.hbar(), *w) == a.mul(a.hbar(), v));
    CHECK(div.torsion().contains(a.sub(*w, v)));
  }
}
