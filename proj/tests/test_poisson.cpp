#include "charpq/poisson.hpp"
#include "doctest.h"

using namespace charpq;

namespace {

using Mono = std::vector<unsigned>;

Vec el(const FdAlgebra& a, const std::string& label) {
  auto i = a.find_label(label);
  REQUIRE_MESSAGE(i.has_value(), "missing basis label " << label);
  return a.basis(*i);
}

Vec el(const PoissonTruncation& b, const std::string& label) { return el(b.algebra(), label); }

// F_3[x, y, z]/(x^k, y^k, z^c) with {x, y} = 1 + z and z a Casimir.
PoissonTruncation deformed_plane(unsigned k, unsigned c) {
  return polynomial_poisson(3, {{"x", k}, {"y", k}, {"z", c}}, {{0, 1, {{Mono{0, 0, 0}, 1}, {Mono{0, 0, 1}, 1}}}});
}

bool ad_agree(const PoissonTruncation& b, const Matrix& m, const Vec& c) {
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (apply(b.field(), m, b.algebra().basis(i)) != b.bracket(c, b.algebra().basis(i))) return false;
  return true;
}

}  // namespace

TEST_CASE("polynomial Poisson truncations validate") {
  auto b = symplectic_truncation(3, 1, 1);
  CHECK(b.dim() == 9);
  CHECK(b.bracket(el(b, "x"), el(b, "y")) == b.algebra().unit());
  CHECK(b.bracket(el(b, "y"), el(b, "x^2")) == b.algebra().scale(1, el(b, "x")));
  CHECK(symplectic_truncation(5, 2, 1).dim() == 625);
  // x^2 = 0 is not a Poisson ideal in characteristic 3: {y, x^2} = -2x
  try {
    polynomial_poisson(3, {{"x", 2}, {"y", 3}}, {{0, 1, {{Mono{0, 0}, 1}}}});
    FAIL("non-Poisson truncation accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::InvariantViolation);
  }
  // {x, y} = y, {y, z} = x: Jacobi on (x, y, z) gives {z, y} = -x != 0
  std::vector<PoissonVariable> vars{{"x", 3}, {"y", 3}, {"z", 3}};
  CHECK_THROWS_AS(polynomial_poisson(3, vars, {{0, 1, {{Mono{0, 1, 0}, 1}}}, {1, 2, {{Mono{1, 0, 0}, 1}}}}), Error);
  CHECK_NOTHROW(polynomial_poisson(3, vars, {{0, 1, {{Mono{0, 1, 0}, 1}}}}));
}

TEST_CASE("poisson json round trip") {
  auto b = deformed_plane(3, 2);
  auto text = b.to_json();
  CHECK(text.find("\"bracket\"") != std::string::npos);
  auto back = PoissonTruncation::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.bracket(el(back, "x"), el(back, "y")) == back.algebra().add(back.algebra().unit(), el(back, "z")));
}

TEST_CASE("reduce_mod_hbar of Weyl truncations") {
  // the truncation at M = 8 reduces to F_3[x,y]/(x^3, y^3) with {x, y} = 1
  auto r = reduce_mod_hbar(from_weyl_truncation(3, 1, 8));
  CHECK(r.poisson.dim() == 9);
  CHECK(r.poisson.to_json() == symplectic_truncation(3, 1, 1).to_json());
  CHECK(reduce_mod_hbar(from_weyl_truncation(5, 1, 12)).poisson.to_json() == symplectic_truncation(5, 1, 1).to_json());

  // lift/project round trip and compatibility with the bracket
  auto a = from_weyl_truncation(3, 1, 8);
  Vec x = el(a, "x"), y = el(a, "y");
  CHECK(r.project(a.commutator(x, y)) == r.poisson.algebra().zero());
  CHECK(r.project(r.lift(el(r.poisson, "x*y"))) == el(r.poisson, "x*y"));
  CHECK(r.kernel.contains(a.hbar()));

  try {
    reduce_mod_hbar(from_weyl_truncation(3, 1, 6));
    FAIL("shallow truncation accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::PrecisionExhausted);
  }
}

TEST_CASE("generator brackets of W-trunc(3,2,5) modulo hbar-torsion") {
  auto a = from_weyl_truncation(3, 2, 5);
  HbarDivision div(a);
  std::vector<Vec> gens;
  for (const char* s : {"x1", "x2", "y1", "y2"}) gens.push_back(el(a, s));
  int checked = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      Vec got = hbar_bracket(a, div, gens[i], gens[j]);
      Vec expected = a.zero();
      if (i < 2 && j == i + 2) expected = a.unit();
      if (j < 2 && i == j + 2) expected = a.scale(2, a.unit());
      CHECK(div.torsion().contains(a.sub(got, expected)));
      ++checked;
    }
  CHECK(checked == 16);
}

TEST_CASE("reduce_mod_hbar of commutative and non-commutative inputs") {
  // F_3[z, h]/(z^3, h^3) with hbar = h: reduction is F_3[z]/(z^3), zero bracket
  auto base = polynomial_poisson(3, {{"z", 3, 1}, {"h", 3, 2}}, {}).algebra().data();
  base.hbar = el(polynomial_poisson(3, {{"z", 3, 1}, {"h", 3, 2}}, {}), "h");
  auto r = reduce_mod_hbar(FdAlgebra(base));
  CHECK(r.poisson.dim() == 3);
  CHECK(r.poisson.bracket_data().empty());

  // upper-triangular matrices tensored with F_3[h]/(h^2): commutators are not in hbar*A
  AlgebraData u;
  u.p = 3;
  u.degrees = {0, 0, 0};
  u.labels = {"e11", "e12", "e22"};
  u.unit = {1, 0, 1};
  u.hbar = {0, 0, 0};
  u.mult = {{0, 0, 0, 1}, {0, 1, 1, 1}, {1, 2, 1, 1}, {2, 2, 2, 1}};
  auto t = tensor_with_central(FdAlgebra(u), truncated_polynomial(3, 2, 2, "h")).data();
  t.hbar = Vec(t.degrees.size(), 0);
  for (std::size_t i = 0; i < t.labels.size(); ++i)
    if (t.labels[i] == "e11*h" || t.labels[i] == "e22*h") t.hbar[i] = 1;
  try {
    reduce_mod_hbar(FdAlgebra(t));
    FAIL("non-commutative reduction accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::BracketIllDefined);
  }
}

TEST_CASE("restricted witnesses in Poisson truncations") {
  auto b = symplectic_truncation(3, 1, 1);
  auto wx = restricted_witness_poisson(b, el(b, "x"));
  CHECK(is_zero(wx.witness));

  auto d = deformed_plane(3, 3);
  CHECK(is_zero(restricted_witness_poisson(d, el(d, "z")).witness));

  auto big = symplectic_truncation(3, 1, 2);
  Vec f = el(big, "x^2*y");
  auto w = restricted_witness_poisson(big, f);
  CHECK(ad_agree(big, ad_power_matrix(big, f, 3), w.witness));

  // x*y: ad(xy) is an Euler-type field with ad(xy)^p = ad(xy)
  Vec xy = el(big, "x*y");
  auto e = restricted_witness_poisson(big, xy);
  CHECK(ad_agree(big, ad_power_matrix(big, xy, 3), e.witness));
  CHECK(ad_agree(big, ad_power_matrix(big, xy, 3), xy));
}

TEST_CASE("reductions of weakly central algebras are weakly restricted") {
  for (auto [p, m] : {std::pair{3u, 8u}, std::pair{5u, 12u}}) {
    auto b = reduce_mod_hbar(from_weyl_truncation(p, 1, m)).poisson;
    for (std::size_t i = 0; i < b.dim(); ++i) {
      auto w = restricted_witness_poisson(b, b.algebra().basis(i));
      CHECK(ad_agree(b, ad_power_matrix(b, b.algebra().basis(i), p), w.witness));
    }
  }
}

TEST_CASE("Poisson ideals and quotients") {
  auto d = deformed_plane(3, 3);
  auto i = poisson_ideal_generated(d, {el(d, "z")});
  CHECK(i.space.dim() == 18);
  CHECK(make_poisson_ideal(d, i.space).poisson_closed);
  try {
    make_poisson_ideal(d, Subspace::span(d.field(), d.dim(), {el(d, "x")}));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::ClosureViolation);
  }
  CHECK(poisson_quotient(d, i).to_json() == symplectic_truncation(3, 1, 1).to_json());

  auto b = symplectic_truncation(3, 1, 1);
  auto c = poisson_centralizer(b, {el(b, "x")});
  for (const auto& v : c.basis()) CHECK(is_zero(b.bracket(el(b, "x"), v)));
  CHECK(c.dim() == 3);  // 1, x, x^2
}

TEST_CASE("verify_darboux_form") {
  auto b = symplectic_truncation(3, 1, 1);
  Vec x = el(b, "x"), y = el(b, "y");
  auto ok = verify_darboux_form(b, {{x, y}});
  CHECK(ok.pass);
  CHECK(ok.missing_monomial.empty());

  auto swapped = verify_darboux_form(b, {{y, x}});
  CHECK(!swapped.pass);
  CHECK(swapped.checks.front().name == "{z1, w1}");
  CHECK(swapped.checks.front().detail == "2");

  auto thin = verify_darboux_form(b, {{x, el(b, "y^2")}});
  CHECK(!thin.pass);
  CHECK(thin.missing_monomial == "y");

  auto two = symplectic_truncation(3, 2, 1);
  CHECK(verify_darboux_form(two, {{el(two, "x1"), el(two, "y1")}, {el(two, "x2"), el(two, "y2")}}).pass);
  CHECK(!verify_darboux_form(two, {{el(two, "x1"), el(two, "y1")}, {el(two, "x2"), el(two, "y1")}}).pass);
}

TEST_CASE("Poisson Darboux lift examples") {
  SUBCASE("exact pair is a fixed point") {
    auto b = symplectic_truncation(3, 1, 1);
    PoissonIdeal zero{Subspace(b.field(), b.dim()), true};
    auto l = poisson_darboux_lift(b, zero, {{el(b, "x"), el(b, "y")}});
    CHECK(l.steps.empty());
    CHECK(l.pairs.front().first == el(b, "x"));
    CHECK(l.pairs.front().second == el(b, "y"));
  }
  for (unsigned k : {3u, 6u}) {
    CAPTURE(k);
    auto b = deformed_plane(k, 3);
    const auto& a = b.algebra();
    auto i = poisson_ideal_generated(b, {el(b, "z")});
    for (Vec x0 : {el(b, "x"), a.add(el(b, "x"), el(b, "x^2*y*z"))}) {
      auto l = poisson_darboux_lift(b, i, {{x0, el(b, "y")}});
      auto [z, w] = l.pairs.front();
      CHECK(b.bracket(z, w) == a.unit());
      CHECK(verify_darboux_form(b, l.pairs).checks.size() == 4);
      for (const auto& c : verify_darboux_form(b, l.pairs).checks)
        if (c.name != "monomials in the pairs span B") CHECK_MESSAGE(c.pass, c.name);
      CHECK(i.space.contains(a.sub(z, x0)));
      CHECK(i.space.contains(a.sub(w, el(b, "y"))));
    }
  }
  SUBCASE("a pair violating the hypotheses is rejected") {
    auto b = deformed_plane(3, 3);
    auto i = poisson_ideal_generated(b, {el(b, "z")});
    try {
      poisson_darboux_lift(b, i, {{b.algebra().add(el(b, "x"), el(b, "x^2*y")), el(b, "y")}});
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == Error::Kind::PreconditionViolation);
    }
  }
}

TEST_CASE("Poisson Darboux lift with a restriction step and two pairs") {
  // {x, y} = {u, v} = 1, z a Casimir with z^4 = 0; x + uvz has ad^3 = z^3 ad(uv)
  auto b = polynomial_poisson(3, {{"x", 3}, {"y", 3}, {"u", 3}, {"v", 3}, {"z", 4}},
                              {{0, 1, {{Mono{0, 0, 0, 0, 0}, 1}}}, {2, 3, {{Mono{0, 0, 0, 0, 0}, 1}}}});
  const auto& a = b.algebra();
  auto i = poisson_ideal_generated(b, {el(b, "z")});
  Vec phi = a.add(el(b, "x"), el(b, "u*v*z"));
  REQUIRE(!(ad_power_matrix(b, phi, 3) == Matrix(b.dim(), b.dim())));
  std::vector<Pair> input{{phi, el(b, "y")}, {el(b, "u"), el(b, "v")}};
  auto l = poisson_darboux_lift(b, i, input);
  REQUIRE(l.pairs.size() == 2);
  bool restricted = false;
  for (const auto& s : l.steps) restricted = restricted || s.phase == "restrict-x";
  CHECK(restricted);
  auto report = verify_darboux_form(b, l.pairs);
  for (const auto& c : report.checks)
    if (c.name != "monomials in the pairs span B") CHECK_MESSAGE(c.pass, c.name << " " << c.detail);
  CHECK(report.missing_monomial == "z");
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(i.space.contains(a.sub(l.pairs[k].first, input[k].first)));
    CHECK(i.space.contains(a.sub(l.pairs[k].second, input[k].second)));
  }
}
