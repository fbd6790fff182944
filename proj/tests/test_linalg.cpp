#include <random>

#include "charpq/linalg.hpp"
#include "doctest.h"

using namespace charpq;

namespace {

Matrix random_matrix(std::mt19937& rng, const Field& f, std::size_t r, std::size_t c, int zero_bias = 0) {
  Matrix m(r, c);
  std::uniform_int_distribution<std::uint32_t> d(0, f.p() - 1 + zero_bias);
  for (auto& row : m.data)
    for (auto& v : row) {
      auto x = d(rng);
      v = x >= f.p() ? 0 : x;
    }
  return m;
}

Vec unit(std::size_t n, std::size_t i) {
  Vec e(n, 0);
  e[i] = 1;
  return e;
}

// Enumerates all of F_p^n; only used for tiny n.
std::vector<Vec> all_vectors(const Field& f, std::size_t n) {
  std::vector<Vec> out;
  Vec v(n, 0);
  while (true) {
    out.push_back(v);
    std::size_t k = 0;
    while (k < n && v[k] == f.p() - 1) v[k++] = 0;
    if (k == n) break;
    ++v[k];
  }
  return out;
}

}  // namespace

TEST_CASE("field validation") {
  CHECK_THROWS_AS(Field(2), Error);
  CHECK_THROWS_AS(Field(9), Error);
  CHECK_NOTHROW(Field(5));
  Field f(7);
  for (Scalar a = 1; a < 7; ++a) CHECK(f.mul(a, f.inv(a)) == 1);
  CHECK(f.binomial(5, 2) == 3);  // 10 mod 7
  CHECK(Field(3).binomial(3, 1) == 0);
}

TEST_CASE("solve examples") {
  {
    Field f(5);
    auto x = solve(f, Matrix::identity(2), {2, 3});
    REQUIRE(x);
    CHECK(*x == Vec{2, 3});
  }
  {
    Field f(5);
    CHECK_FALSE(solve(f, Matrix(1, 1), {1}));
  }
  {
    Field f(3);
    auto x = solve(f, Matrix::from_rows({{1, 1}, {2, 2}}, 2), {1, 2});
    REQUIRE(x);
    CHECK(*x == Vec{1, 0});
  }
  CHECK_THROWS_AS(solve(Field(3), Matrix(2, 2), {1}), Error);
}

TEST_CASE("kernel examples") {
  Field f3(3);
  CHECK(kernel(f3, Matrix::identity(2)).dim() == 0);
  auto k = kernel(f3, Matrix::from_rows({{1, 1}}, 2));
  REQUIRE(k.dim() == 1);
  CHECK(k.basis()[0] == Vec{1, 2});
  CHECK(kernel(Field(5), Matrix(2, 2)).dim() == 2);
}

TEST_CASE("subspace operation examples") {
  Field f(3);
  auto u = Subspace::span(f, 2, {unit(2, 0)});
  auto v = Subspace::span(f, 2, {unit(2, 1)});
  CHECK(u.sum(u) == u);
  CHECK(u.intersect(u) == u);
  CHECK(u.contains(u));
  CHECK(u.sum(v).dim() == 2);
  CHECK(u.intersect(v).dim() == 0);

  auto a = Subspace::span(f, 3, {unit(3, 0), unit(3, 1)});
  auto b = Subspace::span(f, 3, {unit(3, 1), unit(3, 2)});
  CHECK(a.intersect(b) == Subspace::span(f, 3, {unit(3, 1)}));
  auto q = quotient_basis(a, b);
  REQUIRE(q.size() == 1);
  CHECK(q[0] == unit(3, 0));

  CHECK_THROWS_AS(a.sum(Subspace(f, 2)), Error);
}

TEST_CASE("solve and kernel properties on random systems") {
  std::mt19937 rng(7);
  for (std::uint32_t p : {3u, 5u}) {
    Field f(p);
    for (int trial = 0; trial < 60; ++trial) {
      std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
      Matrix a = random_matrix(rng, f, r, c, 3);
      Vec x0(c);
      for (auto& v : x0) v = rng() % p;
      Vec b = apply(f, a, x0);  // consistent by construction
      auto x = solve(f, a, b);
      REQUIRE(x);
      CHECK(apply(f, a, *x) == b);

      auto ker = kernel(f, a);
      CHECK(ker.dim() == c - rank(f, a));
      for (const auto& kv : ker.basis()) CHECK(is_zero(apply(f, a, kv)));
    }
  }
}

TEST_CASE("kernel matches brute-force enumeration") {
  std::mt19937 rng(11);
  Field f(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = random_matrix(rng, f, 1 + rng() % 3, 4, 2);
    std::size_t count = 0;
    auto ker = kernel(f, a);
    for (const auto& v : all_vectors(f, 4)) {
      bool in = is_zero(apply(f, a, v));
      count += in;
      CHECK(ker.contains(v) == in);
    }
    std::size_t expected = 1;
    for (std::size_t i = 0; i < ker.dim(); ++i) expected *= 3;
    CHECK(count == expected);
  }
}

TEST_CASE("dimension formula and canonicity") {
  std::mt19937 rng(3);
  for (std::uint32_t p : {3u, 5u}) {
    Field f(p);
    for (int trial = 0; trial < 50; ++trial) {
      std::size_t n = 2 + rng() % 5;
      auto gens_u = random_matrix(rng, f, rng() % (n + 1), n, 2).data;
      auto gens_v = random_matrix(rng, f, rng() % (n + 1), n, 2).data;
      auto u = Subspace::span(f, n, gens_u);
      auto v = Subspace::span(f, n, gens_v);
      CHECK(u.sum(v).dim() + u.intersect(v).dim() == u.dim() + v.dim());
      CHECK(u.sum(v).contains(u));
      CHECK(u.contains(u.intersect(v)));
      CHECK(quotient_basis(u, v).size() == u.dim() - u.intersect(v).dim());

      auto shuffled = gens_u;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      // add a redundant combination
      if (!shuffled.empty()) shuffled.push_back(axpy(f, 2, shuffled.front(), shuffled.back()));
      CHECK(Subspace::span(f, n, shuffled).basis() == u.basis());
    }
  }
}
