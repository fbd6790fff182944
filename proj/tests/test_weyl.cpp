#include <random>

#include "charpq/weyl.hpp"
#include "doctest.h"

using namespace charpq;

namespace {

// Independent oracle: multiply by concatenating words in the generators and
// rewriting y_i x_i -> x_i y_i - hbar until every x precedes every y.
// Letters: 0..n-1 are x_i, n..2n-1 are y_i.
using Word = std::vector<unsigned>;

struct WordTerm {
  Word word;
  unsigned hbar;
};

WeylElement rewrite_product(const WeylSpace& s, const Exponents& a, const Exponents& b) {
  const unsigned n = s.n;
  auto to_word = [&](const Exponents& e) {
    Word w;
    for (unsigned i = 0; i < n; ++i) w.insert(w.end(), e[i], i);
    for (unsigned i = 0; i < n; ++i) w.insert(w.end(), e[n + i], n + i);
    return w;
  };
  Word w = to_word(a);
  Word wb = to_word(b);
  w.insert(w.end(), wb.begin(), wb.end());

  std::vector<std::pair<WordTerm, long>> work{{{w, unsigned(a[2 * n] + b[2 * n])}, 1}};
  WeylElement::Terms out;
  while (!work.empty()) {
    auto [term, coeff] = work.back();
    work.pop_back();
    // leftmost out-of-order adjacent pair
    std::size_t k = 0;
    for (; k + 1 < term.word.size(); ++k)
      if (term.word[k] > term.word[k + 1]) break;
    if (k + 1 >= term.word.size()) {
      Exponents e(2 * n + 1, 0);
      for (unsigned letter : term.word) ++e[letter];
      e[2 * n] = static_cast<std::uint16_t>(term.hbar);
      long c = coeff % static_cast<long>(s.p());
      if (c < 0) c += s.p();
      auto& slot = out[e];
      slot = s.field.add(slot, static_cast<Scalar>(c));
      continue;
    }
    unsigned hi = term.word[k], lo = term.word[k + 1];
    WordTerm swapped = term;
    std::swap(swapped.word[k], swapped.word[k + 1]);
    work.push_back({swapped, coeff});
    if (hi >= n && lo < n && hi - n == lo) {
      // y_i x_i = x_i y_i - hbar
      WordTerm dropped = term;
      dropped.word.erase(dropped.word.begin() + k, dropped.word.begin() + k + 2);
      ++dropped.hbar;
      work.push_back({dropped, -coeff});
    }
  }
  return WeylElement(s, out, s.truncation);
}

Exponents random_exponents(std::mt19937& rng, const WeylSpace& s, unsigned max_degree) {
  while (true) {
    Exponents e(2 * s.n + 1);
    for (auto& v : e) v = static_cast<std::uint16_t>(rng() % 4);
    if (s.degree(e) <= max_degree) return e;
  }
}

WeylElement random_element(std::mt19937& rng, const WeylSpace& s, unsigned terms, unsigned min_degree = 0) {
  WeylElement r(s);
  for (unsigned t = 0; t < terms; ++t) {
    Exponents e = random_exponents(rng, s, s.truncation - 1);
    if (s.degree(e) < min_degree) continue;
    r = r + WeylElement::monomial(s, e, 1 + rng() % (s.p() - 1));
  }
  return r;
}

Exponents ex(std::initializer_list<int> v) {
  Exponents e;
  for (int x : v) e.push_back(static_cast<std::uint16_t>(x));
  return e;
}

}  // namespace

TEST_CASE("multiply examples") {
  WeylSpace s5(5, 1, 20);
  auto x = WeylElement::x(s5, 0), y = WeylElement::y(s5, 0), h = WeylElement::hbar(s5);
  CHECK(multiply(y, x) == multiply(x, y) - h);
  auto y2 = multiply(y, y);
  CHECK(multiply(y2, x) == multiply(x, y2) - multiply(h, y).scaled(2));

  WeylSpace s3(3, 1, 20);
  auto x3 = WeylElement::x(s3, 0), y3 = WeylElement::y(s3, 0);
  auto ycube = power(y3, 3);
  CHECK(multiply(ycube, x3) == multiply(x3, ycube));
}

TEST_CASE("commutator examples") {
  WeylSpace s(3, 1, 9);
  auto x = WeylElement::x(s, 0), y = WeylElement::y(s, 0), h = WeylElement::hbar(s);
  CHECK(commutator(x, y) == h);
  CHECK(commutator(power(x, 2), y) == multiply(h, x).scaled(2));
  // ad(x)^3 kills every monomial of W-trunc(3,1,9)
  for (unsigned a = 0; a < 9; ++a)
    for (unsigned b = 0; a + b < 9; ++b)
      for (unsigned m = 0; a + b + 2 * m < 9; ++m)
        CHECK(ad_power(x, 3, WeylElement::monomial(s, ex({int(a), int(b), int(m)}))).is_zero());
}

TEST_CASE("div_hbar examples") {
  WeylSpace s(3, 1, 9);
  auto x = WeylElement::x(s, 0), y = WeylElement::y(s, 0), h = WeylElement::hbar(s);
  auto one = div_hbar(h);
  CHECK(one.equals(WeylElement::constant(s, 1)));
  CHECK(one.precision() == 7);
  CHECK(div_hbar(commutator(power(x, 2), y)).equals(x.scaled(2)));
  CHECK_THROWS_AS(div_hbar(x), Error);
  try {
    div_hbar(x);
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::NotDivisible);
  }
}

TEST_CASE("pth_power examples") {
  WeylSpace s(3, 1, 12);
  auto x = WeylElement::x(s, 0), y = WeylElement::y(s, 0);
  CHECK(pth_power(x) == WeylElement::monomial(s, ex({3, 0, 0})));
  // hbar -> 1 slice of (x + y^2)^3 is x^3 + y^6 - 1
  auto slice = at_hbar_one(pth_power(x + power(y, 2)));
  std::map<Exponents, Scalar> expected{{ex({3, 0}), 1}, {ex({0, 6}), 1}, {ex({0, 0}), 2}};
  CHECK(slice == expected);

  WeylSpace tiny(3, 1, 3);
  CHECK_THROWS_AS(pth_power(WeylElement::x(tiny, 0).with_precision(0)), Error);
}

TEST_CASE("multiply agrees with the rewriting oracle") {
  std::mt19937 rng(1);
  for (std::uint32_t p : {3u, 5u})
    for (unsigned n : {1u, 2u}) {
      WeylSpace s(p, n, 4 * p);
      for (int trial = 0; trial < 80; ++trial) {
        auto a = random_exponents(rng, s, 7), b = random_exponents(rng, s, 7);
        auto fast = multiply(WeylElement::monomial(s, a), WeylElement::monomial(s, b));
        CHECK(fast == rewrite_product(s, a, b));
      }
    }
}

TEST_CASE("associativity, filtration and centrality properties") {
  std::mt19937 rng(2);
  for (std::uint32_t p : {3u, 5u}) {
    WeylSpace s(p, p == 3 ? 2 : 1, 4 * p);
    for (int trial = 0; trial < 15; ++trial) {
      auto a = random_element(rng, s, 4), b = random_element(rng, s, 4), c = random_element(rng, s, 4);
      CHECK(multiply(multiply(a, b), c).equals(multiply(a, multiply(b, c))));
      auto ab = multiply(a, b);
      if (!ab.is_zero()) CHECK(ab.valuation() >= a.valuation() + b.valuation());
      for (unsigned i = 0; i < s.n; ++i) {
        CHECK(commutator(pth_power(WeylElement::x(s, i)), a).is_zero());
        CHECK(commutator(pth_power(WeylElement::y(s, i)), a).is_zero());
      }
      CHECK(commutator(WeylElement::hbar(s), a).is_zero());
      CHECK(div_hbar(multiply(WeylElement::hbar(s), a)).equals(a));
    }
  }
}

TEST_CASE("identity (x + r y^(p-1))^p = x^p + (r y^(p-1))^p - hbar^(p-1) r for central r") {
  for (std::uint32_t p : {3u, 5u}) {
    WeylSpace s(p, 1, 4 * p);
    auto x = WeylElement::x(s, 0), y = WeylElement::y(s, 0), h = WeylElement::hbar(s);
    auto xp = pth_power(x), yp = pth_power(y);
    auto ypm1 = power(y, p - 1);
    int checked = 0;
    for (unsigned i = 0; i < 3; ++i)
      for (unsigned j = 0; j < 3; ++j)
        for (unsigned k = 0; k < 3; ++k)
          for (Scalar c : {Scalar(1), Scalar(p - 1)}) {
            auto r = multiply(multiply(power(xp, i), power(yp, j)), power(h, k)).scaled(c);
            auto ry = multiply(r, ypm1);
            auto lhs = pth_power(x + ry);
            auto rhs = xp + pth_power(ry) - multiply(power(h, p - 1), r);
            CHECK(lhs.equals(rhs));
            ++checked;
          }
    CHECK(checked >= 20);
  }
}

TEST_CASE("text serialization round trip") {
  std::mt19937 rng(5);
  for (std::uint32_t p : {3u, 5u}) {
    WeylSpace s(p, 2, 8);
    for (int trial = 0; trial < 10; ++trial) {
      auto a = random_element(rng, s, 6).with_precision(3 + rng() % 6);
      auto text = to_text(a);
      auto back = weyl_from_text(text);
      CHECK(back == a);
      CHECK(to_text(back) == text);
    }
  }
  CHECK_THROWS_AS(weyl_from_text("3 1 5 5\n1 9 0 0\n"), Error);
  CHECK_THROWS_AS(weyl_from_text("3 1 5\n"), Error);
}
