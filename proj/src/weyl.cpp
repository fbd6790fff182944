#include "charpq/weyl.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>

namespace charpq {

WeylSpace::WeylSpace(std::uint32_t p, unsigned n_, unsigned truncation_)
    : field(p), n(n_), truncation(truncation_) {
  if (n == 0) throw Error(Error::Kind::InvalidArgument, "Weyl algebra needs n >= 1");
}

unsigned WeylSpace::degree(const Exponents& e) const noexcept {
  unsigned d = 0;
  for (unsigned i = 0; i < 2 * n; ++i) d += e[i];
  return d + 2u * e[2 * n];
}

bool GradedLess::operator()(const Exponents& l, const Exponents& r) const {
  // the hbar exponent sits last and weighs 2
  auto deg = [](const Exponents& e) {
    unsigned d = std::accumulate(e.begin(), e.end(), 0u);
    return e.empty() ? d : d + e.back();
  };
  unsigned dl = deg(l), dr = deg(r);
  if (dl != dr) return dl < dr;
  return l < r;
}

// ---------------------------------------------------------------------------

WeylElement::WeylElement(const WeylSpace& space) : space_(space), precision_(space.truncation) {}

WeylElement::WeylElement(const WeylSpace& space, Terms terms, unsigned precision)
    : space_(space), precision_(std::min(precision, space.truncation)) {
  for (const auto& [e, c] : terms) insert(e, c);
}

void WeylElement::insert(const Exponents& e, Scalar c) {
  if (e.size() != 2 * space_.n + 1)
    throw Error(Error::Kind::DimensionMismatch, "exponent vector length");
  if (space_.degree(e) >= precision_) return;
  c %= space_.p();
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second = space_.field.add(it->second, c);
    if (it->second == 0) terms_.erase(it);
  }
}

WeylElement WeylElement::constant(const WeylSpace& s, Scalar c) {
  return monomial(s, s.unit_exponents(), c);
}

WeylElement WeylElement::monomial(const WeylSpace& s, const Exponents& e, Scalar c) {
  WeylElement r(s);
  r.insert(e, c);
  return r;
}

WeylElement WeylElement::x(const WeylSpace& s, unsigned i) {
  Exponents e = s.unit_exponents();
  e.at(i) = 1;
  return monomial(s, e);
}

WeylElement WeylElement::y(const WeylSpace& s, unsigned i) {
  Exponents e = s.unit_exponents();
  e.at(s.n + i) = 1;
  return monomial(s, e);
}

WeylElement WeylElement::hbar(const WeylSpace& s) {
  Exponents e = s.unit_exponents();
  e[2 * s.n] = 1;
  return monomial(s, e);
}

Scalar WeylElement::coefficient(const Exponents& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? 0 : it->second;
}

unsigned WeylElement::valuation() const noexcept {
  if (terms_.empty()) return precision_;  // unknown at and above the precision
  return space_.degree(terms_.begin()->first);  // graded order: first is lowest
}

WeylElement WeylElement::with_precision(unsigned p) const {
  return WeylElement(space_, terms_, std::min(p, precision_));
}

void WeylElement::check_space(const WeylElement& o) const {
  if (!(space_ == o.space_))
    throw Error(Error::Kind::DimensionMismatch, "Weyl elements from different algebras");
}

WeylElement WeylElement::operator+(const WeylElement& o) const {
  check_space(o);
  WeylElement r(space_, terms_, std::min(precision_, o.precision_));
  for (const auto& [e, c] : o.terms_) r.insert(e, c);
  return r;
}

WeylElement WeylElement::operator-() const { return scaled(space_.p() - 1); }

WeylElement WeylElement::operator-(const WeylElement& o) const { return *this + (-o); }

WeylElement WeylElement::scaled(Scalar c) const {
  WeylElement r(space_);
  r.precision_ = precision_;
  for (const auto& [e, v] : terms_) r.insert(e, space_.field.mul(c, v));
  return r;
}

bool WeylElement::equals(const WeylElement& o) const {
  check_space(o);
  unsigned p = std::min(precision_, o.precision_);
  return with_precision(p).terms_ == o.with_precision(p).terms_;
}

// ---------------------------------------------------------------------------

namespace {

// Coefficient table for y^b x^c = sum_j coeff(b, c, j) hbar^j x^{c-j} y^{b-j},
// coeff = (-1)^j j! C(b,j) C(c,j).
Scalar reorder_coefficient(const Field& f, unsigned b, unsigned c, unsigned j) {
  Scalar r = f.mul(f.binomial(b, j), f.binomial(c, j));
  for (unsigned i = 2; i <= j; ++i) r = f.mul(r, i % f.p());
  return (j % 2) ? f.neg(r) : r;
}

}  // namespace

WeylElement multiply(const WeylElement& a, const WeylElement& b) {
  if (!(a.space() == b.space()))
    throw Error(Error::Kind::DimensionMismatch, "Weyl elements from different algebras");
  const WeylSpace& s = a.space();
  const unsigned n = s.n;
  unsigned prec = std::min({a.precision() + b.valuation(), b.precision() + a.valuation(), s.truncation});
  WeylElement::Terms out;
  const Field& f = s.field;

  std::vector<unsigned> jmax(n), j(n);
  for (const auto& [ea, ca] : a.terms()) {
    unsigned da = s.degree(ea);
    for (const auto& [eb, cb] : b.terms()) {
      if (da + s.degree(eb) >= prec) break;  // graded order: later terms are no lower
      Scalar base = f.mul(ca, cb);
      for (unsigned i = 0; i < n; ++i) jmax[i] = std::min(ea[n + i], eb[i]);
      std::fill(j.begin(), j.end(), 0u);
      // enumerate all tuples j <= jmax
      while (true) {
        Scalar coeff = base;
        unsigned jsum = 0;
        for (unsigned i = 0; i < n && coeff; ++i) {
          coeff = f.mul(coeff, reorder_coefficient(f, ea[n + i], eb[i], j[i]));
          jsum += j[i];
        }
        if (coeff) {
          Exponents e(2 * n + 1);
          for (unsigned i = 0; i < n; ++i) {
            e[i] = static_cast<std::uint16_t>(ea[i] + eb[i] - j[i]);
            e[n + i] = static_cast<std::uint16_t>(ea[n + i] + eb[n + i] - j[i]);
          }
          e[2 * n] = static_cast<std::uint16_t>(ea[2 * n] + eb[2 * n] + jsum);
          auto [it, inserted] = out.try_emplace(std::move(e), coeff);
          if (!inserted) it->second = f.add(it->second, coeff);
        }
        unsigned k = 0;
        while (k < n && j[k] == jmax[k]) j[k++] = 0;
        if (k == n) break;
        ++j[k];
      }
    }
  }
  return WeylElement(s, std::move(out), prec);
}

WeylElement commutator(const WeylElement& a, const WeylElement& b) {
  return multiply(a, b) - multiply(b, a);
}

WeylElement ad_power(const WeylElement& a, unsigned k, const WeylElement& b) {
  WeylElement r = b;
  for (unsigned i = 0; i < k; ++i) r = commutator(a, r);
  return r;
}

WeylElement div_hbar(const WeylElement& a) {
  const WeylSpace& s = a.space();
  WeylElement::Terms out;
  for (const auto& [e, c] : a.terms()) {
    if (e[2 * s.n] == 0)
      throw Error(Error::Kind::NotDivisible, "div_hbar: term without hbar factor");
    Exponents d = e;
    --d[2 * s.n];
    out.emplace(std::move(d), c);
  }
  unsigned prec = a.precision() >= 2 ? a.precision() - 2 : 0;
  return WeylElement(s, std::move(out), prec);
}

WeylElement power(const WeylElement& a, unsigned k) {
  WeylElement r = WeylElement::constant(a.space(), 1);
  for (unsigned i = 0; i < k; ++i) r = multiply(r, a);
  return r;
}

WeylElement pth_power(const WeylElement& a) {
  WeylElement r = power(a, a.space().p());
  if (r.precision() == 0)
    throw Error(Error::Kind::PrecisionExhausted, "pth_power: no known terms survive");
  return r;
}

std::map<Exponents, Scalar> at_hbar_one(const WeylElement& a) {
  const WeylSpace& s = a.space();
  std::map<Exponents, Scalar> out;
  for (const auto& [e, c] : a.terms()) {
    Exponents ab(e.begin(), e.begin() + 2 * s.n);
    Scalar& slot = out[ab];
    slot = s.field.add(slot, c);
    if (slot == 0) out.erase(ab);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_text(const WeylElement& a) {
  const WeylSpace& s = a.space();
  std::ostringstream os;
  os << s.p() << ' ' << s.n << ' ' << s.truncation << ' ' << a.precision() << '\n';
  for (const auto& [e, c] : a.terms()) {
    os << c;
    for (auto v : e) os << ' ' << v;
    os << '\n';
  }
  return os.str();
}

WeylElement weyl_from_text(const std::string& text) {
  std::istringstream is(text);
  std::uint32_t p;
  unsigned n, m, prec;
  if (!(is >> p >> n >> m >> prec)) throw Error(Error::Kind::Parse, "weyl text: bad header");
  WeylSpace s(p, n, m);
  if (prec > m) throw Error(Error::Kind::Parse, "weyl text: precision exceeds truncation");
  WeylElement::Terms terms;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::uint64_t c;
    if (!(ls >> c) || c == 0 || c >= p) throw Error(Error::Kind::Parse, "weyl text: bad coefficient");
    Exponents e(2 * n + 1);
    for (auto& v : e) {
      unsigned x;
      if (!(ls >> x)) throw Error(Error::Kind::Parse, "weyl text: short exponent row");
      v = static_cast<std::uint16_t>(x);
    }
    std::string extra;
    if (ls >> extra) throw Error(Error::Kind::Parse, "weyl text: trailing data");
    if (s.degree(e) >= prec) throw Error(Error::Kind::Parse, "weyl text: term beyond precision");
    if (!terms.emplace(e, static_cast<Scalar>(c)).second)
      throw Error(Error::Kind::Parse, "weyl text: duplicate monomial");
  }
  return WeylElement(s, std::move(terms), prec);
}

std::ostream& operator<<(std::ostream& os, const WeylElement& a) {
  const WeylSpace& s = a.space();
  if (a.is_zero()) return os << "0 + O(" << a.precision() << ")";
  bool first = true;
  for (const auto& [e, c] : a.terms()) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (unsigned i = 0; i < s.n; ++i)
      if (e[i]) os << "*x" << i + 1 << (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
    for (unsigned i = 0; i < s.n; ++i)
      if (e[s.n + i]) os << "*y" << i + 1 << (e[s.n + i] > 1 ? "^" + std::to_string(e[s.n + i]) : "");
    if (e[2 * s.n]) os << "*h" << (e[2 * s.n] > 1 ? "^" + std::to_string(e[2 * s.n]) : "");
  }
  return os << " + O(" << a.precision() << ")";
}

}  // namespace charpq
