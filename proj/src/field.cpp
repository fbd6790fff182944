#include "charpq/field.hpp"

#include <algorithm>

namespace charpq {

const char* kind_name(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::InvalidArgument: return "InvalidArgument";
    case Error::Kind::DimensionMismatch: return "DimensionMismatch";
    case Error::Kind::NotDivisible: return "NotDivisible";
    case Error::Kind::PrecisionExhausted: return "PrecisionExhausted";
    case Error::Kind::NotWeaklyCentral: return "NotWeaklyCentral";
    case Error::Kind::NotWeaklyRestricted: return "NotWeaklyRestricted";
    case Error::Kind::BracketIllDefined: return "BracketIllDefined";
    case Error::Kind::NotAssociative: return "NotAssociative";
    case Error::Kind::NotTwoSided: return "NotTwoSided";
    case Error::Kind::NotCommutative: return "NotCommutative";
    case Error::Kind::SizeOverflow: return "SizeOverflow";
    case Error::Kind::PreconditionDefectNotInIdeal: return "PreconditionDefectNotInIdeal";
    case Error::Kind::DecompositionMismatch: return "DecompositionMismatch";
    case Error::Kind::PreconditionViolation: return "PreconditionViolation";
    case Error::Kind::ClosureViolation: return "ClosureViolation";
    case Error::Kind::RepresentationInvalid: return "RepresentationInvalid";
    case Error::Kind::InvariantViolation: return "InvariantViolation";
    case Error::Kind::Parse: return "Parse";
  }
  return "Unknown";
}

bool is_prime(std::uint32_t n) noexcept {
  if (n < 2) return false;
  for (std::uint32_t d = 2; static_cast<std::uint64_t>(d) * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

Field::Field(std::uint32_t p) : p_(p) {
  if (!is_prime(p) || p == 2)
    throw Error(Error::Kind::InvalidArgument,
                "modulus must be an odd prime, got " + std::to_string(p));
  if (p > 65521)
    throw Error(Error::Kind::InvalidArgument, "modulus too large for 32-bit products");
  inverses_.assign(p, 0);
  inverses_[1] = 1;
  for (std::uint32_t a = 2; a < p; ++a)
    inverses_[a] = mul(p - p / a, inverses_[p % a]);
}

Scalar Field::pow(Scalar a, std::uint64_t e) const noexcept {
  Scalar r = 1 % p_;
  Scalar b = a % p_;
  while (e) {
    if (e & 1) r = mul(r, b);
    b = mul(b, b);
    e >>= 1;
  }
  return r;
}

Scalar Field::inv(Scalar a) const {
  if (a % p_ == 0) throw Error(Error::Kind::InvalidArgument, "inverse of zero");
  return inverses_[a % p_];
}

Scalar Field::binomial(std::uint64_t n, std::uint64_t k) const noexcept {
  if (k > n) return 0;
  Scalar r = 1;
  while (n || k) {
    std::uint64_t ni = n % p_, ki = k % p_;
    if (ki > ni) return 0;
    // small binomial via multiplicative formula, all factors < p are invertible
    Scalar num = 1, den = 1;
    for (std::uint64_t i = 0; i < ki; ++i) {
      num = mul(num, static_cast<Scalar>(ni - i));
      den = mul(den, static_cast<Scalar>(i + 1));
    }
    r = mul(r, mul(num, inverses_[den]));
    n /= p_;
    k /= p_;
  }
  return r;
}

Vec axpy(const Field& f, Scalar a, const Vec& x, Vec y) {
  if (a == 0) return y;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) y[i] = f.add(y[i], f.mul(a, x[i]));
  return y;
}

Vec sub(const Field& f, const Vec& x, const Vec& y) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = f.sub(x[i], y[i]);
  return r;
}

Vec add(const Field& f, const Vec& x, const Vec& y) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = f.add(x[i], y[i]);
  return r;
}

Vec scale(const Field& f, Scalar a, Vec x) {
  for (auto& v : x) v = f.mul(a, v);
  return x;
}

bool is_zero(const Vec& v) noexcept {
  return std::all_of(v.begin(), v.end(), [](Scalar s) { return s == 0; });
}

}  // namespace charpq
