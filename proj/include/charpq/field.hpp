#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace charpq {

using Scalar = std::uint32_t;
using Vec = std::vector<Scalar>;

/// Error raised by every module; `kind` names the failure class so callers
/// (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
  enum class Kind {
    InvalidArgument,
    DimensionMismatch,
    NotDivisible,
    PrecisionExhausted,
    NotWeaklyCentral,
    NotWeaklyRestricted,
    BracketIllDefined,
    NotAssociative,
    NotTwoSided,
    NotCommutative,
    SizeOverflow,
    PreconditionDefectNotInIdeal,
    DecompositionMismatch,
    PreconditionViolation,
    ClosureViolation,
    RepresentationInvalid,
    InvariantViolation,
    Parse,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

const char* kind_name(Error::Kind kind);

/// The prime field F_p for an odd prime p.
class Field {
public:
  /// Validates primality and p > 2.
  explicit Field(std::uint32_t p);

  std::uint32_t p() const noexcept { return p_; }

  Scalar reduce(std::int64_t v) const noexcept {
    std::int64_t r = v % static_cast<std::int64_t>(p_);
    return static_cast<Scalar>(r < 0 ? r + p_ : r);
  }
  Scalar add(Scalar a, Scalar b) const noexcept {
    Scalar s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  Scalar sub(Scalar a, Scalar b) const noexcept { return a >= b ? a - b : a + p_ - b; }
  Scalar neg(Scalar a) const noexcept { return a == 0 ? 0 : p_ - a; }
  Scalar mul(Scalar a, Scalar b) const noexcept {
    return static_cast<Scalar>((static_cast<std::uint64_t>(a) * b) % p_);
  }
  Scalar pow(Scalar a, std::uint64_t e) const noexcept;
  Scalar inv(Scalar a) const;

  /// Binomial coefficient C(n, k) mod p (Lucas).
  Scalar binomial(std::uint64_t n, std::uint64_t k) const noexcept;

  bool operator==(const Field& o) const noexcept { return p_ == o.p_; }

private:
  std::uint32_t p_;
  std::vector<Scalar> inverses_;
};

bool is_prime(std::uint32_t n) noexcept;

// Dense vector helpers over a field.
Vec axpy(const Field& f, Scalar a, const Vec& x, Vec y);  // y + a*x
Vec sub(const Field& f, const Vec& x, const Vec& y);
Vec add(const Field& f, const Vec& x, const Vec& y);
Vec scale(const Field& f, Scalar a, Vec x);
bool is_zero(const Vec& v) noexcept;

}  // namespace charpq
