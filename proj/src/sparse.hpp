#pragma once

// Sparse helpers for checking identities on basis elements without dense
// products. Internal to the library.

#include <cstdint>
#include <utility>
#include <vector>

#include "charpq/field.hpp"

namespace charpq::detail {

using Sparse = std::vector<std::pair<std::uint32_t, Scalar>>;

class Accumulator {
public:
  Accumulator(std::size_t n, std::uint32_t p) : p_(p), acc_(n, 0), seen_(n, false) {}

  void add(std::uint32_t k, std::uint64_t c) {
    if (!seen_[k]) {
      seen_[k] = true;
      touched_.push_back(k);
    }
    acc_[k] = (acc_[k] + c) % p_;
  }
  void sub(std::uint32_t k, std::uint64_t c) { add(k, (p_ - c % p_) % p_); }

  Sparse take() {
    Sparse out;
    for (auto k : touched_) {
      if (acc_[k]) out.emplace_back(k, static_cast<Scalar>(acc_[k]));
      acc_[k] = 0;
      seen_[k] = false;
    }
    touched_.clear();
    return out;
  }

private:
  std::uint64_t p_;
  std::vector<std::uint64_t> acc_;
  std::vector<bool> seen_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace charpq::detail
