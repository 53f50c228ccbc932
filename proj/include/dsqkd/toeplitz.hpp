#pragma once

#include <cstdint>

#include "dsqkd/bits.hpp"

namespace dsqkd::toeplitz {

/// An m x n Toeplitz matrix over GF(2), defined by n + m - 1 diagonal
/// seed bits: T[i][j] = seed[i - j + n - 1].
struct ToeplitzSpec {
  std::size_t input_length = 0;  // n
  std::size_t output_length = 0; // m <= n
  BitVector diagonal_seed;       // length n + m - 1

  void validate() const;
};

/// T . bits over GF(2). Word-packed sliding-window evaluation.
BitVector toeplitz_hash(const BitVector& bits, const ToeplitzSpec& spec);

/// Bit-by-bit reference evaluation, kept for cross-checking.
BitVector toeplitz_hash_reference(const BitVector& bits, const ToeplitzSpec& spec);

} // namespace dsqkd::toeplitz
