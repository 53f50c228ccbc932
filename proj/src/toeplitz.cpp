#include "dsqkd/toeplitz.hpp"

#include <bit>
#include <stdexcept>

namespace dsqkd::toeplitz {

void ToeplitzSpec::validate() const {
  if (output_length > input_length)
    throw std::invalid_argument("toeplitz: output length exceeds input length");
  if (input_length == 0) throw std::invalid_argument("toeplitz: empty input length");
  if (output_length > 0 && diagonal_seed.size() != input_length + output_length - 1)
    throw std::invalid_argument("toeplitz: seed must have n + m - 1 bits");
}

BitVector toeplitz_hash(const BitVector& bits, const ToeplitzSpec& spec) {
  spec.validate();
  if (bits.size() != spec.input_length)
    throw std::invalid_argument("toeplitz: input length mismatch");
  const std::size_t m = spec.output_length;
  BitVector out(m);
  if (m == 0) return out;

  // Row i reads seed positions (i + n - 1 - j) for j = 0..n-1; reversing
  // the seed turns every row into a contiguous window starting at m-1-i.
  BitVector reversed(spec.diagonal_seed.size());
  for (std::size_t t = 0; t < reversed.size(); ++t)
    reversed.set(t, spec.diagonal_seed.get(reversed.size() - 1 - t));

  const auto& xw = bits.words();
  const std::size_t n_words = xw.size();
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t offset = m - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < n_words; ++w)
      acc ^= xw[w] & reversed.word_at(offset + 64 * w);
    // Bits of x past n are already zero, so no tail mask is needed.
    out.set(i, std::popcount(acc) & 1);
  }
  return out;
}

BitVector toeplitz_hash_reference(const BitVector& bits, const ToeplitzSpec& spec) {
  spec.validate();
  if (bits.size() != spec.input_length)
    throw std::invalid_argument("toeplitz: input length mismatch");
  BitVector out(spec.output_length);
  for (std::size_t i = 0; i < spec.output_length; ++i) {
    bool parity = false;
    for (std::size_t j = 0; j < spec.input_length; ++j) {
      if (bits.get(j) && spec.diagonal_seed.get(i - j + spec.input_length - 1))
        parity = !parity;
    }
    out.set(i, parity);
  }
  return out;
}

} // namespace dsqkd::toeplitz
