#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dsqkd/rng.hpp"

namespace dsqkd {

/// Word-packed bit sequence. Index 0 is the least significant bit of
/// word 0.
class BitVector {
public:
  BitVector() = default;
  explicit BitVector(std::size_t n) : size_(n), words_((n + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(std::size_t i, bool v) {
    std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (v) words_.back() |= std::uint64_t{1} << (size_ & 63);
    ++size_;
  }

  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::size_t count_zeros() const { return size_ - count_ones(); }

  bool operator==(const BitVector& o) const {
    return size_ == o.size_ && words_ == o.words_;
  }

  BitVector operator^(const BitVector& o) const {
    if (size_ != o.size_) throw std::invalid_argument("BitVector xor: length mismatch");
    BitVector r(size_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] ^ o.words_[i];
    return r;
  }

  /// Parity of the AND with another vector of equal length.
  bool dot_parity(const BitVector& o) const {
    if (size_ != o.size_) throw std::invalid_argument("BitVector dot: length mismatch");
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) acc ^= words_[i] & o.words_[i];
    return std::popcount(acc) & 1;
  }

  /// Extract 64 bits starting at bit offset (may be unaligned); bits past
  /// the end read as zero.
  std::uint64_t word_at(std::size_t bit_offset) const {
    std::size_t w = bit_offset >> 6;
    unsigned sh = bit_offset & 63;
    std::uint64_t lo = w < words_.size() ? words_[w] : 0;
    if (sh == 0) return lo;
    std::uint64_t hi = (w + 1) < words_.size() ? words_[w + 1] : 0;
    return (lo >> sh) | (hi << (64 - sh));
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  static BitVector random(std::size_t n, rng::Stream& s) {
    BitVector v(n);
    for (auto& w : v.words_) w = s.next_u64();
    v.trim();
    return v;
  }

private:
  void trim() {
    if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

} // namespace dsqkd
