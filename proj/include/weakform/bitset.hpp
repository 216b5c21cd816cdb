#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace weakform {

/// Dynamically sized bit vector. Used for state sets (programs, truth sets)
/// and for sets of statements indexed by their position in a language.
class Bitset {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t word_bits = 64;

  Bitset() = default;
  explicit Bitset(std::size_t nbits) : nbits_(nbits), words_(word_count(nbits), 0) {}

  static Bitset full(std::size_t nbits) {
    Bitset b(nbits);
    std::fill(b.words_.begin(), b.words_.end(), ~word_type{0});
    b.trim();
    return b;
  }

  template <class Range>
  static Bitset from_indices(std::size_t nbits, const Range& indices) {
    Bitset b(nbits);
    for (auto i : indices) b.set(static_cast<std::size_t>(i));
    return b;
  }

  std::size_t size() const noexcept { return nbits_; }
  std::span<const word_type> words() const noexcept { return words_; }

  bool test(std::size_t i) const noexcept {
    assert(i < nbits_);
    return (words_[i / word_bits] >> (i % word_bits)) & 1u;
  }
  void set(std::size_t i) noexcept {
    assert(i < nbits_);
    words_[i / word_bits] |= word_type{1} << (i % word_bits);
  }
  void reset(std::size_t i) noexcept {
    assert(i < nbits_);
    words_[i / word_bits] &= ~(word_type{1} << (i % word_bits));
  }
  void clear() noexcept { std::fill(words_.begin(), words_.end(), 0); }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool any() const noexcept {
    return std::any_of(words_.begin(), words_.end(), [](word_type w) { return w != 0; });
  }
  bool none() const noexcept { return !any(); }
  bool all() const noexcept { return count() == nbits_; }

  bool is_subset_of(const Bitset& other) const noexcept {
    assert(nbits_ == other.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }
  bool intersects(const Bitset& other) const noexcept {
    assert(nbits_ == other.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  Bitset& operator&=(const Bitset& o) noexcept {
    assert(nbits_ == o.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  Bitset& operator|=(const Bitset& o) noexcept {
    assert(nbits_ == o.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  /// Set difference.
  Bitset& operator-=(const Bitset& o) noexcept {
    assert(nbits_ == o.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }
  friend Bitset operator-(Bitset a, const Bitset& b) { return a -= b; }
  friend bool operator==(const Bitset&, const Bitset&) = default;

  /// Assigns a & b without reallocating when sizes already match.
  void assign_and(const Bitset& a, const Bitset& b) {
    assert(a.nbits_ == b.nbits_);
    resize_for(a.nbits_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] = a.words_[i] & b.words_[i];
  }

  /// (a & b) == c, computed without a temporary.
  static bool and_equals(const Bitset& a, const Bitset& b, const Bitset& c) noexcept {
    assert(a.nbits_ == b.nbits_ && b.nbits_ == c.nbits_);
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      if ((a.words_[i] & b.words_[i]) != c.words_[i]) return false;
    return true;
  }

  static std::size_t and_count(const Bitset& a, const Bitset& b) noexcept {
    assert(a.nbits_ == b.nbits_);
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      n += static_cast<std::size_t>(std::popcount(a.words_[i] & b.words_[i]));
    return n;
  }

  /// Index of the first set bit at or after `from`, or size() if none.
  std::size_t find_next(std::size_t from) const noexcept {
    if (from >= nbits_) return nbits_;
    std::size_t wi = from / word_bits;
    word_type w = words_[wi] & (~word_type{0} << (from % word_bits));
    while (true) {
      if (w) return std::min(nbits_, wi * word_bits + static_cast<std::size_t>(std::countr_zero(w)));
      if (++wi == words_.size()) return nbits_;
      w = words_[wi];
    }
  }
  std::size_t find_first() const noexcept { return find_next(0); }

  /// Index of the k-th set bit (0-based); size() if fewer than k+1 bits are set.
  std::size_t nth_set(std::size_t k) const noexcept {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      auto c = static_cast<std::size_t>(std::popcount(words_[wi]));
      if (k < c) {
        word_type w = words_[wi];
        for (std::size_t j = 0; j < k; ++j) w &= w - 1;
        return wi * word_bits + static_cast<std::size_t>(std::countr_zero(w));
      }
      k -= c;
    }
    return nbits_;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      word_type w = words_[wi];
      while (w) {
        f(wi * word_bits + static_cast<std::size_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  /// Total order used for deterministic containers: size, then words.
  friend bool operator<(const Bitset& a, const Bitset& b) noexcept {
    if (a.nbits_ != b.nbits_) return a.nbits_ < b.nbits_;
    return std::lexicographical_compare(a.words_.rbegin(), a.words_.rend(), b.words_.rbegin(),
                                        b.words_.rend());
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull ^ nbits_;
    for (auto w : words_) {
      h ^= w;
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }

 private:
  static std::size_t word_count(std::size_t nbits) { return (nbits + word_bits - 1) / word_bits; }

  void resize_for(std::size_t nbits) {
    nbits_ = nbits;
    words_.resize(word_count(nbits));
  }

  void trim() noexcept {
    if (nbits_ % word_bits && !words_.empty())
      words_.back() &= (word_type{1} << (nbits_ % word_bits)) - 1;
  }

  std::size_t nbits_ = 0;
  std::vector<word_type> words_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const noexcept { return b.hash(); }
};

}  // namespace weakform
