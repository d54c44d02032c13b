#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace causnet {

/// Fixed-width bit set over node indices 0..universe-1.
///
/// One 64-bit word per 64 nodes. Universes of up to 128 nodes are stored
/// inline; larger universes spill to the heap. Two subsets compare equal only
/// when they share the same universe and the same members.
class NodeSubset {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;
  static constexpr std::size_t kInlineWords = 2;

  NodeSubset() = default;

  explicit NodeSubset(std::size_t universe) : universe_(universe), words_(word_count(universe)) {
    if (words_ > kInlineWords) heap_.assign(words_, 0);
  }

  NodeSubset(std::size_t universe, std::initializer_list<int> members) : NodeSubset(universe) {
    for (int m : members) set(m);
  }

  NodeSubset(std::size_t universe, std::span<const int> members) : NodeSubset(universe) {
    for (int m : members) set(m);
  }

  static NodeSubset full(std::size_t universe) {
    NodeSubset s(universe);
    for (std::size_t i = 0; i < universe; ++i) s.set(static_cast<int>(i));
    return s;
  }

  std::size_t universe() const noexcept { return universe_; }
  std::size_t word_size() const noexcept { return words_; }

  word_type word(std::size_t w) const noexcept { return data()[w]; }

  bool test(int i) const noexcept {
    assert(i >= 0 && static_cast<std::size_t>(i) < universe_);
    return (data()[i / kWordBits] >> (i % kWordBits)) & 1U;
  }

  NodeSubset& set(int i) noexcept {
    assert(i >= 0 && static_cast<std::size_t>(i) < universe_);
    data()[i / kWordBits] |= word_type{1} << (i % kWordBits);
    return *this;
  }

  NodeSubset& reset(int i) noexcept {
    assert(i >= 0 && static_cast<std::size_t>(i) < universe_);
    data()[i / kWordBits] &= ~(word_type{1} << (i % kWordBits));
    return *this;
  }

  NodeSubset with(int i) const {
    NodeSubset r = *this;
    r.set(i);
    return r;
  }

  NodeSubset without(int i) const {
    NodeSubset r = *this;
    r.reset(i);
    return r;
  }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(data()[w]));
    return c;
  }

  bool empty() const noexcept {
    for (std::size_t w = 0; w < words_; ++w)
      if (data()[w]) return false;
    return true;
  }

  bool intersects(const NodeSubset& o) const noexcept {
    assert(universe_ == o.universe_);
    for (std::size_t w = 0; w < words_; ++w)
      if (data()[w] & o.data()[w]) return true;
    return false;
  }

  bool is_subset_of(const NodeSubset& o) const noexcept {
    assert(universe_ == o.universe_);
    for (std::size_t w = 0; w < words_; ++w)
      if (data()[w] & ~o.data()[w]) return false;
    return true;
  }

  NodeSubset& operator|=(const NodeSubset& o) noexcept {
    assert(universe_ == o.universe_);
    for (std::size_t w = 0; w < words_; ++w) data()[w] |= o.data()[w];
    return *this;
  }

  NodeSubset& operator&=(const NodeSubset& o) noexcept {
    assert(universe_ == o.universe_);
    for (std::size_t w = 0; w < words_; ++w) data()[w] &= o.data()[w];
    return *this;
  }

  /// Set difference.
  NodeSubset& operator-=(const NodeSubset& o) noexcept {
    assert(universe_ == o.universe_);
    for (std::size_t w = 0; w < words_; ++w) data()[w] &= ~o.data()[w];
    return *this;
  }

  friend NodeSubset operator|(NodeSubset a, const NodeSubset& b) { return a |= b; }
  friend NodeSubset operator&(NodeSubset a, const NodeSubset& b) { return a &= b; }
  friend NodeSubset operator-(NodeSubset a, const NodeSubset& b) { return a -= b; }

  friend bool operator==(const NodeSubset& a, const NodeSubset& b) noexcept {
    if (a.universe_ != b.universe_) return false;
    return std::equal(a.data(), a.data() + a.words_, b.data());
  }

  /// Lowest member, or -1 when empty.
  int first() const noexcept { return next(0); }

  /// Smallest member >= from, or -1.
  int next(int from) const noexcept {
    if (from < 0) from = 0;
    std::size_t w = static_cast<std::size_t>(from) / kWordBits;
    if (w >= words_) return -1;
    word_type cur = data()[w] & (~word_type{0} << (static_cast<std::size_t>(from) % kWordBits));
    while (true) {
      if (cur) return static_cast<int>(w * kWordBits + static_cast<std::size_t>(std::countr_zero(cur)));
      if (++w >= words_) return -1;
      cur = data()[w];
    }
  }

  class const_iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = int;
    using difference_type = std::ptrdiff_t;
    using pointer = const int*;
    using reference = int;

    const_iterator() = default;
    const_iterator(const NodeSubset* s, int pos) : s_(s), pos_(pos) {}
    int operator*() const { return pos_; }
    const_iterator& operator++() {
      pos_ = s_->next(pos_ + 1);
      return *this;
    }
    const_iterator operator++(int) {
      auto t = *this;
      ++*this;
      return t;
    }
    friend bool operator==(const const_iterator& a, const const_iterator& b) { return a.pos_ == b.pos_; }

   private:
    const NodeSubset* s_ = nullptr;
    int pos_ = -1;
  };

  const_iterator begin() const { return {this, first()}; }
  const_iterator end() const { return {this, -1}; }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(count());
    for (int m : *this) out.push_back(m);
    return out;
  }

  std::size_t hash() const noexcept {
    std::size_t h = universe_ * 0x9E3779B97F4A7C15ULL;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t x = data()[w] + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
      x ^= x >> 31;
      x *= 0xBF58476D1CE4E5B9ULL;
      x ^= x >> 27;
      h ^= static_cast<std::size_t>(x);
    }
    return h;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first_member = true;
    for (int m : *this) {
      if (!first_member) s += ',';
      s += std::to_string(m);
      first_member = false;
    }
    return s + "}";
  }

 private:
  static std::size_t word_count(std::size_t universe) { return (universe + kWordBits - 1) / kWordBits; }

  word_type* data() noexcept { return words_ > kInlineWords ? heap_.data() : inline_.data(); }
  const word_type* data() const noexcept { return words_ > kInlineWords ? heap_.data() : inline_.data(); }

  std::size_t universe_ = 0;
  std::size_t words_ = 0;
  std::array<word_type, kInlineWords> inline_{};
  std::vector<word_type> heap_;
};

/// Orders subsets by their sorted member lists, lexicographically.
/// Used wherever a deterministic tie-break between equal-scoring subsets is needed.
inline bool lex_less(const NodeSubset& a, const NodeSubset& b) {
  auto ia = a.begin(), ib = b.begin();
  for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
    if (*ia != *ib) return *ia < *ib;
  }
  return ia == a.end() && ib != b.end();
}

struct NodeSubsetHash {
  std::size_t operator()(const NodeSubset& s) const noexcept { return s.hash(); }
};

}  // namespace causnet

template <>
struct std::hash<causnet::NodeSubset> {
  std::size_t operator()(const causnet::NodeSubset& s) const noexcept { return s.hash(); }
};
