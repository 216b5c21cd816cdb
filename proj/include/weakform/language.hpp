#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "weakform/environment.hpp"

namespace weakform {

/// L_v materialised once, with every statement's extension cached as a
/// bitset over statement positions. Statement position == canonical rank.
class Language {
 public:
  /// Largest language for which the quadratic extension cache is built.
  static constexpr std::size_t max_indexed = 4096;

  static std::shared_ptr<const Language> build(Environment env) {
    auto lang = std::shared_ptr<Language>(new Language(std::move(env)));
    return lang;
  }

  const Environment& environment() const noexcept { return env_; }
  std::size_t size() const noexcept { return statements_.size(); }
  std::span<const Statement> statements() const noexcept { return statements_; }
  const Statement& statement(std::size_t i) const { return statements_.at(i); }

  std::optional<std::size_t> index_of(const Statement& s) const {
    auto it = std::lower_bound(statements_.begin(), statements_.end(), s);
    if (it == statements_.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - statements_.begin());
  }
  bool contains(const Statement& s) const { return index_of(s).has_value(); }

  std::size_t require_index(const Statement& s) const {
    if (auto i = index_of(s)) return *i;
    for (auto p : s.indices())
      if (p >= env_.vocabulary_size())
        fail(ErrorCode::IndexOutOfRange, "program index " + std::to_string(p) + " not in vocabulary");
    fail(ErrorCode::NotAStatement, s.to_string() + " is not in L_v");
  }

  /// E_i as a set of statement positions.
  const Bitset& extension_bits(std::size_t i) const { return extensions_.at(i); }
  std::size_t extension_size(std::size_t i) const { return extension_sizes_.at(i); }

  /// E_X for a set X given by positions.
  Bitset extension_of(const Bitset& xs) const {
    Bitset out(size());
    xs.for_each([&](std::size_t i) { out |= extensions_[i]; });
    return out;
  }

  Bitset to_bits(std::span<const Statement> xs) const {
    Bitset b(size());
    for (const auto& x : xs) b.set(require_index(x));
    return b;
  }

  std::vector<Statement> to_statements(const Bitset& bits) const {
    std::vector<Statement> out;
    out.reserve(bits.count());
    bits.for_each([&](std::size_t i) { out.push_back(statements_[i]); });
    return out;
  }

  /// Encoded as "[[...],[...]]" in canonical order.
  std::string format(const Bitset& bits) const {
    std::string s = "[";
    bool first = true;
    bits.for_each([&](std::size_t i) {
      if (!first) s += ',';
      s += statements_[i].to_string();
      first = false;
    });
    return s + "]";
  }

 private:
  explicit Language(Environment env) : env_(std::move(env)) {
    statements_ = enumerate_language(env_);
    const auto m = statements_.size();
    if (m > max_indexed)
      fail(ErrorCode::VocabularyTooLarge, "language of " + std::to_string(m) +
                                              " statements exceeds the indexed maximum " +
                                              std::to_string(max_indexed));
    std::vector<Bitset> program_bits;
    program_bits.reserve(m);
    for (const auto& s : statements_) program_bits.push_back(s.to_bits(env_.vocabulary_size()));
    extensions_.assign(m, Bitset(m));
    extension_sizes_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j)
        if (program_bits[i].is_subset_of(program_bits[j])) extensions_[i].set(j);
      extension_sizes_[i] = extensions_[i].count();
    }
  }

  Environment env_;
  std::vector<Statement> statements_;
  std::vector<Bitset> extensions_;
  std::vector<std::size_t> extension_sizes_;
};

using LanguagePtr = std::shared_ptr<const Language>;

}  // namespace weakform
