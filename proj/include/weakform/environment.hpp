#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "weakform/bitset.hpp"
#include "weakform/error.hpp"

namespace weakform {

/// Exact counts. Extension and task-space sizes grow exponentially.
using Count = boost::multiprecision::cpp_int;

/// Size thresholds. Exceeding one is an error, never a silent truncation.
struct Limits {
  std::size_t vocabulary = 24;      // subset enumeration over the vocabulary
  std::size_t truth_set = 24;       // inclusion-exclusion over a truth set
  std::size_t task_space = 20;      // |L_v| for exhaustive task-space passes
  std::size_t powerset_states = 4;  // |Φ| for the full-powerset vocabulary

  static constexpr std::size_t max_vocabulary = 30;
  static constexpr std::size_t max_truth_set = 30;
  static constexpr std::size_t max_task_space = 30;
  static constexpr std::size_t max_powerset_states = 5;
  static constexpr std::size_t max_states = 4096;

  friend bool operator==(const Limits&, const Limits&) = default;
};

/// Language-level switches for the two literal-reading questions: whether
/// the empty statement belongs to L_v, and whether O = ∅ tasks belong to Γ_v.
struct Settings {
  Limits limits;
  bool empty_statement = true;
  bool empty_outputs = true;

  friend bool operator==(const Settings&, const Settings&) = default;
};

/// A declarative program: the set of states in which it is true.
class Program {
 public:
  Program() = default;
  Program(std::size_t state_count, std::span<const std::size_t> states) : members_(state_count) {
    for (auto s : states) {
      if (s >= state_count)
        fail(ErrorCode::StateOutOfRange,
             "state " + std::to_string(s) + " outside [0, " + std::to_string(state_count) + ")");
      members_.set(s);
    }
  }
  Program(std::size_t state_count, std::initializer_list<std::size_t> states)
      : Program(state_count, std::span<const std::size_t>(states.begin(), states.size())) {}
  explicit Program(Bitset members) : members_(std::move(members)) {}

  const Bitset& members() const noexcept { return members_; }
  bool contains(std::size_t state) const noexcept { return members_.test(state); }
  std::size_t cardinality() const noexcept { return members_.count(); }
  std::size_t state_count() const noexcept { return members_.size(); }
  std::vector<std::size_t> states() const { return members_.indices(); }

  friend bool operator==(const Program&, const Program&) = default;

  /// Canonical order: cardinality, then lexicographic on sorted members.
  friend std::strong_ordering operator<=>(const Program& a, const Program& b) {
    if (auto c = a.cardinality() <=> b.cardinality(); c != 0) return c;
    const auto x = a.states(), y = b.states();
    return std::lexicographical_compare_three_way(x.begin(), x.end(), y.begin(), y.end());
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    members_.for_each([&](std::size_t i) {
      if (!first) s += ',';
      s += std::to_string(i);
      first = false;
    });
    return s + "}";
  }

 private:
  Bitset members_;
};

/// A candidate statement: a set of vocabulary positions, kept sorted and
/// unique. Whether it is an actual statement (nonempty truth set) depends on
/// the environment.
class Statement {
 public:
  using index_type = std::uint32_t;

  Statement() = default;
  Statement(std::initializer_list<index_type> idx) : idx_(idx) { normalise(); }
  explicit Statement(std::vector<index_type> idx) : idx_(std::move(idx)) { normalise(); }

  static Statement from_bits(const Bitset& programs) {
    Statement s;
    s.idx_.reserve(programs.count());
    programs.for_each([&](std::size_t i) { s.idx_.push_back(static_cast<index_type>(i)); });
    return s;
  }

  std::span<const index_type> indices() const noexcept { return idx_; }
  std::size_t size() const noexcept { return idx_.size(); }
  bool empty() const noexcept { return idx_.empty(); }
  bool contains(index_type i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

  /// True iff this ⊆ other.
  bool is_subset_of(const Statement& other) const {
    return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
  }

  Bitset to_bits(std::size_t vocabulary_size) const {
    Bitset b(vocabulary_size);
    for (auto i : idx_) b.set(i);
    return b;
  }

  friend bool operator==(const Statement&, const Statement&) = default;

  /// Canonical order: number of programs, then lexicographic.
  friend std::strong_ordering operator<=>(const Statement& a, const Statement& b) {
    if (auto c = a.idx_.size() <=> b.idx_.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.idx_.begin(), a.idx_.end(), b.idx_.begin(),
                                                  b.idx_.end());
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(idx_[i]);
    }
    return s + "]";
  }

 private:
  void normalise() {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  }

  std::vector<index_type> idx_;
};

struct StatementHash {
  std::size_t operator()(const Statement& s) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ull ^ s.size();
    for (auto i : s.indices()) h = (h ^ i) * 0x100000001b3ull;
    return static_cast<std::size_t>(h);
  }
};

/// A finite set of states together with a vocabulary of distinct programs,
/// stored in canonical order.
class Environment {
 public:
  static Environment make(std::size_t state_count,
                          const std::vector<std::vector<std::size_t>>& programs,
                          Settings settings = {}) {
    if (state_count < 1) fail(ErrorCode::StateOutOfRange, "state_count must be at least 1");
    if (state_count > Limits::max_states)
      fail(ErrorCode::StateOutOfRange,
           "state_count exceeds supported maximum " + std::to_string(Limits::max_states));
    std::vector<Program> vocabulary;
    vocabulary.reserve(programs.size());
    for (const auto& p : programs) vocabulary.emplace_back(state_count, p);
    return make(state_count, std::move(vocabulary), settings);
  }

  static Environment make(std::size_t state_count, std::vector<Program> vocabulary,
                          Settings settings = {}) {
    for (const auto& p : vocabulary)
      if (p.state_count() != state_count)
        fail(ErrorCode::StateOutOfRange, "program defined over a different state count");
    Environment env;
    env.state_count_ = state_count;
    env.settings_ = settings;
    env.reordered_ = !std::is_sorted(vocabulary.begin(), vocabulary.end());
    std::sort(vocabulary.begin(), vocabulary.end());
    if (auto it = std::adjacent_find(vocabulary.begin(), vocabulary.end()); it != vocabulary.end())
      fail(ErrorCode::DuplicateProgram, "program " + it->to_string() + " appears twice");
    env.vocabulary_ = std::move(vocabulary);
    env.occurrence_.assign(state_count, Bitset(env.vocabulary_.size()));
    for (std::size_t p = 0; p < env.vocabulary_.size(); ++p)
      env.vocabulary_[p].members().for_each([&](std::size_t s) { env.occurrence_[s].set(p); });
    return env;
  }

  std::size_t state_count() const noexcept { return state_count_; }
  std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }
  std::span<const Program> vocabulary() const noexcept { return vocabulary_; }
  const Program& program(std::size_t i) const { return vocabulary_.at(i); }
  const Settings& settings() const noexcept { return settings_; }
  const Limits& limits() const noexcept { return settings_.limits; }
  /// Whether construction had to reorder the given programs.
  bool reordered() const noexcept { return reordered_; }

  /// Programs (as vocabulary positions) that are true in `state`.
  const Bitset& programs_containing(std::size_t state) const { return occurrence_.at(state); }

  Environment with_settings(Settings settings) const {
    Environment e = *this;
    e.settings_ = settings;
    return e;
  }

  friend bool operator==(const Environment& a, const Environment& b) {
    return a.state_count_ == b.state_count_ && a.vocabulary_ == b.vocabulary_ &&
           a.settings_ == b.settings_;
  }

 private:
  Environment() = default;

  std::size_t state_count_ = 0;
  std::vector<Program> vocabulary_;
  std::vector<Bitset> occurrence_;
  Settings settings_;
  bool reordered_ = false;
};

inline Environment mk_environment(std::size_t state_count,
                                  const std::vector<std::vector<std::size_t>>& programs,
                                  Settings settings = {}) {
  return Environment::make(state_count, programs, settings);
}

namespace detail {

inline void check_indices(const Environment& env, const Statement& l) {
  for (auto i : l.indices())
    if (i >= env.vocabulary_size())
      fail(ErrorCode::IndexOutOfRange, "program index " + std::to_string(i) + " not in vocabulary of size " +
                                           std::to_string(env.vocabulary_size()));
}

}  // namespace detail

/// ⋂ of the member programs; all states for the empty statement.
inline Bitset truth_set(const Environment& env, const Statement& l) {
  detail::check_indices(env, l);
  Bitset t = Bitset::full(env.state_count());
  for (auto i : l.indices()) t &= env.program(i).members();
  return t;
}

inline bool is_statement(const Environment& env, const Statement& candidate) {
  detail::check_indices(env, candidate);
  if (candidate.empty()) return env.settings().empty_statement;
  return truth_set(env, candidate).any();
}

/// y is a completion of x iff x ⊆ y.
inline bool is_completion(const Statement& y, const Statement& x) { return x.is_subset_of(y); }

namespace detail {

inline void require_statement(const Environment& env, const Statement& x) {
  if (!is_statement(env, x)) fail(ErrorCode::NotAStatement, x.to_string() + " is not in L_v");
}

/// Depth-first walk over supersets of `base` drawn from programs with
/// position >= `from`, pruning as soon as the joint truth set empties.
template <class Visit>
void walk_completions(const Environment& env, std::vector<Statement::index_type>& current,
                      const Bitset& truth, std::size_t from, const Bitset& excluded, Visit& visit) {
  for (std::size_t p = from; p < env.vocabulary_size(); ++p) {
    if (excluded.test(p)) continue;
    Bitset t = truth & env.program(p).members();
    if (t.none()) continue;
    current.push_back(static_cast<Statement::index_type>(p));
    visit(current);
    walk_completions(env, current, t, p + 1, excluded, visit);
    current.pop_back();
  }
}

inline void check_vocabulary_guard(const Environment& env, std::size_t free_programs) {
  if (free_programs > env.limits().vocabulary)
    fail(ErrorCode::VocabularyTooLarge, std::to_string(free_programs) +
                                            " programs exceed the enumeration guard of " +
                                            std::to_string(env.limits().vocabulary));
}

}  // namespace detail

/// All statements of L_v in canonical order.
inline std::vector<Statement> enumerate_language(const Environment& env) {
  detail::check_vocabulary_guard(env, env.vocabulary_size());
  std::vector<Statement> out;
  if (env.settings().empty_statement) out.emplace_back();
  std::vector<Statement::index_type> current;
  auto visit = [&](const std::vector<Statement::index_type>& idx) { out.emplace_back(idx); };
  detail::walk_completions(env, current, Bitset::full(env.state_count()), 0,
                           Bitset(env.vocabulary_size()), visit);
  std::sort(out.begin(), out.end());
  return out;
}

/// A materialised extension, sorted canonically.
struct ExtensionSet {
  std::vector<Statement> members;

  std::size_t size() const noexcept { return members.size(); }
  bool empty() const noexcept { return members.empty(); }
  bool contains(const Statement& s) const {
    return std::binary_search(members.begin(), members.end(), s);
  }
  friend bool operator==(const ExtensionSet&, const ExtensionSet&) = default;
};

/// E_x: every statement of L_v that completes x.
inline ExtensionSet extension(const Environment& env, const Statement& x) {
  detail::require_statement(env, x);
  const Bitset excluded = x.to_bits(env.vocabulary_size());
  detail::check_vocabulary_guard(env, env.vocabulary_size() - x.size());
  ExtensionSet e;
  e.members.push_back(x);
  std::vector<Statement::index_type> extra;
  auto visit = [&](const std::vector<Statement::index_type>& add) {
    std::vector<Statement::index_type> idx(x.indices().begin(), x.indices().end());
    idx.insert(idx.end(), add.begin(), add.end());
    e.members.emplace_back(std::move(idx));
  };
  detail::walk_completions(env, extra, truth_set(env, x), 0, excluded, visit);
  std::sort(e.members.begin(), e.members.end());
  return e;
}

/// |E_x| by inclusion-exclusion over nonempty subsets S of the truth set of x:
/// sum of (-1)^(|S|+1) * 2^|v_S \ x|, where v_S are the programs true in all of S.
inline Count extension_size(const Environment& env, const Statement& x) {
  detail::require_statement(env, x);
  const Bitset truth = truth_set(env, x);
  const auto states = truth.indices();
  if (states.size() > env.limits().truth_set)
    fail(ErrorCode::TruthSetTooLarge, "truth set of " + std::to_string(states.size()) +
                                          " states exceeds guard " +
                                          std::to_string(env.limits().truth_set));
  const Bitset xbits = x.to_bits(env.vocabulary_size());
  // Tally signed terms by exponent; the big-integer sum happens once at the end.
  std::vector<std::int64_t> tally(env.vocabulary_size() + 1, 0);
  std::vector<Bitset> stack(states.size() + 1);
  stack[0] = Bitset::full(env.vocabulary_size()) - xbits;
  auto recurse = [&](auto&& self, std::size_t depth, std::size_t next) -> void {
    for (std::size_t k = next; k < states.size(); ++k) {
      stack[depth + 1].assign_and(stack[depth], env.programs_containing(states[k]));
      const auto e = stack[depth + 1].count();
      tally[e] += (depth % 2 == 0) ? 1 : -1;
      self(self, depth + 1, k + 1);
    }
  };
  recurse(recurse, 0, 0);
  Count total = 0;
  for (std::size_t e = 0; e < tally.size(); ++e)
    if (tally[e] != 0) total += Count(tally[e]) << e;
  return total;
}

/// E_X: union of the member extensions, deduplicated.
inline ExtensionSet extension_of_set(const Environment& env, std::span<const Statement> xs) {
  ExtensionSet out;
  for (const auto& x : xs) {
    auto e = extension(env, x);
    out.members.insert(out.members.end(), e.members.begin(), e.members.end());
  }
  std::sort(out.members.begin(), out.members.end());
  out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
  return out;
}

/// Literal equivalence: E_x = E_y as sets.
inline bool equivalent(const Environment& env, const Statement& x, const Statement& y) {
  return extension(env, x) == extension(env, y);
}

}  // namespace weakform
