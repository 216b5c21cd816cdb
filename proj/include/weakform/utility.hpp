#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "weakform/learning.hpp"

namespace weakform {

/// A choice of sub-vocabulary, as a bitset over the base vocabulary positions.
using VocabularyChoice = Bitset;

struct UtilityWitness {
  Count utility;
  Statement policy;  // a weakest correct policy
};

/// ε = max over Π of |E_π| minus |O|, with the maximising policy.
inline UtilityWitness utility_witness(const Task& task) {
  const auto policies = correct_policies(task);
  if (policies.empty())
    fail(ErrorCode::NoCorrectPolicy, "utility undefined: task " + task.id() + " has no correct policy");
  const auto& lang = task.language();
  std::size_t best = policies.bits.find_first();
  policies.bits.for_each([&](std::size_t i) {
    if (lang.extension_size(i) > lang.extension_size(best)) best = i;
  });
  return UtilityWitness{Count(lang.extension_size(best)) - task.output_bits().count(),
                        lang.statement(best)};
}

inline Count utility(const Task& task) { return utility_witness(task).utility; }

/// The vocabulary with no abstraction: every subset of Φ.
inline Environment full_powerset_vocabulary(std::size_t state_count, Settings settings = {}) {
  if (state_count < 1) fail(ErrorCode::StateOutOfRange, "state_count must be at least 1");
  if (state_count > settings.limits.powerset_states || state_count > Limits::max_powerset_states)
    fail(ErrorCode::StateSpaceTooLarge, std::to_string(state_count) +
                                            " states exceed the powerset guard " +
                                            std::to_string(settings.limits.powerset_states));
  std::vector<std::vector<std::size_t>> programs;
  for (std::uint64_t mask = 0; mask < (1ull << state_count); ++mask) {
    std::vector<std::size_t> p;
    for (std::size_t s = 0; s < state_count; ++s)
      if ((mask >> s) & 1) p.push_back(s);
    programs.push_back(std::move(p));
  }
  // Raise the enumeration guard far enough for L_P itself.
  settings.limits.vocabulary = std::max(settings.limits.vocabulary, programs.size());
  return Environment::make(state_count, programs, settings);
}

inline bool is_full_powerset(const Environment& env) {
  return env.state_count() < 63 && env.vocabulary_size() == (1ull << env.state_count());
}

/// The restriction of a full-powerset language to a sub-vocabulary v'.
/// Statements of L_{v'} are exactly the statements of L_P whose programs all
/// lie in v', so most work happens on positions of L_P.
class Restriction {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Restriction(LanguagePtr base, VocabularyChoice choice) : base_(std::move(base)), choice_(std::move(choice)) {
    const auto& env = base_->environment();
    if (choice_.size() != env.vocabulary_size())
      fail(ErrorCode::InvalidVocabulary, "vocabulary choice sized for a different base vocabulary");
    std::vector<Program> programs;
    choice_.for_each([&](std::size_t p) { programs.push_back(env.program(p)); });
    sub_ = Language::build(Environment::make(env.state_count(), std::move(programs), env.settings()));
    expressible_ = Bitset(base_->size());
    to_sub_.assign(base_->size(), npos);
    const auto positions = choice_.indices();
    for (std::size_t i = 0; i < base_->size(); ++i) {
      const auto& s = base_->statement(i);
      std::vector<Statement::index_type> idx;
      bool inside = true;
      for (auto p : s.indices()) {
        if (!choice_.test(p)) {
          inside = false;
          break;
        }
        idx.push_back(static_cast<Statement::index_type>(
            std::lower_bound(positions.begin(), positions.end(), p) - positions.begin()));
      }
      if (!inside) continue;
      expressible_.set(i);
      to_sub_[i] = sub_->require_index(Statement(std::move(idx)));
    }
  }

  const LanguagePtr& base() const noexcept { return base_; }
  const LanguagePtr& sub() const noexcept { return sub_; }
  const VocabularyChoice& choice() const noexcept { return choice_; }
  const Bitset& expressible() const noexcept { return expressible_; }
  std::size_t to_sub(std::size_t base_position) const { return to_sub_.at(base_position); }

  /// Restricted (I', O') on base positions, validated as a task over v'.
  std::optional<ErrorCode> restrict(const Task& rho, Bitset& inputs, Bitset& outputs) const {
    inputs = rho.input_bits() & expressible_;
    outputs = rho.output_bits() & expressible_;
    if (inputs.none()) return ErrorCode::EmptyInstantiation;
    if (inputs == expressible_) return ErrorCode::InputsNotStrictSubset;
    Bitset ext = base_->extension_of(inputs) & expressible_;
    outputs &= ext;
    if (outputs == ext) return ErrorCode::OutputsNotStrict;
    if (outputs.none() && !base_->environment().settings().empty_outputs) return ErrorCode::EmptyOutputs;
    return std::nullopt;
  }

  Bitset to_sub_bits(const Bitset& base_bits) const {
    Bitset out(sub_->size());
    base_bits.for_each([&](std::size_t i) { out.set(to_sub_[i]); });
    return out;
  }

  std::string label() const {
    std::string s = "{";
    bool first = true;
    choice_.for_each([&](std::size_t p) {
      if (!first) s += ',';
      s += base_->environment().program(p).to_string();
      first = false;
    });
    return s + "}";
  }

 private:
  LanguagePtr base_;
  VocabularyChoice choice_;
  LanguagePtr sub_;
  Bitset expressible_;
  std::vector<std::size_t> to_sub_;
};

/// A P-task ρ together with its instantiation map λ_ρ (restriction to v').
class UninstantiatedTask {
 public:
  explicit UninstantiatedTask(Task base) : base_(std::move(base)) {
    if (!is_full_powerset(base_.environment()))
      fail(ErrorCode::InvalidVocabulary, "base task vocabulary is not the full powerset");
  }

  const Task& base() const noexcept { return base_; }

  Task instantiate(const Restriction& r) const {
    if (r.base() != base_.language_ptr() && !(r.base()->environment() == base_.environment()))
      fail(ErrorCode::InvalidVocabulary, "restriction built for a different base language");
    Bitset inputs, outputs;
    if (auto err = r.restrict(base_, inputs, outputs))
      fail(*err, "instantiation in " + r.label() + " is not a valid task");
    return Task::from_bits(r.sub(), r.to_sub_bits(inputs), r.to_sub_bits(outputs));
  }

  Task instantiate(const VocabularyChoice& v) const {
    return instantiate(Restriction(base_.language_ptr(), v));
  }

 private:
  Task base_;
};

inline Task instantiate(const UninstantiatedTask& rho, const VocabularyChoice& v) {
  return rho.instantiate(v);
}

/// Every sub-vocabulary of `base`, ordered by size then lexicographically.
inline std::vector<VocabularyChoice> all_vocabularies(const Environment& base) {
  const auto n = base.vocabulary_size();
  if (n > 20) fail(ErrorCode::StateSpaceTooLarge, "too many programs to list every sub-vocabulary");
  std::vector<Statement> sets;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask)
    sets.push_back(Statement::from_bits(detail::mask_to_bits(mask, n)));
  std::sort(sets.begin(), sets.end());
  std::vector<VocabularyChoice> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(s.to_bits(n));
  return out;
}

/// Candidate vocabularies over one base language, with their restrictions
/// and (optionally) generalization tables prepared once for reuse.
class CandidateSet {
 public:
  CandidateSet(LanguagePtr base, std::vector<VocabularyChoice> choices, bool with_generalization,
               unsigned jobs = 1)
      : base_(std::move(base)) {
    for (auto& c : choices) {
      restrictions_.emplace_back(base_, std::move(c));
      tables_.push_back(with_generalization ? std::make_shared<const GeneralizationTable>(
                                                  GeneralizationTable::build(restrictions_.back().sub(), jobs))
                                            : nullptr);
    }
  }

  const LanguagePtr& base() const noexcept { return base_; }
  std::size_t size() const noexcept { return restrictions_.size(); }
  const Restriction& restriction(std::size_t i) const { return restrictions_.at(i); }
  const GeneralizationTable* table(std::size_t i) const { return tables_.at(i).get(); }

 private:
  LanguagePtr base_;
  std::vector<Restriction> restrictions_;
  std::vector<std::shared_ptr<const GeneralizationTable>> tables_;
};

/// Correct policies and utility of λ_ρ(v'), computed on base positions.
struct RestrictedTask {
  std::optional<ErrorCode> error;  // instantiation failure or NoCorrectPolicy
  Bitset policies;                 // Π over base positions
  std::size_t output_count = 0;
  std::size_t best_policy = 0;     // base position of a weakest correct policy
  std::size_t best_extension = 0;  // its |E| within L_{v'}
  bool strict_child = false;       // inputs strictly shrank under restriction
  std::optional<Count> utility() const {
    if (error) return std::nullopt;
    return Count(best_extension) - output_count;
  }
};

inline RestrictedTask restrict_task(const Task& rho, const Restriction& r) {
  RestrictedTask out;
  Bitset inputs, outputs;
  out.error = r.restrict(rho, inputs, outputs);
  if (out.error) return out;
  out.strict_child = inputs.count() < rho.input_bits().count();
  const auto& base = *r.base();
  const Bitset ext = base.extension_of(inputs) & r.expressible();
  out.output_count = outputs.count();
  out.policies = Bitset(base.size());
  Bitset sub_ext(base.size());
  bool found = false;
  r.expressible().for_each([&](std::size_t pi) {
    sub_ext.assign_and(base.extension_bits(pi), r.expressible());
    if (!Bitset::and_equals(sub_ext, ext, outputs)) return;
    out.policies.set(pi);
    const auto size = sub_ext.count();
    // Ties keep the canonically smaller statement; base order agrees with sub order.
    if (!found || size > out.best_extension) {
      out.best_policy = pi;
      out.best_extension = size;
      found = true;
    }
  });
  if (!found) out.error = ErrorCode::NoCorrectPolicy;
  return out;
}

struct UtilityRow {
  std::size_t candidate = 0;
  std::string vocabulary;
  std::size_t language_size = 0;
  std::optional<ErrorCode> error;
  std::optional<Count> utility;
  std::optional<Statement> witness;  // in v' indices
  std::string witness_programs;
  bool strict_child = false;
};

struct UtilityReport {
  std::vector<UtilityRow> rows;
};

namespace detail {

inline UtilityRow utility_row(const Task& rho, const CandidateSet& candidates, std::size_t i,
                              RestrictedTask& restricted) {
  const auto& r = candidates.restriction(i);
  restricted = restrict_task(rho, r);
  UtilityRow row;
  row.candidate = i;
  row.vocabulary = r.label();
  row.language_size = r.sub()->size();
  row.error = restricted.error;
  row.strict_child = restricted.strict_child;
  if (!restricted.error) {
    row.utility = restricted.utility();
    row.witness = r.sub()->statement(r.to_sub(restricted.best_policy));
    std::string s = "[";
    for (auto p : r.base()->statement(restricted.best_policy).indices()) {
      if (s.size() > 1) s += ',';
      s += r.base()->environment().program(p).to_string();
    }
    row.witness_programs = s + "]";
  }
  return row;
}

}  // namespace detail

/// One row per candidate: ε(λ_ρ(v')) or the reason it is undefined.
inline UtilityReport compare_vocabularies(const UninstantiatedTask& rho, const CandidateSet& candidates) {
  UtilityReport report;
  RestrictedTask scratch;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    report.rows.push_back(detail::utility_row(rho.base(), candidates, i, scratch));
  return report;
}

struct PolicyCandidate {
  std::size_t candidate = 0;
  Statement policy;  // in v' indices
  std::size_t extension_size = 0;
  Rational probability;
};

struct UpperBoundReport {
  UtilityReport utilities;
  std::vector<PolicyCandidate> ranking;  // probability descending
  std::optional<std::size_t> selected;   // index into ranking
  bool attained = false;
  Rational best_probability;

  bool no_candidate() const noexcept { return !selected.has_value(); }
};

/// Picks v* maximising utility, then π* ∈ Π maximising weakness, and checks
/// whether (v*, π*) attains the highest generalization probability among
/// every (v', π') with π' a correct policy of λ_ρ(v').
inline UpperBoundReport verify_upper_bound(const UninstantiatedTask& rho, const CandidateSet& candidates) {
  UpperBoundReport report;
  struct Entry {
    std::size_t candidate;
    std::size_t sub_position;
    std::size_t extension_size;
    Rational probability;
  };
  std::vector<Entry> entries;
  std::optional<Count> best_utility;
  std::optional<std::size_t> selected_entry;
  RestrictedTask restricted;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto row = detail::utility_row(rho.base(), candidates, i, restricted);
    report.utilities.rows.push_back(row);
    if (restricted.error) continue;
    const auto* table = candidates.table(i);
    if (!table) fail(ErrorCode::TaskSpaceTooLarge, "candidate " + row.vocabulary + " has no generalization table");
    const auto& r = candidates.restriction(i);
    const auto& sub = *r.sub();
    std::optional<std::size_t> weakest;
    restricted.policies.for_each([&](std::size_t base_pos) {
      const auto at = r.to_sub(base_pos);
      entries.push_back(Entry{i, at, sub.extension_size(at), table->probability(at)});
      if (!weakest || entries.back().extension_size > entries[*weakest].extension_size)
        weakest = entries.size() - 1;
    });
    const auto u = *restricted.utility();
    const bool better_utility = !best_utility || u > *best_utility;
    const bool tied_weaker = best_utility && u == *best_utility &&
                             entries[*weakest].extension_size > entries[*selected_entry].extension_size;
    if (better_utility || tied_weaker) {
      best_utility = u;
      selected_entry = weakest;
    }
  }
  if (!selected_entry) return report;

  std::vector<std::size_t> order(entries.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].probability > entries[b].probability;
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& e = entries[order[k]];
    const auto& sub = *candidates.restriction(e.candidate).sub();
    report.ranking.push_back(PolicyCandidate{e.candidate, sub.statement(e.sub_position), e.extension_size, e.probability});
    if (order[k] == *selected_entry) report.selected = k;
  }
  report.best_probability = report.ranking.front().probability;
  report.attained = report.ranking[*report.selected].probability == report.best_probability;
  return report;
}

struct UtilityMaximality {
  bool holds = true;
  std::optional<Count> utility_at_full;
  std::optional<std::size_t> counterexample;  // candidate index
  std::optional<Count> counterexample_utility;
};

/// Checks ε(λ_ρ(P)) ≥ ε(λ_ρ(v')) for every candidate v' with defined utility.
/// An undefined utility at P is a violation whenever some v' is defined.
inline UtilityMaximality verify_utility_maximal_at_full(const UninstantiatedTask& rho,
                                                        const CandidateSet& candidates) {
  UtilityMaximality out;
  const auto policies = correct_policies(rho.base());
  if (!policies.empty()) out.utility_at_full = utility(rho.base());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto restricted = restrict_task(rho.base(), candidates.restriction(i));
    const auto u = restricted.utility();
    if (!u) continue;
    if (!out.utility_at_full || *u > *out.utility_at_full) {
      out.holds = false;
      out.counterexample = i;
      out.counterexample_utility = *u;
      return out;
    }
  }
  return out;
}

/// Same check over every v' ⊆ P.
inline UtilityMaximality verify_utility_maximal_at_full(const UninstantiatedTask& rho) {
  const auto& base = rho.base().language_ptr();
  const auto& env = base->environment();
  if (env.state_count() > env.limits().powerset_states)
    fail(ErrorCode::StateSpaceTooLarge, "state space exceeds the powerset guard");
  return verify_utility_maximal_at_full(rho, CandidateSet(base, all_vocabularies(env), false));
}

}  // namespace weakform
