#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "weakform/task_space.hpp"

namespace weakform {

using Rational = boost::multiprecision::cpp_rational;

/// A binary relation on statements used as a stand-in objective; a policy is
/// learned by maximising it. Every kind is a pure function of its arguments.
class Proxy {
 public:
  enum class Kind { weakness, simplicity, random, table };
  using PairSet = std::set<std::pair<Statement, Statement>>;

  static Proxy weakness() { return Proxy(Kind::weakness, "weakness"); }
  static Proxy simplicity() { return Proxy(Kind::simplicity, "simplicity"); }
  static Proxy random(std::uint64_t seed) {
    Proxy p(Kind::random, "random:" + std::to_string(seed));
    p.seed_ = seed;
    return p;
  }
  /// Explicit relation: (a, b) in `pairs` means a < b.
  static Proxy table(PairSet pairs, std::string label) {
    Proxy p(Kind::table, "table:" + std::move(label));
    p.pairs_ = std::make_shared<const PairSet>(std::move(pairs));
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// a < b for statements at positions a, b of `lang`.
  bool less(const Language& lang, std::size_t a, std::size_t b) const {
    switch (kind_) {
      case Kind::weakness:
        return lang.extension_size(a) < lang.extension_size(b);
      case Kind::simplicity:
        return lang.statement(a).size() > lang.statement(b).size();
      case Kind::random:
        return random_bit(lang.statement(a), lang.statement(b));
      case Kind::table:
        return pairs_->contains({lang.statement(a), lang.statement(b)});
    }
    return false;
  }

  bool less(const Language& lang, const Statement& a, const Statement& b) const {
    return less(lang, lang.require_index(a), lang.require_index(b));
  }

 private:
  Proxy(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  bool random_bit(const Statement& a, const Statement& b) const {
    const StatementHash h;
    return derive_seed(derive_seed(seed_, h(a)), h(b)) >> 63;
  }

  Kind kind_;
  std::string name_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const PairSet> pairs_;
};

inline Proxy random_proxy(std::uint64_t seed) { return Proxy::random(seed); }

/// l1 <_w l2 iff |E_l1| < |E_l2|, compared as exact integers.
inline bool weakness_cmp(const Environment& env, const Statement& l1, const Statement& l2) {
  return extension_size(env, l1) < extension_size(env, l2);
}

/// Baseline: fewer programs is simpler, and simpler ranks higher.
inline bool simplicity_cmp(const Statement& l1, const Statement& l2) {
  return l1.size() > l2.size();
}

/// For every statement, how many tasks of Γ_v it is a correct policy for,
/// over the shared denominator |Γ_v|.
class GeneralizationTable {
 public:
  static GeneralizationTable build(LanguagePtr lang, unsigned jobs = 1) {
    const auto m = lang->size();
    const auto& settings = lang->environment().settings();
    if (m > settings.limits.task_space)
      fail(ErrorCode::TaskSpaceTooLarge, "|L_v| = " + std::to_string(m) +
                                             " exceeds the task-space guard " +
                                             std::to_string(settings.limits.task_space));
    const detail::MaskLanguage masks(*lang);
    const bool empty_outputs = settings.empty_outputs;

    struct Partial {
      std::vector<std::uint64_t> numerators;
      std::uint64_t denominator = 0;
    };
    const std::uint64_t highs = masks.high_count();
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(highs)));
    std::vector<Partial> parts(jobs, Partial{std::vector<std::uint64_t>(m, 0), 0});

    // Each input set I contributes one task per statement l with
    // O = E_I ∩ E_l ⊊ E_I; l is that task's correct policy.
    auto work = [&](unsigned job) {
      auto& part = parts[job];
      const std::uint64_t begin = highs * job / jobs, end = highs * (job + 1) / jobs;
      masks.for_each_input_set(begin, end, [&](std::uint64_t, std::uint64_t ext) {
        part.denominator +=
            detail::output_choices(static_cast<std::size_t>(std::popcount(ext)), empty_outputs);
        for (std::size_t l = 0; l < m; ++l) {
          const std::uint64_t out = ext & masks.ext[l];
          if (out != ext && (out != 0 || empty_outputs)) ++part.numerators[l];
        }
      });
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::jthread> threads;
      for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(work, j);
    }

    GeneralizationTable table;
    table.lang_ = std::move(lang);
    table.numerators_.assign(m, 0);
    std::uint64_t denominator = 0;
    for (const auto& part : parts) {
      denominator += part.denominator;
      for (std::size_t l = 0; l < m; ++l) table.numerators_[l] += part.numerators[l];
    }
    table.denominator_ = denominator;
    return table;
  }

  const LanguagePtr& language() const noexcept { return lang_; }
  std::size_t size() const noexcept { return numerators_.size(); }
  std::uint64_t numerator(std::size_t i) const { return numerators_.at(i); }
  const Count& denominator() const noexcept { return denominator_; }

  Rational probability(std::size_t i) const {
    if (denominator_ == 0) fail(ErrorCode::EmptyTaskSpace, "Γ_v is empty");
    return Rational(Count(numerators_.at(i)), denominator_);
  }

  /// l_i <_g l_j. The denominator is shared, so numerators decide.
  bool less(std::size_t i, std::size_t j) const { return numerators_.at(i) < numerators_.at(j); }

 private:
  LanguagePtr lang_;
  std::vector<std::uint64_t> numerators_;
  Count denominator_;
};

inline Rational generalization_probability(const Environment& env, const Statement& l) {
  auto lang = Language::build(env);
  const auto i = lang->require_index(l);
  return GeneralizationTable::build(std::move(lang)).probability(i);
}

inline bool gen_cmp(const Environment& env, const Statement& l1, const Statement& l2) {
  auto lang = Language::build(env);
  const auto i = lang->require_index(l1), j = lang->require_index(l2);
  return GeneralizationTable::build(std::move(lang)).less(i, j);
}

/// Monte Carlo estimate of a generalization probability.
struct GeneralizationEstimate {
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double estimate = 0;
  double std_error = 0;
  double ci_low = 0;  // 95% normal-approximation interval, clipped to [0, 1]
  double ci_high = 0;
};

/// Draws uniform tasks from Γ_v and counts those for which `l` is correct.
/// Works past the exact task-space guard, up to 62 statements.
inline GeneralizationEstimate estimate_generalization(const LanguagePtr& lang, const Statement& l,
                                                      std::uint64_t samples, std::uint64_t seed) {
  const auto at = lang->require_index(l);
  const detail::MaskLanguage masks(*lang);
  const bool empty_outputs = lang->environment().settings().empty_outputs;
  std::unique_ptr<TaskSpace> space;
  if (lang->size() <= lang->environment().limits().task_space)
    space = std::make_unique<TaskSpace>(lang);
  Rng rng(seed);
  GeneralizationEstimate est;
  est.samples = samples;
  for (std::uint64_t s = 0; s < samples; ++s) {
    std::uint64_t ext = 0, out = 0;
    if (space) {
      const Task t = space->sample(rng);
      ext = detail::bits_to_mask(t.extension_bits());
      out = detail::bits_to_mask(t.output_bits());
    } else {
      auto [inputs, e, subset] = TaskSpace::sample_by_rejection(masks, rng, empty_outputs);
      ext = e;
      subset += empty_outputs ? 0 : 1;
      std::size_t bit = 0;
      for (std::uint64_t x = ext; x; x &= x - 1, ++bit)
        if ((subset >> bit) & 1) out |= x & (~x + 1);
    }
    if ((ext & masks.ext[at]) == out) ++est.hits;
  }
  if (samples > 0) {
    const double n = static_cast<double>(samples);
    est.estimate = static_cast<double>(est.hits) / n;
    est.std_error = std::sqrt(est.estimate * (1 - est.estimate) / n);
    est.ci_low = std::max(0.0, est.estimate - 1.96 * est.std_error);
    est.ci_high = std::min(1.0, est.estimate + 1.96 * est.std_error);
  }
  return est;
}

/// Number of ordered pairs on which `proxy` disagrees with <_g.
inline std::uint64_t disagreements(const GeneralizationTable& table, const Proxy& proxy) {
  const auto& lang = *table.language();
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < lang.size(); ++i)
    for (std::size_t j = 0; j < lang.size(); ++j)
      n += table.less(i, j) != proxy.less(lang, i, j);
  return n;
}

/// Sum over all ordered pairs of |g - a| - |g - b|. Negative means `a` is
/// more sample efficient than `b`.
inline std::int64_t sample_efficiency(const GeneralizationTable& table, const Proxy& a,
                                      const Proxy& b) {
  const auto& lang = *table.language();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < lang.size(); ++i)
    for (std::size_t j = 0; j < lang.size(); ++j) {
      const bool g = table.less(i, j);
      total += static_cast<int>(g != a.less(lang, i, j)) - static_cast<int>(g != b.less(lang, i, j));
    }
  return total;
}

inline std::int64_t sample_efficiency(const Environment& env, const Proxy& a, const Proxy& b) {
  return sample_efficiency(GeneralizationTable::build(Language::build(env)), a, b);
}

struct LearnOptions {
  bool tie_break = true;
};

/// The proxy-maximal correct policy of `child`.
///
/// Maximal means no other member of Π ranks above it. If the relation has
/// cycles and nothing is maximal, the members with the fewest dominators are
/// the candidates. Remaining ties go to the canonically smallest statement.
inline Statement learn(const Task& child, const Proxy& proxy, LearnOptions options = {}) {
  const auto policies = correct_policies(child);
  if (policies.empty()) fail(ErrorCode::NoCorrectPolicy, "task " + child.id() + " has no correct policy");
  const auto& lang = child.language();
  const auto positions = policies.bits.indices();
  std::vector<std::size_t> dominators(positions.size(), 0);
  for (std::size_t a = 0; a < positions.size(); ++a)
    for (std::size_t b = 0; b < positions.size(); ++b)
      if (a != b && proxy.less(lang, positions[a], positions[b])) ++dominators[a];
  const auto fewest = *std::min_element(dominators.begin(), dominators.end());
  std::vector<std::size_t> best;
  for (std::size_t a = 0; a < positions.size(); ++a)
    if (dominators[a] == fewest) best.push_back(positions[a]);
  if (best.size() > 1 && !options.tie_break)
    fail(ErrorCode::AmbiguousMaximum, std::to_string(best.size()) + " policies tie under " + proxy.name());
  return lang.statement(best.front());
}

/// l generalises to a task iff it is one of the task's correct policies.
inline bool evaluate_generalization(const Statement& pi, const Task& parent) {
  const auto at = parent.language().index_of(pi);
  return at && detail::is_correct_policy_at(parent, *at);
}

}  // namespace weakform
