#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "weakform/task.hpp"

namespace weakform {

namespace detail {

inline Bitset mask_to_bits(std::uint64_t mask, std::size_t n) {
  Bitset b(n);
  while (mask) {
    b.set(static_cast<std::size_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return b;
}

inline std::uint64_t bits_to_mask(const Bitset& b) { return b.words().empty() ? 0 : b.words()[0]; }

/// Extensions as 64-bit masks; valid for languages of at most 62 statements.
struct MaskLanguage {
  std::size_t m = 0;
  std::vector<std::uint64_t> ext;

  explicit MaskLanguage(const Language& lang) : m(lang.size()), ext(lang.size()) {
    for (std::size_t i = 0; i < m; ++i) ext[i] = bits_to_mask(lang.extension_bits(i));
  }

  std::uint64_t full() const noexcept { return m == 64 ? ~0ull : (1ull << m) - 1; }

  std::uint64_t extension_of(std::uint64_t inputs) const noexcept {
    std::uint64_t e = 0;
    while (inputs) {
      e |= ext[static_cast<std::size_t>(std::countr_zero(inputs))];
      inputs &= inputs - 1;
    }
    return e;
  }

  /// Visits every input set I with ∅ ≠ I ⊊ L_v as (I, E_I), in increasing
  /// mask order, restricted to high-part values in [hi_begin, hi_end).
  template <class F>
  void for_each_input_set(std::uint64_t hi_begin, std::uint64_t hi_end, F&& f) const {
    const std::size_t lo_bits = std::min<std::size_t>(m, 12);
    const std::uint64_t lo_count = 1ull << lo_bits;
    std::vector<std::uint64_t> lo_ext(lo_count, 0);
    for (std::uint64_t lo = 1; lo < lo_count; ++lo)
      lo_ext[lo] = lo_ext[lo & (lo - 1)] | ext[static_cast<std::size_t>(std::countr_zero(lo))];
    const std::uint64_t all = full();
    for (std::uint64_t hi = hi_begin; hi < hi_end; ++hi) {
      const std::uint64_t hi_mask = hi << lo_bits;
      const std::uint64_t hi_ext = extension_of(hi_mask);
      for (std::uint64_t lo = 0; lo < lo_count; ++lo) {
        const std::uint64_t inputs = hi_mask | lo;
        if (inputs == 0 || inputs == all) continue;
        f(inputs, hi_ext | lo_ext[lo]);
      }
    }
  }

  std::uint64_t high_count() const noexcept {
    const std::size_t lo_bits = std::min<std::size_t>(m, 12);
    return 1ull << (m - lo_bits);
  }
};

/// Number of admissible O for an input set whose extension has e members.
inline std::uint64_t output_choices(std::size_t e, bool empty_outputs) noexcept {
  const std::uint64_t all = (1ull << e) - 1;  // strict subsets
  return empty_outputs ? all : (all == 0 ? 0 : all - 1);
}

}  // namespace detail

/// Optional caps on |I| and |O| for enumerating a bounded family of tasks.
struct TaskBounds {
  std::size_t max_inputs = std::numeric_limits<std::size_t>::max();
  std::size_t max_outputs = std::numeric_limits<std::size_t>::max();
};

/// Streams Γ_v in canonical order: by |I|, then I lexicographically, then O
/// by size and lexicographically. The current task is updated in place.
class TaskCursor {
 public:
  explicit TaskCursor(LanguagePtr lang, TaskBounds bounds = {})
      : bounds_(bounds), task_(lang, Bitset(lang->size()), Bitset(lang->size()), Bitset(lang->size())) {
    m_ = task_.language().size();
    empty_outputs_ = task_.environment().settings().empty_outputs;
  }

  /// Advances to the next task. Returns false once the space is exhausted.
  bool next() {
    if (done_) return false;
    if (!started_) {
      started_ = true;
      k_ = 1;
      if (!first_combination(in_, k_, max_input_size()) || !enter_inputs()) return advance_inputs();
      return true;
    }
    if (advance_outputs()) return true;
    return advance_inputs();
  }

  const Task& current() const noexcept { return task_; }
  std::uint64_t position() const noexcept { return position_ - 1; }

 private:
  std::size_t max_input_size() const {
    return m_ == 0 ? 0 : std::min(m_ - 1, bounds_.max_inputs);
  }

  static bool first_combination(std::vector<std::size_t>& c, std::size_t k, std::size_t kmax) {
    if (k == 0 || k > kmax) return false;
    c.resize(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    return true;
  }

  static bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
    const std::size_t k = c.size();
    for (std::size_t i = k; i-- > 0;) {
      if (c[i] < n - k + i) {
        ++c[i];
        for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
        return true;
      }
    }
    return false;
  }

  std::size_t max_output_size() const {
    return std::min(ext_.size() - 1, bounds_.max_outputs);
  }

  // Loads the current input combination; false if it admits no outputs.
  bool enter_inputs() {
    auto& I = task_.inputs_;
    I.clear();
    for (auto i : in_) I.set(i);
    task_.extension_ = task_.language().extension_of(I);
    ext_ = task_.extension_.indices();
    j_ = empty_outputs_ ? 0 : 1;
    if (j_ > max_output_size()) return false;
    out_.resize(j_);
    for (std::size_t i = 0; i < j_; ++i) out_[i] = i;
    load_outputs();
    return true;
  }

  void load_outputs() {
    auto& O = task_.outputs_;
    O.clear();
    for (auto p : out_) O.set(ext_[p]);
    ++position_;
  }

  bool advance_outputs() {
    if (next_combination(out_, ext_.size())) {
      load_outputs();
      return true;
    }
    if (++j_ > max_output_size()) return false;
    out_.resize(j_);
    for (std::size_t i = 0; i < j_; ++i) out_[i] = i;
    load_outputs();
    return true;
  }

  bool advance_inputs() {
    while (true) {
      if (!next_combination(in_, m_)) {
        if (!first_combination(in_, ++k_, max_input_size())) {
          done_ = true;
          return false;
        }
      }
      if (enter_inputs()) return true;
    }
  }

  TaskBounds bounds_;
  Task task_;
  std::size_t m_ = 0;
  bool empty_outputs_ = true;
  bool started_ = false;
  bool done_ = false;
  std::size_t k_ = 0;
  std::size_t j_ = 0;
  std::vector<std::size_t> in_;
  std::vector<std::size_t> ext_;
  std::vector<std::size_t> out_;
  std::uint64_t position_ = 0;
};

/// Single-pass range over a TaskCursor, for range-based for loops.
class TaskRange {
 public:
  class iterator {
   public:
    using value_type = Task;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(TaskCursor* c) : cursor_(c) {
      if (!cursor_->next()) cursor_ = nullptr;
    }
    const Task& operator*() const { return cursor_->current(); }
    const Task* operator->() const { return &cursor_->current(); }
    iterator& operator++() {
      if (!cursor_->next()) cursor_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& a, const iterator& b) { return a.cursor_ == b.cursor_; }

   private:
    TaskCursor* cursor_ = nullptr;
  };

  TaskRange(LanguagePtr lang, TaskBounds bounds)
      : cursor_(std::make_unique<TaskCursor>(std::move(lang), bounds)) {}

  iterator begin() { return iterator(cursor_.get()); }
  iterator end() { return iterator(); }

 private:
  std::unique_ptr<TaskCursor> cursor_;
};

/// Γ_v with its exact size and an exactly uniform sampler.
class TaskSpace {
 public:
  /// Languages up to this size keep a cumulative table for one-draw sampling.
  static constexpr std::size_t table_limit = 20;

  explicit TaskSpace(LanguagePtr lang) : lang_(std::move(lang)), masks_(*lang_) {
    const auto m = lang_->size();
    const auto& limits = lang_->environment().limits();
    if (m > limits.task_space)
      fail(ErrorCode::TaskSpaceTooLarge, "|L_v| = " + std::to_string(m) +
                                             " exceeds the task-space guard " +
                                             std::to_string(limits.task_space));
    const bool empty_outputs = lang_->environment().settings().empty_outputs;
    const bool keep_table = m <= table_limit;
    std::uint64_t total = 0;
    if (keep_table && m >= 2) cumulative_.reserve((1ull << m) - 2);
    masks_.for_each_input_set(0, masks_.high_count(), [&](std::uint64_t, std::uint64_t ext) {
      total += detail::output_choices(static_cast<std::size_t>(std::popcount(ext)), empty_outputs);
      if (keep_table) cumulative_.push_back(total);
    });
    total_ = total;
    total_u64_ = total;
  }

  const LanguagePtr& language() const noexcept { return lang_; }
  const Count& total_count() const noexcept { return total_; }
  bool empty() const noexcept { return total_u64_ == 0; }

  TaskRange tasks(TaskBounds bounds = {}) const { return TaskRange(lang_, bounds); }

  Task sample(std::uint64_t seed) const {
    Rng rng(seed);
    return sample(rng);
  }

  /// Exactly uniform over Γ_v: I is chosen with weight equal to its number
  /// of admissible O, then O uniformly among those.
  Task sample(Rng& rng) const {
    if (total_u64_ == 0) fail(ErrorCode::EmptyTaskSpace, "Γ_v is empty");
    const bool empty_outputs = lang_->environment().settings().empty_outputs;
    std::uint64_t inputs = 0, ext = 0, offset = 0;
    if (!cumulative_.empty()) {
      const std::uint64_t r = rng.uniform(total_u64_);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
      const auto rank = static_cast<std::uint64_t>(it - cumulative_.begin());
      // Ranks skip the empty mask, and the full mask is always last.
      inputs = rank + 1;
      ext = masks_.extension_of(inputs);
      offset = r - (rank == 0 ? 0 : cumulative_[rank - 1]);
    } else {
      std::tie(inputs, ext, offset) = sample_by_rejection(masks_, rng, empty_outputs);
    }
    return build(inputs, ext, offset + (empty_outputs ? 0 : 1));
  }

  /// Hierarchy level: the longest chain task = α_0 ⊏ α_1 ⊏ ... ⊏ α_k in Γ_v.
  std::size_t level(const Task& task) const {
    if (task.language_ptr() != lang_ && !(task.environment() == lang_->environment()))
      fail(ErrorCode::EnvironmentMismatch, "task belongs to a different environment");
    // A chain may keep O_0 throughout (O_0 ⊊ E_I0 ⊆ E_Ii), and any step that
    // adds several inputs can be split into single-input steps, so the search
    // runs over input sets alone.
    std::unordered_map<std::uint64_t, std::size_t> memo;
    const std::uint64_t all = masks_.full();
    auto longest = [&](auto&& self, std::uint64_t inputs) -> std::size_t {
      if (auto it = memo.find(inputs); it != memo.end()) return it->second;
      std::size_t best = 0;
      for (std::uint64_t rest = all & ~inputs; rest; rest &= rest - 1) {
        const std::uint64_t parent = inputs | (rest & (~rest + 1));
        if (parent == all) continue;
        best = std::max(best, 1 + self(self, parent));
      }
      memo.emplace(inputs, best);
      return best;
    };
    return longest(longest, detail::bits_to_mask(task.input_bits()));
  }

  /// Rejection sampler usable for languages up to 62 statements.
  static std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> sample_by_rejection(
      const detail::MaskLanguage& masks, Rng& rng, bool empty_outputs) {
    const std::size_t m = masks.m;
    if (m < 2 || m > 62) fail(ErrorCode::TaskSpaceTooLarge, "rejection sampler needs 2 <= |L_v| <= 62");
    const std::uint64_t max_weight = detail::output_choices(m, empty_outputs);
    if (max_weight == 0) fail(ErrorCode::EmptyTaskSpace, "Γ_v is empty");
    while (true) {
      const std::uint64_t inputs = rng.uniform((1ull << m) - 2) + 1;
      const std::uint64_t ext = masks.extension_of(inputs);
      const std::uint64_t w =
          detail::output_choices(static_cast<std::size_t>(std::popcount(ext)), empty_outputs);
      const std::uint64_t r = rng.uniform(max_weight);
      if (r < w) return {inputs, ext, r};
    }
  }

 private:
  Task build(std::uint64_t inputs, std::uint64_t ext, std::uint64_t output_subset) const {
    const auto m = lang_->size();
    Bitset O(m);
    std::size_t bit = 0;
    for (std::uint64_t e = ext; e; e &= e - 1, ++bit)
      if ((output_subset >> bit) & 1) O.set(static_cast<std::size_t>(std::countr_zero(e)));
    return Task::from_bits(lang_, detail::mask_to_bits(inputs, m), std::move(O));
  }

  LanguagePtr lang_;
  detail::MaskLanguage masks_;
  Count total_;
  std::uint64_t total_u64_ = 0;
  std::vector<std::uint64_t> cumulative_;
};

inline Count count_tasks(const Environment& env) {
  return TaskSpace(Language::build(env)).total_count();
}

inline TaskRange enumerate_tasks(LanguagePtr lang, TaskBounds bounds = {}) {
  return TaskRange(std::move(lang), bounds);
}

inline Task sample_task(const Environment& env, std::uint64_t seed) {
  return TaskSpace(Language::build(env)).sample(seed);
}

inline std::size_t hierarchy_level(const Task& task, const TaskSpace& space) {
  return space.level(task);
}

}  // namespace weakform
