#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weakform/language.hpp"
#include "weakform/rng.hpp"

namespace weakform {

/// A v-task: inputs I ⊂ L_v and correct outputs O ⊂ E_I, both held as
/// bitsets over statement positions of the owning language.
class Task {
 public:
  /// Validates (I, O) without throwing. On success fills `extension` with E_I.
  static std::optional<ErrorCode> check(const Language& lang, const Bitset& inputs,
                                        const Bitset& outputs, Bitset& extension) {
    if (inputs.none()) return ErrorCode::EmptyInputs;
    if (inputs.all()) return ErrorCode::InputsNotStrictSubset;
    extension = lang.extension_of(inputs);
    if (!outputs.is_subset_of(extension)) return ErrorCode::OutputsNotInExtension;
    if (outputs == extension) return ErrorCode::OutputsNotStrict;
    if (outputs.none() && !lang.environment().settings().empty_outputs) return ErrorCode::EmptyOutputs;
    return std::nullopt;
  }

  static Task from_bits(LanguagePtr lang, Bitset inputs, Bitset outputs) {
    Bitset ext;
    if (inputs.size() != lang->size() || outputs.size() != lang->size())
      fail(ErrorCode::EnvironmentMismatch, "statement set sized for a different language");
    if (auto err = check(*lang, inputs, outputs, ext))
      fail(*err, "invalid task I=" + lang->format(inputs) + " O=" + lang->format(outputs));
    return Task(std::move(lang), std::move(inputs), std::move(outputs), std::move(ext));
  }

  static Task make(LanguagePtr lang, std::span<const Statement> inputs,
                   std::span<const Statement> outputs) {
    Bitset i = lang->to_bits(inputs);
    Bitset o = lang->to_bits(outputs);
    return from_bits(std::move(lang), std::move(i), std::move(o));
  }

  const LanguagePtr& language_ptr() const noexcept { return lang_; }
  const Language& language() const noexcept { return *lang_; }
  const Environment& environment() const noexcept { return lang_->environment(); }

  const Bitset& input_bits() const noexcept { return inputs_; }
  const Bitset& output_bits() const noexcept { return outputs_; }
  /// E_I.
  const Bitset& extension_bits() const noexcept { return extension_; }

  std::vector<Statement> inputs() const { return lang_->to_statements(inputs_); }
  std::vector<Statement> correct_outputs() const { return lang_->to_statements(outputs_); }

  std::string id() const { return "I=" + lang_->format(inputs_) + ";O=" + lang_->format(outputs_); }

  friend bool operator==(const Task& a, const Task& b) {
    return a.inputs_ == b.inputs_ && a.outputs_ == b.outputs_ &&
           (a.lang_ == b.lang_ || a.lang_->environment() == b.lang_->environment());
  }

 private:
  friend class TaskCursor;

  Task(LanguagePtr lang, Bitset inputs, Bitset outputs, Bitset extension)
      : lang_(std::move(lang)),
        inputs_(std::move(inputs)),
        outputs_(std::move(outputs)),
        extension_(std::move(extension)) {}

  LanguagePtr lang_;
  Bitset inputs_;
  Bitset outputs_;
  Bitset extension_;
};

inline Task mk_task(LanguagePtr lang, std::span<const Statement> inputs,
                    std::span<const Statement> outputs) {
  return Task::make(std::move(lang), inputs, outputs);
}

inline Task mk_task(LanguagePtr lang, std::initializer_list<Statement> inputs,
                    std::initializer_list<Statement> outputs) {
  return Task::make(std::move(lang), std::span(inputs.begin(), inputs.size()),
                    std::span(outputs.begin(), outputs.size()));
}

/// E_I: the outputs of a task.
inline ExtensionSet outputs(const Task& task) {
  return ExtensionSet{task.language().to_statements(task.extension_bits())};
}

/// Π_α, kept in canonical order.
struct PolicySet {
  std::vector<Statement> members;
  Bitset bits;

  bool empty() const noexcept { return members.empty(); }
  std::size_t size() const noexcept { return members.size(); }
  bool contains(const Statement& s) const {
    return std::binary_search(members.begin(), members.end(), s);
  }
};

namespace detail {

inline bool is_correct_policy_at(const Task& task, std::size_t pi) {
  return Bitset::and_equals(task.extension_bits(), task.language().extension_bits(pi),
                            task.output_bits());
}

}  // namespace detail

/// π is correct iff E_I ∩ E_π = O.
inline bool is_correct_policy(const Task& task, const Statement& pi) {
  return detail::is_correct_policy_at(task, task.language().require_index(pi));
}

inline PolicySet correct_policies(const Task& task) {
  const auto& lang = task.language();
  PolicySet out{{}, Bitset(lang.size())};
  for (std::size_t i = 0; i < lang.size(); ++i)
    if (detail::is_correct_policy_at(task, i)) {
      out.bits.set(i);
      out.members.push_back(lang.statement(i));
    }
  return out;
}

struct Inference {
  Statement output;
  bool correct = false;
};

/// One inference step: pick an output uniformly from E_input ∩ E_π.
inline Inference infer(const Task& task, const Statement& pi, const Statement& input,
                       std::uint64_t seed) {
  const auto& lang = task.language();
  const auto pi_at = lang.require_index(pi);
  const auto in_at = lang.index_of(input);
  if (!in_at || !task.input_bits().test(*in_at))
    fail(ErrorCode::InputNotInTask, input.to_string() + " is not an input of the task");
  const Bitset choices = lang.extension_bits(*in_at) & lang.extension_bits(pi_at);
  const auto n = choices.count();
  if (n == 0)
    fail(ErrorCode::NoOutput, "policy " + pi.to_string() + " admits no completion of " +
                                  input.to_string());
  Rng rng(seed);
  const auto pick = choices.nth_set(static_cast<std::size_t>(rng.uniform(n)));
  return Inference{lang.statement(pick), task.output_bits().test(pick)};
}

/// α ⊏ ω: I_α ⊂ I_ω strictly and O_α ⊆ O_ω.
inline bool is_child(const Task& alpha, const Task& omega) {
  if (alpha.language_ptr() != omega.language_ptr() &&
      !(alpha.environment() == omega.environment()))
    fail(ErrorCode::EnvironmentMismatch, "tasks belong to different environments");
  return alpha.input_bits().is_subset_of(omega.input_bits()) &&
         alpha.input_bits() != omega.input_bits() &&
         alpha.output_bits().is_subset_of(omega.output_bits());
}

}  // namespace weakform
