#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace weakform;

namespace {

Statement st(std::initializer_list<Statement::index_type> i) { return Statement(i); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvariantViolation;
}

// P over Φ = {0,1}: programs {}, {0}, {1}, {0,1} at positions 0..3.
LanguagePtr p2() { return Language::build(full_powerset_vocabulary(2)); }

VocabularyChoice choice(std::initializer_list<std::size_t> programs, std::size_t n = 4) {
  VocabularyChoice v(n);
  for (auto p : programs) v.set(p);
  return v;
}

// Restriction oracle on plain vectors: keep statements whose programs all lie
// in v', re-index them, and rebuild the task there.
struct Restricted {
  bool ok = false;
  oracle::TaskRec task{};
  std::vector<oracle::Stmt> L;
};

Restricted restrict_oracle(const Task& rho, const std::vector<std::size_t>& keep) {
  const auto& lang = rho.language();
  const auto& env = lang.environment();
  oracle::Env sub{static_cast<int>(env.state_count()), {}, env.settings().empty_statement};
  for (auto p : keep) {
    oracle::Mask m = 0;
    for (auto s : env.program(p).states()) m |= 1u << s;
    sub.programs.push_back(m);
  }
  Restricted r;
  r.L = oracle::language(sub);
  const auto ext = oracle::extension_masks(r.L);
  auto lift = [&](const Bitset& bits) {
    std::uint64_t out = 0;
    bits.for_each([&](std::size_t i) {
      oracle::Stmt mapped;
      for (auto p : lang.statement(i).indices()) {
        auto it = std::find(keep.begin(), keep.end(), p);
        if (it == keep.end()) return;
        mapped.push_back(static_cast<int>(it - keep.begin()));
      }
      const auto pos = std::find(r.L.begin(), r.L.end(), mapped) - r.L.begin();
      out |= 1ull << pos;
    });
    return out;
  };
  r.task.inputs = lift(rho.input_bits());
  std::uint64_t E = 0;
  for (std::size_t i = 0; i < r.L.size(); ++i)
    if ((r.task.inputs >> i) & 1) E |= ext[i];
  r.task.ext = E;
  r.task.outputs = lift(rho.output_bits()) & E;
  const std::uint64_t full = (1ull << r.L.size()) - 1;
  r.ok = r.task.inputs != 0 && r.task.inputs != full && r.task.outputs != E;
  return r;
}

}  // namespace

TEST(Utility, Examples) {
  const auto env2 = Language::build(mk_environment(2, {{0}, {1}, {0, 1}}));
  EXPECT_EQ(utility(mk_task(env2, {st({2})}, {st({0, 2})})), 1);
  const auto pair = Language::build(mk_environment(2, {{0}, {1}}));
  EXPECT_EQ(utility(mk_task(pair, {st({})}, {st({0})})), 0);
  EXPECT_EQ(code_of([&] { utility(mk_task(env2, {st({0})}, {st({0})})); }), ErrorCode::NoCorrectPolicy);
  const auto w = utility_witness(mk_task(env2, {st({2})}, {st({0, 2})}));
  EXPECT_EQ(w.policy, st({0}));
}

TEST(Utility, NonNegativeAndMatchesOracle) {
  for (const auto& e : oracle::all_environments(2, 4)) {
    const auto lang = Language::build(oracle::to_env(e));
    const auto L = oracle::language(e);
    const auto ext = oracle::extension_masks(L);
    for (const auto& t : oracle::tasks(L)) {
      const auto task =
          Task::from_bits(lang, detail::mask_to_bits(t.inputs, L.size()), detail::mask_to_bits(t.outputs, L.size()));
      const long want = oracle::utility(ext, t);
      if (want < 0) {
        EXPECT_EQ(code_of([&] { utility(task); }), ErrorCode::NoCorrectPolicy);
        continue;
      }
      const auto w = utility_witness(task);
      EXPECT_EQ(w.utility, want);
      EXPECT_GE(w.utility, 0);
      EXPECT_EQ(w.utility, Count(lang->extension_size(lang->require_index(w.policy))) - task.output_bits().count());
    }
  }
}

TEST(FullPowerset, Sizes) {
  const auto one = full_powerset_vocabulary(1);
  ASSERT_EQ(one.vocabulary_size(), 2u);
  EXPECT_EQ(one.program(0).to_string(), "{}");
  EXPECT_EQ(one.program(1).to_string(), "{0}");
  EXPECT_EQ(full_powerset_vocabulary(2).vocabulary_size(), 4u);
  EXPECT_EQ(full_powerset_vocabulary(3).vocabulary_size(), 8u);
  EXPECT_EQ(code_of([] { full_powerset_vocabulary(5); }), ErrorCode::StateSpaceTooLarge);
  Settings s;
  s.limits.powerset_states = 5;
  EXPECT_EQ(full_powerset_vocabulary(5, s).vocabulary_size(), 32u);
  s.limits.powerset_states = 6;
  EXPECT_EQ(code_of([&] { full_powerset_vocabulary(6, s); }), ErrorCode::StateSpaceTooLarge);
}

TEST(Instantiate, Examples) {
  const auto P = p2();
  // [{0,1}] is statement [3]; [{0},{0,1}] is [1,3].
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  const auto same = rho.instantiate(choice({1, 3}));
  EXPECT_EQ(same.id(), "I=[[1]];O=[[0,1]]");
  EXPECT_EQ(same.environment().vocabulary_size(), 2u);
  const auto lost = rho.instantiate(choice({3}));
  EXPECT_EQ(lost.id(), "I=[[0]];O=[]");
  const auto full = rho.instantiate(choice({0, 1, 2, 3}));
  EXPECT_EQ(full.input_bits(), rho.base().input_bits());
  EXPECT_EQ(full.output_bits(), rho.base().output_bits());
}

TEST(Instantiate, Errors) {
  const auto P = p2();
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  EXPECT_EQ(code_of([&] { rho.instantiate(choice({1, 2})); }), ErrorCode::EmptyInstantiation);
  EXPECT_EQ(code_of([&] { rho.instantiate(choice({1}, 5)); }), ErrorCode::InvalidVocabulary);
  const UninstantiatedTask wide(mk_task(P, {st({}), st({3})}, {st({1, 3})}));
  // v' = {{0,1}}: both surviving statements are inputs, so I' = L_v'.
  EXPECT_EQ(code_of([&] { wide.instantiate(choice({3})); }), ErrorCode::InputsNotStrictSubset);
  const auto env2 = Language::build(mk_environment(2, {{0}, {1}, {0, 1}}));
  EXPECT_EQ(code_of([&] { UninstantiatedTask bad(mk_task(env2, {st({2})}, {})); }), ErrorCode::InvalidVocabulary);
}

TEST(Instantiate, OutputsThatFillTheRestrictedExtension) {
  const auto P = p2();
  // I = {[{0}]}, O = {[{0}]}: in v' = {{0}} the extension of I is just {[{0}]}.
  const UninstantiatedTask rho(mk_task(P, {st({1})}, {st({1})}));
  EXPECT_EQ(code_of([&] { rho.instantiate(choice({1})); }), ErrorCode::OutputsNotStrict);
}

TEST(Instantiate, MatchesRestrictionOracle) {
  const auto P = p2();
  const auto vocabularies = all_vocabularies(P->environment());
  ASSERT_EQ(vocabularies.size(), 16u);
  std::size_t checked = 0;
  for (const auto& t : enumerate_tasks(P)) {
    const UninstantiatedTask rho(t);
    for (const auto& v : vocabularies) {
      const auto keep = v.indices();
      const auto want = restrict_oracle(t, keep);
      const Restriction r(P, v);
      const auto fast = restrict_task(t, r);
      if (!want.ok) {
        EXPECT_TRUE(fast.error.has_value());
        EXPECT_ANY_THROW(rho.instantiate(v));
        continue;
      }
      const auto got = rho.instantiate(v);
      ASSERT_EQ(got.language().size(), want.L.size());
      EXPECT_EQ(detail::bits_to_mask(got.input_bits()), want.task.inputs);
      EXPECT_EQ(detail::bits_to_mask(got.output_bits()), want.task.outputs);
      const long eps = oracle::utility(oracle::extension_masks(want.L), want.task);
      if (eps < 0) {
        EXPECT_EQ(fast.error, ErrorCode::NoCorrectPolicy);
      } else {
        ASSERT_FALSE(fast.error.has_value());
        EXPECT_EQ(*fast.utility(), eps);
        EXPECT_EQ(utility(got), eps);
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(CompareVocabularies, RowsAndIsolation) {
  const auto P = p2();
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  const CandidateSet cs(P, {choice({0, 1, 2, 3}), choice({1, 2}), choice({1, 3}), choice({1, 3})}, false);
  const auto report = compare_vocabularies(rho, cs);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_FALSE(report.rows[0].error);
  EXPECT_EQ(report.rows[1].error, ErrorCode::EmptyInstantiation);
  EXPECT_EQ(report.rows[2].utility, report.rows[3].utility);
  EXPECT_EQ(report.rows[2].witness, report.rows[3].witness);
  for (const auto& row : report.rows) {
    if (row.error) continue;
    const auto task = rho.instantiate(cs.restriction(row.candidate).choice());
    const auto& lang = task.language();
    EXPECT_EQ(*row.utility, Count(lang.extension_size(lang.require_index(*row.witness))) - task.output_bits().count());
  }
  EXPECT_FALSE(report.rows[0].strict_child);
}

TEST(VerifyUpperBound, SingleCandidate) {
  const auto P = p2();
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  const CandidateSet cs(P, {choice({1, 3})}, true);
  const auto r = verify_upper_bound(rho, cs);
  ASSERT_FALSE(r.no_candidate());
  const auto& sel = r.ranking[*r.selected];
  const auto task = rho.instantiate(choice({1, 3}));
  EXPECT_EQ(sel.policy, learn(task, Proxy::weakness()));
  EXPECT_TRUE(correct_policies(task).contains(sel.policy));
}

TEST(VerifyUpperBound, NoCandidate) {
  const auto P = p2();
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  const CandidateSet cs(P, {choice({1, 2}), choice({0})}, true);
  const auto r = verify_upper_bound(rho, cs);
  EXPECT_TRUE(r.no_candidate());
  EXPECT_EQ(r.utilities.rows.size(), 2u);
}

TEST(VerifyUpperBound, SelectionFollowsUtilityThenWeakness) {
  const auto P = p2();
  const CandidateSet cs(P, all_vocabularies(P->environment()), true);
  for (const auto& t : enumerate_tasks(P)) {
    const UninstantiatedTask rho(t);
    const auto r = verify_upper_bound(rho, cs);
    if (r.no_candidate()) continue;
    const auto& sel = r.ranking[*r.selected];
    const auto task = rho.instantiate(cs.restriction(sel.candidate).choice());
    EXPECT_TRUE(correct_policies(task).contains(sel.policy));
    Count best = -1;
    for (const auto& row : r.utilities.rows)
      if (row.utility) best = std::max(best, *row.utility);
    EXPECT_EQ(*r.utilities.rows[sel.candidate].utility, best);
    EXPECT_EQ(r.attained, sel.probability == r.best_probability);
    for (std::size_t k = 1; k < r.ranking.size(); ++k) EXPECT_GE(r.ranking[k - 1].probability, r.ranking[k].probability);
  }
}

TEST(UtilityMaximal, FullVocabularyTies) {
  const auto P = p2();
  const UninstantiatedTask rho(mk_task(P, {st({3})}, {st({1, 3})}));
  const CandidateSet only_full(P, {choice({0, 1, 2, 3})}, false);
  const auto r = verify_utility_maximal_at_full(rho, only_full);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.utility_at_full, utility(rho.base()));
}

// With the same policies surviving, a larger vocabulary never shrinks the
// weakest policy's extension.
TEST(UtilityMaximal, MonotoneAlongNestedChains) {
  const auto P = p2();
  const auto vs = all_vocabularies(P->environment());
  std::size_t pairs = 0, violations = 0;
  for (const auto& t : enumerate_tasks(P)) {
    for (const auto& small : vs)
      for (std::size_t add = 0; add < 4; ++add) {
        if (small.test(add)) continue;
        auto big = small;
        big.set(add);
        const Restriction rs(P, small), rb(P, big);
        const auto a = restrict_task(t, rs), b = restrict_task(t, rb);
        if (a.error || b.error || !a.policies.is_subset_of(b.policies)) continue;
        ++pairs;
        std::size_t best_small = 0, best_big = 0;
        a.policies.for_each([&](std::size_t p) {
          best_small = std::max(best_small, (P->extension_bits(p) & rs.expressible()).count());
          best_big = std::max(best_big, (P->extension_bits(p) & rb.expressible()).count());
        });
        violations += best_big < best_small;
      }
  }
  EXPECT_GT(pairs, 0u);
  EXPECT_EQ(violations, 0u);
}
