"""Fitness functions: frozen examples, oracle checks, and range invariants."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from affsgen.fitness import (
    FitnessContext,
    FitnessFunctionId as F,
    composite_fitness,
    eval_fitness,
    levenshtein,
    nu,
    suite_diversity,
)
from affsgen.minilang import parse
from affsgen.testmodel import CallStmt, GenConfig, TestCase, TestSuite, random_test_case
from oracles import naive_levenshtein

PROGRAM = parse("""
fn classify(x:int) {
  if (x == 5) { return 1; }
  return 0;
}
fn crash(which:int) {
  if (which == 1) { return 1 / 0; }
  if (which == 2) { throw "two"; }
  return 0;
}
""", "fit")


def _case(name, *args):
    return TestCase(calls=(CallStmt(name, tuple(args)),))


def _ctx():
    return FitnessContext(PROGRAM)


# --- per-function examples -------------------------------------------------------


def test_exception_fitness_counts_unique_identities():
    ctx = _ctx()
    suite = TestSuite([_case("crash", 1), _case("crash", 2), _case("crash", 2)])
    # two unique (kind, function) pairs -> 1 / (1 + 2)
    assert eval_fitness(F.EX, suite, ctx) == pytest.approx(1 / 3)


def test_exception_fitness_empty_suite():
    assert eval_fitness(F.EX, TestSuite(), _ctx()) == 1.0


def test_line_fitness_zero_at_full_coverage():
    ctx = _ctx()
    suite = TestSuite([_case("classify", 5), _case("classify", 0),
                       _case("crash", 1), _case("crash", 2), _case("crash", 3)])
    assert eval_fitness(F.LINE, suite, ctx) == 0.0


def test_branch_fitness_single_branch_example():
    # one branch, best distances (2, 0): (nu(2) + 0) / 2 == 1/3
    program = parse("fn f(x:int){ if (x == 5) { return 1; } return 0; }")
    ctx = FitnessContext(program)
    suite = TestSuite([_case("f", 3)])
    assert eval_fitness(F.BRANCH, suite, ctx) == pytest.approx(1 / 3)


def test_branch_fitness_unexecuted_branch_counts_full():
    program = parse("fn f(x:int){ if (x == 5) { return 1; } return 0; } fn g(y:int){ if (y < 0) { return 1; } return 0; }")
    ctx = FitnessContext(program)
    suite = TestSuite([_case("f", 5)])  # g's branch never evaluated
    # f's branch: taken true with (0, 1) -> nu(0) + nu(1) = 0.5; g's: 2 * nu(inf) = 2
    assert eval_fitness(F.BRANCH, suite, ctx) == pytest.approx((0.5 + 2.0) / 4.0)


def test_method_and_mnec_fitness():
    ctx = _ctx()
    suite = TestSuite([_case("crash", 1)])  # raises: called but not clean
    assert eval_fitness(F.METHOD, suite, ctx) == pytest.approx(1 / 2)
    assert eval_fitness(F.MNEC, suite, ctx) == pytest.approx(1.0)
    clean = TestSuite([_case("crash", 0)])
    assert eval_fitness(F.MNEC, clean, ctx) == pytest.approx(1 / 2)


def test_direct_branch_ignores_indirect_evaluations():
    program = parse(
        "fn outer(x:int){ return inner(x); }"
        " fn inner(x:int){ if (x > 0) { return 1; } return 0; }"
    )
    ctx = FitnessContext(program)
    indirect_only = TestSuite([_case("outer", 5)])
    direct = TestSuite([_case("inner", 5)])
    assert eval_fitness(F.BRANCH, indirect_only, ctx) < 1.0 * eval_fitness(
        F.DIRECT_BRANCH, indirect_only, ctx)
    assert eval_fitness(F.DIRECT_BRANCH, direct, ctx) < eval_fitness(
        F.DIRECT_BRANCH, indirect_only, ctx)


def test_output_fitness_rewards_bucket_coverage():
    program = parse("fn f(x:int){ return x; }")
    ctx = FitnessContext(program)
    none = TestSuite()
    some = TestSuite([_case("f", 5)])
    all_buckets = TestSuite([_case("f", 5), _case("f", 0), _case("f", -5)])
    assert eval_fitness(F.OUTPUT, all_buckets, ctx) == 0.0
    assert eval_fitness(F.OUTPUT, some, ctx) < eval_fitness(F.OUTPUT, none, ctx)


def test_weak_and_strong_mutation_fitness_bounds():
    ctx = _ctx()
    empty = TestSuite()
    killing = TestSuite([_case("classify", 5), _case("classify", 3),
                         _case("classify", 6), _case("crash", 1),
                         _case("crash", 2), _case("crash", 0), _case("crash", 3)])
    for fn in (F.WEAK_MUT, F.STRONG_MUT):
        hi = eval_fitness(fn, empty, ctx)
        lo = eval_fitness(fn, killing, ctx)
        assert 0.0 <= lo < hi <= 1.0
    assert eval_fitness(F.STRONG_MUT, killing, ctx) >= eval_fitness(F.WEAK_MUT, killing, ctx)


def test_mutation_fitness_errors_without_mutants():
    ctx = FitnessContext(parse(""))
    with pytest.raises(ValueError):
        eval_fitness(F.WEAK_MUT, TestSuite(), ctx)


def test_strong_mut_zero_iff_full_strong_score():
    ctx = _ctx()
    tests = []
    rng = random.Random(4)
    for _ in range(40):
        tests.append(random_test_case(PROGRAM, rng, GenConfig(max_calls_per_test=3)))
    suite = TestSuite(tests + [_case("classify", 5), _case("classify", 4),
                               _case("crash", 1), _case("crash", 2), _case("crash", 0)])
    score = ctx.mutation_score(suite, "strong")
    fitness = eval_fitness(F.STRONG_MUT, suite, ctx)
    assert (fitness == 0.0) == (score == 100.0)


# --- levenshtein ------------------------------------------------------------------


def test_levenshtein_examples():
    assert levenshtein("", "abc") == 3
    assert levenshtein("same", "same") == 0
    assert levenshtein("kitten", "sitting") == 3


def test_levenshtein_matches_naive_oracle():
    rng = random.Random(12)
    alphabet = "ab("
    for _ in range(500):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        assert levenshtein(a, b) == naive_levenshtein(a, b)


@settings(max_examples=300)
@given(st.text(max_size=12), st.text(max_size=12), st.text(max_size=12))
def test_levenshtein_metric_axioms(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


# --- diversity --------------------------------------------------------------------


def test_diversity_of_tiny_suites_is_one():
    ctx = _ctx()
    assert suite_diversity(TestSuite(), ctx) == (0, 1.0)
    assert suite_diversity(TestSuite([_case("classify", 1)]), ctx) == (0, 1.0)


def test_diversity_of_identical_tests_is_zero():
    ctx = _ctx()
    suite = TestSuite([_case("classify", 1), _case("classify", 1)])
    assert suite_diversity(suite, ctx) == (0, 1.0)


def test_diversity_two_one_line_tests():
    ctx = _ctx()
    a = _case("classify", 1)
    b = _case("crash", 21)
    # distance recomputed by hand from the rendered lines
    expected = levenshtein("classify(1)", "crash(21)")
    div, fitness = suite_diversity(TestSuite([a, b]), ctx)
    assert div == expected
    assert fitness == pytest.approx(1 / (1 + expected))


def test_diversity_fitness_drops_when_distinct_test_added():
    ctx = _ctx()
    base = [_case("classify", 1), _case("classify", 1)]
    _, before = suite_diversity(TestSuite(base), ctx)
    _, after = suite_diversity(TestSuite(base + [_case("crash", 999)]), ctx)
    assert after < before


def test_diversity_counts_unordered_pairs_of_statements():
    ctx = _ctx()
    a = TestCase(calls=(CallStmt("classify", (1,)), CallStmt("crash", (2,))))
    b = TestCase(calls=(CallStmt("classify", (3,)),))
    lines_a = ["classify(1)", "crash(2)"]
    lines_b = ["classify(3)"]
    expected = sum(levenshtein(x, y) for x in lines_a for y in lines_b)
    div, _ = suite_diversity(TestSuite([a, b]), ctx)
    assert div == expected


# --- composite --------------------------------------------------------------------


def test_composite_is_plain_sum():
    assert composite_fitness({F.EX: 0.2, F.LINE: 0.3}) == pytest.approx(0.5)
    assert composite_fitness({F.BRANCH: 0.77}) == pytest.approx(0.77)
    forward = composite_fitness({F.EX: 0.1, F.LINE: 0.2, F.OUTPUT: 0.3})
    backward = composite_fitness({F.OUTPUT: 0.3, F.LINE: 0.2, F.EX: 0.1})
    assert forward == backward


def test_composite_rejects_empty_map():
    with pytest.raises(ValueError):
        composite_fitness({})


# --- range and monotonicity sweeps ---------------------------------------------------


MONOTONE = (F.EX, F.BRANCH, F.DIRECT_BRANCH, F.LINE, F.METHOD, F.MNEC,
            F.WEAK_MUT, F.STRONG_MUT)


def test_all_scores_in_unit_interval_and_monotone_under_addition():
    ctx = _ctx()
    rng = random.Random(31)
    cfg = GenConfig(max_calls_per_test=3)
    tests = [random_test_case(PROGRAM, rng, cfg) for _ in range(10)]
    previous = {fn: None for fn in F}
    for size in range(len(tests) + 1):
        suite = TestSuite(tests[:size])
        for fn in F:
            score = eval_fitness(fn, suite, ctx)
            assert 0.0 <= score <= 1.0, (fn, score)
            if fn in MONOTONE and previous[fn] is not None:
                assert score <= previous[fn] + 1e-12, (fn, size)
            previous[fn] = score


def test_nu_normalization():
    assert nu(0.0) == 0.0
    assert nu(2.0) == pytest.approx(2 / 3)
    assert nu(float("inf")) == 1.0
