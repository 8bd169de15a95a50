import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpswarm import (
    BudgetExhaustedError,
    BudgetLedger,
    ConfigurationError,
    Dataset,
    DomainError,
    allocate,
    dp_update_pbest,
    exp_mech_select,
    fork_stream,
    greedy_update_pbest,
    mse_objective,
)
from dpswarm.privacy import prob_index0

# high-precision normalization of the two exponentials for (-0.5, -1.0, 4, 0.01)
WORKED_P0 = 0.50015624999491374


def brute_p0(q0, q1, dq, eps):
    with mpmath.workdps(50):
        a = mpmath.exp(mpmath.mpf(eps) * mpmath.mpf(q0) / (2 * mpmath.mpf(dq)))
        b = mpmath.exp(mpmath.mpf(eps) * mpmath.mpf(q1) / (2 * mpmath.mpf(dq)))
        return float(a / (a + b))


@pytest.mark.parametrize("eps, r, m, expected", [
    (1.0, 1, 1, 1.0),
    (100.0, 100, 100, 0.01),
    (10.0, 100, 100, 0.001),
])
def test_allocate_examples(eps, r, m, expected):
    assert allocate(eps, r, m) == pytest.approx(expected, rel=1e-15)
    assert allocate(eps, r, m) == pytest.approx(eps / (r * m), rel=1e-15)


@pytest.mark.parametrize("args", [(0.0, 1, 1), (-1.0, 1, 1), (1.0, 0, 1), (1.0, 1, 0), (math.inf, 1, 1)])
def test_allocate_rejects_bad_config(args):
    with pytest.raises(ConfigurationError):
        allocate(*args)


def test_worked_selection_probability():
    out = exp_mech_select(-0.5, -1.0, 4.0, 0.01, fork_stream(0, "mechanism"))
    assert brute_p0(-0.5, -1.0, 4.0, 0.01) == pytest.approx(WORKED_P0, rel=1e-15)
    assert out.prob_of_index0 == pytest.approx(WORKED_P0, rel=1e-12)
    assert out.prob_of_index0 == pytest.approx(0.50015625, abs=1e-10)
    assert out.delta_q_used == 4.0


@pytest.mark.parametrize("q", [-3.0, 0.0, -0.123])
def test_equal_scores_give_half(q):
    assert exp_mech_select(q, q, 2.0, 5.0, fork_stream(0, "mechanism")).prob_of_index0 == 0.5


def test_zero_budget_gives_half():
    assert exp_mech_select(-0.1, -50.0, 1.0, 0.0, fork_stream(0, "mechanism")).prob_of_index0 == 0.5


def test_saturation_at_huge_budget():
    assert prob_index0(-0.1, -0.2, 9.0, 1e12) == 1.0
    assert prob_index0(-0.2, -0.1, 9.0, 1e12) == 0.0


@given(st.floats(-50, 0), st.floats(-50, 0), st.floats(0.01, 100), st.floats(0, 1e4))
def test_logistic_matches_brute_force(q0, q1, dq, eps):
    p = prob_index0(q0, q1, dq, eps)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(brute_p0(q0, q1, dq, eps), rel=1e-12, abs=1e-300)


def test_monotone_in_budget():
    ps = [prob_index0(-0.1, -0.4, 2.0, e) for e in (0.01, 0.1, 1.0, 10.0, 50.0)]
    assert ps[0] > 0.5
    assert all(a < b for a, b in zip(ps, ps[1:]))


def test_selection_consumes_one_draw_and_uses_strict_comparison(scripted):
    rng = scripted([0.5, 0.4999])
    assert exp_mech_select(-1.0, -1.0, 1.0, 1.0, rng).chosen_index == 1  # u == p0 -> index 1
    assert exp_mech_select(-1.0, -1.0, 1.0, 1.0, rng).chosen_index == 0
    assert rng.position == 2


@pytest.mark.parametrize("args", [
    (-1.0, -1.0, 0.0, 1.0),
    (-1.0, -1.0, -2.0, 1.0),
    (np.nan, -1.0, 1.0, 1.0),
    (-1.0, -np.inf, 1.0, 1.0),
    (-1.0, -1.0, 1.0, -0.5),
])
def test_selection_domain_errors(args):
    with pytest.raises(DomainError):
        exp_mech_select(*args, fork_stream(0, "mechanism"))


def test_empirical_frequency_within_four_sigma():
    rng = fork_stream(2024, "mechanism")
    q0, q1, dq, eps = -0.2, -0.6, 1.0, 2.0
    p = prob_index0(q0, q1, dq, eps)
    n = 10_000
    hits = sum(exp_mech_select(q0, q1, dq, eps, rng).chosen_index == 0 for _ in range(n))
    assert abs(hits - n * p) <= 4 * math.sqrt(n * p * (1 - p))


def test_ledger_accounting_one_call(small_data):
    ledger = BudgetLedger(0.5, 1, 5)
    P = np.full((5, 2), 0.1)
    dp_update_pbest(small_data, P, P.copy(), 0.5, fork_stream(1, "mechanism"), ledger=ledger)
    assert len(ledger) == 5
    assert ledger.consumed == 0.5
    assert all(e.epsilon_spent == 0.1 for e in ledger.log)
    assert [e.individual for e in ledger.log] == [0, 1, 2, 3, 4]


def test_identical_candidates_keep_pbest_but_spend_budget(small_data):
    P = np.random.default_rng(0).uniform(-1, 1, (4, 2))
    ledger = BudgetLedger(1.0, 1, 4)
    out = dp_update_pbest(small_data, P, P.copy(), 1.0, fork_stream(1, "mechanism"), ledger=ledger)
    assert np.array_equal(out, P)
    assert len(ledger) == 4


def test_huge_budget_picks_strictly_better_position():
    data = Dataset([[1.0], [0.5]], [1.0, 0.5])
    P = np.array([[1.0], [0.9]])
    B = np.array([[-1.0], [0.0]])
    out = dp_update_pbest(data, P, B, 1e12, fork_stream(3, "mechanism"))
    assert np.array_equal(out, P)


def test_dp_update_matches_greedy_with_huge_budget(small_data):
    rng = np.random.default_rng(5)
    P = rng.uniform(-1, 1, (20, 2))
    B = rng.uniform(-1, 1, (20, 2))
    assert np.array_equal(dp_update_pbest(small_data, P, B, 1e12, fork_stream(0, "mechanism")),
                          greedy_update_pbest(small_data, P, B))


def test_output_rows_come_from_candidates(small_data):
    rng = np.random.default_rng(6)
    P = rng.uniform(-1, 1, (30, 2))
    B = rng.uniform(-1, 1, (30, 2))
    out = dp_update_pbest(small_data, P, B, 0.01, fork_stream(0, "mechanism"))
    for i in range(30):
        assert np.array_equal(out[i], P[i]) or np.array_equal(out[i], B[i])


def test_length_mismatch(small_data):
    with pytest.raises(DomainError):
        dp_update_pbest(small_data, np.zeros((3, 2)), np.zeros((2, 2)), 1.0, fork_stream(0, "mechanism"))


def test_overdraw_aborts_before_any_selection(small_data):
    ledger = BudgetLedger(1.0, 2, 3)
    rng = fork_stream(0, "mechanism")
    P = np.zeros((3, 2))
    dp_update_pbest(small_data, P, P, 0.5, rng, ledger=ledger, iteration=0)
    dp_update_pbest(small_data, P, P, 0.5, rng, ledger=ledger, iteration=1)
    pos = rng.position
    with pytest.raises(BudgetExhaustedError):
        dp_update_pbest(small_data, P, P, 0.5, rng, ledger=ledger, iteration=2)
    assert rng.position == pos
    assert len(ledger) == 6
    assert ledger.consumed == pytest.approx(1.0, rel=1e-15)


def test_charge_must_match_allocation():
    ledger = BudgetLedger(1.0, 1, 2)
    rng = fork_stream(0, "mechanism")
    with pytest.raises(DomainError):
        exp_mech_select(-1.0, -1.0, 1.0, 0.3, rng, ledger=ledger)
    assert rng.position == 0 and len(ledger) == 0


def test_ledger_csv_export(tmp_path, small_data):
    ledger = BudgetLedger(0.2, 1, 2)
    P = np.zeros((2, 2))
    dp_update_pbest(small_data, P, P, 0.2, fork_stream(0, "mechanism"), ledger=ledger, iteration=0)
    text = ledger.to_csv(tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "iteration,individual,epsilon_spent,chosen_index"
    assert len(lines) == 3 and text.splitlines() == lines
    assert lines[1].startswith("0,0,0.1,")


def test_global_sensitivity_mode(small_data):
    outcomes = []
    P = np.zeros((2, 2))
    dp_update_pbest(small_data, P, P, 1.0, fork_stream(0, "mechanism"), sensitivity_mode="global",
                    outcomes=outcomes)
    assert [o.delta_q_used for o in outcomes] == [9.0, 9.0]


def test_greedy_keeps_pbest_when_position_is_worse():
    data = Dataset([[1.0]], [1.0])
    B = np.array([[1.0], [0.9]])
    P = np.array([[-1.0], [0.0]])
    assert np.array_equal(greedy_update_pbest(data, P, B), B)
    assert mse_objective(data, P[0]) > mse_objective(data, B[0])
