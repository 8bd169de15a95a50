import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpswarm import Bounds, Dataset, DomainError, mse_objective, rmse, score, sensitivity_bound
from dpswarm.objective import batch_mse

GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def test_mse_examples():
    assert mse_objective(Dataset([[1.0]] * 3, [1.0] * 3), [1.0]) == 0.0
    assert mse_objective(Dataset([[1.0]], [0.0]), [1.0]) == 1.0
    assert mse_objective(Dataset([[0.5]], [1.0]), [1.0]) == 0.25


def test_score_examples():
    assert score(Dataset([[1.0]] * 3, [1.0] * 3), [1.0]) == 0.0
    assert score(Dataset([[1.0]], [0.0]), [1.0]) == -1.0


def test_mse_matches_loop_oracle(small_data):
    w = np.array([0.2, 0.7])
    loop = sum((float(np.dot(w, x)) - y) ** 2 for x, y in zip(small_data.xs, small_data.ys)) / small_data.n
    assert mse_objective(small_data, w) == pytest.approx(loop, rel=1e-13)


def test_dimension_mismatch_is_domain_error(tiny_data):
    with pytest.raises(DomainError):
        mse_objective(tiny_data, [1.0, 2.0])
    with pytest.raises(DomainError):
        batch_mse(tiny_data, np.zeros((2, 3)))


@pytest.mark.parametrize("xs, ys, a", [
    ([[2.0]], [0.0], 1.0),
    ([[0.0]], [1.5], 1.0),
    ([[np.nan]], [0.0], 1.0),
    ([[0.0], [0.0]], [0.0], 1.0),
    (np.zeros((0, 2)), [], 1.0),
    ([[0.0]], [0.0], 0.0),
])
def test_dataset_invariants(xs, ys, a):
    with pytest.raises(DomainError):
        Dataset(xs, ys, a)


def test_dataset_is_read_only(tiny_data):
    with pytest.raises(ValueError):
        tiny_data.xs[0, 0] = 0.0


def test_sensitivity_examples():
    assert sensitivity_bound([(0.5, -0.5)], a=1.0) == 4.0
    assert sensitivity_bound([(0.0, 0.0, 0.0, 0.0)], a=1.0) == 1.0
    assert sensitivity_bound(a=1.0, mode="global", bounds=Bounds(1.0), d_dim=2) == 9.0


def test_sensitivity_per_pair_takes_max_over_candidates():
    assert sensitivity_bound([(0.0, 0.0), (1.0, 1.0)], a=1.0) == 9.0
    assert sensitivity_bound([(0.5,)], a=2.0) == (2.0 * 0.5 + 2.0) ** 2


def test_sensitivity_errors():
    with pytest.raises(DomainError):
        sensitivity_bound(np.zeros((0, 2)), a=1.0)
    with pytest.raises(DomainError):
        sensitivity_bound(a=1.0, mode="global")
    with pytest.raises(DomainError):
        sensitivity_bound([(0.0,)], a=1.0, mode="laplace")


def test_global_bound_dominates_per_pair_inside_box():
    rng = np.random.default_rng(0)
    b = Bounds(0.7)
    for _ in range(100):
        w = rng.uniform(-0.7, 0.7, size=(2, 3))
        assert sensitivity_bound(w, 1.0) <= sensitivity_bound(a=1.0, mode="global", bounds=b, d_dim=3)


def test_sensitivity_soundness_small_instance_oracle():
    # exhaustive bounded neighbours on a 5-point grid; difference computed from scratch
    rng = np.random.default_rng(11)
    for _ in range(25):
        n, d = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        xs = rng.choice(GRID, size=(n, d))
        ys = rng.choice(GRID, size=n)
        w = rng.uniform(-1, 1, size=d)
        bound = sensitivity_bound([w], 1.0)
        q = -np.mean((xs @ w - ys) ** 2)
        for i in range(n):
            for rec in itertools.product(GRID, repeat=d + 1):
                xs2 = xs.copy()
                ys2 = ys.copy()
                xs2[i] = rec[:d]
                ys2[i] = rec[d]
                q2 = -np.mean((xs2 @ w - ys2) ** 2)
                assert abs(q - q2) <= bound


def test_rmse_examples():
    assert rmse([0.3, -2.0], [0.3, -2.0]) == 0.0
    assert rmse([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert rmse([3.0], [0.0]) == 3.0


def test_rmse_errors():
    with pytest.raises(DomainError):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        rmse([], [])


vals = st.floats(-100, 100, allow_nan=False)


@given(st.lists(st.tuples(vals, vals), min_size=1, max_size=20), st.floats(-10, 10, allow_nan=False))
def test_rmse_scales_with_residuals(pairs, c):
    p = np.array([a for a, _ in pairs])
    t = np.array([b for _, b in pairs])
    base = rmse(p, t)
    scaled = rmse(t + c * (p - t), t)
    assert scaled == pytest.approx(abs(c) * base, rel=1e-9, abs=1e-9)


unit = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(1, 3), st.data())
def test_mse_row_permutation_invariant_and_score_identity(n, d, data):
    xs = np.array(data.draw(st.lists(st.lists(unit, min_size=d, max_size=d), min_size=n, max_size=n)))
    ys = np.array(data.draw(st.lists(unit, min_size=n, max_size=n)))
    w = np.array(data.draw(st.lists(unit, min_size=d, max_size=d)))
    perm = np.array(data.draw(st.permutations(range(n))))
    ds = Dataset(xs, ys)
    f = mse_objective(ds, w)
    assert f >= 0 and math.isfinite(f)
    assert mse_objective(Dataset(xs[perm], ys[perm]), w) == pytest.approx(f, rel=1e-12, abs=1e-15)
    assert score(ds, w) == -f


def test_score_antitone_in_error(tiny_data):
    good, bad = [0.9], [-0.9]
    assert mse_objective(tiny_data, good) < mse_objective(tiny_data, bad)
    assert score(tiny_data, good) > score(tiny_data, bad)
