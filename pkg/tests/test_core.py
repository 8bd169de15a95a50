import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpswarm import Bounds, ConfigurationError, DomainError, RngStream, clamp, fork_stream
from dpswarm.core import STREAM_LABELS


@pytest.mark.parametrize("coords, w_max, expected", [
    ((0.3, -0.7), 1.0, (0.3, -0.7)),
    ((1.5,), 1.0, (1.0,)),
    ((-2.0, 0.0), 1.0, (-1.0, 0.0)),
])
def test_clamp_examples(coords, w_max, expected):
    assert clamp(coords, Bounds(w_max)).tolist() == list(expected)


def test_clamp_rejects_non_finite_and_names_index():
    with pytest.raises(DomainError, match="index 2"):
        clamp([0.0, 1.0, np.nan], Bounds())
    with pytest.raises(DomainError, match="index 0"):
        clamp([np.inf], Bounds())


def test_clamp_does_not_mutate_input():
    p = np.array([3.0, -3.0])
    clamp(p, Bounds())
    assert p.tolist() == [3.0, -3.0]


@pytest.mark.parametrize("w_max", [0.0, -1.0, np.inf, np.nan])
def test_bounds_must_be_positive(w_max):
    with pytest.raises(ConfigurationError):
        Bounds(w_max)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=8), st.floats(1e-3, 10.0))
def test_clamp_is_idempotent_projection(coords, w_max):
    b = Bounds(w_max)
    once = clamp(coords, b)
    assert b.contains(once)
    assert np.array_equal(clamp(once, b), once)
    assert len(once) == len(coords)
    inside = np.abs(np.array(coords)) <= w_max
    assert np.array_equal(once[inside], np.array(coords)[inside])


def test_stream_is_pure_function_of_seed_and_label():
    a = fork_stream(42, "dynamics").uniforms(100)
    b = fork_stream(42, "dynamics").uniforms(100)
    assert np.array_equal(a, b)


def test_labels_and_seeds_give_different_sequences():
    base = fork_stream(42, "dynamics").uniforms(100)
    assert np.any(base != fork_stream(42, "mechanism").uniforms(100))
    assert np.any(base != fork_stream(43, "dynamics").uniforms(100))
    assert np.any(fork_stream(42, "data").uniforms(100) != fork_stream(42, "mechanism").uniforms(100))


def test_unregistered_label_is_configuration_error():
    with pytest.raises(ConfigurationError, match="unregistered"):
        fork_stream(1, "noise")


def test_vector_draws_match_scalar_draws_and_cursor():
    a = fork_stream(5, "dynamics")
    b = fork_stream(5, "dynamics")
    vec = a.uniforms((3, 4))
    seq = [b.uniform() for _ in range(12)]
    assert vec.reshape(-1).tolist() == seq
    assert a.position == b.position == 12
    assert a.state() == b.state()


def test_cursor_counts_every_primitive_draw():
    s = RngStream(9, "data")
    s.uniform()
    s.integer(10)
    s.normals(5)
    s.permutation(7)
    assert s.position == 1 + 1 + 5 + 1


def test_large_and_negative_seeds_are_masked_to_64_bits():
    assert fork_stream(-1, "data").seed == 2**64 - 1
    assert np.array_equal(fork_stream(2**64 + 3, "data").uniforms(4), fork_stream(3, "data").uniforms(4))


def test_stream_label_codes_are_frozen():
    assert STREAM_LABELS == {"dynamics": 0, "mechanism": 1, "data": 2}
