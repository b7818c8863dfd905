import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from regretlab import state_space as ss
from regretlab.errors import BadWeights, ShapeMismatch


def test_validate_maximally_mixed_qubit_passes():
    s = ss.State(ss.AlgebraShape((2,)), (np.eye(2) / 2,))
    assert ss.validate_state(s).passed


def test_validate_reports_trace_excess():
    s = ss.classical_state([0.6, 0.5])
    report = ss.validate_state(s)
    assert not report.passed
    names = dict(report.violations)
    assert_allclose(names["trace"], 0.1)


def test_validate_reports_negativity():
    s = ss.classical_state([1.01, -0.01])
    report = ss.validate_state(s)
    assert not report.passed
    assert_allclose(dict(report.violations)["negativity"], 0.01)


def test_validate_reports_hermiticity():
    block = np.array([[0.5, 0.2], [0.0, 0.5]], dtype=complex)
    s = ss.State(ss.AlgebraShape((2,)), (block,))
    assert "hermiticity" in dict(ss.validate_state(s).violations)


def test_inner_identity_gives_trace():
    shape = ss.AlgebraShape((2, 1))
    s = ss.State(shape, (np.eye(2) * 0.3, np.array([[0.4]])))
    assert_allclose(ss.inner(ss.identity_observable(shape), s), 1.0)


def test_inner_classical_dot_product():
    a = ss.classical_observable([1.0, -1.0])
    s = ss.classical_state([0.25, 0.75])
    assert_allclose(ss.inner(a, s), -0.5)


def test_inner_pauli_z():
    z = ss.Observable(ss.AlgebraShape((2,)), (np.diag([1.0, -1.0]),))
    s = ss.State(ss.AlgebraShape((2,)), (np.diag([0.9, 0.1]),))
    assert_allclose(ss.inner(z, s), 0.8)


def test_inner_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        ss.inner(ss.classical_observable([1.0, 2.0]), ss.classical_state([1.0]))


def test_spectrum_diagonal():
    s = ss.classical_state([0.2, 0.5, 0.3])
    assert ss.spectrum(s).eigenvalues == (0.5, 0.3, 0.2)


def test_spectrum_pure_qubit():
    s = ss.pure_state([1.0, 0.0])
    assert_allclose(ss.spectrum(s).eigenvalues, (1.0, 0.0), atol=1e-15)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_spectrum_unitary_invariance(dim):
    rng = np.random.default_rng(42 + dim)
    base = np.diag(rng.dirichlet(np.ones(dim)))
    reference = ss.spectrum(ss.State(ss.AlgebraShape((dim,)), (base,))).eigenvalues
    for _ in range(100):
        u = ss.random_unitary(dim, rng)
        rotated = ss.State(ss.AlgebraShape((dim,)), (u @ base @ u.conj().T,))
        got = ss.spectrum(rotated).eigenvalues
        assert np.max(np.abs(np.array(got) - np.array(reference))) <= 1e-10


def test_entropy_pure_state_zero():
    assert ss.entropy(ss.pure_state([0.6, 0.8])) == pytest.approx(0.0, abs=1e-12)


def test_entropy_uniform_four_points():
    assert_allclose(ss.entropy(ss.classical_state([0.25] * 4)), math.log(4))


def test_entropy_maximally_mixed_qubit():
    s = ss.State(ss.AlgebraShape((2,)), (np.eye(2) / 2,))
    assert_allclose(ss.entropy(s), math.log(2))


def test_entropy_bounds_on_random_states():
    rng = np.random.default_rng(7)
    shapes = [ss.classical_shape(3), ss.AlgebraShape((2,)), ss.AlgebraShape((2, 3))]
    for i in range(1000):
        shape = shapes[i % len(shapes)]
        s = ss.random_state(shape, rng)
        h = ss.entropy(s)
        assert -1e-12 <= h <= math.log(shape.total_dim) + 1e-12


@given(st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=6))
@settings(max_examples=200, deadline=None)
def test_entropy_concavity_classical(raw):
    p = np.array(raw) / sum(raw)
    q = np.roll(p, 1)
    t = 0.3
    mixed = ss.mix([ss.classical_state(p), ss.classical_state(q)], [t, 1 - t])
    lower = t * ss.entropy(ss.classical_state(p)) + (1 - t) * ss.entropy(
        ss.classical_state(q)
    )
    assert ss.entropy(mixed) >= lower - 1e-10


def test_entropy_concavity_qubit():
    rng = np.random.default_rng(3)
    shape = ss.AlgebraShape((2,))
    for _ in range(100):
        a, b = ss.random_state(shape, rng), ss.random_state(shape, rng)
        t = rng.uniform()
        mixed = ss.mix([a, b], [t, 1 - t])
        assert ss.entropy(mixed) >= t * ss.entropy(a) + (1 - t) * ss.entropy(b) - 1e-10


def test_mix_single_state_is_identity():
    s = ss.classical_state([0.3, 0.7])
    assert_allclose(ss.classical_probs(ss.mix([s], [1.0])), [0.3, 0.7])


def test_mix_orthogonal_pure_qubits_is_maximally_mixed():
    up = ss.pure_state([1.0, 0.0])
    down = ss.pure_state([0.0, 1.0])
    mixed = ss.mix([up, down], [0.5, 0.5])
    assert_allclose(mixed.blocks[0], np.eye(2) / 2)


def test_mix_classical_deltas():
    mixed = ss.mix([ss.delta_state(2, 0), ss.delta_state(2, 1)], [1 / 3, 2 / 3])
    assert_allclose(ss.classical_probs(mixed), [1 / 3, 2 / 3])


def test_mix_errors():
    s = ss.classical_state([0.5, 0.5])
    with pytest.raises(BadWeights):
        ss.mix([s, s], [0.7, 0.7])
    with pytest.raises(ShapeMismatch):
        ss.mix([s, ss.classical_state([1.0])], [0.5, 0.5])


def test_orthogonal_disjoint_deltas():
    assert ss.orthogonal(ss.delta_state(3, 0), ss.delta_state(3, 1))


def test_orthogonal_self_false():
    s = ss.classical_state([0.4, 0.6])
    assert not ss.orthogonal(s, s)


def test_orthogonal_nonorthogonal_pure_states():
    zero = ss.pure_state([1.0, 0.0])
    plus = ss.pure_state([1.0, 1.0])
    assert not ss.orthogonal(zero, plus)
    # the product has largest entry 1/2, far from zero
    prod = np.abs(zero.blocks[0] @ plus.blocks[0])
    assert_allclose(prod.max(), 0.5)


def test_json_round_trip_classical_bit_faithful():
    p = [1 / 3, 1 / 7, 1 - 1 / 3 - 1 / 7]
    s = ss.classical_state(p)
    again = ss.state_from_dict(json.loads(json.dumps(ss.state_to_dict(s))))
    assert ss.classical_probs(again).tolist() == ss.classical_probs(s).tolist()


def test_json_round_trip_block_state():
    rng = np.random.default_rng(0)
    s = ss.random_state(ss.AlgebraShape((2, 3)), rng)
    again = ss.state_from_dict(json.loads(json.dumps(ss.state_to_dict(s))))
    for a, b in zip(s.blocks, again.blocks):
        assert np.array_equal(a, b)


def test_observable_round_trip():
    a = ss.classical_observable([1.5, -2.25, 0.1])
    again = ss.observable_from_dict(json.loads(json.dumps(ss.observable_to_dict(a))))
    for x, y in zip(a.blocks, again.blocks):
        assert np.array_equal(x, y)


def test_random_classical_is_valid():
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert ss.validate_state(ss.random_classical(5, rng)).passed


def test_shape_invariants():
    with pytest.raises(ValueError):
        ss.AlgebraShape(())
    with pytest.raises(ValueError):
        ss.AlgebraShape((2, 0))
    assert ss.AlgebraShape((2, 1, 3)).total_dim == 6
    assert ss.classical_shape(4).is_classical
