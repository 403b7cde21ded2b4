"""State-update kernel tests: both backends against explicit kron products."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rqc.gates import builtin_gates
from rqc.kernels import BACKEND, apply_unitary, apply_unitary_with

GATES = builtin_gates()

BACKENDS = ["numpy"] + (["numba"] if BACKEND == "numba" else [])


def embed(u, wires, n):
    """Dense embedding of u at the given wires (wire 0 most significant)."""
    k = len(wires)
    full = np.zeros((1 << n, 1 << n), dtype=complex)
    for col in range(1 << n):
        sub = 0
        for i, w in enumerate(wires):
            sub |= ((col >> (n - 1 - w)) & 1) << (k - 1 - i)
        for subrow in range(1 << k):
            row = col
            for i, w in enumerate(wires):
                bit = (subrow >> (k - 1 - i)) & 1
                row = (row & ~(1 << (n - 1 - w))) | (bit << (n - 1 - w))
            full[row, col] += u[subrow, sub]
    return full


def random_state(n, rng):
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("backend", BACKENDS)
class TestAgainstEmbedding:
    def test_single_qubit_gate_on_each_wire(self, backend):
        rng = np.random.default_rng(7)
        u = GATES.matrix("H")
        for n in (1, 2, 4):
            for w in range(n):
                v = random_state(n, rng)
                got = apply_unitary_with(backend, v, u, (w,), n)
                assert np.allclose(got, embed(u, (w,), n) @ v, atol=1e-12)

    def test_two_qubit_gate_any_wire_order(self, backend):
        rng = np.random.default_rng(8)
        u = GATES.matrix("CNOT")
        for wires in [(0, 1), (1, 0), (0, 2), (2, 0), (3, 1)]:
            n = 4
            v = random_state(n, rng)
            got = apply_unitary_with(backend, v, u, wires, n)
            assert np.allclose(got, embed(u, wires, n) @ v, atol=1e-12)

    def test_cnot_on_adjacent_wires_flips_target(self, backend):
        v = np.zeros(4, dtype=complex)
        v[2] = 1.0  # |10>
        got = apply_unitary_with(backend, v, GATES.matrix("CNOT"), (0, 1), 2)
        want = np.zeros(4, dtype=complex)
        want[3] = 1.0
        assert np.allclose(got, want, atol=1e-12)

    def test_input_is_not_mutated(self, backend):
        v = np.zeros(2, dtype=complex)
        v[0] = 1.0
        before = v.copy()
        apply_unitary_with(backend, v, GATES.matrix("X"), (0,), 1)
        assert np.array_equal(v, before)


@pytest.mark.skipif(BACKEND != "numba", reason="numba not available")
class TestBackendsAgree:
    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(1, 6),
        seed=st.integers(0, 2**32 - 1),
        gate=st.sampled_from(["H", "X", "Z", "CNOT", "Swap", "CZ"]),
    )
    def test_same_result(self, n, seed, gate):
        u = GATES.matrix(gate)
        k = int(np.log2(u.shape[0]))
        if k > n:
            n = k
        rng = np.random.default_rng(seed)
        v = random_state(n, rng)
        wires = tuple(rng.permutation(n)[:k])
        a = apply_unitary_with("numpy", v, u, wires, n)
        b = apply_unitary_with("numba", v, u, wires, n)
        assert np.allclose(a, b, atol=1e-12)


class TestValidation:
    def test_shape_and_wire_checks(self):
        v = np.zeros(4, dtype=complex)
        v[0] = 1.0
        u = GATES.matrix("H")
        with pytest.raises(ValueError, match="does not fit"):
            apply_unitary(v, u, (0, 1), 2)
        with pytest.raises(ValueError, match="duplicate"):
            apply_unitary(v, GATES.matrix("CNOT"), (1, 1), 2)
        with pytest.raises(ValueError, match="out of range"):
            apply_unitary(v, u, (2,), 2)

    def test_norm_preserved(self):
        rng = np.random.default_rng(5)
        v = random_state(5, rng)
        got = apply_unitary(v, GATES.matrix("H"), (3,), 5)
        assert abs(np.linalg.norm(got) - 1.0) < 1e-12
