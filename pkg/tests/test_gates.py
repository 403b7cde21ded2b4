"""Gate table tests."""

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from rqc.gates import GateDef, GateError, builtin_gates, default_gates, is_unitary


@pytest.fixture
def gates():
    return default_gates()


class TestBuiltins:
    def test_all_builtins_unitary(self, gates):
        for name in gates.names():
            gd = gates.get(name)
            params = (Fraction(1, 4),) if gd.n_params == 1 else ()
            if name == "R" or name == "CR":
                params = (3,)
            if name == "Split":
                params = (0.3, 1.7)
            assert is_unitary(gates.matrix(name, params), 1e-9)

    def test_balanced_rotation_at_zero_is_hadamard(self, gates):
        assert np.allclose(gates.matrix("S", (0,)), gates.matrix("H"), atol=1e-12)

    def test_balanced_rotation_phase(self, gates):
        u = gates.matrix("S", (Fraction(1, 4),))
        ph = cmath.exp(1j * math.pi / 4)
        assert abs(u[1, 0] - ph / math.sqrt(2)) < 1e-12
        assert abs(u[1, 1] + ph / math.sqrt(2)) < 1e-12

    def test_phase_rotation_levels(self, gates):
        for l in range(5):
            u = gates.matrix("R", (l,))
            assert abs(u[1, 1] - cmath.exp(2j * math.pi / 2 ** l)) < 1e-12
        assert np.allclose(gates.matrix("R", (0,)), np.eye(2), atol=1e-12)

    def test_controlled_rotation_block_structure(self, gates):
        u = gates.matrix("CR", (2,))
        assert np.allclose(u[:2, :2], np.eye(2), atol=1e-12)
        assert np.allclose(u[2:, 2:], gates.matrix("R", (2,)), atol=1e-12)

    def test_cnot_first_operand_controls(self, gates):
        u = gates.matrix("CNOT")
        # |10> -> |11>, |0x> fixed
        v = np.zeros(4); v[2] = 1
        assert np.allclose(u @ v, np.eye(4)[3], atol=1e-12)
        v = np.zeros(4); v[1] = 1
        assert np.allclose(u @ v, np.eye(4)[1], atol=1e-12)

    def test_swap(self, gates):
        u = gates.matrix("Swap")
        v = np.zeros(4); v[1] = 1  # |01>
        assert np.allclose(u @ v, np.eye(4)[2], atol=1e-12)

    def test_split_column_on_zero(self, gates):
        u = gates.matrix("Split", (0.3, 1.7))
        assert abs(u[0, 0] - math.sqrt(0.3)) < 1e-12
        assert abs(u[1, 0] - cmath.exp(0.85j) * math.sqrt(0.7)) < 1e-12

    def test_split_weight_extremes(self, gates):
        assert abs(gates.matrix("Split", (1, 0.0))[1, 0]) < 1e-12
        assert abs(gates.matrix("Split", (0, 0.0))[0, 0]) < 1e-12
        with pytest.raises(GateError, match="weight"):
            gates.matrix("Split", (1.5, 0.0))


class TestTable:
    def test_duplicate_registration_rejected(self, gates):
        with pytest.raises(GateError, match="already"):
            gates.register(GateDef("H", 0, 1, lambda: np.eye(2)))

    def test_non_unitary_rejected_on_build(self, gates):
        # registration builds 0-param gates eagerly, so this raises here
        with pytest.raises(GateError, match="not unitary"):
            gates.register(GateDef("Bad", 0, 1, lambda: np.ones((2, 2))))

    def test_param_arity_checked(self, gates):
        with pytest.raises(GateError, match="parameter"):
            gates.matrix("S", ())

    def test_unknown_gate(self, gates):
        with pytest.raises(GateError, match="unknown"):
            gates.matrix("Nope")

    def test_matrix_cache_returns_same_object(self, gates):
        assert gates.matrix("H") is gates.matrix("H")

    def test_matrices_are_read_only(self, gates):
        u = gates.matrix("H")
        with pytest.raises(ValueError):
            u[0, 0] = 2

    def test_copy_is_independent(self, gates):
        c = gates.copy()
        c.register(GateDef("W", 0, 1, lambda: np.eye(2)))
        assert "W" in c and "W" not in gates

    def test_builtin_table_is_shared(self):
        assert builtin_gates() is builtin_gates()
