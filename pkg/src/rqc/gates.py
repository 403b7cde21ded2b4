"""Elementary gate definitions and the gate table.

Gates are named, classically parameterized matrix builders.  A parameter
arrives already evaluated (int, Fraction, or float); angles are given as
dyadic fractions of pi, so ``S(1/4)`` means the balanced rotation with
phase e^{i pi/4} in its second row.  Every built matrix is checked unitary
to 1e-9 (max-entry residual of U*U - I) and cached by (name, params).

Wire convention: the first operand of a multi-qubit gate is the most
significant bit of the matrix row/column index, i.e. the matrix acts on
basis vectors |first operand, second operand, ...>.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

UNITARY_TOL = 1e-9


class GateError(Exception):
    pass


@dataclass(frozen=True)
class GateDef:
    name: str
    n_params: int
    n_qubits: int
    builder: Callable  # tuple of parameter values -> np.ndarray


def is_unitary(u: np.ndarray, tol: float = 1e-8) -> bool:
    n = u.shape[0]
    return u.shape == (n, n) and np.abs(u.conj().T @ u - np.eye(n)).max() <= tol


class GateTable:
    """Registry of gate definitions with a matrix cache."""

    def __init__(self):
        self._defs: dict[str, GateDef] = {}
        self._cache: dict[tuple, np.ndarray] = {}

    def register(self, gd: GateDef, replace: bool = False) -> None:
        if not replace and gd.name in self._defs:
            raise GateError(f"gate '{gd.name}' already registered")
        self._defs[gd.name] = gd
        if gd.n_params == 0:
            self.matrix(gd.name, ())  # unitarity check up front

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def get(self, name: str) -> GateDef:
        try:
            return self._defs[name]
        except KeyError:
            raise GateError(f"unknown gate '{name}'") from None

    def names(self):
        return sorted(self._defs)

    def matrix(self, name: str, params: tuple = ()) -> np.ndarray:
        gd = self.get(name)
        if len(params) != gd.n_params:
            raise GateError(
                f"gate '{name}' takes {gd.n_params} parameter(s), got {len(params)}"
            )
        key = (name, params)
        if key not in self._cache:
            u = np.asarray(gd.builder(*params), dtype=np.complex128)
            want = 2 ** gd.n_qubits
            if u.shape != (want, want):
                raise GateError(
                    f"gate '{name}' builder returned shape {u.shape}, want {want}x{want}"
                )
            resid = np.abs(u.conj().T @ u - np.eye(want)).max()
            if resid > UNITARY_TOL:
                raise GateError(f"gate '{name}'{params} is not unitary (residual {resid:.2e})")
            u.setflags(write=False)
            self._cache[key] = u
        return self._cache[key]

    def copy(self) -> "GateTable":
        t = GateTable()
        t._defs = dict(self._defs)
        t._cache = dict(self._cache)
        return t


def _phase(theta) -> complex:
    """e^{i pi theta} with theta a dyadic fraction, int, or float."""
    if isinstance(theta, Fraction):
        theta = theta.numerator / theta.denominator
    return cmath.exp(1j * math.pi * float(theta))


_SQ2 = 1.0 / math.sqrt(2.0)


def _balanced(theta):
    # one-parameter family: theta=0 is the Hadamard
    ph = _phase(theta)
    return np.array([[_SQ2, _SQ2], [_SQ2 * ph, -_SQ2 * ph]], dtype=np.complex128)


def _split(w, p):
    """Weighted splitter: |0> -> sqrt(w)|0> + e^{ip/2} sqrt(1-w)|1>.

    ``w`` is the weight of the |0> branch (a probability, 0..1); ``p`` is a
    plain relative phase in radians, *not* a dyadic fraction of pi, because
    splitter phases come from arguments of arbitrary complex amplitudes.
    """
    w = float(w)
    if w < -1e-12 or w > 1.0 + 1e-12:
        raise GateError(f"Split weight must lie in [0, 1], got {w!r}")
    w = min(1.0, max(0.0, w))
    a = math.sqrt(w)
    b = math.sqrt(1.0 - w)
    ph = cmath.exp(0.5j * float(p))
    return np.array([[a, b / ph], [b * ph, -a]], dtype=np.complex128)


def _rot_l(l):
    if not isinstance(l, int) or l < 0:
        raise GateError(f"R expects a nonnegative integer level, got {l!r}")
    return np.diag([1.0, cmath.exp(2j * math.pi / (1 << l))]).astype(np.complex128)


def _crot_l(l):
    u = np.eye(4, dtype=np.complex128)
    u[2:, 2:] = _rot_l(l)
    return u


def default_gates() -> GateTable:
    t = GateTable()
    t.register(GateDef("I", 0, 1, lambda: np.eye(2)))
    t.register(GateDef("X", 0, 1, lambda: np.array([[0, 1], [1, 0]])))
    t.register(GateDef("Y", 0, 1, lambda: np.array([[0, -1j], [1j, 0]])))
    t.register(GateDef("Z", 0, 1, lambda: np.diag([1, -1])))
    t.register(GateDef("H", 0, 1, lambda: np.full((2, 2), _SQ2) * np.array([[1, 1], [1, -1]])))
    t.register(GateDef("S", 1, 1, _balanced))
    t.register(GateDef("Split", 2, 1, _split))
    t.register(GateDef("R", 1, 1, _rot_l))
    t.register(GateDef("CR", 1, 2, _crot_l))
    t.register(GateDef("CNOT", 0, 2, lambda: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])))
    t.register(GateDef("CZ", 0, 2, lambda: np.diag([1, 1, 1, -1])))
    t.register(GateDef("Swap", 0, 2, lambda: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])))
    return t


_DEFAULT = None


def builtin_gates() -> GateTable:
    """Shared immutable-by-convention default table."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = default_gates()
    return _DEFAULT
