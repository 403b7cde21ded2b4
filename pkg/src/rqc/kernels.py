"""Dense state-vector update kernels.

The one hot loop in the whole package is applying a small unitary to a
few wires of a dense amplitude vector.  Two interchangeable backends:

* "numba": a jitted gather/apply/scatter loop over basis indices.
* "numpy": a vectorized reshape/moveaxis/matmul fallback.

Selection is by the RQC_KERNEL environment variable, read at import:
"auto" (default) takes numba when importable, "numba" demands it,
"numpy" forces the fallback.  Both produce identical results to
floating-point roundoff; benchmarks/bench_kernels.py races them.

Wire numbering here is abstract: wire 0 is the *most significant* bit
of an amplitude's basis index, matching the convention that the first
allocated register cell (and the first operand of a gate) is the most
significant.
"""

from __future__ import annotations

import os

import numpy as np

_MODE = os.environ.get("RQC_KERNEL", "auto").lower()
if _MODE not in ("auto", "numba", "numpy"):
    raise ValueError(f"RQC_KERNEL must be auto, numba, or numpy, not {_MODE!r}")

_numba = None
if _MODE in ("auto", "numba"):
    try:
        import numba as _numba  # type: ignore
    except ImportError:
        if _MODE == "numba":
            raise RuntimeError("RQC_KERNEL=numba, but numba is not installed") from None

BACKEND = "numba" if _numba is not None else "numpy"


def _jit(fn):
    if _numba is None:
        return fn
    return _numba.njit(cache=True)(fn)


@_jit
def _apply_masked(state, u, masks, out):
    """out = (u on the masked wires) applied to state.

    ``masks[i]`` is the basis-index bit of the gate's i-th wire; gate row
    and column numbers take wire 0 as their most significant bit.
    """
    d = u.shape[0]
    k = masks.shape[0]
    covered = 0
    for i in range(k):
        covered |= masks[i]
    amp = np.empty(d, dtype=np.complex128)
    for base in range(state.shape[0]):
        if base & covered:
            continue
        for row in range(d):
            idx = base
            for i in range(k):
                if (row >> (k - 1 - i)) & 1:
                    idx |= masks[i]
            amp[row] = state[idx]
        for row in range(d):
            acc = 0.0 + 0.0j
            for col in range(d):
                acc += u[row, col] * amp[col]
            idx = base
            for i in range(k):
                if (row >> (k - 1 - i)) & 1:
                    idx |= masks[i]
            out[idx] = acc
    return out


def _apply_moveaxis(state, u, wires, n):
    k = len(wires)
    t = np.moveaxis(state.reshape((2,) * n), wires, range(k))
    rest = t.shape[k:]
    t = (u @ t.reshape(1 << k, -1)).reshape((2,) * k + rest)
    return np.ascontiguousarray(np.moveaxis(t, range(k), wires)).reshape(-1)


def apply_unitary(state: np.ndarray, u: np.ndarray, wires, n: int) -> np.ndarray:
    """Apply a (2^k x 2^k) unitary to the given wires of an n-wire state.

    Returns a fresh vector; the input is never mutated.  ``wires`` lists
    the gate's operands in order, wire 0 being the most significant bit
    of the basis index.
    """
    wires = tuple(wires)
    k = len(wires)
    if u.shape != (1 << k, 1 << k):
        raise ValueError(f"unitary shape {u.shape} does not fit {k} wire(s)")
    if len(set(wires)) != k:
        raise ValueError(f"duplicate wires {wires}")
    if any(w < 0 or w >= n for w in wires):
        raise ValueError(f"wires {wires} out of range for {n} wire(s)")
    if state.shape != (1 << n,):
        raise ValueError(f"state shape {state.shape} does not fit {n} wire(s)")
    if BACKEND == "numba":
        masks = np.array([1 << (n - 1 - w) for w in wires], dtype=np.int64)
        out = state.astype(np.complex128, copy=True)
        _apply_masked(state.astype(np.complex128, copy=False), u, masks, out)
        return out
    return _apply_moveaxis(state.astype(np.complex128, copy=False), u, wires, n)


def apply_unitary_with(backend: str, state, u, wires, n: int) -> np.ndarray:
    """Run one specific backend regardless of RQC_KERNEL (for benchmarks)."""
    wires = tuple(wires)
    state = state.astype(np.complex128, copy=False)
    if backend == "numpy":
        return _apply_moveaxis(state, u, wires, n)
    if backend == "numba":
        if _numba is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        masks = np.array([1 << (n - 1 - w) for w in wires], dtype=np.int64)
        out = state.copy()
        _apply_masked(state, u, masks, out)
        return out
    raise ValueError(f"unknown backend {backend!r}")
