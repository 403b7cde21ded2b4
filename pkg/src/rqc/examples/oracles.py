"""Reference constructions the example programs are checked against.

Everything here is direct index arithmetic on numpy arrays; none of it
goes through the parser, the interpreter, or the symbolic state
evaluator.  That independence is the point: when a program's extracted
unitary matches a matrix built in this file, the agreement means
something.

Conventions match the simulator's: a register of k cells indexes a
2^k vector in C-order with the FIRST cell as the most significant bit.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

SQRT2 = np.sqrt(2.0)

H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
X = np.array([[0, 1], [1, 0]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def apply_on(vec: np.ndarray, u: np.ndarray, wires, n: int) -> np.ndarray:
    """Apply ``u`` to the given wires of an n-cell state vector."""
    wires = list(wires)
    m = len(wires)
    t = np.moveaxis(np.asarray(vec, dtype=complex).reshape((2,) * n), wires, range(m))
    t = (np.asarray(u, dtype=complex) @ t.reshape(1 << m, -1)).reshape((2,) * n)
    return np.moveaxis(t, range(m), wires).reshape(-1)


def circuit_matrix(ops, n: int) -> np.ndarray:
    """Full matrix of a gate list applied first-to-last."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[col] = 1.0
        for u, wires in ops:
            v = apply_on(v, u, wires, n)
        out[:, col] = v
    return out


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT over n bits: column j holds (1/sqrt(2^n)) e^{2 pi i jk / 2^n}."""
    dim = 1 << n
    k = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(k, k) / dim) / np.sqrt(dim)


def ghz_vector(k: int) -> np.ndarray:
    v = np.zeros(1 << k, dtype=complex)
    v[0] = v[-1] = 1.0 / SQRT2
    return v


def ghz_matrix(k: int) -> np.ndarray:
    """H on the top cell followed by a CNOT ladder down the register."""
    ops = [(H, [0])] + [(CNOT, [i, i + 1]) for i in range(k - 1)]
    return circuit_matrix(ops, k)


def controlled_matrix(u: np.ndarray, size: int) -> np.ndarray:
    """Apply ``u`` to the last cell when the first size-1 cells are all ones."""
    dim = 1 << size
    out = np.eye(dim, dtype=complex)
    out[dim - 2 :, dim - 2 :] = np.asarray(u, dtype=complex)
    return out


def state_prep_target(a) -> np.ndarray:
    """The normalized amplitude vector sqrt(b_j / S) e^{i theta_j / 2}.

    With b_j = |a_j|^2 and theta_j = 2 arg(a_j) this is just a scaled to
    unit norm, but spelling it out keeps the weight/phase split that the
    preparation circuit works with visible.
    """
    a = np.asarray(a, dtype=complex)
    b = np.abs(a) ** 2
    s = b.sum()
    if s <= 0:
        raise ValueError("the target vector must not be all zero")
    theta = 2.0 * np.angle(a)
    return np.sqrt(b / s) * np.exp(0.5j * theta)


def state_prep_tables(a):
    """Per-node weight ratios and phase offsets for the splitting circuit.

    Heap node m = 2^k + x at level k covers the leaf window
    [x * 2^(n-k), (x+1) * 2^(n-k)).  Entry wt[m] is the weight of the
    left half divided by the node's weight, and ph[m] is the phase of
    the right half's left edge minus the phase of the left half's left
    edge.  Zero-weight nodes get wt 1 and ph 0; nothing downstream of
    them carries amplitude, so any convention works.
    """
    a = np.asarray(a, dtype=complex)
    size = len(a)
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError("the target length must be a power of two")
    b = np.abs(a) ** 2
    theta = 2.0 * np.angle(a)
    wt: dict[int, float] = {}
    ph: dict[int, float] = {}
    for k in range(n):
        width = 1 << (n - k)
        for x in range(1 << k):
            lo = x * width
            whole = b[lo : lo + width].sum()
            left = b[lo : lo + width // 2].sum()
            m = (1 << k) + x
            wt[m] = float(left / whole) if whole > 0 else 1.0
            ph[m] = float(theta[lo + width // 2] - theta[lo])
    return wt, ph


def exact_prep_tables(b, theta):
    """The same node tables from exact leaf arrays (used by the proof).

    ``b`` holds positive integer or Fraction weights, ``theta`` integer
    phases; the returned wt entries are exact Fractions so the checker's
    phase and weight arithmetic has nothing to drift against.
    """
    size = len(b)
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError("the leaf count must be a power of two")
    wt: dict[int, Fraction] = {}
    ph: dict[int, object] = {}
    for k in range(n):
        width = 1 << (n - k)
        for x in range(1 << k):
            lo = x * width
            whole = sum(b[lo : lo + width])
            left = sum(b[lo : lo + width // 2])
            m = (1 << k) + x
            wt[m] = Fraction(left, whole)
            ph[m] = theta[lo + width // 2] - theta[lo]
    return wt, ph


def fetch_permuted(vec: np.ndarray, n: int) -> np.ndarray:
    """The memory-fetch target map on an address+data register.

    The register holds n address cells followed by 2^n one-bit data
    cells, address first and most significant.  Each basis state
    |j>|d[0..N]> maps to |j>|d'> where d' swaps entry 0 with entry j.
    Superposed addresses follow by linearity.
    """
    cells = n + (1 << n)
    dim = 1 << cells
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (dim,):
        raise ValueError(f"expected a vector over {cells} cells")
    out = np.zeros_like(vec)
    data_bits = 1 << n
    for idx in range(dim):
        if vec[idx] == 0:
            continue
        j = idx >> data_bits
        data = idx & ((1 << data_bits) - 1)
        # data bit for cell t sits at position data_bits - 1 - t
        p0 = data_bits - 1
        pj = data_bits - 1 - j
        b0 = (data >> p0) & 1
        bj = (data >> pj) & 1
        permuted = data & ~(1 << p0) & ~(1 << pj)
        permuted |= bj << p0
        permuted |= b0 << pj
        out[(j << data_bits) | permuted] = vec[idx]
    return out
