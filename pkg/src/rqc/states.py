"""Symbolic quantum states for assertions and proof scripts.

A state expression denotes, for each classical state sigma, one concrete
(not necessarily normalized) vector over named cells.  The grammar is
deliberately small: basis kets over index windows, single parameterized
cells, tensor products (including products over an index range), linear
combinations, and a few named state families that would be unreadable
spelled out.  Coefficients are symbolic too, so one expression can say
"amplitude e^{i pi (g + j[a:c]) / 2^(c-a)}" and mean it exactly: phase
exponents built from exact dyadic fractions stay exact until the final
complex exponential.

Everything here is evaluated per sigma; nothing is checked symbolically.
Equality of two state expressions at a tolerance, under one sigma, is
plain elementwise vector comparison after padding onto a shared register.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .classical import (
    ArrayVal,
    ClassicalState,
    EvalError,
    Expr,
    eval_expr,
    expr_to_str,
    free_vars,
    holds,
    subst,
)
from .qstate import QuantumState, Registry, align


class StateError(Exception):
    pass


### coefficient expressions


@dataclass(frozen=True)
class CNum:
    value: complex


@dataclass(frozen=True)
class COf:
    """Numeric value of a classical expression."""

    expr: Expr


@dataclass(frozen=True)
class CSqrt:
    inner: "Coeff"


@dataclass(frozen=True)
class CExpPi:
    """e^{i pi t} for a classical expression t, kept exact for Fractions."""

    expr: Expr


@dataclass(frozen=True)
class CExpI:
    """e^{i t} for a real-valued coefficient t."""

    inner: "Coeff"


@dataclass(frozen=True)
class CIv:
    """1 when the formula holds, else 0."""

    formula: Expr


@dataclass(frozen=True)
class CAdd:
    a: "Coeff"
    b: "Coeff"


@dataclass(frozen=True)
class CMul:
    a: "Coeff"
    b: "Coeff"


@dataclass(frozen=True)
class CDiv:
    a: "Coeff"
    b: "Coeff"


@dataclass(frozen=True)
class CNeg:
    a: "Coeff"


Coeff = CNum | COf | CSqrt | CExpPi | CExpI | CIv | CAdd | CMul | CDiv | CNeg


def _as_number(v, what: str) -> complex:
    if isinstance(v, bool):
        raise StateError(f"{what} evaluated to a boolean")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, Fraction):
        return complex(v.numerator / v.denominator)
    if isinstance(v, complex):
        return v
    raise StateError(f"{what} evaluated to {v!r}, not a number")


def eval_coeff(c: Coeff, sigma: ClassicalState) -> complex:
    match c:
        case CNum(value):
            return complex(value)
        case COf(expr):
            return _as_number(eval_expr(expr, sigma), "coefficient")
        case CSqrt(inner):
            v = eval_coeff(inner, sigma)
            if abs(v.imag) > 1e-12 or v.real < -1e-12:
                raise StateError(f"sqrt of non-nonnegative value {v}")
            return complex(cmath.sqrt(max(v.real, 0.0)))
        case CExpPi(expr):
            t = eval_expr(expr, sigma)
            if isinstance(t, bool) or not isinstance(t, (int, Fraction, float)):
                raise StateError(f"phase exponent evaluated to {t!r}")
            if isinstance(t, (int, Fraction)):
                t = Fraction(t) % 2  # exact reduction keeps the angle small
                quarter = {0: 1.0, Fraction(1, 2): 1j, 1: -1.0, Fraction(3, 2): -1j}
                if t in quarter:
                    return complex(quarter[t])
                return cmath.exp(1j * cmath.pi * (t.numerator / t.denominator))
            return cmath.exp(1j * cmath.pi * t)
        case CExpI(inner):
            v = eval_coeff(inner, sigma)
            if abs(v.imag) > 1e-12:
                raise StateError(f"exp(i t) needs real t, got {v}")
            return cmath.exp(1j * v.real)
        case CIv(formula):
            return 1.0 + 0j if holds(formula, sigma) else 0.0 + 0j
        case CAdd(a, b):
            return eval_coeff(a, sigma) + eval_coeff(b, sigma)
        case CMul(a, b):
            return eval_coeff(a, sigma) * eval_coeff(b, sigma)
        case CDiv(a, b):
            d = eval_coeff(b, sigma)
            if d == 0:
                raise StateError("coefficient division by zero")
            return eval_coeff(a, sigma) / d
        case CNeg(a):
            return -eval_coeff(a, sigma)
    raise StateError(f"unknown coefficient node {c!r}")


def coeff_free_vars(c: Coeff) -> frozenset:
    match c:
        case CNum(_):
            return frozenset()
        case COf(e) | CExpPi(e) | CIv(e):
            return free_vars(e)
        case CSqrt(a) | CExpI(a) | CNeg(a):
            return coeff_free_vars(a)
        case CAdd(a, b) | CMul(a, b) | CDiv(a, b):
            return coeff_free_vars(a) | coeff_free_vars(b)
    raise StateError(f"unknown coefficient node {c!r}")


def subst_coeff(c: Coeff, mapping) -> Coeff:
    match c:
        case CNum(_):
            return c
        case COf(e):
            return COf(subst(e, mapping))
        case CExpPi(e):
            return CExpPi(subst(e, mapping))
        case CIv(e):
            return CIv(subst(e, mapping))
        case CSqrt(a):
            return CSqrt(subst_coeff(a, mapping))
        case CExpI(a):
            return CExpI(subst_coeff(a, mapping))
        case CNeg(a):
            return CNeg(subst_coeff(a, mapping))
        case CAdd(a, b):
            return CAdd(subst_coeff(a, mapping), subst_coeff(b, mapping))
        case CMul(a, b):
            return CMul(subst_coeff(a, mapping), subst_coeff(b, mapping))
        case CDiv(a, b):
            return CDiv(subst_coeff(a, mapping), subst_coeff(b, mapping))
    raise StateError(f"unknown coefficient node {c!r}")


### state expressions


@dataclass(frozen=True)
class Zeros:
    """|0...0> over name[lo..hi]; an empty window is the scalar 1."""

    name: str
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class BitsKet:
    """Basis ket over name[lo..hi], cell l in |bits[l]>."""

    name: str
    lo: Expr
    hi: Expr
    bits: Expr  # array-valued


@dataclass(frozen=True)
class CellState:
    """One cell in c0 |0> + c1 |1>."""

    name: str
    idx: Expr
    c0: Coeff
    c1: Coeff


@dataclass(frozen=True)
class Scalar:
    coeff: Coeff


@dataclass(frozen=True)
class TensorS:
    parts: tuple


@dataclass(frozen=True)
class ProdS:
    """Tensor product of body over var = lo..hi (empty range: scalar 1)."""

    var: str
    lo: Expr
    hi: Expr
    body: "StateExpr"


@dataclass(frozen=True)
class SumS:
    terms: tuple  # ((coeff, state), ...)


@dataclass(frozen=True)
class BuiltinS:
    """A named state family; see _BUILTINS for what each one denotes."""

    name: str
    array: str
    args: tuple  # of Expr


StateExpr = Zeros | BitsKet | CellState | Scalar | TensorS | ProdS | SumS | BuiltinS


def _index_int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
        raise StateError(f"{what} evaluated to {v!r}, not an integer")
    if isinstance(v, Fraction):
        if v.denominator != 1:
            raise StateError(f"{what} evaluated to {v!r}, not an integer")
        return int(v)
    return v


def _bit(v, what: str) -> int:
    b = _index_int(v, what)
    if b not in (0, 1):
        raise StateError(f"{what} is {b}, not a bit")
    return b


def _tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    reg = Registry(a.registry.cells + b.registry.cells)
    return QuantumState(reg, np.kron(a.vector, b.vector))


def eval_state(s: StateExpr, sigma: ClassicalState) -> QuantumState:
    match s:
        case Zeros(name, lo, hi):
            l = _index_int(eval_expr(lo, sigma), "window start")
            h = _index_int(eval_expr(hi, sigma), "window end")
            if l > h:
                return QuantumState.scalar()
            return QuantumState.zero(Registry((name, (k,)) for k in range(l, h + 1)))
        case BitsKet(name, lo, hi, bits):
            l = _index_int(eval_expr(lo, sigma), "window start")
            h = _index_int(eval_expr(hi, sigma), "window end")
            if l > h:
                return QuantumState.scalar()
            arr = eval_expr(bits, sigma)
            if not isinstance(arr, ArrayVal):
                raise StateError(f"bit source evaluated to {arr!r}, not an array")
            reg = Registry((name, (k,)) for k in range(l, h + 1))
            return QuantumState.basis(
                reg,
                {(name, (k,)): _bit(arr.get(k), f"bit [{k}]") for k in range(l, h + 1)},
            )
        case CellState(name, idx, c0, c1):
            i = _index_int(eval_expr(idx, sigma), "cell index")
            v = np.array(
                [eval_coeff(c0, sigma), eval_coeff(c1, sigma)], dtype=np.complex128
            )
            return QuantumState(Registry([(name, (i,))]), v)
        case Scalar(coeff):
            return QuantumState.scalar(eval_coeff(coeff, sigma))
        case TensorS(parts):
            out = QuantumState.scalar()
            for p in parts:
                out = _tensor(out, eval_state(p, sigma))
            return out
        case ProdS(var, lo, hi, body):
            l = _index_int(eval_expr(lo, sigma), "product start")
            h = _index_int(eval_expr(hi, sigma), "product end")
            out = QuantumState.scalar()
            for k in range(l, h + 1):
                out = _tensor(out, eval_state(body, sigma.bind(var, k)))
            return out
        case SumS(terms):
            acc = None
            for coeff, part in terms:
                a = eval_coeff(coeff, sigma)
                st = eval_state(part, sigma)
                if acc is None:
                    acc = QuantumState(st.registry, a * st.vector)
                else:
                    acc, st = align(acc, st)
                    acc = QuantumState(acc.registry, acc.vector + a * st.vector)
            if acc is None:
                raise StateError("empty linear combination")
            return acc
        case BuiltinS(name, array, args):
            fn = _BUILTINS.get(name)
            if fn is None:
                raise StateError(f"unknown state family '{name}'")
            return fn(array, [eval_expr(a, sigma) for a in args])
    raise StateError(f"unknown state node {s!r}")


### named state families


def _ghz(array: str, args) -> QuantumState:
    if len(args) != 2:
        raise StateError("ghz takes (array, lo, hi)")
    l = _index_int(args[0], "window start")
    h = _index_int(args[1], "window end")
    if l > h:
        raise StateError("ghz needs a nonempty window")
    reg = Registry((array, (k,)) for k in range(l, h + 1))
    v = np.zeros(1 << len(reg), dtype=np.complex128)
    v[0] = v[-1] = 1 / np.sqrt(2.0)
    return QuantumState(reg, v)


def _fourier(array: str, args) -> QuantumState:
    """Fourier image of the basis word bits[lo..hi]: cell lo+t carries
    (|0> + e^{2 pi i w / 2^{t+1}} |1>)/sqrt(2) with w the word's value.
    Only the word's low t+1 bits matter for cell lo+t, which is why no
    final reversal is needed."""
    if len(args) != 3:
        raise StateError("fourier takes (array, lo, hi, bits)")
    l = _index_int(args[0], "window start")
    h = _index_int(args[1], "window end")
    arr = args[2]
    if not isinstance(arr, ArrayVal):
        raise StateError("fourier bit source must be an array")
    if l > h:
        return QuantumState.scalar()
    out = QuantumState.scalar()
    for t in range(h - l + 1):
        word = 0
        for k in range(h - t, h + 1):
            word = (word << 1) | _bit(arr.get(k), f"bit [{k}]")
        phase = cmath.exp(2j * cmath.pi * word / (1 << (t + 1)))
        cell = QuantumState(
            Registry([(array, (l + t,))]),
            np.array([1.0, phase], dtype=np.complex128) / np.sqrt(2.0),
        )
        out = _tensor(out, cell)
    return out


def _splitwin(array: str, args) -> QuantumState:
    """Weighted window over cells array[k+1..n]: the 2^(n-k) cell-words
    j-u for j in [u, u+2^(n-k)) carry amplitude
    sqrt(b[j]/S) e^{i (th[j] - th[u]) / 2}, phases anchored at the
    window's left edge, S the window's total weight."""
    if len(args) != 5:
        raise StateError("splitwin takes (array, n, k, x, b, th)")
    n = _index_int(args[0], "depth")
    k = _index_int(args[1], "level")
    x = _index_int(args[2], "node")
    b, th = args[3], args[4]
    if not isinstance(b, ArrayVal) or not isinstance(th, ArrayVal):
        raise StateError("splitwin weight and phase sources must be arrays")
    if not 0 <= k <= n:
        raise StateError(f"splitwin level {k} outside 0..{n}")
    u = (1 << (n - k)) * x
    width = 1 << (n - k)
    if k == n:
        return QuantumState.scalar()
    weights = [float(b.get(j)) for j in range(u, u + width)]
    total = sum(weights)
    if total <= 0:
        raise StateError(f"splitwin window [{u}, {u + width}) has no weight")
    ref = float(th.get(u))
    v = np.zeros(width, dtype=np.complex128)
    for off, w in enumerate(weights):
        v[off] = np.sqrt(w / total) * cmath.exp(0.5j * (float(th.get(u + off)) - ref))
    reg = Registry((array, (c,)) for c in range(k + 1, n + 1))
    return QuantumState(reg, v)


_BUILTINS = {
    "ghz": _ghz,
    "fourier": _fourier,
    "splitwin": _splitwin,
}


### structural helpers


def state_free_vars(s: StateExpr) -> frozenset:
    match s:
        case Zeros(_, lo, hi):
            return free_vars(lo) | free_vars(hi)
        case BitsKet(_, lo, hi, bits):
            return free_vars(lo) | free_vars(hi) | free_vars(bits)
        case CellState(_, idx, c0, c1):
            return free_vars(idx) | coeff_free_vars(c0) | coeff_free_vars(c1)
        case Scalar(coeff):
            return coeff_free_vars(coeff)
        case TensorS(parts):
            out = frozenset()
            for p in parts:
                out |= state_free_vars(p)
            return out
        case ProdS(var, lo, hi, body):
            return free_vars(lo) | free_vars(hi) | (state_free_vars(body) - {var})
        case SumS(terms):
            out = frozenset()
            for coeff, part in terms:
                out |= coeff_free_vars(coeff) | state_free_vars(part)
            return out
        case BuiltinS(_, _, args):
            out = frozenset()
            for a in args:
                out |= free_vars(a)
            return out
    raise StateError(f"unknown state node {s!r}")


def subst_state(s: StateExpr, mapping) -> StateExpr:
    """Simultaneous substitution of classical variables in a state."""
    if not mapping:
        return s
    match s:
        case Zeros(name, lo, hi):
            return Zeros(name, subst(lo, mapping), subst(hi, mapping))
        case BitsKet(name, lo, hi, bits):
            return BitsKet(
                name, subst(lo, mapping), subst(hi, mapping), subst(bits, mapping)
            )
        case CellState(name, idx, c0, c1):
            return CellState(
                name, subst(idx, mapping), subst_coeff(c0, mapping), subst_coeff(c1, mapping)
            )
        case Scalar(coeff):
            return Scalar(subst_coeff(coeff, mapping))
        case TensorS(parts):
            return TensorS(tuple(subst_state(p, mapping) for p in parts))
        case ProdS(var, lo, hi, body):
            inner = {k: v for k, v in mapping.items() if k != var}
            clash = set()
            for v in inner.values():
                clash |= free_vars(v)
            if var in clash:
                fresh = var
                k = 0
                while fresh in clash or fresh in mapping:
                    fresh = f"_{var}{k}"
                    k += 1
                from .classical import Var

                body = subst_state(body, {var: Var(fresh)})
                var = fresh
            return ProdS(var, subst(lo, mapping), subst(hi, mapping),
                         subst_state(body, inner))
        case SumS(terms):
            return SumS(
                tuple(
                    (subst_coeff(c, mapping), subst_state(p, mapping))
                    for c, p in terms
                )
            )
        case BuiltinS(name, array, args):
            return BuiltinS(name, array, tuple(subst(a, mapping) for a in args))
    raise StateError(f"unknown state node {s!r}")


def states_equal_at(
    a: StateExpr, b: StateExpr, sigma: ClassicalState, tol: float = 1e-9
) -> bool:
    return eval_state(a, sigma).equal_to(eval_state(b, sigma), tol)


### rendering (matches the grammar in parser.state_grammar)


def coeff_to_str(c: Coeff) -> str:
    match c:
        case CNum(v):
            if v.imag == 0 and v.real == int(v.real):
                return str(int(v.real))
            return f"num({v.real!r}, {v.imag!r})"
        case COf(e):
            return f"c({expr_to_str(e)})"
        case CSqrt(a):
            return f"sqrt({coeff_to_str(a)})"
        case CExpPi(e):
            return f"exppi({expr_to_str(e)})"
        case CExpI(a):
            return f"expi({coeff_to_str(a)})"
        case CIv(e):
            return f"iv({expr_to_str(e)})"
        case CAdd(a, b):
            return f"({coeff_to_str(a)} + {coeff_to_str(b)})"
        case CMul(a, b):
            return f"({coeff_to_str(a)} * {coeff_to_str(b)})"
        case CDiv(a, b):
            return f"({coeff_to_str(a)} / {coeff_to_str(b)})"
        case CNeg(a):
            return f"(- {coeff_to_str(a)})"
    raise StateError(f"unknown coefficient node {c!r}")


def state_to_str(s: StateExpr) -> str:
    match s:
        case Zeros(name, lo, hi):
            return f"zeros({name}, {expr_to_str(lo)}, {expr_to_str(hi)})"
        case BitsKet(name, lo, hi, bits):
            return (
                f"bits({name}, {expr_to_str(lo)}, {expr_to_str(hi)}, "
                f"{expr_to_str(bits)})"
            )
        case CellState(name, idx, c0, c1):
            return (
                f"cell({name}, {expr_to_str(idx)}, {coeff_to_str(c0)}, "
                f"{coeff_to_str(c1)})"
            )
        case Scalar(coeff):
            return f"scalar({coeff_to_str(coeff)})"
        case TensorS(parts):
            return "tensor(" + ", ".join(state_to_str(p) for p in parts) + ")"
        case ProdS(var, lo, hi, body):
            return (
                f"prod({var}, {expr_to_str(lo)}, {expr_to_str(hi)}, "
                f"{state_to_str(body)})"
            )
        case SumS(terms):
            inner = ", ".join(f"{coeff_to_str(c)} : {state_to_str(p)}" for c, p in terms)
            return f"sum({inner})"
        case BuiltinS(name, array, args):
            parts = [array] + [expr_to_str(a) for a in args]
            return f"{name}(" + ", ".join(parts) + ")"
    raise StateError(f"unknown state node {s!r}")
