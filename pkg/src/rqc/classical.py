"""Classical expressions, states, and finite-domain assertion checking.

The classical fragment is deliberately small: integers, booleans, exact
rationals (angles are dyadic, so ``1/2^k`` stays exact), and integer-indexed
arrays whose cells hold classical values.  Arrays are read-only at the
program level (only simple variables appear on the left of ``:=``); array
*terms* gain a functional-update form ``store(d, i, t)`` so proof rules can
substitute an array variable by a modified copy of itself.

Assertions are first-order formulas over these expressions.  Quantifiers
always carry explicit integer bounds, inclusive on both ends; this keeps
``holds`` and ``entails`` decidable by plain enumeration over a declared
finite domain.  There is no SMT anywhere: an entailment check is a sweep
over every state of a :class:`VerificationDomain`, and a failed check hands
back the first counterexample state.

Equality between floats inside assertions uses a 1e-9 tolerance; everything
else compares exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union


class EvalError(Exception):
    """Raised when an expression or formula cannot be evaluated."""


### values


class ArrayVal:
    """Immutable array of classical values keyed by arbitrary integers.

    The index window is whatever keys are present; nothing forces 0-based
    or contiguous indices (programs index the same array as q[m:n] for
    varying m, so a fixed origin would be wrong).
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Mapping[int, "Value"] | None = None):
        self._items = dict(items) if items else {}
        self._hash = None

    @staticmethod
    def from_list(values, start: int = 0) -> "ArrayVal":
        return ArrayVal({start + i: v for i, v in enumerate(values)})

    @staticmethod
    def bits_of(value: int, lo: int, hi: int) -> "ArrayVal":
        """Binary expansion with window value ``sum bit[l] * 2^(hi-l)``."""
        if value < 0 or (hi >= lo and value >= 1 << (hi - lo + 1)):
            raise EvalError(f"{value} does not fit in bit window [{lo}:{hi}]")
        return ArrayVal({l: (value >> (hi - l)) & 1 for l in range(lo, hi + 1)})

    def get(self, index: int) -> "Value":
        try:
            return self._items[index]
        except KeyError:
            raise EvalError(f"array index {index} is out of range") from None

    def set(self, index: int, value: "Value") -> "ArrayVal":
        items = dict(self._items)
        items[index] = value
        return ArrayVal(items)

    def indices(self):
        return sorted(self._items)

    def items(self):
        return self._items.items()

    def __eq__(self, other):
        return isinstance(other, ArrayVal) and self._items == other._items

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}: {v}" for k, v in sorted(self._items.items()))
        return "{" + inner + "}"


Value = Union[int, bool, Fraction, float, ArrayVal]


### expression and formula AST


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / div mod ^
    a: "Expr"
    b: "Expr"


@dataclass(frozen=True)
class Neg:
    a: "Expr"


@dataclass(frozen=True)
class Floor:
    a: "Expr"


@dataclass(frozen=True)
class Sel:
    """Array cell read: base[idx].  The base is usually a Var, but may be
    a Store chain inside assertions."""

    base: "Expr"
    idx: "Expr"


@dataclass(frozen=True)
class Window:
    """Integer value of a run of bits: base[lo:hi] = sum base[l]*2^(hi-l).

    An empty window (lo > hi after evaluation) is 0.
    """

    base: "Expr"
    lo: "Expr"
    hi: "Expr"


@dataclass(frozen=True)
class Store:
    """Array term equal to ``base`` everywhere except index ``idx``, where
    it holds ``value``."""

    base: "Expr"
    idx: "Expr"
    value: "Expr"


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    a: "Expr"
    b: "Expr"


@dataclass(frozen=True)
class Not:
    a: "Expr"


@dataclass(frozen=True)
class And:
    a: "Expr"
    b: "Expr"


@dataclass(frozen=True)
class Or:
    a: "Expr"
    b: "Expr"


@dataclass(frozen=True)
class Implies:
    a: "Expr"
    b: "Expr"


@dataclass(frozen=True)
class Forall:
    var: str
    lo: "Expr"
    hi: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class Exists:
    var: str
    lo: "Expr"
    hi: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class Distinct:
    """Pairwise distinctness of quantum cells, as a classical formula.

    Each ref is (array name, tuple of index expressions); a simple quantum
    variable has an empty index tuple.  With 0 or 1 refs it is true.
    """

    refs: tuple  # tuple[tuple[str, tuple[Expr, ...]], ...]


Expr = Union[
    Var, Const, BinOp, Neg, Floor, Sel, Window, Store,
    Cmp, Not, And, Or, Implies, Forall, Exists, Distinct,
]

Assertion = Expr

TRUE = Const(True)
FALSE = Const(False)

FLOAT_TOL = 1e-9


def conj(*parts: Expr) -> Expr:
    """Right-nested conjunction of the given formulas, dropping `true`s."""
    live = [p for p in parts if p != TRUE]
    if not live:
        return TRUE
    out = live[-1]
    for p in reversed(live[:-1]):
        out = And(p, out)
    return out


### evaluation


def _arith(op: str, x, y):
    if isinstance(x, bool) or isinstance(y, bool):
        raise EvalError(f"arithmetic '{op}' on boolean operand")
    if isinstance(x, ArrayVal) or isinstance(y, ArrayVal):
        raise EvalError(f"arithmetic '{op}' on array operand")
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        if y == 0:
            raise EvalError("division by zero")
        if isinstance(x, float) or isinstance(y, float):
            return x / y
        q = Fraction(x) / Fraction(y)
        return int(q) if q.denominator == 1 else q
    if op == "div":
        if y == 0:
            raise EvalError("division by zero")
        return math.floor(Fraction(x) / Fraction(y))
    if op == "mod":
        if y == 0:
            raise EvalError("division by zero")
        return x - y * math.floor(Fraction(x) / Fraction(y))
    if op == "^":
        if not isinstance(y, int):
            raise EvalError("exponent must be an integer")
        if isinstance(x, float):
            return x ** y
        q = Fraction(x) ** y
        return int(q) if q.denominator == 1 else q
    raise EvalError(f"unknown operator '{op}'")


def _compare(op: str, x, y) -> bool:
    if isinstance(x, ArrayVal) or isinstance(y, ArrayVal):
        if op not in ("=", "!="):
            raise EvalError(f"cannot order arrays with '{op}'")
        eq = x == y
        return eq if op == "=" else not eq
    if isinstance(x, bool) != isinstance(y, bool):
        raise EvalError(f"comparison '{op}' mixes boolean and number")
    if op in ("=", "!="):
        if isinstance(x, float) or isinstance(y, float):
            eq = abs(x - y) <= FLOAT_TOL
        else:
            eq = x == y
        return eq if op == "=" else not eq
    if isinstance(x, bool):
        raise EvalError(f"cannot order booleans with '{op}'")
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    if op == ">=":
        return x >= y
    raise EvalError(f"unknown comparison '{op}'")


def eval_expr(t: Expr, sigma: "ClassicalState") -> Value:
    """Evaluate expression or formula ``t`` under ``sigma``.

    Every referenced variable must be bound; a missing binding raises
    EvalError rather than defaulting.
    """
    match t:
        case Var(name):
            return sigma[name]
        case Const(value):
            return value
        case BinOp(op, a, b):
            return _arith(op, eval_expr(a, sigma), eval_expr(b, sigma))
        case Neg(a):
            v = eval_expr(a, sigma)
            if isinstance(v, (bool, ArrayVal)):
                raise EvalError("negation of non-number")
            return -v
        case Floor(a):
            v = eval_expr(a, sigma)
            if isinstance(v, (bool, ArrayVal)):
                raise EvalError("floor of non-number")
            return math.floor(v)
        case Sel(base, idx):
            arr = eval_expr(base, sigma)
            if not isinstance(arr, ArrayVal):
                raise EvalError("indexing a non-array value")
            i = eval_expr(idx, sigma)
            if not isinstance(i, int) or isinstance(i, bool):
                raise EvalError("array index must be an integer")
            return arr.get(i)
        case Window(base, lo, hi):
            arr = eval_expr(base, sigma)
            if not isinstance(arr, ArrayVal):
                raise EvalError("bit window over a non-array value")
            l, h = eval_expr(lo, sigma), eval_expr(hi, sigma)
            if not isinstance(l, int) or not isinstance(h, int):
                raise EvalError("bit window bounds must be integers")
            total = 0
            for k in range(l, h + 1):
                bit = arr.get(k)
                if bit not in (0, 1):
                    raise EvalError(f"bit window cell [{k}] holds non-bit {bit!r}")
                total = 2 * total + bit
            return total
        case Store(base, idx, value):
            arr = eval_expr(base, sigma)
            if not isinstance(arr, ArrayVal):
                raise EvalError("store into a non-array value")
            i = eval_expr(idx, sigma)
            if not isinstance(i, int) or isinstance(i, bool):
                raise EvalError("store index must be an integer")
            return arr.set(i, eval_expr(value, sigma))
        case Cmp(op, a, b):
            return _compare(op, eval_expr(a, sigma), eval_expr(b, sigma))
        case Not(a):
            return not _as_bool(eval_expr(a, sigma))
        case And(a, b):
            return _as_bool(eval_expr(a, sigma)) and _as_bool(eval_expr(b, sigma))
        case Or(a, b):
            return _as_bool(eval_expr(a, sigma)) or _as_bool(eval_expr(b, sigma))
        case Implies(a, b):
            return (not _as_bool(eval_expr(a, sigma))) or _as_bool(eval_expr(b, sigma))
        case Forall(var, lo, hi, body):
            l, h = _bound(lo, sigma), _bound(hi, sigma)
            return all(
                _as_bool(eval_expr(body, sigma.bind(var, v))) for v in range(l, h + 1)
            )
        case Exists(var, lo, hi, body):
            l, h = _bound(lo, sigma), _bound(hi, sigma)
            return any(
                _as_bool(eval_expr(body, sigma.bind(var, v))) for v in range(l, h + 1)
            )
        case Distinct(refs):
            seen = set()
            for name, idx_exprs in refs:
                cell = (name, tuple(eval_expr(e, sigma) for e in idx_exprs))
                if cell in seen:
                    return False
                seen.add(cell)
            return True
    raise EvalError(f"unknown expression node {t!r}")


def _as_bool(v) -> bool:
    if not isinstance(v, bool):
        raise EvalError(f"expected a boolean, got {v!r}")
    return v


def _bound(e: Expr, sigma) -> int:
    v = eval_expr(e, sigma)
    if not isinstance(v, int) or isinstance(v, bool):
        raise EvalError("quantifier bound must be an integer")
    return v


def holds(a: Assertion, sigma: "ClassicalState") -> bool:
    return _as_bool(eval_expr(a, sigma))


### classical states


class ClassicalState(Mapping):
    """Immutable variable-to-value map.  Array variables bind whole
    :class:`ArrayVal` values under the array name."""

    __slots__ = ("_b",)

    def __init__(self, bindings: Mapping[str, Value] | None = None):
        object.__setattr__(self, "_b", dict(bindings) if bindings else {})

    def __getitem__(self, name: str) -> Value:
        try:
            return self._b[name]
        except KeyError:
            raise EvalError(f"unbound variable '{name}'") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._b)

    def __len__(self) -> int:
        return len(self._b)

    def __contains__(self, name) -> bool:
        return name in self._b

    def bind(self, name: str, value: Value) -> "ClassicalState":
        b = dict(self._b)
        b[name] = value
        return ClassicalState(b)

    def bind_many(self, pairs) -> "ClassicalState":
        b = dict(self._b)
        for name, value in pairs:
            b[name] = value
        return ClassicalState(b)

    def assign(self, names, terms) -> "ClassicalState":
        """Simultaneous assignment: all terms evaluated in self first."""
        values = [eval_expr(t, self) for t in terms]
        return self.bind_many(zip(names, values))

    def __eq__(self, other):
        return isinstance(other, ClassicalState) and self._b == other._b

    def __hash__(self):
        return hash(frozenset(self._b.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self._b.items()))
        return "{" + inner + "}"


EMPTY_STATE = ClassicalState()


### free variables and substitution


def free_vars(t: Expr) -> frozenset:
    """Free variable names of an expression or formula (array names count)."""
    match t:
        case Var(name):
            return frozenset((name,))
        case Const(_):
            return frozenset()
        case BinOp(_, a, b) | Cmp(_, a, b) | And(a, b) | Or(a, b) | Implies(a, b):
            return free_vars(a) | free_vars(b)
        case Neg(a) | Floor(a) | Not(a):
            return free_vars(a)
        case Sel(base, idx):
            return free_vars(base) | free_vars(idx)
        case Window(base, lo, hi):
            return free_vars(base) | free_vars(lo) | free_vars(hi)
        case Store(base, idx, value):
            return free_vars(base) | free_vars(idx) | free_vars(value)
        case Forall(var, lo, hi, body) | Exists(var, lo, hi, body):
            return free_vars(lo) | free_vars(hi) | (free_vars(body) - {var})
        case Distinct(refs):
            out = frozenset()
            for _, idx_exprs in refs:
                for e in idx_exprs:
                    out |= free_vars(e)
            return out
    raise EvalError(f"unknown expression node {t!r}")


def _fresh(base: str, taken) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


def subst(t: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous capture-avoiding substitution of variables by terms.

    Array variables may be replaced by array-valued terms (Var or Store
    chains); a bare Var occurrence is replaced whole, and Sel/Window bases
    rewrite through it.
    """
    if not mapping:
        return t
    match t:
        case Var(name):
            return mapping.get(name, t)
        case Const(_):
            return t
        case BinOp(op, a, b):
            return BinOp(op, subst(a, mapping), subst(b, mapping))
        case Neg(a):
            return Neg(subst(a, mapping))
        case Floor(a):
            return Floor(subst(a, mapping))
        case Sel(base, idx):
            return Sel(subst(base, mapping), subst(idx, mapping))
        case Window(base, lo, hi):
            return Window(subst(base, mapping), subst(lo, mapping), subst(hi, mapping))
        case Store(base, idx, value):
            return Store(subst(base, mapping), subst(idx, mapping), subst(value, mapping))
        case Cmp(op, a, b):
            return Cmp(op, subst(a, mapping), subst(b, mapping))
        case Not(a):
            return Not(subst(a, mapping))
        case And(a, b):
            return And(subst(a, mapping), subst(b, mapping))
        case Or(a, b):
            return Or(subst(a, mapping), subst(b, mapping))
        case Implies(a, b):
            return Implies(subst(a, mapping), subst(b, mapping))
        case Forall(var, lo, hi, body) | Exists(var, lo, hi, body):
            cls = Forall if isinstance(t, Forall) else Exists
            lo2, hi2 = subst(lo, mapping), subst(hi, mapping)
            inner = {k: v for k, v in mapping.items() if k != var}
            clash = any(var in free_vars(v) for v in inner.values())
            if clash:
                taken = set(inner) | {var}
                for v in inner.values():
                    taken |= free_vars(v)
                taken |= free_vars(body)
                nv = _fresh(var, taken)
                body = subst(body, {var: Var(nv)})
                var = nv
            return cls(var, lo2, hi2, subst(body, inner))
        case Distinct(refs):
            new_refs = tuple(
                (name, tuple(subst(e, mapping) for e in idx_exprs))
                for name, idx_exprs in refs
            )
            return Distinct(new_refs)
    raise EvalError(f"unknown expression node {t!r}")


### expression printing (matches the parser grammar)

_PREC = {
    "or": 1, "and": 2, "not": 3, "cmp": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "div": 6, "mod": 6,
    "neg": 7, "^": 8,
}


def expr_to_str(t: Expr, parent_prec: int = 0) -> str:
    def wrap(s: str, prec: int) -> str:
        return f"({s})" if prec < parent_prec else s

    match t:
        case Var(name):
            return name
        case Const(value):
            if value is True:
                return "true"
            if value is False:
                return "false"
            if isinstance(value, Fraction):
                return wrap(f"{value.numerator}/{value.denominator}", _PREC["/"])
            if isinstance(value, int) and value < 0:
                return wrap(str(value), _PREC["neg"])
            return str(value)
        case BinOp(op, a, b):
            p = _PREC[op]
            # left-assoc for + - * etc.; ^ right-assoc
            if op == "^":
                s = f"{expr_to_str(a, p + 1)} ^ {expr_to_str(b, p)}"
            else:
                s = f"{expr_to_str(a, p)} {op} {expr_to_str(b, p + 1)}"
            return wrap(s, p)
        case Neg(a):
            return wrap(f"-{expr_to_str(a, _PREC['neg'] + 1)}", _PREC["neg"])
        case Floor(a):
            return f"floor({expr_to_str(a)})"
        case Sel(base, idx):
            return f"{_base_str(base)}[{expr_to_str(idx)}]"
        case Window(base, lo, hi):
            return f"{_base_str(base)}[{expr_to_str(lo)}:{expr_to_str(hi)}]"
        case Store(base, idx, value):
            return f"store({expr_to_str(base)}, {expr_to_str(idx)}, {expr_to_str(value)})"
        case Cmp(op, a, b):
            p = _PREC["cmp"]
            return wrap(f"{expr_to_str(a, p + 1)} {op} {expr_to_str(b, p + 1)}", p)
        case Not(a):
            p = _PREC["not"]
            return wrap(f"not {expr_to_str(a, p)}", p)
        case And(a, b):
            p = _PREC["and"]
            return wrap(f"{expr_to_str(a, p)} and {expr_to_str(b, p + 1)}", p)
        case Or(a, b):
            p = _PREC["or"]
            return wrap(f"{expr_to_str(a, p)} or {expr_to_str(b, p + 1)}", p)
        case Implies(a, b):
            return wrap(f"{expr_to_str(a, 1)} -> {expr_to_str(b, 0)}", 0)
        case Forall(var, lo, hi, body):
            return wrap(
                f"forall {var} in [{expr_to_str(lo)}:{expr_to_str(hi)}] . {expr_to_str(body)}", 0
            )
        case Exists(var, lo, hi, body):
            return wrap(
                f"exists {var} in [{expr_to_str(lo)}:{expr_to_str(hi)}] . {expr_to_str(body)}", 0
            )
        case Distinct(refs):
            parts = []
            for name, idx_exprs in refs:
                if idx_exprs:
                    parts.append(f"{name}[{', '.join(expr_to_str(e) for e in idx_exprs)}]")
                else:
                    parts.append(name)
            return f"dist({', '.join(parts)})"
    raise EvalError(f"unknown expression node {t!r}")


def _base_str(base: Expr) -> str:
    if isinstance(base, Var):
        return base.name
    return f"({expr_to_str(base)})"


### verification domains


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def values(self):
        return range(self.lo, self.hi + 1)

    def size(self) -> int:
        return max(0, self.hi - self.lo + 1)


@dataclass(frozen=True)
class BitArrayShape:
    """All 0/1 assignments to array cells with indices in [lo:hi]."""

    lo: int
    hi: int

    def values(self):
        n = self.hi - self.lo + 1
        for code in range(1 << n):
            yield ArrayVal.bits_of(code, self.lo, self.hi)

    def size(self) -> int:
        return 1 << (self.hi - self.lo + 1)


@dataclass(frozen=True)
class VerificationDomain:
    """Finite universe the assertion checker sweeps over.

    ``vars`` maps each variable to its range; ``constants`` are fixed
    bindings (lookup tables and the like) merged into every state.
    """

    vars: tuple = ()  # tuple[(name, IntRange | BitArrayShape), ...]
    constants: tuple = ()  # tuple[(name, Value), ...]

    @staticmethod
    def of(vars: Mapping[str, "IntRange | BitArrayShape"],
           constants: Mapping[str, Value] | None = None) -> "VerificationDomain":
        return VerificationDomain(
            tuple(vars.items()), tuple((constants or {}).items())
        )

    def var_names(self) -> frozenset:
        return frozenset(n for n, _ in self.vars) | frozenset(n for n, _ in self.constants)

    def covers(self, names) -> bool:
        return frozenset(names) <= self.var_names()

    def size(self) -> int:
        total = 1
        for _, dom in self.vars:
            total *= dom.size()
        return total

    def states(self) -> Iterator[ClassicalState]:
        base = dict(self.constants)
        names = [n for n, _ in self.vars]
        doms = [d for _, d in self.vars]

        def rec(i: int, acc: dict):
            if i == len(names):
                yield ClassicalState(acc)
                return
            for v in doms[i].values():
                acc[names[i]] = v
                yield from rec(i + 1, acc)
            acc.pop(names[i], None)

        yield from rec(0, dict(base))

    def to_json(self):
        out_vars = {}
        for name, dom in self.vars:
            if isinstance(dom, IntRange):
                out_vars[name] = {"int": [dom.lo, dom.hi]}
            else:
                out_vars[name] = {"bits": [dom.lo, dom.hi]}
        return {
            "vars": out_vars,
            "constants": {n: encode_value(v) for n, v in self.constants},
        }

    @staticmethod
    def from_json(obj) -> "VerificationDomain":
        vars = {}
        for name, spec in obj.get("vars", {}).items():
            if "int" in spec:
                lo, hi = spec["int"]
                vars[name] = IntRange(lo, hi)
            elif "bits" in spec:
                lo, hi = spec["bits"]
                vars[name] = BitArrayShape(lo, hi)
            else:
                raise ValueError(f"unknown domain spec for '{name}': {spec}")
        constants = {
            n: decode_value(v) for n, v in obj.get("constants", {}).items()
        }
        return VerificationDomain.of(vars, constants)


def encode_value(v: Value):
    if isinstance(v, bool) or isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return {"frac": [v.numerator, v.denominator]}
    if isinstance(v, float):
        return {"float": v}
    if isinstance(v, ArrayVal):
        return {"array": [[k, encode_value(x)] for k, x in sorted(v.items())]}
    raise ValueError(f"cannot encode value {v!r}")


def decode_value(obj) -> Value:
    if isinstance(obj, (bool, int)):
        return obj
    if isinstance(obj, dict):
        if "frac" in obj:
            return Fraction(obj["frac"][0], obj["frac"][1])
        if "float" in obj:
            return float(obj["float"])
        if "array" in obj:
            return ArrayVal({k: decode_value(x) for k, x in obj["array"]})
    raise ValueError(f"cannot decode value {obj!r}")


def entails(a: Assertion, b: Assertion, dom: VerificationDomain):
    """Check ``a |= b`` over every state of ``dom``.

    Returns (True, None) or (False, counterexample state).  States where
    ``a`` itself fails to evaluate are skipped (they are outside the
    assertion's intended reading); an evaluation error on ``b`` at a state
    satisfying ``a`` counts as a counterexample.
    """
    need = free_vars(a) | free_vars(b)
    missing = need - dom.var_names()
    if missing:
        raise EvalError(f"domain does not cover variables {sorted(missing)}")
    for sigma in dom.states():
        try:
            if not holds(a, sigma):
                continue
        except EvalError:
            continue
        try:
            if not holds(b, sigma):
                return False, sigma
        except EvalError:
            return False, sigma
    return True, None
