"""Static analysis over circuits: quantum footprints, modified classical
variables, and the well-definedness check for quantum branching.

A footprint over-approximates the set of array cells a circuit may touch.
It is a set of :class:`Atom` values, each naming an array together with
either a single affinely-indexed cell, a half-bounded section of cells
(everything above or below an affine bound), or the whole array.  Affine
index arithmetic plus inequality facts harvested from enclosing ``if``
guards let the disjointness test separate, say, the coin ``q[m]`` from a
branch that only ever touches ``q[m+1]`` and upward.

Procedure footprints are computed by a small fixpoint with widening:
recursions that march an index in one direction collapse to a
half-bounded section, and anything wilder collapses to the whole array.
The result is sound (never too small) but deliberately coarse; callers
that need exact cell sets for one concrete classical state can use
:func:`concrete_cells`, which unfolds the circuit classically instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .classical import (
    And,
    BinOp,
    ClassicalState,
    Cmp,
    Const,
    EvalError,
    Expr,
    Neg,
    Not,
    Or,
    Var,
    eval_expr,
    expr_to_str,
    free_vars,
    holds,
)
from .syntax import (
    Assign,
    Block,
    Call,
    Circuit,
    Declaration,
    Gate,
    If,
    QIf,
    QVarRef,
    Seq,
    Skip,
    iter_exprs,
)


class AnalysisError(Exception):
    """A circuit failed a static check (or exhausted the unfolding fuel)."""


### affine index forms

# An affine form is ((('a', 1), ('c', -2), ...), const): a sorted tuple of
# (variable, nonzero integer coefficient) pairs plus an integer constant.
Aff = tuple


def _aff(items: Mapping[str, int], const: int) -> Aff:
    return (tuple(sorted((v, k) for v, k in items.items() if k != 0)), const)


def aff_const(c: int) -> Aff:
    return ((), c)


def aff_add(a: Aff, b: Aff) -> Aff:
    items = dict(a[0])
    for v, k in b[0]:
        items[v] = items.get(v, 0) + k
    return _aff(items, a[1] + b[1])


def aff_scale(a: Aff, k: int) -> Aff:
    return (tuple((v, c * k) for v, c in a[0]) if k else (), a[1] * k)


def aff_neg(a: Aff) -> Aff:
    return aff_scale(a, -1)


def aff_sub(a: Aff, b: Aff) -> Aff:
    return aff_add(a, aff_neg(b))


def aff_shift(a: Aff, dc: int) -> Aff:
    return (a[0], a[1] + dc)


def aff_vars(a: Aff) -> frozenset:
    return frozenset(v for v, _ in a[0])


def aff_to_expr(a: Aff) -> Expr:
    e: Expr | None = None
    for v, k in a[0]:
        term: Expr = Var(v) if k == 1 else BinOp("*", Const(k), Var(v))
        e = term if e is None else BinOp("+", e, term)
    if e is None:
        return Const(a[1])
    if a[1] == 0:
        return e
    return BinOp("+", e, Const(a[1]))


def aff_str(a: Aff) -> str:
    return expr_to_str(aff_to_expr(a))


def eval_aff(a: Aff, sigma: ClassicalState) -> int:
    total = a[1]
    for v, k in a[0]:
        val = sigma[v]
        if isinstance(val, bool) or not isinstance(val, int):
            raise EvalError(f"variable '{v}' is not an integer index")
        total += k * val
    return total


def affine_of(e: Expr) -> Aff | None:
    """Affine form of an index expression, or None if it is not affine."""
    match e:
        case Const(v):
            if isinstance(v, bool):
                return None
            if isinstance(v, int):
                return aff_const(v)
            if isinstance(v, Fraction) and v.denominator == 1:
                return aff_const(int(v))
            return None
        case Var(name):
            return (((name, 1),), 0)
        case Neg(a):
            inner = affine_of(a)
            return None if inner is None else aff_neg(inner)
        case BinOp("+", a, b):
            x, y = affine_of(a), affine_of(b)
            return None if x is None or y is None else aff_add(x, y)
        case BinOp("-", a, b):
            x, y = affine_of(a), affine_of(b)
            return None if x is None or y is None else aff_sub(x, y)
        case BinOp("*", a, b):
            x, y = affine_of(a), affine_of(b)
            if x is None or y is None:
                return None
            if not x[0]:
                return aff_scale(y, x[1])
            if not y[0]:
                return aff_scale(x, y[1])
            return None
    return None


def aff_subst(a: Aff, mapping: Mapping[str, Aff | None]) -> Aff | None:
    """Substitute variables by affine forms; None poisons the result."""
    out = aff_const(a[1])
    for v, k in a[0]:
        rep = mapping.get(v, (((v, 1),), 0))
        if rep is None:
            return None
        out = aff_add(out, aff_scale(rep, k))
    return out


### footprint atoms


@dataclass(frozen=True)
class Atom:
    """One piece of a footprint: cells of the array ``name``.

    kind "cell": exactly the cell indexed by the affine tuple ``index``
    (an empty tuple means an unindexed, scalar quantum variable).
    kind "up": all cells at or above the single affine bound in ``index``.
    kind "down": all cells at or below it.
    kind "all": every cell of the array.
    """

    name: str
    kind: str
    index: tuple = ()

    def __str__(self) -> str:
        if self.kind == "all":
            return f"{self.name}[*]"
        if self.kind == "up":
            return f"{self.name}[{aff_str(self.index[0])}:*]"
        if self.kind == "down":
            return f"{self.name}[*:{aff_str(self.index[0])}]"
        if not self.index:
            return self.name
        return f"{self.name}[{', '.join(aff_str(a) for a in self.index)}]"


def atom_all(name: str) -> Atom:
    return Atom(name, "all")


def atom_cell(name: str, index: Iterable[Aff]) -> Atom:
    return Atom(name, "cell", tuple(index))


def atom_up(name: str, bound: Aff) -> Atom:
    return Atom(name, "up", (bound,))


def atom_down(name: str, bound: Aff) -> Atom:
    return Atom(name, "down", (bound,))


def ref_atom(ref: QVarRef) -> Atom:
    affs = [affine_of(e) for e in ref.idx]
    if any(a is None for a in affs):
        return atom_all(ref.name)
    return atom_cell(ref.name, affs)


def atom_vars(a: Atom) -> frozenset:
    out = frozenset()
    for aff in a.index:
        out |= aff_vars(aff)
    return out


def atom_covers(a: Atom, name: str, idx: tuple, sigma: ClassicalState) -> bool:
    """Does the atom, evaluated under sigma, cover the concrete cell?"""
    if a.name != name:
        return False
    if a.kind == "all":
        return True
    if a.kind == "cell":
        if len(a.index) != len(idx):
            return False
        return all(eval_aff(f, sigma) == i for f, i in zip(a.index, idx))
    if len(idx) != 1:
        return False
    bound = eval_aff(a.index[0], sigma)
    return idx[0] >= bound if a.kind == "up" else idx[0] <= bound


### inequality facts from guards


@dataclass(frozen=True)
class Fact:
    """kind "ge": expr >= 0 holds.  kind "ne": expr != 0 holds."""

    kind: str
    expr: Aff


def _canon_ne(a: Aff) -> Aff:
    if a[0]:
        if a[0][0][1] < 0:
            return aff_neg(a)
    elif a[1] < 0:
        return aff_neg(a)
    return a


def _ge(a: Aff) -> Fact:
    return Fact("ge", a)


def _ne(a: Aff) -> Fact:
    return Fact("ne", _canon_ne(a))


def guard_facts(b: Expr, branch: bool) -> tuple[Fact, ...]:
    """Facts known in the chosen branch of ``if b``.

    Only conjunctive, affine information is kept; anything else
    contributes nothing (which is always safe).
    """
    match b:
        case Not(inner):
            return guard_facts(inner, not branch)
        case And(x, y) if branch:
            return guard_facts(x, True) + guard_facts(y, True)
        case Or(x, y) if not branch:
            return guard_facts(x, False) + guard_facts(y, False)
        case Cmp(op, lhs, rhs):
            a, c = affine_of(lhs), affine_of(rhs)
            if a is None or c is None:
                return ()
            d = aff_sub(a, c)  # lhs - rhs
            neg = aff_neg(d)
            if not branch:
                flip = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
                op = flip[op]
            if op == "=":
                return (_ge(d), _ge(neg))
            if op == "!=":
                return (_ne(d),)
            if op == "<":
                return (_ge(aff_shift(neg, -1)),)
            if op == "<=":
                return (_ge(neg),)
            if op == ">":
                return (_ge(aff_shift(d, -1)),)
            if op == ">=":
                return (_ge(d),)
    return ()


def drop_facts(facts: Iterable[Fact], names: Iterable[str]) -> tuple[Fact, ...]:
    doomed = frozenset(names)
    return tuple(f for f in facts if not (aff_vars(f.expr) & doomed))


def prove_ge(e: Aff, facts: Iterable[Fact]) -> bool:
    """Can we show e >= 0 from the facts?  (Best effort, may say no.)"""
    if not e[0]:
        return e[1] >= 0
    for f in facts:
        if f.kind == "ge" and f.expr[0] == e[0] and e[1] >= f.expr[1]:
            return True
    return False


def prove_nonzero(e: Aff, facts: Iterable[Fact]) -> bool:
    if not e[0]:
        return e[1] != 0
    canon = _canon_ne(e)
    for f in facts:
        if f.kind == "ne" and f.expr == canon:
            return True
    return prove_ge(aff_shift(e, -1), facts) or prove_ge(aff_shift(aff_neg(e), -1), facts)


### disjointness


def atoms_disjoint(x: Atom, y: Atom, facts: Iterable[Fact] = ()) -> bool:
    """True only if the two atoms can be *proved* to share no cell."""
    if x.name != y.name:
        return True
    if x.kind == "all" or y.kind == "all":
        return False
    if x.kind == "cell" and y.kind == "cell":
        if len(x.index) != len(y.index):
            return False
        return any(prove_nonzero(aff_sub(a, b), facts) for a, b in zip(x.index, y.index))
    if x.kind != "cell" and y.kind == "cell":
        x, y = y, x
    if x.kind == "cell":  # vs a ray
        if len(x.index) != 1:
            return False
        e, bound = x.index[0], y.index[0]
        if y.kind == "up":  # disjoint iff e <= bound - 1
            return prove_ge(aff_shift(aff_sub(bound, e), -1), facts)
        return prove_ge(aff_shift(aff_sub(e, bound), -1), facts)
    if x.kind == y.kind:  # two rays pointing the same way always meet
        return False
    up, down = (x, y) if x.kind == "up" else (y, x)
    # disjoint iff the down bound lies strictly below the up bound
    return prove_ge(aff_shift(aff_sub(up.index[0], down.index[0]), -1), facts)


def footprints_disjoint(
    xs: Iterable[Atom], ys: Iterable[Atom], facts: Iterable[Fact] = ()
) -> bool:
    ys = tuple(ys)
    return all(atoms_disjoint(x, y, facts) for x in xs for y in ys)


def _normalize(atoms: Iterable[Atom]) -> frozenset:
    """Dedupe, absorb cells into rays, merge adjacent/overlapping rays."""
    by_name: dict[str, list[Atom]] = {}
    alls: set[str] = set()
    for a in atoms:
        if a.kind == "all":
            alls.add(a.name)
        by_name.setdefault(a.name, []).append(a)
    out: set[Atom] = set()
    for name, group in by_name.items():
        if name in alls:
            out.add(atom_all(name))
            continue
        ups: dict[tuple, int] = {}  # var part -> least bound
        downs: dict[tuple, int] = {}  # var part -> greatest bound
        cells: set[Atom] = set()
        for a in group:
            if a.kind == "up":
                vp, c = a.index[0]
                ups[vp] = min(ups.get(vp, c), c)
            elif a.kind == "down":
                vp, c = a.index[0]
                downs[vp] = max(downs.get(vp, c), c)
            else:
                cells.add(a)
        # a matching up/down pair that touches or overlaps covers everything
        if any(vp in downs and ups[vp] <= downs[vp] + 1 for vp in ups):
            out.add(atom_all(name))
            continue
        changed = True
        while changed:
            changed = False
            for a in list(cells):
                if len(a.index) != 1:
                    continue
                vp, c = a.index[0]
                if vp in ups:
                    if c >= ups[vp]:
                        cells.discard(a)
                        changed = True
                    elif c == ups[vp] - 1:
                        ups[vp] = c
                        cells.discard(a)
                        changed = True
                if a in cells and vp in downs:
                    if c <= downs[vp]:
                        cells.discard(a)
                        changed = True
                    elif c == downs[vp] + 1:
                        downs[vp] = c
                        cells.discard(a)
                        changed = True
        out |= cells
        out |= {atom_up(name, (vp, c)) for vp, c in ups.items()}
        out |= {atom_down(name, (vp, c)) for vp, c in downs.items()}
    return frozenset(out)


def subst_atoms(atoms: Iterable[Atom], mapping: Mapping[str, Aff | None]) -> set:
    """Rewrite atom indices under a variable substitution.

    A variable mapped to None has no usable form at the use site, so any
    atom mentioning it widens to the whole array.
    """
    out: set[Atom] = set()
    for a in atoms:
        if a.kind == "all" or not atom_vars(a) & mapping.keys():
            out.add(a)
            continue
        new = [aff_subst(f, mapping) for f in a.index]
        if any(n is None for n in new):
            out.add(atom_all(a.name))
        elif a.kind == "cell":
            out.add(atom_cell(a.name, new))
        else:
            out.add(Atom(a.name, a.kind, (new[0],)))
    return out


def _widen_names(atoms: Iterable[Atom]) -> frozenset:
    return frozenset(atom_all(a.name) for a in atoms)


def _widen_changed_vars(atoms: Iterable[Atom], changed: frozenset) -> set:
    out = set()
    for a in atoms:
        if atom_vars(a) & changed:
            out.add(atom_all(a.name))
        else:
            out.add(a)
    return out


### modified classical variables


def _decl_map(decls) -> dict:
    if isinstance(decls, Mapping):
        dmap = dict(decls)
    else:
        dmap = {}
        for d in decls:
            if d.name in dmap:
                raise AnalysisError(f"duplicate declaration of procedure '{d.name}'")
            dmap[d.name] = d
    for d in dmap.values():
        if len(set(d.formals)) != len(d.formals):
            raise AnalysisError(f"procedure '{d.name}' repeats a formal parameter")
    return dmap


def _change_of(c: Circuit, summ: Mapping[str, frozenset]) -> frozenset:
    match c:
        case Skip() | Gate():
            return frozenset()
        case Assign(vars, _):
            return frozenset(vars)
        case Seq(first, second):
            return _change_of(first, summ) | _change_of(second, summ)
        case If(_, t, e):
            return _change_of(t, summ) | _change_of(e, summ)
        case QIf(_, z, o):
            return _change_of(z, summ) | _change_of(o, summ)
        case Block(vars, _, body):
            return _change_of(body, summ) - frozenset(vars)
        case Call(name, _):
            return summ.get(name, frozenset())
    raise TypeError(f"not a circuit node: {c!r}")


def change_summaries(decls) -> dict:
    """Per-procedure modified variables (formals, being local, excluded)."""
    dmap = _decl_map(decls)
    summ = {name: frozenset() for name in dmap}
    while True:
        nxt = {
            name: _change_of(d.body, summ) - frozenset(d.formals)
            for name, d in dmap.items()
        }
        if nxt == summ:
            return summ
        summ = nxt


def change(c: Circuit, decls=()) -> frozenset:
    """Classical variables the circuit may assign, as seen by its caller."""
    return _change_of(c, change_summaries(decls))


### footprints and their fixpoint


def _raw_footprint(c: Circuit, dmap: Mapping, summ: Mapping, chg: Mapping) -> set:
    match c:
        case Skip() | Assign():
            return set()
        case Gate(_, _, qargs):
            return {ref_atom(r) for r in qargs}
        case Seq(first, second):
            return _raw_footprint(first, dmap, summ, chg) | _raw_footprint(
                second, dmap, summ, chg
            )
        case If(_, t, e):
            return _raw_footprint(t, dmap, summ, chg) | _raw_footprint(e, dmap, summ, chg)
        case QIf(coin, z, o):
            return (
                {ref_atom(coin)}
                | _raw_footprint(z, dmap, summ, chg)
                | _raw_footprint(o, dmap, summ, chg)
            )
        case Block(vars, terms, body):
            inner = _raw_footprint(body, dmap, summ, chg)
            reassigned = _change_of(body, chg)
            mapping: dict[str, Aff | None] = {}
            for v, t in zip(vars, terms):
                mapping[v] = None if v in reassigned else affine_of(t)
            return subst_atoms(inner, mapping)
        case Call(name, args):
            if name not in dmap:
                raise AnalysisError(f"call to undeclared procedure '{name}'")
            d = dmap[name]
            if len(args) != len(d.formals):
                raise AnalysisError(
                    f"procedure '{name}' takes {len(d.formals)} argument(s), got {len(args)}"
                )
            mapping = {f: affine_of(a) for f, a in zip(d.formals, args)}
            return subst_atoms(summ.get(name, frozenset()), mapping)
    raise TypeError(f"not a circuit node: {c!r}")


_CELL_BUDGET = 3
_MAX_ITERS = 16


def qv_summaries(decls) -> dict:
    """Fixpoint footprints of every declared procedure, in formal terms."""
    dmap = _decl_map(decls)
    chg = change_summaries(dmap)
    summ: dict[str, frozenset] = {name: frozenset() for name in dmap}
    history: dict[tuple, tuple] = {}  # (proc, name, var part) -> (min, max)
    for it in range(_MAX_ITERS):
        nxt = {}
        for name, d in dmap.items():
            atoms = _raw_footprint(d.body, dmap, summ, chg)
            atoms = _widen_changed_vars(atoms, _change_of(d.body, chg))
            atoms = _normalize(atoms)
            atoms = _widen_cell_runs(name, atoms, history)
            nxt[name] = _normalize(atoms)
        if nxt == summ:
            return summ
        summ = nxt
    # anything still churning collapses to whole arrays
    for _ in range(len(dmap) + 2):
        nxt = {}
        for name, d in dmap.items():
            atoms = _raw_footprint(d.body, dmap, summ, chg)
            atoms = _widen_changed_vars(atoms, _change_of(d.body, chg))
            atoms = _normalize(atoms)
            nxt[name] = atoms if atoms == summ[name] else _widen_names(atoms)
        if nxt == summ:
            return summ
        summ = nxt
    raise AnalysisError("procedure footprints failed to stabilize")


def _widen_cell_runs(proc: str, atoms: frozenset, history: dict) -> set:
    """Collapse a growing run of single cells into a half-bounded section.

    Direction comes from comparing the run's span with the previous
    iteration: a fixed low end with a climbing high end becomes an upward
    section, the mirror image a downward one, and movement at both ends
    gives up and takes the whole array.
    """
    groups: dict[tuple, list[int]] = {}
    for a in atoms:
        if a.kind == "cell" and len(a.index) == 1:
            vp, c = a.index[0]
            groups.setdefault((a.name, vp), []).append(c)
    out = set(atoms)
    for (name, vp), consts in groups.items():
        lo, hi = min(consts), max(consts)
        prev = history.get((proc, name, vp))
        history[(proc, name, vp)] = (lo, hi)
        if len(set(consts)) <= _CELL_BUDGET:
            continue
        doomed = {a for a in out if a.kind == "cell" and len(a.index) == 1
                  and a.name == name and a.index[0][0] == vp}
        out -= doomed
        if prev is not None and lo == prev[0] and hi > prev[1]:
            out.add(atom_up(name, (vp, lo)))
        elif prev is not None and hi == prev[1] and lo < prev[0]:
            out.add(atom_down(name, (vp, hi)))
        else:
            out.add(atom_all(name))
    return out


def footprint_of(c: Circuit, decls=(), summaries: Mapping | None = None) -> frozenset:
    """Footprint of a circuit in its own variables.

    Atoms whose index mentions a variable the circuit itself may assign
    are widened to the whole array, since the index no longer names one
    stable cell across the run.
    """
    dmap = _decl_map(decls)
    summ = qv_summaries(dmap) if summaries is None else summaries
    chg = change_summaries(dmap)
    atoms = _raw_footprint(c, dmap, summ, chg)
    atoms = _widen_changed_vars(atoms, _change_of(c, chg))
    return _normalize(atoms)


def qv(c: Circuit, decls=()) -> frozenset:
    """Quantum footprint: which array cells the circuit may act on."""
    return footprint_of(c, decls)


def qv_names(c: Circuit, decls=()) -> frozenset:
    return frozenset(a.name for a in qv(c, decls))


def cv_of_qref(ref: QVarRef) -> frozenset:
    """Classical variables a quantum reference's indices read."""
    out = frozenset()
    for e in ref.idx:
        out |= free_vars(e)
    return out


def circuit_vars(c: Circuit) -> frozenset:
    """Every classical variable a circuit mentions, binds, or assigns."""
    out = set()
    for e in iter_exprs(c):
        out |= free_vars(e)

    def binders(c: Circuit) -> None:
        match c:
            case Assign(vars, _):
                out.update(vars)
            case Seq(first, second):
                binders(first)
                binders(second)
            case If(_, t, e):
                binders(t)
                binders(e)
            case QIf(_, z, o):
                binders(z)
                binders(o)
            case Block(vars, _, body):
                out.update(vars)
                binders(body)
            case _:
                pass

    binders(c)
    return frozenset(out)


def decl_vars(d: Declaration) -> frozenset:
    return frozenset(d.formals) | circuit_vars(d.body)


### well-definedness of quantum branching


def check_well_defined(main: Circuit | None, decls=()) -> None:
    """Reject circuits whose quantum branches could touch their own coin.

    Every ``qif`` must keep its coin cell out of the footprint of both
    branches, across procedure calls.  Disjointness must be provable from
    index arithmetic and enclosing guard facts alone; a check that cannot
    be settled is an error.  Raises :class:`AnalysisError` with the
    offending coin and atom, or returns None if all checks pass.
    """
    dmap = _decl_map(decls)
    summ = qv_summaries(dmap)
    chg = change_summaries(dmap)

    def walk(c: Circuit, facts: tuple) -> None:
        match c:
            case Skip() | Assign() | Gate():
                return
            case Seq(first, second):
                walk(first, facts)
                walk(second, drop_facts(facts, _change_of(first, chg)))
            case If(guard, t, e):
                walk(t, facts + guard_facts(guard, True))
                walk(e, facts + guard_facts(guard, False))
            case QIf(coin, z, o):
                coin_atom = ref_atom(coin)
                for side, branch in (("|0>", z), ("|1>", o)):
                    atoms = _raw_footprint(branch, dmap, summ, chg)
                    atoms = _widen_changed_vars(atoms, _change_of(branch, chg))
                    for a in _normalize(atoms):
                        if not atoms_disjoint(coin_atom, a, facts):
                            raise AnalysisError(
                                f"quantum branch on {coin_atom} may touch its own "
                                f"coin: the {side} branch reaches {a}"
                            )
                    walk(branch, facts)
            case Block(vars, _, body):
                walk(body, drop_facts(facts, vars))
            case Call(name, args):
                if name not in dmap:
                    raise AnalysisError(f"call to undeclared procedure '{name}'")
                if len(args) != len(dmap[name].formals):
                    raise AnalysisError(
                        f"procedure '{name}' takes {len(dmap[name].formals)} "
                        f"argument(s), got {len(args)}"
                    )
            case _:
                raise TypeError(f"not a circuit node: {c!r}")

    if main is not None:
        walk(main, ())
    for d in dmap.values():
        walk(d.body, ())


### exact cell sets for one classical state


def _index_int(v) -> int:
    if isinstance(v, bool):
        raise AnalysisError("cell index evaluated to a boolean")
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    raise AnalysisError(f"cell index evaluated to non-integer {v!r}")


def concrete_ref(ref: QVarRef, sigma: ClassicalState):
    return (ref.name, tuple(_index_int(eval_expr(e, sigma)) for e in ref.idx))


def concrete_cells(
    c: Circuit, sigma: ClassicalState, decls=(), fuel: int = 100000
) -> frozenset:
    """The exact cells touched when running from sigma, found by classical
    unfolding.  Both branches of every ``qif`` are unfolded from the same
    state and must agree on their final state.  Raises on unbound
    variables, classically diverging branches, or fuel exhaustion."""
    dmap = _decl_map(decls)
    cells: set = set()
    budget = [fuel]

    def walk(c: Circuit, s: ClassicalState) -> ClassicalState:
        budget[0] -= 1
        if budget[0] < 0:
            raise AnalysisError("circuit unfolding ran out of fuel")
        match c:
            case Skip():
                return s
            case Assign(vars, terms):
                return s.assign(vars, terms)
            case Gate(_, _, qargs):
                for r in qargs:
                    cells.add(concrete_ref(r, s))
                return s
            case Seq(first, second):
                return walk(second, walk(first, s))
            case If(guard, t, e):
                return walk(t if holds(guard, s) else e, s)
            case QIf(coin, z, o):
                cells.add(concrete_ref(coin, s))
                s0 = walk(z, s)
                s1 = walk(o, s)
                if s0 != s1:
                    raise AnalysisError(
                        "quantum branches diverge classically "
                        f"({s0!r} vs {s1!r})"
                    )
                return s0
            case Block(vars, terms, body):
                entry = s.assign(vars, terms)
                after = walk(body, entry)
                restored = dict(after)
                for v in vars:
                    if v in s:
                        restored[v] = s[v]
                    else:
                        restored.pop(v, None)
                return ClassicalState(restored)
            case Call(name, args):
                if name not in dmap:
                    raise AnalysisError(f"call to undeclared procedure '{name}'")
                d = dmap[name]
                if len(args) != len(d.formals):
                    raise AnalysisError(
                        f"procedure '{name}' takes {len(d.formals)} "
                        f"argument(s), got {len(args)}"
                    )
                return walk(Block(d.formals, tuple(args), d.body), s)
            case _:
                raise TypeError(f"not a circuit node: {c!r}")

    walk(c, sigma)
    return frozenset(cells)
