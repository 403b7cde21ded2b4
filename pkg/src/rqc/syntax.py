"""Circuit AST, declarations, pretty printer, and alpha-normalization.

The program syntax has eight constructs: skip, simultaneous classical
assignment, gate application, sequencing, classical branching, quantum
branching (qif), blocks with local classical variables, and procedure
calls.  Sequencing associates to the right; the parser already builds it
that way, and proof rules split a sequence exactly at its top node.

Block-local variable names are the only alpha-convertible binders in a
program: ``alpha_normalize`` renames them to canonical ``_l0, _l1, ...``
in preorder so that two programs differing only in local names compare
equal structurally.  Procedure formals are NOT renamed here; rules that
care about them check name sets explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .classical import Expr, expr_to_str, subst, Var


@dataclass(frozen=True)
class QVarRef:
    """A quantum variable: simple (empty idx) or one array cell."""

    name: str
    idx: tuple = ()  # tuple[Expr, ...]

    def __str__(self):
        if not self.idx:
            return self.name
        return f"{self.name}[{', '.join(expr_to_str(e) for e in self.idx)}]"


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    vars: tuple  # tuple[str, ...]
    terms: tuple  # tuple[Expr, ...]


@dataclass(frozen=True)
class Gate:
    gate: str
    params: tuple  # tuple[Expr, ...]
    qargs: tuple  # tuple[QVarRef, ...]


@dataclass(frozen=True)
class Seq:
    first: "Circuit"
    second: "Circuit"


@dataclass(frozen=True)
class If:
    guard: Expr
    then_c: "Circuit"
    else_c: "Circuit"


@dataclass(frozen=True)
class QIf:
    coin: QVarRef
    zero: "Circuit"
    one: "Circuit"


@dataclass(frozen=True)
class Block:
    vars: tuple  # tuple[str, ...]
    terms: tuple  # tuple[Expr, ...]
    body: "Circuit"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple  # tuple[Expr, ...]


Circuit = Union[Skip, Assign, Gate, Seq, If, QIf, Block, Call]


@dataclass(frozen=True)
class Declaration:
    name: str
    formals: tuple  # tuple[str, ...]
    body: Circuit

    def __post_init__(self):
        if len(set(self.formals)) != len(self.formals):
            raise ValueError(f"duplicate formal in procedure {self.name}")


def seq(*parts: Circuit) -> Circuit:
    """Right-nested sequence of the given circuits."""
    if not parts:
        return Skip()
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def seq_items(c: Circuit) -> list:
    """Flatten nested Seq nodes into a list (no recursion into other nodes)."""
    items = []
    while isinstance(c, Seq):
        items.append(c.first)
        c = c.second
    items.append(c)
    return items


### pretty printing

_INDENT = "  "


def to_source(c: Circuit, level: int = 0) -> str:
    pad = _INDENT * level
    match c:
        case Skip():
            return pad + "skip"
        case Assign(vars, terms):
            lhs = ", ".join(vars)
            rhs = ", ".join(expr_to_str(t) for t in terms)
            return f"{pad}{lhs} := {rhs}"
        case Gate(gate, params, qargs):
            ps = f"({', '.join(expr_to_str(p) for p in params)})" if params else ""
            qs = ", ".join(str(q) for q in qargs)
            return f"{pad}{gate}{ps}[{qs}]"
        case Seq(_, _):
            return ";\n".join(to_source(p, level) for p in seq_items(c))
        case If(guard, then_c, else_c):
            head = f"{pad}if {expr_to_str(guard)} then\n{to_source(then_c, level + 1)}"
            if else_c == Skip():
                return f"{head}\n{pad}fi"
            return f"{head}\n{pad}else\n{to_source(else_c, level + 1)}\n{pad}fi"
        case QIf(coin, zero, one):
            return (
                f"{pad}qif[{coin}]\n"
                f"{pad}|0> ->\n{to_source(zero, level + 1)}\n"
                f"{pad}[] |1> ->\n{to_source(one, level + 1)}\n"
                f"{pad}fiq"
            )
        case Block(vars, terms, body):
            lhs = ", ".join(vars)
            rhs = ", ".join(expr_to_str(t) for t in terms)
            return (
                f"{pad}begin local {lhs} := {rhs};\n"
                f"{to_source(body, level + 1)}\n{pad}end"
            )
        case Call(name, args):
            return f"{pad}{name}({', '.join(expr_to_str(a) for a in args)})"
    raise TypeError(f"not a circuit node: {c!r}")


def decl_to_source(d: Declaration) -> str:
    return (
        f"procedure {d.name}({', '.join(d.formals)}) <=\n"
        f"{to_source(d.body, 1)}"
    )


def program_to_source(decls, main: Circuit | None) -> str:
    parts = [decl_to_source(d) for d in decls]
    if main is not None:
        parts.append(to_source(main))
    return "\n\n".join(parts) + "\n"


### generic expression traversal

def map_exprs(c: Circuit, fn: Callable[[Expr], Expr]) -> Circuit:
    """Rebuild the circuit applying ``fn`` to every embedded classical
    expression (terms, guards, gate parameters, subscripts, call args)."""
    match c:
        case Skip():
            return c
        case Assign(vars, terms):
            return Assign(vars, tuple(fn(t) for t in terms))
        case Gate(gate, params, qargs):
            return Gate(
                gate,
                tuple(fn(p) for p in params),
                tuple(QVarRef(q.name, tuple(fn(e) for e in q.idx)) for q in qargs),
            )
        case Seq(first, second):
            return Seq(map_exprs(first, fn), map_exprs(second, fn))
        case If(guard, then_c, else_c):
            return If(fn(guard), map_exprs(then_c, fn), map_exprs(else_c, fn))
        case QIf(coin, zero, one):
            return QIf(
                QVarRef(coin.name, tuple(fn(e) for e in coin.idx)),
                map_exprs(zero, fn),
                map_exprs(one, fn),
            )
        case Block(vars, terms, body):
            # deliberately maps the body too; callers handling shadowing
            # (substitution) must not use this blindly
            return Block(vars, tuple(fn(t) for t in terms), map_exprs(body, fn))
        case Call(name, args):
            return Call(name, tuple(fn(a) for a in args))
    raise TypeError(f"not a circuit node: {c!r}")


def iter_exprs(c: Circuit) -> Iterator[Expr]:
    match c:
        case Skip():
            return
        case Assign(_, terms):
            yield from terms
        case Gate(_, params, qargs):
            yield from params
            for q in qargs:
                yield from q.idx
        case Seq(first, second):
            yield from iter_exprs(first)
            yield from iter_exprs(second)
        case If(guard, then_c, else_c):
            yield guard
            yield from iter_exprs(then_c)
            yield from iter_exprs(else_c)
        case QIf(coin, zero, one):
            yield from coin.idx
            yield from iter_exprs(zero)
            yield from iter_exprs(one)
        case Block(_, terms, body):
            yield from terms
            yield from iter_exprs(body)
        case Call(_, args):
            yield from args
        case _:
            raise TypeError(f"not a circuit node: {c!r}")


def subst_circuit(c: Circuit, mapping) -> Circuit:
    """Capture-avoiding substitution of classical variables in a circuit.

    Block locals shadow substituted names inside their body.  Renaming of
    locals is never needed for shadowing alone, but a local whose name
    occurs free in a replacement term must be renamed; we rename to a
    fresh underscore name in that case.
    """
    if not mapping:
        return c
    match c:
        case Block(vars, terms, body):
            new_terms = tuple(subst(t, mapping) for t in terms)
            inner = {k: v for k, v in mapping.items() if k not in vars}
            from .classical import free_vars as fv

            clash = set()
            for v in inner.values():
                clash |= fv(v)
            renames = {}
            new_vars = []
            for name in vars:
                if name in clash:
                    fresh = name
                    k = 0
                    while fresh in clash or fresh in mapping or fresh in renames:
                        fresh = f"_{name}{k}"
                        k += 1
                    renames[name] = Var(fresh)
                    new_vars.append(fresh)
                else:
                    new_vars.append(name)
            if renames:
                body = subst_circuit(body, renames)
            return Block(tuple(new_vars), new_terms, subst_circuit(body, inner))
        case Seq(first, second):
            return Seq(subst_circuit(first, mapping), subst_circuit(second, mapping))
        case If(guard, then_c, else_c):
            return If(
                subst(guard, mapping),
                subst_circuit(then_c, mapping),
                subst_circuit(else_c, mapping),
            )
        case QIf(coin, zero, one):
            return QIf(
                QVarRef(coin.name, tuple(subst(e, mapping) for e in coin.idx)),
                subst_circuit(zero, mapping),
                subst_circuit(one, mapping),
            )
        case _:
            return map_exprs(c, lambda e: subst(e, mapping))


def alpha_normalize(c: Circuit) -> Circuit:
    """Rename every Block-local to a canonical preorder name ``_l<k>``.

    Programs that differ only in block-local naming normalize to the same
    tree; nothing else is touched.
    """
    counter = [0]

    def rec(node: Circuit, env: dict) -> Circuit:
        match node:
            case Block(vars, terms, body):
                new_terms = tuple(subst(t, env) for t in terms)
                inner = dict(env)
                new_vars = []
                for name in vars:
                    canon = f"_l{counter[0]}"
                    counter[0] += 1
                    inner[name] = Var(canon)
                    new_vars.append(canon)
                return Block(tuple(new_vars), new_terms, rec(body, inner))
            case Seq(first, second):
                return Seq(rec(first, env), rec(second, env))
            case If(guard, then_c, else_c):
                return If(subst(guard, env), rec(then_c, env), rec(else_c, env))
            case QIf(coin, zero, one):
                return QIf(
                    QVarRef(coin.name, tuple(subst(e, env) for e in coin.idx)),
                    rec(zero, env),
                    rec(one, env),
                )
            case _:
                return map_exprs(node, lambda e: subst(e, env))

    return rec(c, {})


def circuits_equal(a: Circuit, b: Circuit) -> bool:
    """Structural equality up to renaming of Block locals."""
    return a == b or alpha_normalize(a) == alpha_normalize(b)
