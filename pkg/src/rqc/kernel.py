"""Rule-by-rule checking of Hoare-logic proofs for quantum circuits.

A proof script is a directed acyclic graph of nodes.  Each node names a
rule, states its conclusion triple and lists its premise nodes; recursion
nodes instead carry the procedure specifications they establish together
with one premise per specification.  Checking a node means matching the
conclusion and premises against the rule scheme exactly (formulas and
symbolic states are compared structurally, commands up to renaming of
block locals) and discharging the rule's side conditions.

Side conditions that are not purely syntactic fall into two groups.
Entailments and gate-axiom images are always settled numerically over the
script's verification domain.  Cell-disjointness conditions (a framed
factor against a command's footprint, a quantum alternation's coin
against its branches) are first attempted by index arithmetic; when that
cannot decide, the checker sweeps the domain and compares concrete cell
sets instead.  ``strict=True`` refuses those fallback sweeps, so a proof
that passes strictly is justified by the static analysis alone.

Soundness of a whole script can be cross-checked with
:func:`audit_soundness`, which replays every conclusion in the script
against the interpreter, independently of the rules used to derive it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

from .analysis import (
    AnalysisError,
    affine_of,
    aff_shift,
    atom_cell,
    atom_down,
    atom_up,
    atoms_disjoint,
    change,
    circuit_vars,
    concrete_cells,
    concrete_ref,
    cv_of_qref,
    footprint_of,
    guard_facts,
    qv_summaries,
    ref_atom,
)
from .classical import (
    And,
    Cmp,
    EvalError,
    Exists,
    Expr,
    IntRange,
    Not,
    Or,
    Var,
    VerificationDomain,
    eval_expr,
    expr_to_str,
    free_vars,
    holds,
    subst,
)
from .gates import GateDef, GateError, GateTable, builtin_gates
from .hoare import HoareTriple, check_entailment, check_triple
from .interp import DEFAULT_FUEL
from .parser import (
    parse,
    parse_circuit,
    parse_coeff,
    parse_expr,
    parse_formula,
    parse_state,
)
from .qstate import QStateError
from .states import (
    BitsKet,
    BuiltinS,
    CellState,
    CNum,
    ProdS,
    Scalar,
    StateError,
    StateExpr,
    SumS,
    TensorS,
    Zeros,
    coeff_free_vars,
    eval_state,
    state_free_vars,
    state_to_str,
    subst_state,
)
from .syntax import (
    Assign,
    Block,
    Call,
    Circuit,
    Gate,
    If,
    QIf,
    QVarRef,
    Seq,
    Skip,
    circuits_equal,
    subst_circuit,
    to_source,
)

FORMAT_TAG = "rqc-proof/1"


class RuleName(str, Enum):
    SKIP = "skip"
    ASSIGN = "assign"
    GATE = "gate"
    SEQ = "seq"
    IF = "if"
    QIF = "qif"
    QIF_PURE = "qif-pure"
    BLOCK = "block"
    FRAME = "frame"
    LINEARITY = "linearity"
    CONSEQUENCE = "consequence"
    INVARIANCE = "invariance"
    INVARIANCE_CONJ = "invariance-conj"
    DISJUNCTION = "disjunction"
    CONJUNCTION = "conjunction"
    EXISTS_INTRO = "exists-intro"
    SUBSTITUTION = "substitution"
    INSTANTIATION = "instantiation"
    ASSUMPTION = "assumption"
    REC_PARTIAL = "rec-partial"
    REC_TOTAL = "rec-total"
    REC_PARTIAL_GEN = "rec-partial-gen"
    REC_TOTAL_GEN = "rec-total-gen"


_RECURSION_RULES = frozenset(
    {
        RuleName.REC_PARTIAL,
        RuleName.REC_TOTAL,
        RuleName.REC_PARTIAL_GEN,
        RuleName.REC_TOTAL_GEN,
    }
)

# Rules whose reading depends on whether runs must terminate.  "qif" and
# "invariance" say nothing about termination of the branches/command, so
# they only support the partial reading; the total recursion rules are
# the only way to conclude termination of a recursive call.
_PARTIAL_ONLY = frozenset(
    {RuleName.QIF, RuleName.INVARIANCE, RuleName.REC_PARTIAL, RuleName.REC_PARTIAL_GEN}
)
_TOTAL_ONLY = frozenset({RuleName.REC_TOTAL, RuleName.REC_TOTAL_GEN})


class KernelError(Exception):
    """A rule application that does not check out."""

    def __init__(self, node_id: str, message: str):
        super().__init__(f"node {node_id}: {message}")
        self.node_id = node_id
        self.message = message


@dataclass(frozen=True)
class ProofNode:
    rule: RuleName
    triple: HoareTriple
    premises: tuple = ()  # node ids
    coeffs: tuple = ()  # qif / qif-pure / linearity
    mapping: tuple = ()  # ((var, Expr), ...) for substitution / instantiation
    specs: tuple = ()  # recursion: the co-proved procedure specifications
    which: int = 0  # recursion: which spec this node concludes
    ranks: tuple = ()  # total recursion: one rank expression per spec
    z: str = ""  # total recursion: the fresh bound variable


@dataclass
class ProofScript:
    mode: str  # "partial" | "total"
    dom: VerificationDomain
    gates: GateTable
    decls: tuple
    nodes: dict  # id -> ProofNode
    roots: tuple
    fuel: int = DEFAULT_FUEL
    tol: float = 1e-9


@dataclass
class ProofReport:
    ok: bool
    mode: str
    strict: bool
    nodes_checked: int
    roots: tuple
    errors: tuple = ()  # ((node id, message), ...)
    audit_violations: tuple = ()

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "mode": self.mode,
            "strict": self.strict,
            "nodes_checked": self.nodes_checked,
            "roots": list(self.roots),
            "errors": [{"node": n, "message": m} for n, m in self.errors],
            "audit_violations": [
                {"node": n, "message": m} for n, m in self.audit_violations
            ],
        }


@dataclass(frozen=True)
class _CtxEntry:
    triple: HoareTriple
    instantiable: bool


### cell over-approximation for symbolic states


def _window_group(name: str, lo: Expr, hi: Expr):
    a = affine_of(lo)
    b = affine_of(hi)
    if a is None or b is None:
        return None
    if a == b:
        return (atom_cell(name, (a,)),)
    return (atom_up(name, a), atom_down(name, b))


def state_atom_groups(s: StateExpr):
    """Describe the cells of a symbolic state as groups of atoms.

    Each group stands for one factor of the state: the factor's cells are
    contained in every atom of its group, so the factor is disjoint from
    some other atom as soon as any one group member is.  Returns None
    when no usable description exists (non-affine indices, products over
    a binder), in which case only a per-sigma sweep can settle
    disjointness.
    """
    match s:
        case Zeros(name, lo, hi) | BitsKet(name, lo, hi, _):
            g = _window_group(name, lo, hi)
            return None if g is None else [g]
        case CellState(name, idx, _, _):
            a = affine_of(idx)
            return None if a is None else [(atom_cell(name, (a,)),)]
        case Scalar(_):
            return []
        case TensorS(parts):
            out = []
            for p in parts:
                g = state_atom_groups(p)
                if g is None:
                    return None
                out.extend(g)
            return out
        case SumS(terms):
            out = []
            for _, st in terms:
                g = state_atom_groups(st)
                if g is None:
                    return None
                out.extend(g)
            return out
        case BuiltinS(fam, array, args):
            if fam in ("ghz", "fourier"):
                g = _window_group(array, args[0], args[1])
                return None if g is None else [g]
            if fam == "splitwin":
                hi = affine_of(args[0])
                lo = affine_of(args[1])
                if lo is None or hi is None:
                    return None
                return [(atom_up(array, aff_shift(lo, 1)), atom_down(array, hi))]
            return None
        case _:
            return None


def _sigma_str(sigma) -> str:
    return ", ".join(f"{k}={sigma[k]}" for k in sorted(sigma))


class _Checker:
    def __init__(self, script: ProofScript, strict: bool):
        self.s = script
        self.strict = strict
        self.dmap = {d.name: d for d in script.decls}
        self.qv_sum = qv_summaries(script.decls)
        self.memo: dict = {}
        self.path: list = []
        self.count = 0

    def check(self) -> None:
        for rid in self.s.roots:
            self.check_node(rid, ())

    ### plumbing

    def _fail(self, nid: str, msg: str):
        raise KernelError(nid, msg)

    def check_node(self, nid: str, ctx: tuple) -> frozenset:
        """Check one node under the given assumption context.

        Returns the set of context indices whose assumptions the node's
        subtree actually relied on; recursion rules discharge their own
        entries and propagate only the rest.
        """
        if nid not in self.s.nodes:
            self._fail(nid, "premise names a node that is not in the script")
        key = (nid, ctx)
        if key in self.memo:
            return self.memo[key]
        if nid in self.path:
            self._fail(nid, "the proof graph has a cycle through this node")
        node = self.s.nodes[nid]
        self._mode_ok(nid, node.rule)
        self.path.append(nid)
        try:
            used = self._dispatch(nid, node, ctx)
        finally:
            self.path.pop()
        self.memo[key] = used
        self.count += 1
        return used

    def _mode_ok(self, nid: str, rule: RuleName):
        if self.s.mode == "total" and rule in _PARTIAL_ONLY:
            self._fail(nid, f"rule '{rule.value}' is only sound for partial correctness")
        if self.s.mode == "partial" and rule in _TOTAL_ONLY:
            self._fail(nid, f"rule '{rule.value}' belongs to total-correctness proofs")

    def _dispatch(self, nid: str, node: ProofNode, ctx: tuple) -> frozenset:
        r = RuleName(node.rule)
        if r is RuleName.SKIP:
            return self._r_skip(nid, node, ctx)
        if r is RuleName.ASSIGN:
            return self._r_assign(nid, node, ctx)
        if r is RuleName.GATE:
            return self._r_gate(nid, node, ctx)
        if r is RuleName.SEQ:
            return self._r_seq(nid, node, ctx)
        if r is RuleName.IF:
            return self._r_if(nid, node, ctx)
        if r in (RuleName.QIF, RuleName.QIF_PURE):
            return self._r_qif(nid, node, ctx, pure=r is RuleName.QIF_PURE)
        if r is RuleName.BLOCK:
            return self._r_block(nid, node, ctx)
        if r is RuleName.FRAME:
            return self._r_frame(nid, node, ctx)
        if r is RuleName.LINEARITY:
            return self._r_linearity(nid, node, ctx)
        if r is RuleName.CONSEQUENCE:
            return self._r_consequence(nid, node, ctx)
        if r is RuleName.INVARIANCE:
            return self._r_invariance(nid, node, ctx)
        if r is RuleName.INVARIANCE_CONJ:
            return self._r_invariance_conj(nid, node, ctx)
        if r is RuleName.DISJUNCTION:
            return self._r_disjunction(nid, node, ctx)
        if r is RuleName.CONJUNCTION:
            return self._r_conjunction(nid, node, ctx)
        if r is RuleName.EXISTS_INTRO:
            return self._r_exists(nid, node, ctx)
        if r is RuleName.SUBSTITUTION:
            return self._r_substitution(nid, node, ctx)
        if r is RuleName.INSTANTIATION:
            return self._r_instantiation(nid, node, ctx)
        if r is RuleName.ASSUMPTION:
            return self._r_assumption(nid, node, ctx)
        if r in _RECURSION_RULES:
            return self._r_recursion(
                nid,
                node,
                ctx,
                total=r in (RuleName.REC_TOTAL, RuleName.REC_TOTAL_GEN),
                gen=r in (RuleName.REC_PARTIAL_GEN, RuleName.REC_TOTAL_GEN),
            )
        self._fail(nid, f"rule '{node.rule}' is not implemented")

    def _prems(self, nid: str, node: ProofNode, ctx: tuple, n: int):
        if len(node.premises) != n:
            self._fail(
                nid,
                f"rule '{node.rule.value}' takes {n} premise(s), "
                f"found {len(node.premises)}",
            )
        used = frozenset()
        triples = []
        for pid in node.premises:
            used |= self.check_node(pid, ctx)
            triples.append(self.s.nodes[pid].triple)
        return used, triples

    def _eq_f(self, nid: str, got: Expr, want: Expr, what: str):
        if got != want:
            self._fail(
                nid,
                f"{what} does not match the rule scheme: expected "
                f"{expr_to_str(want)}, found {expr_to_str(got)}",
            )

    def _eq_s(self, nid: str, got: StateExpr, want: StateExpr, what: str):
        if got != want:
            self._fail(
                nid,
                f"{what} does not match the rule scheme: expected "
                f"{state_to_str(want)}, found {state_to_str(got)}",
            )

    def _eq_c(self, nid: str, got: Circuit, want: Circuit, what: str):
        if not circuits_equal(got, want):
            self._fail(
                nid,
                f"{what} does not match the rule scheme: expected "
                f"`{to_source(want).strip()}`",
            )

    def _sigmas(self, f: Expr) -> Iterator:
        """Domain states satisfying f; states where f fails to evaluate
        are outside its intended guard and are skipped."""
        for sigma in self.s.dom.states():
            try:
                sat = holds(f, sigma)
            except EvalError:
                continue
            if sat:
                yield sigma

    def _change(self, c: Circuit) -> frozenset:
        return change(c, self.s.decls)

    def _reachable(self, c: Circuit) -> frozenset:
        seen: set = set()

        def go(cc: Circuit):
            match cc:
                case Call(name, _):
                    if name in seen or name not in self.dmap:
                        return
                    seen.add(name)
                    go(self.dmap[name].body)
                case Seq(a, b):
                    go(a)
                    go(b)
                case If(_, a, b):
                    go(a)
                    go(b)
                case QIf(_, a, b):
                    go(a)
                    go(b)
                case Block(_, _, b):
                    go(b)
                case _:
                    pass

        go(c)
        return frozenset(seen)

    def _proc_reads(self, c: Circuit) -> frozenset:
        """Classical variables mentioned inside procedures reachable from
        c, beyond their own formals.  Substituting such a variable in a
        triple would silently change what the called code does."""
        out: frozenset = frozenset()
        for name in self._reachable(c):
            d = self.dmap[name]
            out |= circuit_vars(d.body) - frozenset(d.formals)
        return out

    ### cell disjointness, symbolic with a numeric fallback

    def _cells_disjoint(
        self, nid: str, chi: StateExpr, cmd: Circuit, pre_f: Expr, what: str
    ):
        facts = guard_facts(pre_f, True)
        groups = state_atom_groups(chi)
        if groups is not None:
            try:
                fp = footprint_of(cmd, self.s.decls, self.qv_sum)
            except AnalysisError:
                fp = None
            if fp is not None and all(
                any(atoms_disjoint(m, fa, facts) for m in grp)
                for grp in groups
                for fa in fp
            ):
                return
        if self.strict:
            self._fail(
                nid,
                f"{what}: disjointness cannot be settled by index arithmetic "
                "and strict mode forbids the per-state sweep",
            )
        for sigma in self._sigmas(pre_f):
            try:
                cells = set(eval_state(chi, sigma).registry.cells)
                touched = concrete_cells(cmd, sigma, self.s.decls)
            except (StateError, AnalysisError, EvalError, QStateError) as e:
                self._fail(nid, f"{what}: sweep failed at {_sigma_str(sigma)}: {e}")
            if cells & touched:
                self._fail(
                    nid,
                    f"{what}: shares cells {sorted(cells & touched)} with the "
                    f"command at {_sigma_str(sigma)}",
                )

    def _coin_disjoint(self, nid: str, coin: QVarRef, branch: Circuit, pre_f: Expr):
        facts = guard_facts(pre_f, True)
        try:
            catom = ref_atom(coin)
        except AnalysisError:
            catom = None
        if catom is not None:
            try:
                fp = footprint_of(branch, self.s.decls, self.qv_sum)
            except AnalysisError:
                fp = None
            if fp is not None and all(atoms_disjoint(catom, fa, facts) for fa in fp):
                return
        if self.strict:
            self._fail(
                nid,
                "coin disjointness cannot be settled by index arithmetic "
                "and strict mode forbids the per-state sweep",
            )
        for sigma in self._sigmas(pre_f):
            try:
                cc = concrete_ref(coin, sigma)
                touched = concrete_cells(branch, sigma, self.s.decls)
            except (AnalysisError, EvalError) as e:
                self._fail(
                    nid, f"coin disjointness sweep failed at {_sigma_str(sigma)}: {e}"
                )
            if cc in touched:
                self._fail(
                    nid,
                    f"a branch touches its own coin {coin} at {_sigma_str(sigma)}",
                )

    ### axioms

    def _r_skip(self, nid, node, ctx):
        t = node.triple
        if not isinstance(t.cmd, Skip):
            self._fail(nid, "conclusion command must be skip")
        self._eq_f(nid, t.post_f, t.pre_f, "postcondition formula")
        self._eq_s(nid, t.post_s, t.pre_s, "postcondition state")
        return frozenset()

    def _r_assign(self, nid, node, ctx):
        t = node.triple
        match t.cmd:
            case Assign(xs, ts):
                pass
            case _:
                self._fail(nid, "conclusion command must be an assignment")
        m = dict(zip(xs, ts))
        self._eq_f(nid, t.pre_f, subst(t.post_f, m), "precondition formula")
        self._eq_s(nid, t.pre_s, subst_state(t.post_s, m), "precondition state")
        return frozenset()

    def _r_gate(self, nid, node, ctx):
        t = node.triple
        match t.cmd:
            case Gate(g, params, qargs):
                pass
            case _:
                self._fail(nid, "conclusion command must be a gate application")
        self._eq_f(nid, t.post_f, t.pre_f, "postcondition formula")
        for sigma in self._sigmas(t.pre_f):
            where = _sigma_str(sigma)
            try:
                pvals = tuple(eval_expr(p, sigma) for p in params)
                u = self.s.gates.matrix(g, pvals)
                cells = [concrete_ref(r, sigma) for r in qargs]
            except (EvalError, GateError, AnalysisError) as e:
                self._fail(nid, f"gate does not evaluate at {where}: {e}")
            if len(set(cells)) != len(cells):
                self._fail(nid, f"gate operands collide at {where}")
            try:
                phi = eval_state(t.pre_s, sigma).extend(cells)
                out = phi.apply(u, cells)
                psi = eval_state(t.post_s, sigma)
            except (StateError, QStateError) as e:
                self._fail(nid, f"state does not evaluate at {where}: {e}")
            if not out.equal_to(psi, self.s.tol):
                self._fail(
                    nid,
                    f"postcondition state is not the gate's image at {where}",
                )
        return frozenset()

    def _r_invariance(self, nid, node, ctx):
        t = node.triple
        self._eq_f(nid, t.post_f, t.pre_f, "postcondition formula")
        self._eq_s(nid, t.post_s, t.pre_s, "postcondition state")
        chg = self._change(t.cmd)
        if free_vars(t.pre_f) & chg:
            self._fail(nid, "the command assigns a variable the formula depends on")
        if state_free_vars(t.pre_s) & chg:
            self._fail(nid, "the command assigns a variable the state depends on")
        self._cells_disjoint(nid, t.pre_s, t.cmd, t.pre_f, "invariant state")
        return frozenset()

    def _r_assumption(self, nid, node, ctx):
        for i, entry in enumerate(ctx):
            if entry.triple == node.triple:
                return frozenset({i})
        self._fail(nid, "no assumption in scope matches this conclusion")

    ### structural rules

    def _r_seq(self, nid, node, ctx):
        t = node.triple
        match t.cmd:
            case Seq(first, second):
                pass
            case _:
                self._fail(nid, "conclusion command must be a sequence")
        used, (p0, p1) = self._prems(nid, node, ctx, 2)
        self._eq_c(nid, p0.cmd, first, "first premise command")
        self._eq_c(nid, p1.cmd, second, "second premise command")
        self._eq_f(nid, p0.pre_f, t.pre_f, "first premise precondition formula")
        self._eq_s(nid, p0.pre_s, t.pre_s, "first premise precondition state")
        self._eq_f(nid, p1.pre_f, p0.post_f, "intermediate formula")
        self._eq_s(nid, p1.pre_s, p0.post_s, "intermediate state")
        self._eq_f(nid, p1.post_f, t.post_f, "second premise postcondition formula")
        self._eq_s(nid, p1.post_s, t.post_s, "second premise postcondition state")
        return used

    def _r_if(self, nid, node, ctx):
        t = node.triple
        match t.cmd:
            case If(b, c_then, c_else):
                pass
            case _:
                self._fail(nid, "conclusion command must be a conditional")
        used, (p0, p1) = self._prems(nid, node, ctx, 2)
        self._eq_c(nid, p0.cmd, c_then, "then-premise command")
        self._eq_c(nid, p1.cmd, c_else, "else-premise command")
        self._eq_f(nid, p0.pre_f, And(t.pre_f, b), "then-premise precondition formula")
        self._eq_f(
            nid, p1.pre_f, And(t.pre_f, Not(b)), "else-premise precondition formula"
        )
        for p, side in ((p0, "then"), (p1, "else")):
            self._eq_s(nid, p.pre_s, t.pre_s, f"{side}-premise precondition state")
            self._eq_f(nid, p.post_f, t.post_f, f"{side}-premise postcondition formula")
            self._eq_s(nid, p.post_s, t.post_s, f"{side}-premise postcondition state")
        return used

    def _r_qif(self, nid, node, ctx, pure: bool):
        t = node.triple
        match t.cmd:
            case QIf(coin, c0, c1):
                pass
            case _:
                self._fail(nid, "conclusion command must be a quantum alternation")
        if len(coin.idx) != 1:
            self._fail(nid, "the coin must be a single array cell")
        if len(node.coeffs) != 2:
            self._fail(nid, "rule needs exactly two branch coefficients")
        used, (p0, p1) = self._prems(nid, node, ctx, 2)
        self._eq_c(nid, p0.cmd, c0, "zero-branch premise command")
        self._eq_c(nid, p1.cmd, c1, "one-branch premise command")
        for p, side in ((p0, "zero"), (p1, "one")):
            self._eq_f(nid, p.pre_f, t.pre_f, f"{side}-branch precondition formula")
            self._eq_f(nid, p.post_f, t.post_f, f"{side}-branch postcondition formula")
        d0, d1 = node.coeffs
        idx = coin.idx[0]

        def combined(s0: StateExpr, s1: StateExpr) -> StateExpr:
            return SumS(
                (
                    (d0, TensorS((CellState(coin.name, idx, CNum(1), CNum(0)), s0))),
                    (d1, TensorS((CellState(coin.name, idx, CNum(0), CNum(1)), s1))),
                )
            )

        self._eq_s(nid, t.pre_s, combined(p0.pre_s, p1.pre_s), "precondition state")
        self._eq_s(nid, t.post_s, combined(p0.post_s, p1.post_s), "postcondition state")
        chg0 = self._change(c0)
        chg1 = self._change(c1)
        if pure and (chg0 or chg1):
            self._fail(
                nid,
                "rule 'qif-pure' needs branches that leave the classical "
                f"state untouched; these assign {sorted(chg0 | chg1)}",
            )
        chg = chg0 | chg1
        if cv_of_qref(coin) & chg:
            self._fail(nid, "a branch assigns a variable the coin's index depends on")
        for d in node.coeffs:
            if coeff_free_vars(d) & chg:
                self._fail(
                    nid, "a branch assigns a variable a branch coefficient depends on"
                )
        self._coin_disjoint(nid, coin, c0, t.pre_f)
        self._coin_disjoint(nid, coin, c1, t.pre_f)
        return used

    def _r_block(self, nid, node, ctx):
        t = node.triple
        match t.cmd:
            case Block(xs, ts, body):
                pass
            case _:
                self._fail(nid, "conclusion command must be a local block")
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._eq_c(nid, p.cmd, body, "premise command")
        xset = frozenset(xs)
        if ts == tuple(Var(x) for x in xs):
            # Identity-initialized locals shadow equally-named outer
            # variables with the same values; if the body never assigns
            # them and the domain always binds them, the block is the
            # body, so the premise is the same triple.
            if xset & self._change(body):
                self._fail(
                    nid,
                    "identity-initialized locals must not be assigned by the body",
                )
            if not xset <= self.s.dom.var_names():
                self._fail(
                    nid,
                    "identity-initialized locals must be bound by the domain",
                )
            self._eq_f(nid, p.pre_f, t.pre_f, "premise precondition formula")
        else:
            acc = t.pre_f
            for x, tm in zip(xs, ts):
                acc = And(acc, Cmp("=", Var(x), tm))
            self._eq_f(nid, p.pre_f, acc, "premise precondition formula")
            tvars = frozenset().union(*(free_vars(tm) for tm in ts)) if ts else frozenset()
            if xset & free_vars(t.pre_f):
                self._fail(nid, "locals must not occur in the precondition formula")
            if xset & tvars:
                self._fail(nid, "locals must not occur in their own initializers")
            if xset & state_free_vars(t.pre_s):
                self._fail(nid, "locals must not occur in the precondition state")
            if xset & free_vars(t.post_f):
                self._fail(nid, "locals must not occur in the postcondition formula")
            if xset & state_free_vars(t.post_s):
                self._fail(nid, "locals must not occur in the postcondition state")
        self._eq_s(nid, p.pre_s, t.pre_s, "premise precondition state")
        self._eq_f(nid, p.post_f, t.post_f, "premise postcondition formula")
        self._eq_s(nid, p.post_s, t.post_s, "premise postcondition state")
        return used

    def _r_frame(self, nid, node, ctx):
        t = node.triple
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._eq_c(nid, p.cmd, t.cmd, "premise command")
        self._eq_f(nid, p.pre_f, t.pre_f, "premise precondition formula")
        self._eq_f(nid, p.post_f, t.post_f, "premise postcondition formula")
        match t.pre_s:
            case TensorS((left, right)):
                pass
            case _:
                self._fail(
                    nid,
                    "precondition state must be a two-part tensor of the "
                    "premise state and the framed factor",
                )
        if left == p.pre_s:
            chi = right
            want_post = TensorS((p.post_s, chi))
        elif right == p.pre_s:
            chi = left
            want_post = TensorS((chi, p.post_s))
        else:
            self._fail(nid, "neither tensor factor matches the premise state")
        self._eq_s(nid, t.post_s, want_post, "postcondition state")
        if state_free_vars(chi) & self._change(t.cmd):
            self._fail(
                nid, "the command assigns a variable the framed factor depends on"
            )
        self._cells_disjoint(nid, chi, t.cmd, t.pre_f, "framed factor")
        return used

    def _r_linearity(self, nid, node, ctx):
        t = node.triple
        k = len(node.premises)
        if k < 1:
            self._fail(nid, "linearity needs at least one premise")
        if len(node.coeffs) != k:
            self._fail(nid, "linearity needs one coefficient per premise")
        used, ps = self._prems(nid, node, ctx, k)
        for i, p in enumerate(ps):
            self._eq_c(nid, p.cmd, t.cmd, f"premise {i} command")
            self._eq_f(nid, p.pre_f, t.pre_f, f"premise {i} precondition formula")
            self._eq_f(nid, p.post_f, t.post_f, f"premise {i} postcondition formula")
        self._eq_s(
            nid,
            t.pre_s,
            SumS(tuple((node.coeffs[i], ps[i].pre_s) for i in range(k))),
            "precondition state",
        )
        self._eq_s(
            nid,
            t.post_s,
            SumS(tuple((node.coeffs[i], ps[i].post_s) for i in range(k))),
            "postcondition state",
        )
        chg = self._change(t.cmd)
        for d in node.coeffs:
            if coeff_free_vars(d) & chg:
                self._fail(nid, "the command assigns a variable a coefficient depends on")
        return used

    def _r_consequence(self, nid, node, ctx):
        t = node.triple
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._eq_c(nid, p.cmd, t.cmd, "premise command")
        out = check_entailment(
            (t.pre_f, t.pre_s), (p.pre_f, p.pre_s), self.s.dom, self.s.tol
        )
        if not out:
            self._fail(nid, f"precondition entailment failed: {out.detail}")
        out = check_entailment(
            (p.post_f, p.post_s), (t.post_f, t.post_s), self.s.dom, self.s.tol
        )
        if not out:
            self._fail(nid, f"postcondition entailment failed: {out.detail}")
        return used

    def _r_invariance_conj(self, nid, node, ctx):
        t = node.triple
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._eq_c(nid, p.cmd, t.cmd, "premise command")
        match t.pre_f:
            case And(a, extra) if a == p.pre_f:
                pass
            case _:
                self._fail(
                    nid,
                    "precondition formula must conjoin the premise's with the "
                    "invariant",
                )
        self._eq_f(nid, t.post_f, And(p.post_f, extra), "postcondition formula")
        self._eq_s(nid, t.pre_s, p.pre_s, "precondition state")
        self._eq_s(nid, t.post_s, p.post_s, "postcondition state")
        if free_vars(extra) & self._change(t.cmd):
            self._fail(nid, "the command assigns a variable the invariant depends on")
        return used

    def _r_disjunction(self, nid, node, ctx):
        t = node.triple
        used, (p0, p1) = self._prems(nid, node, ctx, 2)
        for i, p in enumerate((p0, p1)):
            self._eq_c(nid, p.cmd, t.cmd, f"premise {i} command")
            self._eq_s(nid, p.pre_s, t.pre_s, f"premise {i} precondition state")
            self._eq_f(nid, p.post_f, t.post_f, f"premise {i} postcondition formula")
            self._eq_s(nid, p.post_s, t.post_s, f"premise {i} postcondition state")
        self._eq_f(nid, t.pre_f, Or(p0.pre_f, p1.pre_f), "precondition formula")
        return used

    def _r_conjunction(self, nid, node, ctx):
        t = node.triple
        used, (p0, p1) = self._prems(nid, node, ctx, 2)
        for i, p in enumerate((p0, p1)):
            self._eq_c(nid, p.cmd, t.cmd, f"premise {i} command")
            self._eq_f(nid, p.pre_f, t.pre_f, f"premise {i} precondition formula")
            self._eq_s(nid, p.pre_s, t.pre_s, f"premise {i} precondition state")
            self._eq_s(nid, p.post_s, t.post_s, f"premise {i} postcondition state")
        self._eq_f(nid, t.post_f, And(p0.post_f, p1.post_f), "postcondition formula")
        return used

    def _r_exists(self, nid, node, ctx):
        t = node.triple
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._eq_c(nid, p.cmd, t.cmd, "premise command")
        match t.pre_f:
            case Exists(y, lo, hi, body) if body == p.pre_f:
                pass
            case _:
                self._fail(
                    nid,
                    "precondition formula must quantify the premise's "
                    "precondition",
                )
        self._eq_f(nid, t.post_f, Exists(y, lo, hi, p.post_f), "postcondition formula")
        self._eq_s(nid, t.pre_s, p.pre_s, "precondition state")
        self._eq_s(nid, t.post_s, p.post_s, "postcondition state")
        if y in circuit_vars(t.cmd) | self._proc_reads(t.cmd):
            self._fail(nid, "the quantified variable occurs in the command")
        if y in state_free_vars(t.pre_s) | state_free_vars(t.post_s):
            self._fail(nid, "the quantified variable occurs in a state")
        bound_vars = free_vars(lo) | free_vars(hi)
        if y in bound_vars:
            self._fail(nid, "the quantifier bounds mention the quantified variable")
        if bound_vars & self._change(t.cmd):
            self._fail(nid, "the command assigns a variable the bounds depend on")
        return used

    def _subst_sides(self, nid: str, cmd: Circuit, m: dict):
        xs = frozenset(m)
        chg = self._change(cmd)
        if xs & chg:
            self._fail(nid, "substituted variables must not be assigned by the command")
        if xs & self._proc_reads(cmd):
            self._fail(
                nid,
                "substituted variables must not occur inside called procedures",
            )
        tvars = frozenset().union(*(free_vars(e) for e in m.values()))
        if tvars & chg:
            self._fail(
                nid, "replacement terms depend on variables the command assigns"
            )

    def _r_substitution(self, nid, node, ctx):
        t = node.triple
        if not node.mapping:
            self._fail(nid, "substitution needs a non-empty mapping")
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._gate_adaptation(nid, used, ctx)
        m = dict(node.mapping)
        self._eq_c(nid, t.cmd, p.cmd, "conclusion command")
        if frozenset(m) & (circuit_vars(t.cmd) | self._proc_reads(t.cmd)):
            self._fail(nid, "substituted variables must not occur in the command")
        self._subst_sides(nid, t.cmd, m)
        self._eq_f(nid, t.pre_f, subst(p.pre_f, m), "precondition formula")
        self._eq_s(nid, t.pre_s, subst_state(p.pre_s, m), "precondition state")
        self._eq_f(nid, t.post_f, subst(p.post_f, m), "postcondition formula")
        self._eq_s(nid, t.post_s, subst_state(p.post_s, m), "postcondition state")
        return used

    def _r_instantiation(self, nid, node, ctx):
        t = node.triple
        if not node.mapping:
            self._fail(nid, "instantiation needs a non-empty mapping")
        used, (p,) = self._prems(nid, node, ctx, 1)
        self._gate_adaptation(nid, used, ctx)
        m = dict(node.mapping)
        self._eq_c(nid, t.cmd, subst_circuit(p.cmd, m), "conclusion command")
        self._subst_sides(nid, p.cmd, m)
        self._eq_f(nid, t.pre_f, subst(p.pre_f, m), "precondition formula")
        self._eq_s(nid, t.pre_s, subst_state(p.pre_s, m), "precondition state")
        self._eq_f(nid, t.post_f, subst(p.post_f, m), "postcondition formula")
        self._eq_s(nid, t.post_s, subst_state(p.post_s, m), "postcondition state")
        return used

    def _gate_adaptation(self, nid: str, used: frozenset, ctx: tuple):
        for i in used:
            if not ctx[i].instantiable:
                self._fail(
                    nid,
                    "the premise relies on a fixed recursion assumption, "
                    "which must be used verbatim",
                )

    ### recursion

    def _r_recursion(self, nid, node, ctx, total: bool, gen: bool):
        k = len(node.specs)
        if k == 0:
            self._fail(nid, "recursion must list the specifications it proves")
        if len(node.premises) != k:
            self._fail(nid, "recursion needs one premise per specification")
        if not 0 <= node.which < k:
            self._fail(nid, "the spec index is out of range")
        if node.triple != node.specs[node.which]:
            self._fail(nid, "conclusion must be the selected specification")
        calls = []
        for i, sp in enumerate(node.specs):
            match sp.cmd:
                case Call(pname, args):
                    pass
                case _:
                    self._fail(nid, f"specification {i} must conclude a procedure call")
            if pname not in self.dmap:
                self._fail(nid, f"call to undeclared procedure '{pname}'")
            d = self.dmap[pname]
            if len(args) != len(d.formals):
                self._fail(
                    nid,
                    f"'{pname}' takes {len(d.formals)} argument(s), "
                    f"specification {i} passes {len(args)}",
                )
            calls.append((d, args))
        if total:
            self._recursion_rank_checks(nid, node, calls)
        entries = []
        for i, sp in enumerate(node.specs):
            pre = And(sp.pre_f, Cmp("<", node.ranks[i], Var(node.z))) if total else sp.pre_f
            entries.append(
                _CtxEntry(HoareTriple(pre, sp.pre_s, sp.cmd, sp.post_f, sp.post_s), gen)
            )
        inner = ctx + tuple(entries)
        base = len(ctx)
        used_out: frozenset = frozenset()
        for i, pid in enumerate(node.premises):
            u = self.check_node(pid, inner)
            used_out |= frozenset(j for j in u if j < base)
            p = self.s.nodes[pid].triple
            sp = node.specs[i]
            d, args = calls[i]
            want_pre = (
                And(sp.pre_f, Cmp("=", node.ranks[i], Var(node.z))) if total else sp.pre_f
            )
            self._eq_f(nid, p.pre_f, want_pre, f"premise {i} precondition formula")
            self._eq_s(nid, p.pre_s, sp.pre_s, f"premise {i} precondition state")
            self._eq_f(nid, p.post_f, sp.post_f, f"premise {i} postcondition formula")
            self._eq_s(nid, p.post_s, sp.post_s, f"premise {i} postcondition state")
            if d.formals and circuits_equal(p.cmd, d.body):
                self._fail(
                    nid,
                    f"premise {i} is about the bare body; it must bind the "
                    "formals to the call arguments in a local block",
                )
            if not (
                circuits_equal(p.cmd, Block(d.formals, args, d.body))
                or (not d.formals and circuits_equal(p.cmd, d.body))
            ):
                self._fail(
                    nid,
                    f"premise {i} command must be the body with formals bound "
                    "to the call arguments",
                )
        return used_out

    def _recursion_rank_checks(self, nid, node, calls):
        if len(node.ranks) != len(node.specs):
            self._fail(nid, "total recursion needs one rank expression per spec")
        z = node.z
        if not z:
            self._fail(nid, "total recursion needs a bound variable")
        zrange = None
        for name, shape in self.s.dom.vars:
            if name == z:
                zrange = shape
        if not isinstance(zrange, IntRange):
            self._fail(nid, f"the bound variable '{z}' must be an integer domain variable")
        for i, sp in enumerate(node.specs):
            taken = sp.free_classical_vars() | circuit_vars(sp.cmd)
            taken |= free_vars(node.ranks[i])
            taken |= self._proc_reads(sp.cmd)
            if z in taken:
                self._fail(
                    nid,
                    f"the bound variable '{z}' must be fresh for specification {i}",
                )
            for sigma in self._sigmas(sp.pre_f):
                try:
                    r = eval_expr(node.ranks[i], sigma)
                except EvalError as e:
                    self._fail(
                        nid, f"rank does not evaluate at {_sigma_str(sigma)}: {e}"
                    )
                if not isinstance(r, int) or isinstance(r, bool):
                    self._fail(
                        nid, f"rank is {r!r} at {_sigma_str(sigma)}, not an integer"
                    )
                if r < 0:
                    self._fail(nid, f"rank is negative at {_sigma_str(sigma)}")
                if not zrange.lo <= r <= zrange.hi:
                    self._fail(
                        nid,
                        f"the domain range of '{z}' does not cover rank {r} "
                        f"(at {_sigma_str(sigma)})",
                    )


def check_proof(script: ProofScript, strict: bool = False) -> ProofReport:
    """Check every root of the script; the first broken rule stops the run."""
    checker = _Checker(script, strict)
    errors: list = []
    try:
        checker.check()
    except KernelError as e:
        errors.append((e.node_id, e.message))
    return ProofReport(
        ok=not errors,
        mode=script.mode,
        strict=strict,
        nodes_checked=checker.count,
        roots=script.roots,
        errors=tuple(errors),
    )


def audit_soundness(
    script: ProofScript, fuel: int | None = None, tol: float | None = None
) -> tuple:
    """Replay every conclusion in the script against the interpreter.

    Each node's triple is checked directly over the script's domain, with
    no reference to the rules that derived it; assumption nodes restate a
    specification the recursion rule proves, so they are expected to hold
    as well.  Returns the violations as ((node id, detail), ...); an
    inconclusive check (out of fuel) is reported too, since it fails to
    confirm the node.
    """
    out = []
    for nid in sorted(script.nodes):
        node = script.nodes[nid]
        res = check_triple(
            node.triple,
            script.dom,
            script.decls,
            script.gates,
            mode=script.mode,
            fuel=script.fuel if fuel is None else fuel,
            tol=script.tol if tol is None else tol,
        )
        if res.status == "failed":
            out.append((nid, res.detail))
        elif res.status == "unknown":
            out.append((nid, f"inconclusive: {res.detail}"))
    return tuple(out)


### script loading


def _triple_from_json(obj: dict, gates: GateTable) -> HoareTriple:
    pre = obj["pre"]
    post = obj["post"]
    return HoareTriple(
        parse_formula(pre[0]),
        parse_state(pre[1]),
        parse_circuit(obj["cmd"], gates),
        parse_formula(post[0]),
        parse_state(post[1]),
    )


def script_from_json(obj: dict) -> ProofScript:
    if obj.get("format") != FORMAT_TAG:
        raise ValueError(
            f"not a proof script: format tag is {obj.get('format')!r}, "
            f"expected {FORMAT_TAG!r}"
        )
    mode = obj.get("mode", "partial")
    if mode not in ("partial", "total"):
        raise ValueError(f"mode must be 'partial' or 'total', not {mode!r}")
    dom = VerificationDomain.from_json(obj["domain"])
    gates = builtin_gates()
    if obj.get("gates"):
        gates = gates.copy()
    for name, spec in obj.get("gates", {}).items():
        rows = spec["matrix"]
        mat = np.array(
            [[complex(e[0], e[1]) for e in row] for row in rows], dtype=complex
        )
        dim = mat.shape[0]
        n = dim.bit_length() - 1
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or 2**n != dim:
            raise ValueError(f"gate '{name}': matrix must be square, power-of-two size")
        gates.register(GateDef(name, 0, n, lambda m=mat: m))
    decls: tuple = ()
    decl_src = obj.get("declarations", "")
    if decl_src.strip():
        res = parse(decl_src, gates)
        if res.main is not None:
            raise ValueError("the declarations section must contain procedures only")
        decls = res.decls
    nodes: dict = {}
    for nid, nd in obj["nodes"].items():
        try:
            rule = RuleName(nd["rule"])
        except ValueError:
            raise ValueError(f"node {nid}: unknown rule {nd['rule']!r}") from None
        premises = tuple(nd.get("premises", ()))
        coeffs = tuple(parse_coeff(c) for c in nd.get("coeffs", ()))
        mapping = tuple(
            sorted((x, parse_expr(e)) for x, e in nd.get("mapping", {}).items())
        )
        specs = tuple(_triple_from_json(s, gates) for s in nd.get("specs", ()))
        which = int(nd.get("which", 0))
        ranks = tuple(parse_expr(r) for r in nd.get("ranks", ()))
        z = nd.get("z", "")
        if rule in _RECURSION_RULES:
            if not specs:
                raise ValueError(f"node {nid}: recursion nodes need 'specs'")
            if not 0 <= which < len(specs):
                raise ValueError(f"node {nid}: 'which' is out of range")
            triple = specs[which]
        else:
            triple = _triple_from_json(nd["triple"], gates)
        nodes[nid] = ProofNode(
            rule, triple, premises, coeffs, mapping, specs, which, ranks, z
        )
    roots = tuple(obj.get("roots", ()))
    if not roots:
        raise ValueError("the proof script lists no roots")
    for rid in roots:
        if rid not in nodes:
            raise ValueError(f"root {rid!r} is not a node")
    return ProofScript(
        mode=mode,
        dom=dom,
        gates=gates,
        decls=decls,
        nodes=nodes,
        roots=roots,
        fuel=int(obj.get("fuel", DEFAULT_FUEL)),
        tol=float(obj.get("tol", 1e-9)),
    )


def load_script(path) -> ProofScript:
    with open(path, "r", encoding="utf-8") as f:
        return script_from_json(json.load(f))
