"""Small-step operational interpreter for circuits.

A configuration is a command (or None once execution has finished), a
classical state, and a quantum state.  :func:`step` performs exactly one
transition and labels it with the rule that fired:

* SK   skip finishes.
* AS   a (simultaneous) classical assignment, including the restoring
       assignment a block leaves behind.
* GA   a gate application; its cells must be allocated distinct, else
       the configuration fails.
* SC   a step inside the first command of a sequence.
* IF   a classical branch is chosen.
* QIF  quantum branching: the state splits on the coin cell, both
       branches run to completion from their half (even a branch whose
       amplitude is zero), and the halves recombine.  The branches must
       finish in the same classical state; the coin cell must stay out
       of their reach, which well-definedness guarantees statically.
* BS   a block unfolds into init-assignment; body; restore.
* RC   a procedure call unfolds into a block binding the formals.

Quantum branching is one outer transition whose premise runs whole
sub-executions, so a trace stays linear.  Registers grow on demand: a
gate or coin touching an unallocated cell allocates it in |0>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .analysis import AnalysisError, concrete_ref
from .classical import ClassicalState, Const, EvalError, eval_expr, holds
from .gates import GateTable, builtin_gates
from .qstate import QuantumState, Registry, align
from .syntax import (
    Assign,
    Block,
    Call,
    Circuit,
    Gate,
    If,
    QIf,
    Seq,
    Skip,
    to_source,
)

DEFAULT_FUEL = 10**6


class InterpError(Exception):
    pass


@dataclass(frozen=True)
class _Forget:
    """Internal command: drop bindings a block's locals shadowed.

    The restore step of a block is an assignment back to the saved
    values; a local that was unbound on entry has nothing to assign, so
    the unfolding leaves this marker instead."""

    vars: tuple


@dataclass(frozen=True)
class Config:
    circuit: object  # Circuit | _Forget spine | None when finished
    sigma: ClassicalState
    state: QuantumState


@dataclass(frozen=True)
class Failure:
    reason: str  # "dist-violation" | "unbound" | "qif-classical-divergence"
    detail: str

    def __str__(self):
        return f"{self.reason}: {self.detail}"


@dataclass
class RunResult:
    status: str  # "done" | "failed" | "fuel"
    config: Config
    failure: Failure | None = None
    steps: int = 0
    trace: list = field(default_factory=list)  # [(label, Config)]

    @property
    def sigma(self) -> ClassicalState:
        return self.config.sigma

    @property
    def state(self) -> QuantumState:
        return self.config.state


class _OutOfFuel(Exception):
    pass


class StepFailed(Exception):
    """Raised by :func:`step` when the configuration fails; :func:`run`
    catches it and reports the failure in its result instead."""

    def __init__(self, failure: Failure):
        super().__init__(str(failure))
        self.failure = failure


def render(c) -> str:
    """One-line rendering of a command spine, internal markers included."""
    if c is None:
        return "(done)"
    if isinstance(c, _Forget):
        return "forget " + ", ".join(c.vars)
    if isinstance(c, Seq):
        return f"{render(c.first)}; {render(c.second)}"
    return " ".join(to_source(c).split())


def _decl_map(decls) -> dict:
    if isinstance(decls, Mapping):
        return dict(decls)
    return {d.name: d for d in decls}


class _Machine:
    def __init__(self, dmap, gates: GateTable, budget: int, max_cells=None):
        self.dmap = dmap
        self.gates = gates
        self.budget = budget
        self.max_cells = max_cells

    def _burn(self):
        if self.budget <= 0:
            raise _OutOfFuel()
        self.budget -= 1

    def step(self, cfg: Config) -> tuple[Config, str]:
        """One transition.  Raises _Fail or _OutOfFuel instead of returning
        a next configuration when the run cannot continue."""
        self._burn()
        c, sigma, state = cfg.circuit, cfg.sigma, cfg.state
        match c:
            case Skip():
                return Config(None, sigma, state), "SK"
            case _Forget(vars):
                kept = {k: v for k, v in sigma.items() if k not in vars}
                return Config(None, ClassicalState(kept), state), "AS"
            case Assign(vars, terms):
                try:
                    sigma2 = sigma.assign(vars, terms)
                except EvalError as e:
                    raise StepFailed(Failure("unbound", str(e)))
                return Config(None, sigma2, state), "AS"
            case Gate(name, params, qargs):
                try:
                    pvals = tuple(eval_expr(p, sigma) for p in params)
                    cells = [concrete_ref(r, sigma) for r in qargs]
                except (EvalError, AnalysisError) as e:
                    raise StepFailed(Failure("unbound", str(e)))
                if len(set(cells)) != len(cells):
                    raise StepFailed(
                        Failure(
                            "dist-violation",
                            f"gate {name} on coinciding cells "
                            + ", ".join(f"{n}{list(i)}" for n, i in cells),
                        )
                    )
                u = self.gates.matrix(name, pvals)
                state2 = state.extend(cells, max_cells=self.max_cells)
                return Config(None, sigma, state2.apply(u, cells)), "GA"
            case Seq(first, second):
                nxt, _ = self.step(Config(first, sigma, state))
                rest = second if nxt.circuit is None else Seq(nxt.circuit, second)
                return Config(rest, nxt.sigma, nxt.state), "SC"
            case If(guard, then_c, else_c):
                try:
                    branch = then_c if holds(guard, sigma) else else_c
                except EvalError as e:
                    raise StepFailed(Failure("unbound", str(e)))
                return Config(branch, sigma, state), "IF"
            case QIf(coin, zero, one):
                try:
                    cell = concrete_ref(coin, sigma)
                except (EvalError, AnalysisError) as e:
                    raise StepFailed(Failure("unbound", str(e)))
                state = state.extend([cell], max_cells=self.max_cells)
                pos = state.registry.position(cell)
                a0, s0, a1, s1 = state.split(cell)
                f0 = self._run_to_end(Config(zero, sigma, s0))
                f1 = self._run_to_end(Config(one, sigma, s1))
                if f0.sigma != f1.sigma:
                    raise StepFailed(
                        Failure(
                            "qif-classical-divergence",
                            f"branches finish in different classical states: "
                            f"{f0.sigma!r} vs {f1.sigma!r}",
                        )
                    )
                t0, t1 = align(f0.state, f1.state, max_cells=self.max_cells)
                out = QuantumState.recombine(cell, pos, a0, t0, a1, t1)
                return Config(None, f0.sigma, out), "QIF"
            case Block(vars, terms, body):
                bound = [v for v in vars if v in sigma]
                spine: object = body
                if len(bound) < len(vars):
                    spine = Seq(spine, _Forget(tuple(v for v in vars if v not in sigma)))
                if bound:
                    spine = Seq(
                        spine,
                        Assign(tuple(bound), tuple(Const(sigma[v]) for v in bound)),
                    )
                return Config(Seq(Assign(vars, terms), spine), sigma, state), "BS"
            case Call(name, args):
                d = self.dmap.get(name)
                if d is None:
                    raise StepFailed(Failure("unbound", f"procedure '{name}' is not declared"))
                if len(args) != len(d.formals):
                    raise StepFailed(
                        Failure(
                            "unbound",
                            f"procedure '{name}' takes {len(d.formals)} "
                            f"argument(s), got {len(args)}",
                        )
                    )
                return Config(Block(d.formals, tuple(args), d.body), sigma, state), "RC"
        raise InterpError(f"not a command: {c!r}")

    def _run_to_end(self, cfg: Config) -> Config:
        while cfg.circuit is not None:
            cfg, _ = self.step(cfg)
        return cfg


def step(cfg: Config, decls=(), gates: GateTable | None = None, fuel: int = DEFAULT_FUEL):
    """One public transition: returns (next config, rule label).

    Raises :class:`StepFailed` when the configuration fails and
    InterpError on malformed input; :func:`run` wraps all of this."""
    m = _Machine(_decl_map(decls), gates or builtin_gates(), fuel)
    return m.step(cfg)


def run(
    circuit: Circuit,
    sigma: ClassicalState | None = None,
    state: QuantumState | None = None,
    decls=(),
    gates: GateTable | None = None,
    fuel: int = DEFAULT_FUEL,
    trace: bool = False,
    max_cells: int | None = None,
) -> RunResult:
    """Drive a configuration to completion, failure, or fuel exhaustion."""
    cfg = Config(
        circuit,
        sigma if sigma is not None else ClassicalState(),
        state if state is not None else QuantumState.scalar(),
    )
    m = _Machine(_decl_map(decls), gates or builtin_gates(), fuel, max_cells)
    entries = [("--", cfg)] if trace else []
    steps = 0
    while cfg.circuit is not None:
        try:
            cfg, label = m.step(cfg)
        except StepFailed as f:
            return RunResult("failed", cfg, f.failure, steps, entries)
        except _OutOfFuel:
            return RunResult("fuel", cfg, None, steps, entries)
        steps += 1
        if trace:
            entries.append((label, cfg))
    return RunResult("done", cfg, None, steps, entries)


def format_trace(result: RunResult) -> str:
    """Stable text rendering of a traced run (one line per transition)."""
    lines = []
    for i, (label, cfg) in enumerate(result.trace):
        lines.append(f"{i:>3} {label:<4} {render(cfg.circuit)} | {cfg.sigma!r}")
    if result.status == "done":
        lines.append(f"done in {result.steps} step(s)")
    elif result.status == "failed":
        lines.append(f"failed: {result.failure}")
    else:
        lines.append("fuel exhausted")
    return "\n".join(lines) + "\n"


def legitimacy_check(circuit: Circuit, sigma: ClassicalState, decls=(), fuel: int = DEFAULT_FUEL) -> Failure | None:
    """Would this run fail for a classical reason?  Quantum state is
    irrelevant: gate-cell distinctness, guard evaluation, and branch
    agreement depend only on the classical state, so this walks the
    circuit without touching any amplitudes.  Returns the first Failure,
    or None if every step is legitimate."""
    dmap = _decl_map(decls)
    budget = [fuel]

    def walk(c, s: ClassicalState) -> ClassicalState:
        budget[0] -= 1
        if budget[0] < 0:
            raise _OutOfFuel()
        match c:
            case Skip():
                return s
            case Assign(vars, terms):
                try:
                    return s.assign(vars, terms)
                except EvalError as e:
                    raise StepFailed(Failure("unbound", str(e)))
            case Gate(name, params, qargs):
                try:
                    for p in params:
                        eval_expr(p, s)
                    cells = [concrete_ref(r, s) for r in qargs]
                except (EvalError, AnalysisError) as e:
                    raise StepFailed(Failure("unbound", str(e)))
                if len(set(cells)) != len(cells):
                    raise StepFailed(
                        Failure(
                            "dist-violation",
                            f"gate {name} on coinciding cells "
                            + ", ".join(f"{n}{list(i)}" for n, i in cells),
                        )
                    )
                return s
            case Seq(first, second):
                return walk(second, walk(first, s))
            case If(guard, then_c, else_c):
                try:
                    return walk(then_c if holds(guard, s) else else_c, s)
                except EvalError as e:
                    raise StepFailed(Failure("unbound", str(e)))
            case QIf(coin, zero, one):
                try:
                    concrete_ref(coin, s)
                except (EvalError, AnalysisError) as e:
                    raise StepFailed(Failure("unbound", str(e)))
                s0 = walk(zero, s)
                s1 = walk(one, s)
                if s0 != s1:
                    raise StepFailed(
                        Failure(
                            "qif-classical-divergence",
                            f"branches finish in different classical states: "
                            f"{s0!r} vs {s1!r}",
                        )
                    )
                return s0
            case Block(vars, terms, body):
                try:
                    entry = s.assign(vars, terms)
                except EvalError as e:
                    raise StepFailed(Failure("unbound", str(e)))
                after = walk(body, entry)
                restored = dict(after)
                for v in vars:
                    if v in s:
                        restored[v] = s[v]
                    else:
                        restored.pop(v, None)
                return ClassicalState(restored)
            case Call(name, args):
                d = dmap.get(name)
                if d is None:
                    raise StepFailed(Failure("unbound", f"procedure '{name}' is not declared"))
                if len(args) != len(d.formals):
                    raise StepFailed(
                        Failure(
                            "unbound",
                            f"procedure '{name}' takes {len(d.formals)} "
                            f"argument(s), got {len(args)}",
                        )
                    )
                return walk(Block(d.formals, tuple(args), d.body), s)
        raise InterpError(f"not a command: {c!r}")

    try:
        walk(circuit, sigma)
    except StepFailed as f:
        return f.failure
    return None


def extract_unitary(
    circuit: Circuit,
    cells,
    sigma: ClassicalState | None = None,
    decls=(),
    gates: GateTable | None = None,
    fuel: int = DEFAULT_FUEL,
    tol: float = 1e-9,
) -> np.ndarray:
    """The matrix the circuit applies to the given cells (first cell =
    most significant), obtained by running every basis column.

    The circuit may allocate scratch cells during a run, but each must
    come back to |0> so the action restricts to the given cells; anything
    else raises InterpError, as does a failing or non-terminating run."""
    cells = [tuple(c) for c in cells]
    reg = Registry(cells)
    dim = 1 << len(cells)
    out = np.zeros((dim, dim), dtype=np.complex128)
    sigma = sigma if sigma is not None else ClassicalState()
    for col in range(dim):
        v = np.zeros(dim, dtype=np.complex128)
        v[col] = 1.0
        r = run(circuit, sigma, QuantumState(reg, v), decls, gates, fuel=fuel)
        if r.status == "failed":
            raise InterpError(f"run failed on basis column {col}: {r.failure}")
        if r.status == "fuel":
            raise InterpError(f"fuel exhausted on basis column {col}")
        st = r.state
        for extra in [c for c in st.registry if c not in reg]:
            a0, s0, a1, _ = st.split(extra)
            if a1 > tol:
                raise InterpError(
                    f"circuit leaves scratch cell {extra} entangled "
                    f"(weight {a1:.3e}) on basis column {col}"
                )
            st = QuantumState(s0.registry, a0 * s0.vector)
        out[:, col] = st.permuted(reg).vector
    return out
