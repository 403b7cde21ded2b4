"""Worked example programs with reference checks and proof scripts.

Each example ships as a bundle: the program source, numeric test cases
checked against the independent constructions in ``oracles``, a proof
script for the kernel, and a set of deliberately broken script variants
that the kernel must reject.

``names()`` and ``get()`` form the registry the CLI uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np

from ..classical import ClassicalState
from ..gates import GateTable, builtin_gates
from ..interp import RunResult, extract_unitary, run
from ..kernel import ProofScript, check_proof
from ..parser import parse
from ..qstate import QuantumState, Registry
from ..syntax import Declaration

Cell = tuple[str, tuple[int, ...]]


def cell(name: str, *idx: int) -> Cell:
    """A concrete register cell, e.g. cell("q", 3) for q[3]."""
    return (name, tuple(idx))


@dataclass(frozen=True)
class MatrixCase:
    """Compare a circuit's extracted unitary against an expected matrix."""

    label: str
    circuit: str
    cells: tuple[Cell, ...]
    expect: np.ndarray
    sigma: Mapping[str, object] | None = None
    gates: GateTable | None = None
    tol: float = 1e-8


@dataclass(frozen=True)
class StateCase:
    """Run a circuit and compare the final quantum state to a vector."""

    label: str
    circuit: str
    cells: tuple[Cell, ...]
    expect: np.ndarray
    sigma: Mapping[str, object] | None = None
    initial: np.ndarray | None = None
    gates: GateTable | None = None
    tol: float = 1e-9


@dataclass(frozen=True)
class Mutation:
    """A corrupted proof script plus the reason the kernel rejects it."""

    name: str
    reason: str
    expect: str
    script: Callable[[], dict]


@dataclass(frozen=True)
class ExampleBundle:
    name: str
    title: str
    source: str
    proof: Callable[[], dict]
    matrix_cases: Callable[[], Sequence[MatrixCase]]
    state_cases: Callable[[], Sequence[StateCase]]
    mutations: tuple[Mutation, ...] = ()
    gates: GateTable | None = None

    def decls(self) -> tuple[Declaration, ...]:
        return parse(self.source, gates=self.gate_table()).decls

    def gate_table(self) -> GateTable:
        return self.gates if self.gates is not None else builtin_gates()


def load_source(name: str) -> str:
    return (resources.files(__package__) / f"{name}.rqc").read_text()


def load_proof_json(name: str) -> str:
    return (resources.files(__package__) / f"{name}.rqcp").read_text()


def _registry() -> dict[str, ExampleBundle]:
    from . import controlled, ghz, qft, qram, qsp

    mods = (ghz, controlled, qft, qsp, qram)
    return {m.BUNDLE.name: m.BUNDLE for m in mods}


_cache: dict[str, ExampleBundle] | None = None


def names() -> tuple[str, ...]:
    global _cache
    if _cache is None:
        _cache = _registry()
    return tuple(_cache)


def get(name: str) -> ExampleBundle:
    names()
    assert _cache is not None
    if name not in _cache:
        known = ", ".join(_cache)
        raise KeyError(f"no example named {name!r} (known: {known})")
    return _cache[name]


@dataclass(frozen=True)
class CheckOutcome:
    label: str
    ok: bool
    detail: str = ""


def run_state_case(bundle: ExampleBundle, case: StateCase) -> CheckOutcome:
    gates = case.gates if case.gates is not None else bundle.gate_table()
    parsed = parse(bundle.source + "\n" + case.circuit, gates=gates)
    reg = Registry(tuple(case.cells))
    if case.initial is not None:
        state = QuantumState(reg, np.asarray(case.initial, dtype=complex))
    else:
        state = QuantumState.zero(reg)
    result: RunResult = run(
        parsed.main,
        sigma=ClassicalState(dict(case.sigma or {})),
        state=state,
        decls=parsed.decls,
        gates=gates,
    )
    if result.status != "done":
        return CheckOutcome(case.label, False, f"run ended with status {result.status}")
    want = QuantumState(reg, np.asarray(case.expect, dtype=complex))
    if result.state.equal_to(want, tol=case.tol):
        return CheckOutcome(case.label, True)
    return CheckOutcome(case.label, False, "final state differs from the reference")


def run_matrix_case(bundle: ExampleBundle, case: MatrixCase) -> CheckOutcome:
    gates = case.gates if case.gates is not None else bundle.gate_table()
    parsed = parse(bundle.source + "\n" + case.circuit, gates=gates)
    got = extract_unitary(
        parsed.main,
        cells=list(case.cells),
        sigma=ClassicalState(dict(case.sigma or {})),
        decls=parsed.decls,
        gates=gates,
    )
    err = float(np.max(np.abs(got - np.asarray(case.expect, dtype=complex))))
    if err <= case.tol:
        return CheckOutcome(case.label, True)
    return CheckOutcome(case.label, False, f"matrix mismatch, max entry error {err:.3g}")


def verify_bundle(bundle: ExampleBundle, audit: bool = True) -> list[CheckOutcome]:
    """Full pipeline for one example: numeric cases, proof, mutations."""
    from ..kernel import audit_soundness, script_from_json

    outcomes: list[CheckOutcome] = []
    for mc in bundle.matrix_cases():
        outcomes.append(run_matrix_case(bundle, mc))
    for sc in bundle.state_cases():
        outcomes.append(run_state_case(bundle, sc))

    script: ProofScript = script_from_json(bundle.proof())
    report = check_proof(script)
    if report.ok:
        outcomes.append(CheckOutcome("proof accepted", True))
    else:
        msgs = "; ".join(f"{nid}: {msg}" for nid, msg in report.errors)
        outcomes.append(CheckOutcome("proof accepted", False, msgs))

    if audit and report.ok:
        violations = audit_soundness(script)
        if violations:
            msgs = "; ".join(f"{nid}: {msg}" for nid, msg in violations)
            outcomes.append(CheckOutcome("soundness audit", False, msgs))
        else:
            outcomes.append(CheckOutcome("soundness audit", True))

    for mut in bundle.mutations:
        bad = script_from_json(mut.script())
        rep = check_proof(bad)
        if rep.ok:
            outcomes.append(
                CheckOutcome(f"mutation {mut.name}", False, "kernel accepted a broken script")
            )
        elif any(mut.expect in msg for _, msg in rep.errors):
            outcomes.append(CheckOutcome(f"mutation {mut.name}", True))
        else:
            msgs = "; ".join(msg for _, msg in rep.errors)
            outcomes.append(
                CheckOutcome(
                    f"mutation {mut.name}",
                    False,
                    f"rejected, but not for the expected reason: {msgs}",
                )
            )
    return outcomes
