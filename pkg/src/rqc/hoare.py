"""Hoare triples over circuits and their direct semantic check.

A triple {A, phi} C {B, psi} pairs a classical formula with a symbolic
state on each side.  Its meaning is checked by brute force over a finite
verification domain: for every classical state sigma in the domain with
sigma |= A, run C from (sigma, phi(sigma)) and compare the outcome with
(B, psi) at the final classical state.

The partial and total readings differ only on runs that never finish.  A
run that gets stuck (a gate on coinciding cells, branches of a quantum
alternation that disagree classically) or runs out of fuel is vacuously
fine under partial correctness; under total correctness a stuck run is a
counterexample and an out-of-fuel run caps the verdict at "unknown",
never "valid".  An unbound variable is a hard error in both modes: it
means the domain or the script is malformed, not that the program
diverged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classical import (
    ClassicalState,
    EvalError,
    Expr,
    VerificationDomain,
    entails,
    expr_to_str,
    free_vars,
    holds,
)
from .gates import GateTable
from .interp import DEFAULT_FUEL, run
from .states import StateError, StateExpr, eval_state, state_free_vars, state_to_str
from .syntax import Circuit, to_source


@dataclass(frozen=True)
class HoareTriple:
    pre_f: Expr
    pre_s: StateExpr
    cmd: Circuit
    post_f: Expr
    post_s: StateExpr

    def free_classical_vars(self) -> frozenset:
        return (
            free_vars(self.pre_f)
            | free_vars(self.post_f)
            | state_free_vars(self.pre_s)
            | state_free_vars(self.post_s)
        )

    def __str__(self):
        cmd = " ".join(to_source(self.cmd).split())
        return (
            f"{{{expr_to_str(self.pre_f)}, {state_to_str(self.pre_s)}}} "
            f"{cmd} "
            f"{{{expr_to_str(self.post_f)}, {state_to_str(self.post_s)}}}"
        )


@dataclass
class CheckOutcome:
    status: str  # "valid" | "failed" | "unknown"
    checked: int = 0
    fuel_hits: int = 0
    sigma: ClassicalState | None = None
    detail: str = ""

    def __bool__(self):
        return self.status == "valid"


def check_triple(
    triple: HoareTriple,
    dom: VerificationDomain,
    decls=(),
    gates: GateTable | None = None,
    mode: str = "partial",
    fuel: int = DEFAULT_FUEL,
    tol: float = 1e-9,
    max_cells: int | None = None,
) -> CheckOutcome:
    """Sweep the domain and test the triple's meaning directly."""
    if mode not in ("partial", "total"):
        raise ValueError(f"mode must be 'partial' or 'total', not {mode!r}")
    checked = 0
    fuel_hits = 0
    for sigma in dom.states():
        try:
            if not holds(triple.pre_f, sigma):
                continue
        except EvalError:
            continue  # outside the precondition's intended reading
        checked += 1
        try:
            phi = eval_state(triple.pre_s, sigma)
        except (EvalError, StateError) as e:
            return CheckOutcome(
                "failed", checked, fuel_hits, sigma, f"precondition state: {e}"
            )
        res = run(
            triple.cmd, sigma, phi, decls=decls, gates=gates, fuel=fuel,
            max_cells=max_cells,
        )
        if res.status == "fuel":
            fuel_hits += 1
            continue
        if res.status == "failed":
            if res.failure.reason == "unbound":
                return CheckOutcome(
                    "failed", checked, fuel_hits, sigma,
                    f"execution hit an unbound name: {res.failure.detail}",
                )
            if mode == "total":
                return CheckOutcome(
                    "failed", checked, fuel_hits, sigma,
                    f"execution failed ({res.failure.reason}): {res.failure.detail}",
                )
            continue  # stuck runs are vacuous under partial correctness
        sigma2 = res.sigma
        try:
            if not holds(triple.post_f, sigma2):
                return CheckOutcome(
                    "failed", checked, fuel_hits, sigma,
                    f"final classical state violates {expr_to_str(triple.post_f)}",
                )
        except EvalError as e:
            return CheckOutcome(
                "failed", checked, fuel_hits, sigma, f"postcondition formula: {e}"
            )
        try:
            psi = eval_state(triple.post_s, sigma2)
        except (EvalError, StateError) as e:
            return CheckOutcome(
                "failed", checked, fuel_hits, sigma, f"postcondition state: {e}"
            )
        if not res.state.equal_to(psi, tol):
            return CheckOutcome(
                "failed", checked, fuel_hits, sigma,
                "final quantum state differs from the stated one",
            )
    if mode == "total" and fuel_hits:
        return CheckOutcome(
            "unknown", checked, fuel_hits,
            detail=f"{fuel_hits} run(s) exhausted fuel; termination unconfirmed",
        )
    return CheckOutcome("valid", checked, fuel_hits)


def check_entailment(
    pre: tuple,
    post: tuple,
    dom: VerificationDomain,
    tol: float = 1e-9,
) -> CheckOutcome:
    """Check {A, phi} |= {B, psi}: A entails B classically, and the two
    states agree wherever A holds."""
    (a, phi), (b, psi) = pre, post
    ok, ce = entails(a, b, dom)
    if not ok:
        return CheckOutcome(
            "failed", sigma=ce,
            detail=f"{expr_to_str(a)} does not entail {expr_to_str(b)}",
        )
    checked = 0
    for sigma in dom.states():
        try:
            if not holds(a, sigma):
                continue
        except EvalError:
            continue
        checked += 1
        try:
            sa = eval_state(phi, sigma)
            sb = eval_state(psi, sigma)
        except (EvalError, StateError) as e:
            return CheckOutcome("failed", checked, sigma=sigma, detail=str(e))
        if not sa.equal_to(sb, tol):
            return CheckOutcome(
                "failed", checked, sigma=sigma,
                detail="state expressions differ under the entailing formula",
            )
    return CheckOutcome("valid", checked)
