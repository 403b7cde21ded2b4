"""Entangling cascade: H on the first cell, then a chain of CNOTs.

GHZ(a, c) prepares (|00..0> + |11..1>)/sqrt(2) on q[a..c] by recursing
on the prefix and fanning the entanglement out one CNOT at a time.  The
proof is a total-correctness derivation over the generalized recursion
rule with rank c - a.
"""

from __future__ import annotations

import copy

from . import ExampleBundle, MatrixCase, Mutation, StateCase, cell, load_source
from .oracles import ghz_matrix, ghz_vector
from ..classical import IntRange, VerificationDomain

SOURCE = load_source("ghz")

_DOM = VerificationDomain.of(
    {"a": IntRange(0, 3), "c": IntRange(0, 3), "z": IntRange(0, 3)}
)

_A = "0 <= a and a <= c and c <= 3"
_REC_PRE = _A + " and c - a = z"
_THEN_F = _REC_PRE + " and a = c"
_ELSE_F = _REC_PRE + " and not (a = c)"
_ASM_F = _A + " and c - a < z"
_INST_F = "0 <= a and a <= c - 1 and c - 1 <= 3 and c - 1 - a < z"
_INST_B = "0 <= a and a <= c - 1 and c - 1 <= 3"
_X_CONJ = "(c - a = z and not (a = c))"
_MID_S = "tensor(ghz(q, a, c - 1), zeros(q, c, c))"
_BODY = "if a = c then H[q[c]] else GHZ(a, c - 1); CNOT[q[c - 1], q[c]] fi"


def _node(rule, pre=None, cmd=None, post=None, premises=(), **extra):
    out = {"rule": rule, "premises": list(premises)}
    if pre is not None:
        out["triple"] = {"pre": list(pre), "cmd": cmd, "post": list(post)}
    out.update(extra)
    return out


def proof() -> dict:
    nodes = {
        "root": _node(
            "rec-total-gen",
            premises=["blk"],
            specs=[
                {
                    "pre": [_A, "zeros(q, a, c)"],
                    "cmd": "GHZ(a, c)",
                    "post": [_A, "ghz(q, a, c)"],
                }
            ],
            which=0,
            ranks=["c - a"],
            z="z",
        ),
        "blk": _node(
            "block",
            pre=[_REC_PRE, "zeros(q, a, c)"],
            cmd=f"begin local a, c := a, c; {_BODY} end",
            post=[_A, "ghz(q, a, c)"],
            premises=["ifnode"],
        ),
        "ifnode": _node(
            "if",
            pre=[_REC_PRE, "zeros(q, a, c)"],
            cmd=_BODY,
            post=[_A, "ghz(q, a, c)"],
            premises=["then_c", "else_c"],
        ),
        "gate_then": _node(
            "gate",
            pre=[_THEN_F, "zeros(q, a, c)"],
            cmd="H[q[c]]",
            post=[_THEN_F, "ghz(q, a, c)"],
        ),
        "then_c": _node(
            "consequence",
            pre=[_THEN_F, "zeros(q, a, c)"],
            cmd="H[q[c]]",
            post=[_A, "ghz(q, a, c)"],
            premises=["gate_then"],
        ),
        "asm": _node(
            "assumption",
            pre=[_ASM_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c)",
            post=[_A, "ghz(q, a, c)"],
        ),
        "inst": _node(
            "instantiation",
            pre=[_INST_F, "zeros(q, a, c - 1)"],
            cmd="GHZ(a, c - 1)",
            post=[_INST_B, "ghz(q, a, c - 1)"],
            premises=["asm"],
            mapping={"c": "c - 1"},
        ),
        "invconj": _node(
            "invariance-conj",
            pre=[f"{_INST_F} and {_X_CONJ}", "zeros(q, a, c - 1)"],
            cmd="GHZ(a, c - 1)",
            post=[f"{_INST_B} and {_X_CONJ}", "ghz(q, a, c - 1)"],
            premises=["inst"],
        ),
        "framed": _node(
            "frame",
            pre=[
                f"{_INST_F} and {_X_CONJ}",
                "tensor(zeros(q, a, c - 1), zeros(q, c, c))",
            ],
            cmd="GHZ(a, c - 1)",
            post=[f"{_INST_B} and {_X_CONJ}", _MID_S],
            premises=["invconj"],
        ),
        "rec_step": _node(
            "consequence",
            pre=[_ELSE_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c - 1)",
            post=[_ELSE_F, _MID_S],
            premises=["framed"],
        ),
        "gate_cnot": _node(
            "gate",
            pre=[_ELSE_F, _MID_S],
            cmd="CNOT[q[c - 1], q[c]]",
            post=[_ELSE_F, "ghz(q, a, c)"],
        ),
        "cnot_step": _node(
            "consequence",
            pre=[_ELSE_F, _MID_S],
            cmd="CNOT[q[c - 1], q[c]]",
            post=[_A, "ghz(q, a, c)"],
            premises=["gate_cnot"],
        ),
        "else_c": _node(
            "seq",
            pre=[_ELSE_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c - 1); CNOT[q[c - 1], q[c]]",
            post=[_A, "ghz(q, a, c)"],
            premises=["rec_step", "cnot_step"],
        ),
    }
    return {
        "format": "rqc-proof/1",
        "mode": "total",
        "domain": _DOM.to_json(),
        "declarations": SOURCE,
        "nodes": nodes,
        "roots": ["root"],
    }


def _mutant(edit):
    def build():
        obj = copy.deepcopy(proof())
        edit(obj)
        return obj

    return build


def _negated_rank(obj):
    obj["nodes"]["root"]["ranks"] = ["a - c"]


def _wrong_rank(obj):
    obj["nodes"]["root"]["ranks"] = ["c"]


def _stale_z(obj):
    obj["nodes"]["root"]["z"] = "c"


def _narrow_domain(obj):
    obj["domain"]["vars"]["z"] = {"int": [0, 1]}


def _unguarded_assumption(obj):
    obj["nodes"]["asm"]["triple"]["pre"][0] = _A


def _bare_body(obj):
    obj["nodes"]["root"]["premises"] = ["ifnode"]


def _wrong_image(obj):
    t = obj["nodes"]["gate_then"]["triple"]
    t["pre"][0] = _ELSE_F
    t["post"][0] = _ELSE_F


MUTATIONS = (
    Mutation(
        "negated-rank",
        "the rank a - c is negative whenever a < c, so termination is unjustified",
        "rank is negative",
        _mutant(_negated_rank),
    ),
    Mutation(
        "non-decreasing-rank",
        "changing the rank to c changes the induction hypothesis the rule "
        "grants (c < z instead of c - a < z), so the proof's assumption "
        "step no longer matches anything in scope",
        "no assumption in scope",
        _mutant(_wrong_rank),
    ),
    Mutation(
        "captured-rank-variable",
        "using c as the rank variable collides with a specification variable",
        "must be fresh",
        _mutant(_stale_z),
    ),
    Mutation(
        "rank-outside-domain",
        "shrinking z's range below the largest rank leaves some states uncovered",
        "does not cover rank",
        _mutant(_narrow_domain),
    ),
    Mutation(
        "assumption-without-rank-guard",
        "dropping c - a < z from the assumption lets the proof call the "
        "unproven spec at full rank, which is circular",
        "no assumption in scope",
        _mutant(_unguarded_assumption),
    ),
    Mutation(
        "premise-skips-parameter-binding",
        "the recursion premise must bind the formals in a local block, not "
        "reason about the bare body",
        "bare body",
        _mutant(_bare_body),
    ),
    Mutation(
        "gate-image-off-branch",
        "claiming the then-branch gate axiom under the else guard (a < c) "
        "makes the declared cat state the wrong image of H on a wider register",
        "not the gate's image",
        _mutant(_wrong_image),
    ),
)


def matrix_cases() -> list[MatrixCase]:
    cases = []
    for k in (1, 2, 3):
        cases.append(
            MatrixCase(
                label=f"cascade on {k} cells matches H + CNOT ladder",
                circuit=f"GHZ(0, {k - 1})",
                cells=tuple(cell("q", i) for i in range(k)),
                expect=ghz_matrix(k),
            )
        )
    return cases


def state_cases() -> list[StateCase]:
    cases = []
    for k in (1, 2, 4, 6):
        cases.append(
            StateCase(
                label=f"prepares the {k}-cell cat state",
                circuit=f"GHZ(0, {k - 1})",
                cells=tuple(cell("q", i) for i in range(k)),
                expect=ghz_vector(k),
            )
        )
    return cases


BUNDLE = ExampleBundle(
    name="ghz",
    title="entangling cascade (cat state preparation)",
    source=SOURCE,
    proof=proof,
    matrix_cases=matrix_cases,
    state_cases=state_cases,
    mutations=MUTATIONS,
)
