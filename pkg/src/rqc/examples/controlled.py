"""Multiply-controlled gate built from nested quantum alternation.

CU(a, c) applies the single-cell gate U to q[c] exactly when the
controls q[a..c-1] are all one, by peeling one control per recursion
level inside a qif.  The proof runs two specifications through the
generalized recursion rule simultaneously: one for inputs whose control
window is all ones (the gate fires) and one for every other basis input
(the walk is the identity).  The else-branch of the second specification
needs a disjunction, because after consuming one control the remaining
window may fall under either specification.
"""

from __future__ import annotations

import cmath
import copy

import numpy as np

from . import ExampleBundle, MatrixCase, Mutation, StateCase, cell, load_source
from .oracles import H as H_MATRIX
from .oracles import X as X_MATRIX
from .oracles import controlled_matrix
from ..classical import BitArrayShape, IntRange, VerificationDomain
from ..gates import GateDef, GateTable, builtin_gates

SOURCE = load_source("controlled")

_PHASE = cmath.exp(0.25j * cmath.pi)
U_MATRIX = np.array([[1.0, 0.0], [0.0, _PHASE]], dtype=complex)
S_QUARTER = np.array(
    [[1.0, 1.0], [_PHASE, -_PHASE]], dtype=complex
) / np.sqrt(2.0)


def table_with_u(u: np.ndarray) -> GateTable:
    t = builtin_gates().copy()
    t.register(GateDef("U", 0, 1, lambda m=u: m))
    return t


_DOM = VerificationDomain.of(
    {
        "a": IntRange(0, 3),
        "c": IntRange(0, 3),
        "z": IntRange(0, 3),
        "w": BitArrayShape(0, 3),
    }
)

_A = "0 <= a and a <= c and c <= 3"
_P1 = _A + " and w[a : c - 1] = 2 ^ (c - a) - 1"
_P2 = _A + " and w[a : c - 1] < 2 ^ (c - a) - 1"
_R1 = _P1 + " and c - a = z"
_R2 = _P2 + " and c - a = z"
_T1 = _R1 + " and a = c"
_T2 = _R2 + " and a = c"
_E1 = _R1 + " and not (a = c)"
_E2 = _R2 + " and not (a = c)"

_BITS = "bits(q, a, c, w)"
_THETA0 = "bits(q, a + 1, c, w)"
_UCELL = "cell(q, c, iv(w[c] = 0), iv(w[c] = 1) * exppi(1 / 4))"
_POST1 = f"tensor(bits(q, a, c - 1, w), {_UCELL})"
_THETA1 = f"tensor(bits(q, a + 1, c - 1, w), {_UCELL})"
_UCOND = (
    "cell(q, c, iv(w[c] = 0), iv(w[c] = 1) * "
    "(iv(w[a + 1 : c - 1] = 2 ^ (c - (a + 1)) - 1) * exppi(1 / 4) + "
    "iv(w[a + 1 : c - 1] < 2 ^ (c - (a + 1)) - 1)))"
)
_THETA1C = f"tensor(bits(q, a + 1, c - 1, w), {_UCOND})"

_ASM1 = _P1 + " and c - a < z"
_ASM2 = _P2 + " and c - a < z"
_INST1_PRE = (
    "0 <= a + 1 and a + 1 <= c and c <= 3 and "
    "w[a + 1 : c - 1] = 2 ^ (c - (a + 1)) - 1 and c - (a + 1) < z"
)
_INST1_POST = (
    "0 <= a + 1 and a + 1 <= c and c <= 3 and "
    "w[a + 1 : c - 1] = 2 ^ (c - (a + 1)) - 1"
)
_INST2_PRE = (
    "0 <= a + 1 and a + 1 <= c and c <= 3 and "
    "w[a + 1 : c - 1] < 2 ^ (c - (a + 1)) - 1 and c - (a + 1) < z"
)
_INST2_POST = (
    "0 <= a + 1 and a + 1 <= c and c <= 3 and "
    "w[a + 1 : c - 1] < 2 ^ (c - (a + 1)) - 1"
)
_XC1 = "(c - a = z and not (a = c) and w[a : c - 1] = 2 ^ (c - a) - 1)"
_XB = "(c - a = z and not (a = c) and w[a : c - 1] < 2 ^ (c - a) - 1)"
_Y1 = f"{_INST1_PRE} and {_XB}"
_Y2 = f"{_INST2_PRE} and {_XB}"

_SUM_PRE = (
    f"sum(iv(w[a] = 0) : tensor(cell(q, a, 1, 0), {_THETA0}), "
    f"iv(w[a] = 1) : tensor(cell(q, a, 0, 1), {_THETA0}))"
)
_SUM_POST1 = (
    f"sum(iv(w[a] = 0) : tensor(cell(q, a, 1, 0), {_THETA0}), "
    f"iv(w[a] = 1) : tensor(cell(q, a, 0, 1), {_THETA1}))"
)
_SUM_POST2 = (
    f"sum(iv(w[a] = 0) : tensor(cell(q, a, 1, 0), {_THETA0}), "
    f"iv(w[a] = 1) : tensor(cell(q, a, 0, 1), {_THETA1C}))"
)

_QIF = "qif[q[a]] |0> -> skip [] |1> -> CU(a + 1, c) fiq"
_BODY = f"if a = c then U[q[c]] else {_QIF} fi"
_BLOCK = f"begin local a, c := a, c; {_BODY} end"
_COEFFS = ["iv(w[a] = 0)", "iv(w[a] = 1)"]


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
            premises=["blk1", "blk2"],
            specs=[
                {"pre": [_P1, _BITS], "cmd": "CU(a, c)", "post": [_P1, _POST1]},
                {"pre": [_P2, _BITS], "cmd": "CU(a, c)", "post": [_P2, _BITS]},
            ],
            which=0,
            ranks=["c - a", "c - a"],
            z="z",
        ),
        # --- specification 1: all controls set, the gate fires ---
        "blk1": _node(
            "block",
            pre=[_R1, _BITS],
            cmd=_BLOCK,
            post=[_P1, _POST1],
            premises=["if1"],
        ),
        "if1": _node(
            "if",
            pre=[_R1, _BITS],
            cmd=_BODY,
            post=[_P1, _POST1],
            premises=["then_c1", "elsec1"],
        ),
        "gate1": _node(
            "gate",
            pre=[_T1, _BITS],
            cmd="U[q[c]]",
            post=[_T1, _POST1],
        ),
        "then_c1": _node(
            "consequence",
            pre=[_T1, _BITS],
            cmd="U[q[c]]",
            post=[_P1, _POST1],
            premises=["gate1"],
        ),
        "asm1": _node(
            "assumption",
            pre=[_ASM1, _BITS],
            cmd="CU(a, c)",
            post=[_P1, _POST1],
        ),
        "inst1": _node(
            "instantiation",
            pre=[_INST1_PRE, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_INST1_POST, _THETA1],
            premises=["asm1"],
            mapping={"a": "a + 1"},
        ),
        "invconj1": _node(
            "invariance-conj",
            pre=[f"{_INST1_PRE} and {_XC1}", _THETA0],
            cmd="CU(a + 1, c)",
            post=[f"{_INST1_POST} and {_XC1}", _THETA1],
            premises=["inst1"],
        ),
        "conseq1": _node(
            "consequence",
            pre=[_E1, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_E1, _THETA1],
            premises=["invconj1"],
        ),
        "b0": _node(
            "skip",
            pre=[_E1, _THETA0],
            cmd="skip",
            post=[_E1, _THETA0],
        ),
        "qif1": _node(
            "qif-pure",
            pre=[_E1, _SUM_PRE],
            cmd=_QIF,
            post=[_E1, _SUM_POST1],
            premises=["b0", "conseq1"],
            coeffs=_COEFFS,
        ),
        "elsec1": _node(
            "consequence",
            pre=[_E1, _BITS],
            cmd=_QIF,
            post=[_P1, _POST1],
            premises=["qif1"],
        ),
        # --- specification 2: some control clear, the walk is identity ---
        "blk2": _node(
            "block",
            pre=[_R2, _BITS],
            cmd=_BLOCK,
            post=[_P2, _BITS],
            premises=["if2"],
        ),
        "if2": _node(
            "if",
            pre=[_R2, _BITS],
            cmd=_BODY,
            post=[_P2, _BITS],
            premises=["then_c2", "elsec2"],
        ),
        "gate2": _node(
            "gate",
            pre=[_T2, _BITS],
            cmd="U[q[c]]",
            post=[_T2, _BITS],
        ),
        "then_c2": _node(
            "consequence",
            pre=[_T2, _BITS],
            cmd="U[q[c]]",
            post=[_P2, _BITS],
            premises=["gate2"],
        ),
        "asm2": _node(
            "assumption",
            pre=[_ASM2, _BITS],
            cmd="CU(a, c)",
            post=[_P2, _BITS],
        ),
        "inst2": _node(
            "instantiation",
            pre=[_INST2_PRE, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_INST2_POST, _THETA0],
            premises=["asm2"],
            mapping={"a": "a + 1"},
        ),
        "invconj2": _node(
            "invariance-conj",
            pre=[_Y2, _THETA0],
            cmd="CU(a + 1, c)",
            post=[f"{_INST2_POST} and {_XB}", _THETA0],
            premises=["inst2"],
        ),
        "d2": _node(
            "consequence",
            pre=[_Y2, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_E2, _THETA1C],
            premises=["invconj2"],
        ),
        "invconj1b": _node(
            "invariance-conj",
            pre=[_Y1, _THETA0],
            cmd="CU(a + 1, c)",
            post=[f"{_INST1_POST} and {_XB}", _THETA1],
            premises=["inst1"],
        ),
        "d1": _node(
            "consequence",
            pre=[_Y1, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_E2, _THETA1C],
            premises=["invconj1b"],
        ),
        "disj": _node(
            "disjunction",
            pre=[f"({_Y1}) or ({_Y2})", _THETA0],
            cmd="CU(a + 1, c)",
            post=[_E2, _THETA1C],
            premises=["d1", "d2"],
        ),
        "brc2": _node(
            "consequence",
            pre=[_E2, _THETA0],
            cmd="CU(a + 1, c)",
            post=[_E2, _THETA1C],
            premises=["disj"],
        ),
        "b0_2": _node(
            "skip",
            pre=[_E2, _THETA0],
            cmd="skip",
            post=[_E2, _THETA0],
        ),
        "qif2": _node(
            "qif-pure",
            pre=[_E2, _SUM_PRE],
            cmd=_QIF,
            post=[_E2, _SUM_POST2],
            premises=["b0_2", "brc2"],
            coeffs=_COEFFS,
        ),
        "elsec2": _node(
            "consequence",
            pre=[_E2, _BITS],
            cmd=_QIF,
            post=[_P2, _BITS],
            premises=["qif2"],
        ),
    }
    return {
        "format": "rqc-proof/1",
        "mode": "total",
        "domain": _DOM.to_json(),
        "gates": {
            "U": {
                "matrix": [
                    [[1.0, 0.0], [0.0, 0.0]],
                    [[0.0, 0.0], [_PHASE.real, _PHASE.imag]],
                ]
            }
        },
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


def _swap_post_sum(obj):
    t = obj["nodes"]["qif1"]["triple"]
    t["post"][1] = (
        f"sum(iv(w[a] = 0) : tensor(cell(q, a, 1, 0), {_THETA1}), "
        f"iv(w[a] = 1) : tensor(cell(q, a, 0, 1), {_THETA0}))"
    )


def _coin_in_footprint(obj):
    for nid in ("qif1", "b0", "conseq1"):
        t = obj["nodes"][nid]["triple"]
        t["cmd"] = t["cmd"].replace("qif[q[a]]", "qif[q[c]]")
    t = obj["nodes"]["qif1"]["triple"]
    t["pre"][1] = _SUM_PRE.replace("cell(q, a,", "cell(q, c,")
    t["post"][1] = _SUM_POST1.replace("cell(q, a,", "cell(q, c,")


def _unguarded_assumption(obj):
    obj["nodes"]["asm1"]["triple"]["pre"][0] = _P1


def _weaker_post(obj):
    obj["nodes"]["elsec1"]["triple"]["post"][1] = _BITS


def _narrow_domain(obj):
    obj["domain"]["vars"]["z"] = {"int": [0, 1]}


def _missing_spec_premise(obj):
    obj["nodes"]["root"]["premises"] = ["blk1"]


MUTATIONS = (
    Mutation(
        "swapped-branch-states",
        "exchanging the branch states inside the alternation's post sum "
        "claims the gate fired on the zero branch",
        "postcondition state",
        _mutant(_swap_post_sum),
    ),
    Mutation(
        "coin-inside-branch-footprint",
        "moving the coin to q[c] puts it inside the cells the one-branch "
        "acts on, which the alternation rule must refuse",
        "touches its own coin",
        _mutant(_coin_in_footprint),
    ),
    Mutation(
        "assumption-without-rank-guard",
        "the induction hypothesis is only available below the current rank; "
        "dropping the guard makes the derivation circular",
        "no assumption in scope",
        _mutant(_unguarded_assumption),
    ),
    Mutation(
        "identity-post-on-firing-branch",
        "claiming the all-ones branch leaves the register unchanged "
        "contradicts the gate's phase on the target cell",
        "postcondition entailment failed",
        _mutant(_weaker_post),
    ),
    Mutation(
        "rank-outside-domain",
        "the rank reaches 3 on the widest control window, which a z range "
        "of [0, 1] cannot witness",
        "does not cover rank",
        _mutant(_narrow_domain),
    ),
    Mutation(
        "missing-second-specification",
        "the simultaneous recursion rule needs one premise per "
        "specification; dropping the identity case leaves the qif branch "
        "unjustified",
        "one premise per specification",
        _mutant(_missing_spec_premise),
    ),
)


def matrix_cases() -> list[MatrixCase]:
    cases = []
    for label, u in (("X", X_MATRIX), ("H", H_MATRIX), ("S(1/4)", S_QUARTER)):
        for size in (2, 3):
            cases.append(
                MatrixCase(
                    label=f"controlled {label} on {size} cells",
                    circuit=f"CU(0, {size - 1})",
                    cells=tuple(cell("q", i) for i in range(size)),
                    expect=controlled_matrix(u, size),
                    gates=table_with_u(u),
                )
            )
    return cases


def state_cases() -> list[StateCase]:
    sq2 = 1.0 / np.sqrt(2.0)
    plus_ctrl = np.zeros(8, dtype=complex)
    plus_ctrl[0b011] = sq2
    plus_ctrl[0b111] = sq2
    want = np.zeros(8, dtype=complex)
    want[0b011] = sq2
    want[0b111] = sq2 * _PHASE
    all_ones = np.zeros(8, dtype=complex)
    all_ones[0b111] = 1.0
    return [
        StateCase(
            label="fires only on the all-ones control branch",
            circuit="CU(0, 2)",
            cells=(cell("q", 0), cell("q", 1), cell("q", 2)),
            expect=want,
            initial=plus_ctrl,
        ),
        StateCase(
            label="phases the all-ones basis state",
            circuit="CU(0, 2)",
            cells=(cell("q", 0), cell("q", 1), cell("q", 2)),
            expect=_PHASE * all_ones,
            initial=all_ones,
        ),
    ]


BUNDLE = ExampleBundle(
    name="controlled",
    title="multiply-controlled gate via quantum alternation",
    source=SOURCE,
    proof=proof,
    matrix_cases=matrix_cases,
    state_cases=state_cases,
    mutations=MUTATIONS,
    gates=table_with_u(U_MATRIX),
)
