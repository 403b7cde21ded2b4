"""Recursive Fourier transform with its rotation and reversal helpers.

QFT(a, c) puts the Fourier transform of the basis state on q[a..c] by
a head recursion: Rot(a, c, 0) rotates q[a] conditioned on the tail,
QFT(a + 1, c) transforms the tail, and Shift(a, c) swaps q[a] down to
the end, which realizes the output bit reversal one level at a time.

The proof is one script with three recursion derivations.  Rot and
Shift get their own specifications; the QFT derivation consumes them
through instantiation nodes pointed at those roots, so the whole DAG
replays in a single pass.  Rot's specification carries the rotation
parameter g, whose recursive instances are halves; the checker's
domain binds g to the two integer values the formulas are swept over,
while the halved instances stay symbolic inside the derivation.
"""

from __future__ import annotations

import copy

import numpy as np

from . import ExampleBundle, MatrixCase, Mutation, StateCase, cell, load_source
from .oracles import dft_matrix
from ..classical import BitArrayShape, IntRange, VerificationDomain

SOURCE = load_source("qft")

_DOM = VerificationDomain.of(
    {
        "a": IntRange(0, 3),
        "c": IntRange(0, 3),
        "w": IntRange(0, 3),
        "z": IntRange(0, 3),
        "g": IntRange(0, 1),
        "j": BitArrayShape(0, 3),
    }
)

_A = "0 <= a and a <= c and c <= 3"
_BITSJ = "bits(q, a, c, j)"
_FOUR = "fourier(q, a, c, j)"

# --- Rot: conditional rotation of q[a] by (g + tail value) ---

_ROTPOST = (
    "tensor(cell(q, a, 1 / sqrt(2), "
    "exppi((g + j[a : c]) / 2 ^ (c - a)) / sqrt(2)), bits(q, a + 1, c, j))"
)
_R_ROT = _A + " and c - a = z"
_T_ROT = _R_ROT + " and a = c"
_E_ROT = _R_ROT + " and not (a = c)"
_ASM_ROT = _A + " and c - a < z"
_XR = "(c - a = z and not (a = c))"

_INSTR_PRE = "0 <= a and a <= c - 1 and c - 1 <= 3 and c - 1 - a < z"
_INSTR_POST = "0 <= a and a <= c - 1 and c - 1 <= 3"
_BITS_SHORT = "bits(q, a, c - 1, j)"
_ROT0_POST = (
    "tensor(cell(q, a, 1 / sqrt(2), "
    "exppi((g / 2 + j[a : c - 1]) / 2 ^ (c - 1 - a)) / sqrt(2)), "
    "bits(q, a + 1, c - 1, j))"
)
_ROT1_POST = (
    "tensor(cell(q, a, 1 / sqrt(2), "
    "exppi(((g + 1) / 2 + j[a : c - 1]) / 2 ^ (c - 1 - a)) / sqrt(2)), "
    "bits(q, a + 1, c - 1, j))"
)
_SUM_PRE_R = (
    f"sum(iv(j[c] = 0) : tensor(cell(q, c, 1, 0), {_BITS_SHORT}), "
    f"iv(j[c] = 1) : tensor(cell(q, c, 0, 1), {_BITS_SHORT}))"
)
_SUM_POST_R = (
    f"sum(iv(j[c] = 0) : tensor(cell(q, c, 1, 0), {_ROT0_POST}), "
    f"iv(j[c] = 1) : tensor(cell(q, c, 0, 1), {_ROT1_POST}))"
)
_QIF_ROT = (
    "qif[q[c]] |0> -> Rot(a, c - 1, g / 2) [] |1> -> Rot(a, c - 1, (g + 1) / 2) fiq"
)
_ROT_BODY = f"if a = c then S(g)[q[a]] else {_QIF_ROT} fi"
_ROT_BLOCK = f"begin local a, c, g := a, c, g; {_ROT_BODY} end"

# --- Shift: swap cascade carrying q[a] down to position c ---
# The spectator variable w names the original left edge, so the
# invariant can say which cells are already in final position.

_A_SH = "0 <= w and w <= a and a <= c and c <= 3"
_DONE_CELL = "cell(q, i, 1 / sqrt(2), exppi(j[c - i + w : c] / 2 ^ (i - w)) / sqrt(2))"
_BIG_CELL = "cell(q, a, 1 / sqrt(2), exppi(j[w : c] / 2 ^ (c - w)) / sqrt(2))"
_WAIT_CELL = (
    "cell(q, i, 1 / sqrt(2), exppi(j[c - i + w + 1 : c] / 2 ^ (i - w - 1)) / sqrt(2))"
)
_XI = (
    f"tensor(prod(i, w, a - 1, {_DONE_CELL}), {_BIG_CELL}, "
    f"prod(i, a + 1, c, {_WAIT_CELL}))"
)
_XIPOST = (
    f"tensor(prod(i, w, c - 1, {_DONE_CELL}), "
    "cell(q, c, 1 / sqrt(2), exppi(j[w : c] / 2 ^ (c - w)) / sqrt(2)))"
)
_R_SH = _A_SH + " and c - a = z"
_T_SH = _R_SH + " and a < c"
_E_SH = _R_SH + " and not (a < c)"
_ASM_SH = _A_SH + " and c - a < z"
_XSH = "(c - a = z and a < c and w <= a)"

_BIG_CELL_NEXT = "cell(q, a + 1, 1 / sqrt(2), exppi(j[w : c] / 2 ^ (c - w)) / sqrt(2))"
_MID_SH = (
    f"tensor(prod(i, w, a + 1 - 1, {_DONE_CELL}), {_BIG_CELL_NEXT}, "
    f"prod(i, a + 1 + 1, c, {_WAIT_CELL}))"
)
_INST_SH_PRE = "0 <= w and w <= a + 1 and a + 1 <= c and c <= 3 and c - (a + 1) < z"
_INST_SH_POST = "0 <= w and w <= a + 1 and a + 1 <= c and c <= 3"
_SH_BODY = "if a < c then Swap[q[a], q[a + 1]]; Shift(a + 1, c) fi"
_SH_BLOCK = f"begin local a, c := a, c; {_SH_BODY} end"

# --- QFT: the top-level derivation ---

_R_Q = _A + " and c - a = z"
_T_Q = _R_Q + " and a = c"
_E_Q = _R_Q + " and not (a = c)"
_ASM_Q = _A + " and c - a < z"
_XQJ = "(c - a = z and not (a = c))"

_QG_POST = "cell(q, a, 1 / sqrt(2), exppi(j[a]) / sqrt(2))"
_ROTCELL = (
    "cell(q, a, 1 / sqrt(2), exppi((0 + j[a : c]) / 2 ^ (c - a)) / sqrt(2))"
)
_S1 = f"tensor({_ROTCELL}, bits(q, a + 1, c, j))"
_S2 = f"tensor({_ROTCELL}, fourier(q, a + 1, c, j))"
_INSTQ_PRE = "0 <= a + 1 and a + 1 <= c and c <= 3 and c - (a + 1) < z"
_INSTQ_POST = "0 <= a + 1 and a + 1 <= c and c <= 3"

# Shift's specification with the spectator pinned to this call's edge.
_INSTSH_F = "0 <= a and a <= a and a <= c and c <= 3"
_DONE_AT_A = "cell(q, i, 1 / sqrt(2), exppi(j[c - i + a : c] / 2 ^ (i - a)) / sqrt(2))"
_WAIT_AT_A = (
    "cell(q, i, 1 / sqrt(2), exppi(j[c - i + a + 1 : c] / 2 ^ (i - a - 1)) / sqrt(2))"
)
_INSTSH_PRE_S = (
    f"tensor(prod(i, a, a - 1, {_DONE_AT_A}), "
    "cell(q, a, 1 / sqrt(2), exppi(j[a : c] / 2 ^ (c - a)) / sqrt(2)), "
    f"prod(i, a + 1, c, {_WAIT_AT_A}))"
)
_INSTSH_POST_S = (
    f"tensor(prod(i, a, c - 1, {_DONE_AT_A}), "
    "cell(q, c, 1 / sqrt(2), exppi(j[a : c] / 2 ^ (c - a)) / sqrt(2)))"
)

_QFT_ELSE = "Rot(a, c, 0); QFT(a + 1, c); Shift(a, c)"
_QFT_TAIL = "QFT(a + 1, c); Shift(a, c)"
_QFT_BODY = f"if a = c then S(0)[q[a]] else {_QFT_ELSE} fi"
_QFT_BLOCK = f"begin local a, c := a, c; {_QFT_BODY} end"


def _node(rule, pre=None, cmd=None, post=None, premises=(), **extra):
    out = {"rule": rule, "premises": list(premises)}
    if pre is not None:
        out["triple"] = {"pre": list(pre), "cmd": cmd, "post": list(post)}
    out.update(extra)
    return out


def proof() -> dict:
    nodes = {
        # ---- Rot derivation ----
        "rot_root": _node(
            "rec-total-gen",
            premises=["rot_blk"],
            specs=[
                {"pre": [_A, _BITSJ], "cmd": "Rot(a, c, g)", "post": [_A, _ROTPOST]}
            ],
            which=0,
            ranks=["c - a"],
            z="z",
        ),
        "rot_blk": _node(
            "block",
            pre=[_R_ROT, _BITSJ],
            cmd=_ROT_BLOCK,
            post=[_A, _ROTPOST],
            premises=["rot_if"],
        ),
        "rot_if": _node(
            "if",
            pre=[_R_ROT, _BITSJ],
            cmd=_ROT_BODY,
            post=[_A, _ROTPOST],
            premises=["rot_then_c", "rot_else_c"],
        ),
        "rot_gate": _node(
            "gate",
            pre=[_T_ROT, _BITSJ],
            cmd="S(g)[q[a]]",
            post=[_T_ROT, _ROTPOST],
        ),
        "rot_then_c": _node(
            "consequence",
            pre=[_T_ROT, _BITSJ],
            cmd="S(g)[q[a]]",
            post=[_A, _ROTPOST],
            premises=["rot_gate"],
        ),
        "rot_asm": _node(
            "assumption",
            pre=[_ASM_ROT, _BITSJ],
            cmd="Rot(a, c, g)",
            post=[_A, _ROTPOST],
        ),
        "inst_r0": _node(
            "instantiation",
            pre=[_INSTR_PRE, _BITS_SHORT],
            cmd="Rot(a, c - 1, g / 2)",
            post=[_INSTR_POST, _ROT0_POST],
            premises=["rot_asm"],
            mapping={"c": "c - 1", "g": "g / 2"},
        ),
        "invc_r0": _node(
            "invariance-conj",
            pre=[f"{_INSTR_PRE} and {_XR}", _BITS_SHORT],
            cmd="Rot(a, c - 1, g / 2)",
            post=[f"{_INSTR_POST} and {_XR}", _ROT0_POST],
            premises=["inst_r0"],
        ),
        "conseq_r0": _node(
            "consequence",
            pre=[_E_ROT, _BITS_SHORT],
            cmd="Rot(a, c - 1, g / 2)",
            post=[_E_ROT, _ROT0_POST],
            premises=["invc_r0"],
        ),
        "inst_r1": _node(
            "instantiation",
            pre=[_INSTR_PRE, _BITS_SHORT],
            cmd="Rot(a, c - 1, (g + 1) / 2)",
            post=[_INSTR_POST, _ROT1_POST],
            premises=["rot_asm"],
            mapping={"c": "c - 1", "g": "(g + 1) / 2"},
        ),
        "invc_r1": _node(
            "invariance-conj",
            pre=[f"{_INSTR_PRE} and {_XR}", _BITS_SHORT],
            cmd="Rot(a, c - 1, (g + 1) / 2)",
            post=[f"{_INSTR_POST} and {_XR}", _ROT1_POST],
            premises=["inst_r1"],
        ),
        "conseq_r1": _node(
            "consequence",
            pre=[_E_ROT, _BITS_SHORT],
            cmd="Rot(a, c - 1, (g + 1) / 2)",
            post=[_E_ROT, _ROT1_POST],
            premises=["invc_r1"],
        ),
        "rot_qif": _node(
            "qif-pure",
            pre=[_E_ROT, _SUM_PRE_R],
            cmd=_QIF_ROT,
            post=[_E_ROT, _SUM_POST_R],
            premises=["conseq_r0", "conseq_r1"],
            coeffs=["iv(j[c] = 0)", "iv(j[c] = 1)"],
        ),
        "rot_else_c": _node(
            "consequence",
            pre=[_E_ROT, _BITSJ],
            cmd=_QIF_ROT,
            post=[_A, _ROTPOST],
            premises=["rot_qif"],
        ),
        # ---- Shift derivation ----
        "shift_root": _node(
            "rec-total-gen",
            premises=["sh_blk"],
            specs=[
                {"pre": [_A_SH, _XI], "cmd": "Shift(a, c)", "post": [_A_SH, _XIPOST]}
            ],
            which=0,
            ranks=["c - a"],
            z="z",
        ),
        "sh_blk": _node(
            "block",
            pre=[_R_SH, _XI],
            cmd=_SH_BLOCK,
            post=[_A_SH, _XIPOST],
            premises=["sh_if"],
        ),
        "sh_if": _node(
            "if",
            pre=[_R_SH, _XI],
            cmd=_SH_BODY,
            post=[_A_SH, _XIPOST],
            premises=["sh_seq", "sh_else_c"],
        ),
        "sh_seq": _node(
            "seq",
            pre=[_T_SH, _XI],
            cmd="Swap[q[a], q[a + 1]]; Shift(a + 1, c)",
            post=[_A_SH, _XIPOST],
            premises=["sh_gate", "sh_step"],
        ),
        "sh_gate": _node(
            "gate",
            pre=[_T_SH, _XI],
            cmd="Swap[q[a], q[a + 1]]",
            post=[_T_SH, _MID_SH],
        ),
        "sh_asm": _node(
            "assumption",
            pre=[_ASM_SH, _XI],
            cmd="Shift(a, c)",
            post=[_A_SH, _XIPOST],
        ),
        "inst_sh": _node(
            "instantiation",
            pre=[_INST_SH_PRE, _MID_SH],
            cmd="Shift(a + 1, c)",
            post=[_INST_SH_POST, _XIPOST],
            premises=["sh_asm"],
            mapping={"a": "a + 1"},
        ),
        "invc_sh": _node(
            "invariance-conj",
            pre=[f"{_INST_SH_PRE} and {_XSH}", _MID_SH],
            cmd="Shift(a + 1, c)",
            post=[f"{_INST_SH_POST} and {_XSH}", _XIPOST],
            premises=["inst_sh"],
        ),
        "sh_step": _node(
            "consequence",
            pre=[_T_SH, _MID_SH],
            cmd="Shift(a + 1, c)",
            post=[_A_SH, _XIPOST],
            premises=["invc_sh"],
        ),
        "sh_skip": _node(
            "skip",
            pre=[_E_SH, _XI],
            cmd="skip",
            post=[_E_SH, _XI],
        ),
        "sh_else_c": _node(
            "consequence",
            pre=[_E_SH, _XI],
            cmd="skip",
            post=[_A_SH, _XIPOST],
            premises=["sh_skip"],
        ),
        # ---- QFT derivation ----
        "qft_root": _node(
            "rec-total-gen",
            premises=["qft_blk"],
            specs=[{"pre": [_A, _BITSJ], "cmd": "QFT(a, c)", "post": [_A, _FOUR]}],
            which=0,
            ranks=["c - a"],
            z="z",
        ),
        "qft_blk": _node(
            "block",
            pre=[_R_Q, _BITSJ],
            cmd=_QFT_BLOCK,
            post=[_A, _FOUR],
            premises=["qft_if"],
        ),
        "qft_if": _node(
            "if",
            pre=[_R_Q, _BITSJ],
            cmd=_QFT_BODY,
            post=[_A, _FOUR],
            premises=["qft_then_c", "seq_outer"],
        ),
        "qft_gate": _node(
            "gate",
            pre=[_T_Q, _BITSJ],
            cmd="S(0)[q[a]]",
            post=[_T_Q, _QG_POST],
        ),
        "qft_then_c": _node(
            "consequence",
            pre=[_T_Q, _BITSJ],
            cmd="S(0)[q[a]]",
            post=[_A, _FOUR],
            premises=["qft_gate"],
        ),
        "seq_outer": _node(
            "seq",
            pre=[_E_Q, _BITSJ],
            cmd=_QFT_ELSE,
            post=[_A, _FOUR],
            premises=["step1", "seq_inner"],
        ),
        "inst_qr": _node(
            "instantiation",
            pre=[_A, _BITSJ],
            cmd="Rot(a, c, 0)",
            post=[_A, _S1],
            premises=["rot_root"],
            mapping={"g": "0"},
        ),
        "invconj_q1": _node(
            "invariance-conj",
            pre=[f"{_A} and {_XQJ}", _BITSJ],
            cmd="Rot(a, c, 0)",
            post=[f"{_A} and {_XQJ}", _S1],
            premises=["inst_qr"],
        ),
        "step1": _node(
            "consequence",
            pre=[_E_Q, _BITSJ],
            cmd="Rot(a, c, 0)",
            post=[_E_Q, _S1],
            premises=["invconj_q1"],
        ),
        "seq_inner": _node(
            "seq",
            pre=[_E_Q, _S1],
            cmd=_QFT_TAIL,
            post=[_A, _FOUR],
            premises=["step2", "step3"],
        ),
        "asm_q": _node(
            "assumption",
            pre=[_ASM_Q, _BITSJ],
            cmd="QFT(a, c)",
            post=[_A, _FOUR],
        ),
        "inst_q": _node(
            "instantiation",
            pre=[_INSTQ_PRE, "bits(q, a + 1, c, j)"],
            cmd="QFT(a + 1, c)",
            post=[_INSTQ_POST, "fourier(q, a + 1, c, j)"],
            premises=["asm_q"],
            mapping={"a": "a + 1"},
        ),
        "frame_q": _node(
            "frame",
            pre=[_INSTQ_PRE, _S1],
            cmd="QFT(a + 1, c)",
            post=[_INSTQ_POST, _S2],
            premises=["inst_q"],
        ),
        "invconj_q2": _node(
            "invariance-conj",
            pre=[f"{_INSTQ_PRE} and {_XQJ}", _S1],
            cmd="QFT(a + 1, c)",
            post=[f"{_INSTQ_POST} and {_XQJ}", _S2],
            premises=["frame_q"],
        ),
        "step2": _node(
            "consequence",
            pre=[_E_Q, _S1],
            cmd="QFT(a + 1, c)",
            post=[_E_Q, _S2],
            premises=["invconj_q2"],
        ),
        "inst_shq": _node(
            "instantiation",
            pre=[_INSTSH_F, _INSTSH_PRE_S],
            cmd="Shift(a, c)",
            post=[_INSTSH_F, _INSTSH_POST_S],
            premises=["shift_root"],
            mapping={"w": "a"},
        ),
        "invconj_q3": _node(
            "invariance-conj",
            pre=[f"{_INSTSH_F} and {_XQJ}", _INSTSH_PRE_S],
            cmd="Shift(a, c)",
            post=[f"{_INSTSH_F} and {_XQJ}", _INSTSH_POST_S],
            premises=["inst_shq"],
        ),
        "step3": _node(
            "consequence",
            pre=[_E_Q, _S2],
            cmd="Shift(a, c)",
            post=[_A, _FOUR],
            premises=["invconj_q3"],
        ),
    }
    return {
        "format": "rqc-proof/1",
        "mode": "total",
        "domain": _DOM.to_json(),
        "declarations": SOURCE,
        "nodes": nodes,
        "roots": ["qft_root"],
    }


def _mutant(edit):
    def build():
        obj = copy.deepcopy(proof())
        edit(obj)
        return obj

    return build


def _frame_collision(obj):
    t = obj["nodes"]["frame_q"]["triple"]
    t["pre"][1] = t["pre"][1].replace("cell(q, a,", "cell(q, a + 1,")
    t["post"][1] = t["post"][1].replace("cell(q, a,", "cell(q, a + 1,")


def _unguarded_assumption(obj):
    obj["nodes"]["asm_q"]["triple"]["pre"][0] = _A


def _reversal_skipped(obj):
    obj["nodes"]["step3"]["triple"]["post"][1] = _S2


def _unhalved_rotation(obj):
    obj["nodes"]["inst_r0"]["mapping"] = {"c": "c - 1", "g": "g"}


def _narrow_domain(obj):
    obj["domain"]["vars"]["z"] = {"int": [0, 2]}


def _swapped_rotation_branches(obj):
    obj["nodes"]["rot_qif"]["triple"]["post"][1] = (
        f"sum(iv(j[c] = 0) : tensor(cell(q, c, 1, 0), {_ROT1_POST}), "
        f"iv(j[c] = 1) : tensor(cell(q, c, 0, 1), {_ROT0_POST}))"
    )


MUTATIONS = (
    Mutation(
        "frame-collision",
        "framing the rotated head cell as q[a + 1] puts the spectator "
        "inside the recursive call's footprint",
        "shares cells",
        _mutant(_frame_collision),
    ),
    Mutation(
        "assumption-without-rank-guard",
        "the recursion hypothesis must stay guarded by the rank bound",
        "no assumption in scope",
        _mutant(_unguarded_assumption),
    ),
    Mutation(
        "reversal-skipped",
        "claiming the swap cascade leaves the head cell in place denies "
        "the output reversal, which is numerically false whenever a < c",
        "postcondition entailment failed",
        _mutant(_reversal_skipped),
    ),
    Mutation(
        "unhalved-rotation",
        "the recursive rotation instance must halve g; instantiating at "
        "full g cannot produce the claimed circuit",
        "command",
        _mutant(_unhalved_rotation),
    ),
    Mutation(
        "rank-outside-domain",
        "the rank reaches 3 on the full register, which z in [0, 2] "
        "cannot witness",
        "does not cover rank",
        _mutant(_narrow_domain),
    ),
    Mutation(
        "swapped-rotation-branches",
        "routing the tail-bit-0 case to the (g + 1)/2 rotation flips the "
        "conditional phase ladder",
        "postcondition state",
        _mutant(_swapped_rotation_branches),
    ),
)


def textbook_source(n: int) -> str:
    """The standard non-recursive circuit: H plus controlled phase
    ladders, then an explicit swap reversal."""
    ops = []
    for i in range(n):
        ops.append(f"H[q[{i}]]")
        for l in range(2, n - i + 1):
            ops.append(f"CR({l})[q[{i + l - 1}], q[{i}]]")
    for i in range(n // 2):
        ops.append(f"Swap[q[{i}], q[{n - 1 - i}]]")
    return "; ".join(ops)


def matrix_cases() -> list[MatrixCase]:
    cases = []
    for n in (1, 2, 3):
        cases.append(
            MatrixCase(
                label=f"transform on {n} cells matches the DFT matrix",
                circuit=f"QFT(0, {n - 1})",
                cells=tuple(cell("q", i) for i in range(n)),
                expect=dft_matrix(n),
            )
        )
    return cases


def state_cases() -> list[StateCase]:
    return [
        StateCase(
            label="all-zeros input becomes the uniform superposition",
            circuit="QFT(0, 2)",
            cells=(cell("q", 0), cell("q", 1), cell("q", 2)),
            expect=dft_matrix(3)[:, 0].copy(),
        ),
        StateCase(
            label="basis five maps to the fifth DFT column",
            circuit="QFT(0, 2)",
            cells=(cell("q", 0), cell("q", 1), cell("q", 2)),
            expect=dft_matrix(3)[:, 5].copy(),
            initial=np.eye(8, dtype=complex)[:, 5].copy(),
        ),
    ]


BUNDLE = ExampleBundle(
    name="qft",
    title="recursive Fourier transform",
    source=SOURCE,
    proof=proof,
    matrix_cases=matrix_cases,
    state_cases=state_cases,
    mutations=MUTATIONS,
)
