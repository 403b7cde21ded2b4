"""State preparation by a binary tree of weighted splitters.

QSP(a, c, g) walks a heap of weight/phase tables: at depth c over heap
node 2^c + g it splits q[c + 1] with the node's weight and phase, then
recurses into the half selected by that cell.  Starting from QSP(n, 0, 0)
on |0..0> this lays an arbitrary amplitude vector onto q[1..n], given
tables digested from the target: wt holds each node's left-half weight
share, ph the phase offset between the two halves' anchor leaves.

The proof's postcondition is the split-window state family: the prepared
amplitudes over the leaf window a heap node governs, anchored at the
window's left edge.  One consequence step per level recombines the two
half-window states into the parent's, which is where the table digest
identities are actually checked.
"""

from __future__ import annotations

import copy

import numpy as np

from . import ExampleBundle, MatrixCase, Mutation, StateCase, cell, load_source
from .oracles import exact_prep_tables, state_prep_tables, state_prep_target
from ..classical import ArrayVal, IntRange, VerificationDomain

SOURCE = load_source("qsp")

_LEAF_B = [1, 2, 3, 4, 5, 6, 7, 8]
_LEAF_TH = [0, 1, 2, 3, 4, 5, 6, 7]
_WT, _PH = exact_prep_tables(_LEAF_B, _LEAF_TH)

# The digest tables are only meaningful for one tree depth, so the proof
# pins the depth: a is a domain constant, and wt/ph are the depth-3 tables.
_DOM = VerificationDomain.of(
    {
        "c": IntRange(0, 3),
        "g": IntRange(0, 7),
        "z": IntRange(0, 3),
    },
    {
        "a": 3,
        "b": ArrayVal.from_list(_LEAF_B),
        "th": ArrayVal.from_list(_LEAF_TH),
        "wt": ArrayVal(_WT),
        "ph": ArrayVal(_PH),
    },
)

_A = "0 <= c and c <= a and 0 <= g and g < 2 ^ c"
_REC = _A + " and a - c = z"
_THEN_F = _REC + " and c < a"
_ELSE_F = _REC + " and not (c < a)"
_ASM_F = _A + " and a - c < z"
_XQ = "(a - c = z and c < a)"

_ZEROS = "zeros(q, c + 1, a)"
_ZEROS2 = "zeros(q, c + 1 + 1, a)"
_SPLIT = "splitwin(q, a, c, g, b, th)"
_SPLIT0 = "splitwin(q, a, c + 1, 2 * g, b, th)"
_SPLIT1 = "splitwin(q, a, c + 1, 2 * g + 1, b, th)"

_D0 = "sqrt(c(wt[2 ^ c + g]))"
_D1 = "expi(c(ph[2 ^ c + g]) / 2) * sqrt(1 - c(wt[2 ^ c + g]))"
_MID = f"tensor(cell(q, c + 1, {_D0}, {_D1}), {_ZEROS2})"
_SUM_PRE = (
    f"sum({_D0} : tensor(cell(q, c + 1, 1, 0), {_ZEROS2}), "
    f"{_D1} : tensor(cell(q, c + 1, 0, 1), {_ZEROS2}))"
)
_SUM_POST = (
    f"sum({_D0} : tensor(cell(q, c + 1, 1, 0), {_SPLIT0}), "
    f"{_D1} : tensor(cell(q, c + 1, 0, 1), {_SPLIT1}))"
)

_INGY0_PRE = (
    "0 <= c + 1 and c + 1 <= a and 0 <= 2 * g and 2 * g < 2 ^ (c + 1) "
    "and a - (c + 1) < z"
)
_INGY0_POST = "0 <= c + 1 and c + 1 <= a and 0 <= 2 * g and 2 * g < 2 ^ (c + 1)"
_INGY1_PRE = (
    "0 <= c + 1 and c + 1 <= a and 0 <= 2 * g + 1 and 2 * g + 1 < 2 ^ (c + 1) "
    "and a - (c + 1) < z"
)
_INGY1_POST = (
    "0 <= c + 1 and c + 1 <= a and 0 <= 2 * g + 1 and 2 * g + 1 < 2 ^ (c + 1)"
)

_GATE_CMD = "Split(wt[2 ^ c + g], ph[2 ^ c + g])[q[c + 1]]"
_QIF_CMD = (
    "qif[q[c + 1]] |0> -> QSP(a, c + 1, 2 * g) [] |1> -> QSP(a, c + 1, 2 * g + 1) fiq"
)
_THEN_CMD = f"{_GATE_CMD}; {_QIF_CMD}"
_BODY = f"if c < a then {_THEN_CMD} fi"
_BLOCK = f"begin local a, c, g := a, c, g; {_BODY} end"


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
            specs=[{"pre": [_A, _ZEROS], "cmd": "QSP(a, c, g)", "post": [_A, _SPLIT]}],
            which=0,
            ranks=["a - c"],
            z="z",
        ),
        "blk": _node(
            "block",
            pre=[_REC, _ZEROS],
            cmd=_BLOCK,
            post=[_A, _SPLIT],
            premises=["ifn"],
        ),
        "ifn": _node(
            "if",
            pre=[_REC, _ZEROS],
            cmd=_BODY,
            post=[_A, _SPLIT],
            premises=["then_seq", "else_c"],
        ),
        "then_seq": _node(
            "seq",
            pre=[_THEN_F, _ZEROS],
            cmd=_THEN_CMD,
            post=[_A, _SPLIT],
            premises=["gate_s", "recombine"],
        ),
        "gate_s": _node(
            "gate",
            pre=[_THEN_F, _ZEROS],
            cmd=_GATE_CMD,
            post=[_THEN_F, _MID],
        ),
        "recombine": _node(
            "consequence",
            pre=[_THEN_F, _MID],
            cmd=_QIF_CMD,
            post=[_A, _SPLIT],
            premises=["qif"],
        ),
        "qif": _node(
            "qif-pure",
            pre=[_THEN_F, _SUM_PRE],
            cmd=_QIF_CMD,
            post=[_THEN_F, _SUM_POST],
            premises=["conseq_y0", "conseq_y1"],
            coeffs=[_D0, _D1],
        ),
        "asm": _node(
            "assumption",
            pre=[_ASM_F, _ZEROS],
            cmd="QSP(a, c, g)",
            post=[_A, _SPLIT],
        ),
        "inst_y0": _node(
            "instantiation",
            pre=[_INGY0_PRE, _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g)",
            post=[_INGY0_POST, _SPLIT0],
            premises=["asm"],
            mapping={"c": "c + 1", "g": "2 * g"},
        ),
        "invconj_y0": _node(
            "invariance-conj",
            pre=[f"{_INGY0_PRE} and {_XQ}", _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g)",
            post=[f"{_INGY0_POST} and {_XQ}", _SPLIT0],
            premises=["inst_y0"],
        ),
        "conseq_y0": _node(
            "consequence",
            pre=[_THEN_F, _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g)",
            post=[_THEN_F, _SPLIT0],
            premises=["invconj_y0"],
        ),
        "inst_y1": _node(
            "instantiation",
            pre=[_INGY1_PRE, _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g + 1)",
            post=[_INGY1_POST, _SPLIT1],
            premises=["asm"],
            mapping={"c": "c + 1", "g": "2 * g + 1"},
        ),
        "invconj_y1": _node(
            "invariance-conj",
            pre=[f"{_INGY1_PRE} and {_XQ}", _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g + 1)",
            post=[f"{_INGY1_POST} and {_XQ}", _SPLIT1],
            premises=["inst_y1"],
        ),
        "conseq_y1": _node(
            "consequence",
            pre=[_THEN_F, _ZEROS2],
            cmd="QSP(a, c + 1, 2 * g + 1)",
            post=[_THEN_F, _SPLIT1],
            premises=["invconj_y1"],
        ),
        "skipn": _node(
            "skip",
            pre=[_ELSE_F, _ZEROS],
            cmd="skip",
            post=[_ELSE_F, _ZEROS],
        ),
        "else_c": _node(
            "consequence",
            pre=[_ELSE_F, _ZEROS],
            cmd="skip",
            post=[_A, _SPLIT],
            premises=["skipn"],
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


def _swap_post_sum(obj):
    obj["nodes"]["qif"]["triple"]["post"][1] = (
        f"sum({_D0} : tensor(cell(q, c + 1, 1, 0), {_SPLIT1}), "
        f"{_D1} : tensor(cell(q, c + 1, 0, 1), {_SPLIT0}))"
    )


def _doubled_phase(obj):
    bad = _MID.replace("c(ph[2 ^ c + g]) / 2", "c(ph[2 ^ c + g])")
    obj["nodes"]["gate_s"]["triple"]["post"][1] = bad


def _corrupt_weight_table(obj):
    rows = obj["domain"]["constants"]["wt"]["array"]
    k, _ = rows[0]
    rows[0] = [k, {"frac": [1, 3]}]


def _unguarded_assumption(obj):
    obj["nodes"]["asm"]["triple"]["pre"][0] = _A


def _captured_rank_variable(obj):
    obj["nodes"]["root"]["z"] = "g"


def _negated_rank(obj):
    obj["nodes"]["root"]["ranks"] = ["c - a"]


MUTATIONS = (
    Mutation(
        "swapped-half-windows",
        "routing the zero branch to the right half-window contradicts how "
        "the alternation extends the prepared window",
        "postcondition state",
        _mutant(_swap_post_sum),
    ),
    Mutation(
        "doubled-splitter-phase",
        "the splitter applies half the stored phase offset; claiming the "
        "full offset is not the gate's image",
        "not the gate's image",
        _mutant(_doubled_phase),
    ),
    Mutation(
        "corrupted-weight-table",
        "breaking one digest entry breaks the recombination identity the "
        "consequence step checks numerically",
        "postcondition entailment failed",
        _mutant(_corrupt_weight_table),
    ),
    Mutation(
        "assumption-without-rank-guard",
        "the induction hypothesis must be rank-guarded; without it the "
        "derivation assumes what it is proving",
        "no assumption in scope",
        _mutant(_unguarded_assumption),
    ),
    Mutation(
        "captured-rank-variable",
        "g is a specification variable and cannot double as the rank bound",
        "must be fresh",
        _mutant(_captured_rank_variable),
    ),
    Mutation(
        "negated-rank",
        "c - a is negative on every splitting step, so the measure cannot "
        "witness termination",
        "rank is negative",
        _mutant(_negated_rank),
    ),
)


def matrix_cases() -> list[MatrixCase]:
    return []


def anchored(target: np.ndarray) -> np.ndarray:
    """Rotate a target so its first amplitude is a nonnegative real.

    The splitting walk starts from |0..0> with a phaseless splitter on
    the first cell, so the state it prepares always has a nonnegative
    leaf-0 amplitude.  A global phase on the input vector is physically
    meaningless; fixing it here makes the comparison elementwise.
    """
    target = np.asarray(target, dtype=complex)
    return target * np.exp(-1j * np.angle(target[0]))


def _random_targets():
    rng = np.random.default_rng(20240817)
    out = []
    for n in (2, 3):
        re = rng.normal(size=1 << n)
        im = rng.normal(size=1 << n)
        out.append((n, anchored(re + 1j * im)))
    return out


def state_cases() -> list[StateCase]:
    cases = [
        StateCase(
            label="equal positive weights give the uniform superposition",
            circuit="QSP(2, 0, 0)",
            cells=(cell("q", 1), cell("q", 2)),
            expect=np.full(4, 0.5, dtype=complex),
            sigma=_sigma_for(np.ones(4)),
            tol=1e-7,
        )
    ]
    for n, target in _random_targets():
        cases.append(
            StateCase(
                label=f"prepares a random {1 << n}-amplitude target",
                circuit=f"QSP({n}, 0, 0)",
                cells=tuple(cell("q", i) for i in range(1, n + 1)),
                expect=state_prep_target(target),
                sigma=_sigma_for(target),
                tol=1e-7,
            )
        )
    return cases


def _sigma_for(target) -> dict:
    wt, ph = state_prep_tables(target)
    return {"wt": ArrayVal(wt), "ph": ArrayVal(ph)}


BUNDLE = ExampleBundle(
    name="qsp",
    title="amplitude-vector preparation by weighted splitters",
    source=SOURCE,
    proof=proof,
    matrix_cases=matrix_cases,
    state_cases=state_cases,
    mutations=MUTATIONS,
)
