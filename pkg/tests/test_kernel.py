"""Rule checking: acceptance and rejection cases for the proof kernel."""

import pytest

from rqc.classical import BitArrayShape, IntRange, VerificationDomain
from rqc.kernel import (
    audit_soundness,
    check_proof,
    script_from_json,
    state_atom_groups,
)
from rqc.parser import parse_state


DOM = VerificationDomain.of(
    {"a": IntRange(0, 3), "c": IntRange(0, 3), "z": IntRange(0, 3)}
)

GHZ_DECLS = """
procedure GHZ(a, c) <=
  if a = c then H[q[c]]
  else GHZ(a, c - 1); CNOT[q[c - 1], q[c]] fi
"""

A = "0 <= a and a <= c and c <= 3"
REC_PRE = A + " and c - a = z"
THEN_F = REC_PRE + " and a = c"
ELSE_F = REC_PRE + " and not (a = c)"
ASM_F = A + " and c - a < z"
INST_F = "0 <= a and a <= c - 1 and c - 1 <= 3 and c - 1 - a < z"
INST_B = "0 <= a and a <= c - 1 and c - 1 <= 3"
X_CONJ = "(c - a = z and not (a = c))"
MID_S = "tensor(ghz(q, a, c - 1), zeros(q, c, c))"

GHZ_BODY = "if a = c then H[q[c]] else GHZ(a, c - 1); CNOT[q[c - 1], q[c]] fi"


def node(rule, pre=None, cmd=None, post=None, premises=(), **extra):
    out = {"rule": rule, "premises": list(premises)}
    if pre is not None:
        out["triple"] = {"pre": list(pre), "cmd": cmd, "post": list(post)}
    out.update(extra)
    return out


def ghz_script_json():
    """A complete total-correctness proof of the GHZ cascade."""
    nodes = {
        "root": node(
            "rec-total-gen",
            premises=["blk"],
            specs=[
                {
                    "pre": [A, "zeros(q, a, c)"],
                    "cmd": "GHZ(a, c)",
                    "post": [A, "ghz(q, a, c)"],
                }
            ],
            which=0,
            ranks=["c - a"],
            z="z",
        ),
        "blk": node(
            "block",
            pre=[REC_PRE, "zeros(q, a, c)"],
            cmd=f"begin local a, c := a, c; {GHZ_BODY} end",
            post=[A, "ghz(q, a, c)"],
            premises=["ifnode"],
        ),
        "ifnode": node(
            "if",
            pre=[REC_PRE, "zeros(q, a, c)"],
            cmd=GHZ_BODY,
            post=[A, "ghz(q, a, c)"],
            premises=["then_c", "else_c"],
        ),
        "gate_then": node(
            "gate",
            pre=[THEN_F, "zeros(q, a, c)"],
            cmd="H[q[c]]",
            post=[THEN_F, "ghz(q, a, c)"],
        ),
        "then_c": node(
            "consequence",
            pre=[THEN_F, "zeros(q, a, c)"],
            cmd="H[q[c]]",
            post=[A, "ghz(q, a, c)"],
            premises=["gate_then"],
        ),
        "asm": node(
            "assumption",
            pre=[ASM_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c)",
            post=[A, "ghz(q, a, c)"],
        ),
        "inst": node(
            "instantiation",
            pre=[INST_F, "zeros(q, a, c - 1)"],
            cmd="GHZ(a, c - 1)",
            post=[INST_B, "ghz(q, a, c - 1)"],
            premises=["asm"],
            mapping={"c": "c - 1"},
        ),
        "invconj": node(
            "invariance-conj",
            pre=[f"{INST_F} and {X_CONJ}", "zeros(q, a, c - 1)"],
            cmd="GHZ(a, c - 1)",
            post=[f"{INST_B} and {X_CONJ}", "ghz(q, a, c - 1)"],
            premises=["inst"],
        ),
        "framed": node(
            "frame",
            pre=[
                f"{INST_F} and {X_CONJ}",
                "tensor(zeros(q, a, c - 1), zeros(q, c, c))",
            ],
            cmd="GHZ(a, c - 1)",
            post=[f"{INST_B} and {X_CONJ}", MID_S],
            premises=["invconj"],
        ),
        "rec_step": node(
            "consequence",
            pre=[ELSE_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c - 1)",
            post=[ELSE_F, MID_S],
            premises=["framed"],
        ),
        "gate_cnot": node(
            "gate",
            pre=[ELSE_F, MID_S],
            cmd="CNOT[q[c - 1], q[c]]",
            post=[ELSE_F, "ghz(q, a, c)"],
        ),
        "cnot_step": node(
            "consequence",
            pre=[ELSE_F, MID_S],
            cmd="CNOT[q[c - 1], q[c]]",
            post=[A, "ghz(q, a, c)"],
            premises=["gate_cnot"],
        ),
        "else_c": node(
            "seq",
            pre=[ELSE_F, "zeros(q, a, c)"],
            cmd="GHZ(a, c - 1); CNOT[q[c - 1], q[c]]",
            post=[A, "ghz(q, a, c)"],
            premises=["rec_step", "cnot_step"],
        ),
    }
    return {
        "format": "rqc-proof/1",
        "mode": "total",
        "domain": DOM.to_json(),
        "declarations": GHZ_DECLS,
        "nodes": nodes,
        "roots": ["root"],
    }


def tiny_script(mode, nodes, roots, dom=None, decls=""):
    return script_from_json(
        {
            "format": "rqc-proof/1",
            "mode": mode,
            "domain": (dom or DOM).to_json(),
            "declarations": decls,
            "nodes": nodes,
            "roots": roots,
        }
    )


def first_error(report):
    assert not report.ok and report.errors
    return report.errors[0][1]


class TestAxioms:
    def test_skip_accepts(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "skip",
                    pre=["a = 0", "zeros(q, 0, 1)"],
                    cmd="skip",
                    post=["a = 0", "zeros(q, 0, 1)"],
                )
            },
            ["n"],
        )
        assert check_proof(s).ok

    def test_skip_rejects_changed_post(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "skip",
                    pre=["a = 0", "zeros(q, 0, 1)"],
                    cmd="skip",
                    post=["a = 1", "zeros(q, 0, 1)"],
                )
            },
            ["n"],
        )
        assert "postcondition formula" in first_error(check_proof(s))

    def test_assign_accepts_backward_substitution(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "assign",
                    pre=["a + 1 = 2", "zeros(q, 0, 0)"],
                    cmd="a := a + 1",
                    post=["a = 2", "zeros(q, 0, 0)"],
                )
            },
            ["n"],
        )
        assert check_proof(s).ok

    def test_assign_rejects_unsubstituted_pre(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "assign",
                    pre=["a = 2", "zeros(q, 0, 0)"],
                    cmd="a := a + 1",
                    post=["a = 2", "zeros(q, 0, 0)"],
                )
            },
            ["n"],
        )
        assert "precondition formula" in first_error(check_proof(s))

    def test_gate_accepts_hadamard_image(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "gate",
                    pre=["a = 0", "zeros(q, 0, 0)"],
                    cmd="H[q[0]]",
                    post=["a = 0", "cell(q, 0, 1 / sqrt(2), 1 / sqrt(2))"],
                )
            },
            ["n"],
            dom=VerificationDomain.of({"a": IntRange(0, 0)}),
        )
        rep = check_proof(s)
        assert rep.ok, rep.errors

    def test_gate_rejects_wrong_image(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "gate",
                    pre=["a = 0", "zeros(q, 0, 0)"],
                    cmd="H[q[0]]",
                    post=["a = 0", "cell(q, 0, 0, 1)"],
                )
            },
            ["n"],
        )
        assert "image" in first_error(check_proof(s))

    def test_gate_rejects_colliding_operands(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "gate",
                    pre=["a = 1", "zeros(q, 0, 1)"],
                    cmd="CNOT[q[a], q[1]]",
                    post=["a = 1", "zeros(q, 0, 1)"],
                )
            },
            ["n"],
        )
        assert "collide" in first_error(check_proof(s))

    def test_gate_with_unsatisfiable_pre_is_vacuous(self):
        s = tiny_script(
            "partial",
            {
                "n": node(
                    "gate",
                    pre=["a < 0", "zeros(q, 0, 0)"],
                    cmd="H[q[0]]",
                    post=["a < 0", "cell(q, 0, 3, 5)"],
                )
            },
            ["n"],
        )
        assert check_proof(s).ok


class TestStructuralRules:
    MID = "cell(q, 0, iv(w[0] = 1), iv(w[0] = 0))"
    SEQ_DOM = VerificationDomain.of({"a": IntRange(0, 0), "w": BitArrayShape(0, 0)})

    def seq_nodes(self):
        return {
            "x": node(
                "gate",
                pre=["a = 0", "bits(q, 0, 0, w)"],
                cmd="X[q[0]]",
                post=["a = 0", self.MID],
            ),
            "x2": node(
                "gate",
                pre=["a = 0", self.MID],
                cmd="X[q[0]]",
                post=["a = 0", "bits(q, 0, 0, w)"],
            ),
            "s": node(
                "seq",
                pre=["a = 0", "bits(q, 0, 0, w)"],
                cmd="X[q[0]]; X[q[0]]",
                post=["a = 0", "bits(q, 0, 0, w)"],
                premises=["x", "x2"],
            ),
        }

    def test_seq_chains(self):
        rep = check_proof(tiny_script("partial", self.seq_nodes(), ["s"], dom=self.SEQ_DOM))
        assert rep.ok, rep.errors

    def test_seq_rejects_broken_middle(self):
        nodes = self.seq_nodes()
        nodes["x2"] = node(
            "gate",
            pre=["a = 0", "cell(q, 0, 1, 0)"],
            cmd="X[q[0]]",
            post=["a = 0", "cell(q, 0, 0, 1)"],
        )
        err = first_error(check_proof(tiny_script("partial", nodes, ["s"], dom=self.SEQ_DOM)))
        assert "intermediate" in err

    def if_nodes(self):
        return {
            "t": node(
                "gate",
                pre=["0 <= a and a = 0", "zeros(q, 0, 0)"],
                cmd="X[q[0]]",
                post=["0 <= a and a = 0", "cell(q, 0, 0, 1)"],
            ),
            "t2": node(
                "consequence",
                pre=["0 <= a and a = 0", "zeros(q, 0, 0)"],
                cmd="X[q[0]]",
                post=["0 <= a", "cell(q, 0, 0, 1)"],
                premises=["t"],
            ),
            "e": node(
                "skip",
                pre=["0 <= a and not (a = 0)", "zeros(q, 0, 0)"],
                cmd="skip",
                post=["0 <= a and not (a = 0)", "zeros(q, 0, 0)"],
            ),
            "e2": node(
                "consequence",
                pre=["0 <= a and not (a = 0)", "zeros(q, 0, 0)"],
                cmd="skip",
                post=["0 <= a", "cell(q, 0, 0, 1)"],
                premises=["e"],
            ),
            "n": node(
                "if",
                pre=["0 <= a", "zeros(q, 0, 0)"],
                cmd="if a = 0 then X[q[0]] else skip fi",
                post=["0 <= a", "cell(q, 0, 0, 1)"],
                premises=["t2", "e2"],
            ),
        }

    def test_if_accepts_with_vacuous_else(self):
        # a is pinned to 0, so the else premise holds vacuously even
        # though skip cannot produce the claimed state.
        dom = VerificationDomain.of({"a": IntRange(0, 0)})
        rep = check_proof(tiny_script("partial", self.if_nodes(), ["n"], dom=dom))
        assert rep.ok, rep.errors

    def test_if_requires_guard_strengthened_premise(self):
        nodes = self.if_nodes()
        nodes["t2"] = node(
            "consequence",
            pre=["0 <= a", "zeros(q, 0, 0)"],
            cmd="X[q[0]]",
            post=["0 <= a", "cell(q, 0, 0, 1)"],
            premises=["t"],
        )
        dom = VerificationDomain.of({"a": IntRange(0, 0)})
        err = first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=dom)))
        assert "then-premise" in err

    def test_consequence_runs_both_entailments(self):
        nodes = {
            "g": node(
                "gate",
                pre=["a = 0", "zeros(q, 0, 1)"],
                cmd="H[q[0]]",
                post=[
                    "a = 0",
                    "tensor(cell(q, 0, 1 / sqrt(2), 1 / sqrt(2)), zeros(q, 1, 1))",
                ],
            ),
            "c": node(
                "consequence",
                pre=["a = 0 and a <= 0", "zeros(q, 0, 1)"],
                cmd="H[q[0]]",
                post=[
                    "0 <= a",
                    "tensor(cell(q, 0, 1 / sqrt(2), 1 / sqrt(2)), cell(q, 1, 1, 0))",
                ],
                premises=["g"],
            ),
        }
        assert check_proof(tiny_script("partial", nodes, ["c"])).ok
        bad = dict(nodes)
        bad["c"] = node(
            "consequence",
            pre=["0 <= a", "zeros(q, 0, 1)"],
            cmd="H[q[0]]",
            post=["0 <= a", "zeros(q, 0, 1)"],
            premises=["g"],
        )
        assert "entailment" in first_error(check_proof(tiny_script("partial", bad, ["c"])))


class TestQuantumAlternation:
    QDOM = VerificationDomain.of(
        {
            "c": IntRange(1, 1),
            "w": BitArrayShape(1, 1),
            "h0": IntRange(0, 1),
            "h1": IntRange(0, 1),
        }
    )

    def qif_nodes(self, rule="qif-pure"):
        pre = (
            "sum(c(h0) : tensor(cell(q, 0, 1, 0), bits(q, 1, 1, w)), "
            "c(h1) : tensor(cell(q, 0, 0, 1), bits(q, 1, 1, w)))"
        )
        post = (
            "sum(c(h0) : tensor(cell(q, 0, 1, 0), bits(q, 1, 1, w)), "
            "c(h1) : tensor(cell(q, 0, 0, 1), cell(q, 1, iv(w[1] = 1), iv(w[1] = 0))))"
        )
        return {
            "b0": node(
                "skip",
                pre=["c = 1", "bits(q, 1, 1, w)"],
                cmd="skip",
                post=["c = 1", "bits(q, 1, 1, w)"],
            ),
            "b1": node(
                "gate",
                pre=["c = 1", "bits(q, 1, 1, w)"],
                cmd="X[q[c]]",
                post=["c = 1", "cell(q, 1, iv(w[1] = 1), iv(w[1] = 0))"],
            ),
            "n": node(
                rule,
                pre=["c = 1", pre],
                cmd="qif[q[0]] |0> -> skip [] |1> -> X[q[c]] fiq",
                post=["c = 1", post],
                premises=["b0", "b1"],
                coeffs=["c(h0)", "c(h1)"],
            ),
        }

    def test_qif_pure_accepts_in_total_mode(self):
        rep = check_proof(tiny_script("total", self.qif_nodes(), ["n"], dom=self.QDOM))
        assert rep.ok, rep.errors

    def test_qif_general_is_partial_only(self):
        nodes = self.qif_nodes(rule="qif")
        rep = check_proof(tiny_script("total", nodes, ["n"], dom=self.QDOM))
        assert "partial" in first_error(rep)
        assert check_proof(tiny_script("partial", nodes, ["n"], dom=self.QDOM)).ok

    def test_qif_rejects_branch_touching_coin(self):
        nodes = {
            "b0": node(
                "skip",
                pre=["c = 0", "scalar(1)"],
                cmd="skip",
                post=["c = 0", "scalar(1)"],
            ),
            "b1": node(
                "gate",
                pre=["c = 0", "scalar(1)"],
                cmd="X[q[c]]",
                post=["c = 0", "cell(q, 0, 0, 1)"],
            ),
            "n": node(
                "qif-pure",
                pre=[
                    "c = 0",
                    "sum(1 : tensor(cell(q, 0, 1, 0), scalar(1)), "
                    "0 : tensor(cell(q, 0, 0, 1), scalar(1)))",
                ],
                cmd="qif[q[0]] |0> -> skip [] |1> -> X[q[c]] fiq",
                post=[
                    "c = 0",
                    "sum(1 : tensor(cell(q, 0, 1, 0), scalar(1)), "
                    "0 : tensor(cell(q, 0, 0, 1), cell(q, 0, 0, 1)))",
                ],
                premises=["b0", "b1"],
                coeffs=["1", "0"],
            ),
        }
        dom = VerificationDomain.of({"c": IntRange(0, 0)})
        err = first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=dom)))
        assert "coin" in err

    def test_qif_pure_rejects_assigning_branch(self):
        nodes = {
            "b0": node(
                "skip",
                pre=["c = 1", "scalar(1)"],
                cmd="skip",
                post=["c = 1", "scalar(1)"],
            ),
            "b1": node(
                "assign",
                pre=["c = 1", "scalar(1)"],
                cmd="u := 7",
                post=["c = 1", "scalar(1)"],
            ),
            "n": node(
                "qif-pure",
                pre=[
                    "c = 1",
                    "sum(1 : tensor(cell(q, 0, 1, 0), scalar(1)), "
                    "0 : tensor(cell(q, 0, 0, 1), scalar(1)))",
                ],
                cmd="qif[q[0]] |0> -> skip [] |1> -> u := 7 fiq",
                post=[
                    "c = 1",
                    "sum(1 : tensor(cell(q, 0, 1, 0), scalar(1)), "
                    "0 : tensor(cell(q, 0, 0, 1), scalar(1)))",
                ],
                premises=["b0", "b1"],
                coeffs=["1", "0"],
            ),
        }
        dom = VerificationDomain.of({"c": IntRange(1, 1), "u": IntRange(0, 7)})
        err = first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=dom)))
        assert "untouched" in err


class TestFrameAndLinearity:
    def frame_nodes(self):
        return {
            "g": node(
                "gate",
                pre=["0 <= a and 0 <= b", "zeros(q, a, a)"],
                cmd="H[q[a]]",
                post=["0 <= a and 0 <= b", "cell(q, a, 1 / sqrt(2), 1 / sqrt(2))"],
            ),
            "f": node(
                "frame",
                pre=[
                    "0 <= a and 0 <= b",
                    "tensor(zeros(q, a, a), cell(q, b, 0, 1))",
                ],
                cmd="H[q[a]]",
                post=[
                    "0 <= a and 0 <= b",
                    "tensor(cell(q, a, 1 / sqrt(2), 1 / sqrt(2)), cell(q, b, 0, 1))",
                ],
                premises=["g"],
            ),
        }

    FRAME_DOM = VerificationDomain.of({"a": IntRange(0, 0), "b": IntRange(1, 1)})

    def test_frame_falls_back_to_sweep(self):
        # No arithmetic fact separates a from b; only the sweep settles it.
        rep = check_proof(tiny_script("partial", self.frame_nodes(), ["f"], dom=self.FRAME_DOM))
        assert rep.ok, rep.errors

    def test_strict_mode_refuses_the_sweep(self):
        rep = check_proof(
            tiny_script("partial", self.frame_nodes(), ["f"], dom=self.FRAME_DOM),
            strict=True,
        )
        assert "strict" in first_error(rep)

    def test_frame_rejects_overlapping_factor(self):
        nodes = {
            "g": node(
                "gate",
                pre=["a = 0", "zeros(q, a, a)"],
                cmd="H[q[a]]",
                post=["a = 0", "cell(q, a, 1 / sqrt(2), 1 / sqrt(2))"],
            ),
            "f": node(
                "frame",
                pre=["a = 0", "tensor(zeros(q, a, a), cell(q, a, 0, 1))"],
                cmd="H[q[a]]",
                post=[
                    "a = 0",
                    "tensor(cell(q, a, 1 / sqrt(2), 1 / sqrt(2)), cell(q, a, 0, 1))",
                ],
                premises=["g"],
            ),
        }
        dom = VerificationDomain.of({"a": IntRange(0, 0)})
        assert "shares cells" in first_error(
            check_proof(tiny_script("partial", nodes, ["f"], dom=dom))
        )

    def test_linearity_combines_basis_columns(self):
        nodes = {
            "p0": node(
                "gate",
                pre=["a = 0", "cell(q, 0, 1, 0)"],
                cmd="X[q[0]]",
                post=["a = 0", "cell(q, 0, 0, 1)"],
            ),
            "p1": node(
                "gate",
                pre=["a = 0", "cell(q, 0, 0, 1)"],
                cmd="X[q[0]]",
                post=["a = 0", "cell(q, 0, 1, 0)"],
            ),
            "n": node(
                "linearity",
                pre=["a = 0", "sum(c(h0) : cell(q, 0, 1, 0), c(h1) : cell(q, 0, 0, 1))"],
                cmd="X[q[0]]",
                post=["a = 0", "sum(c(h0) : cell(q, 0, 0, 1), c(h1) : cell(q, 0, 1, 0))"],
                premises=["p0", "p1"],
                coeffs=["c(h0)", "c(h1)"],
            ),
        }
        dom = VerificationDomain.of(
            {"a": IntRange(0, 0), "h0": IntRange(0, 1), "h1": IntRange(0, 1)}
        )
        assert check_proof(tiny_script("partial", nodes, ["n"], dom=dom)).ok
        bad = dict(nodes)
        bad["n"] = dict(nodes["n"], coeffs=["c(h0)"])
        assert "coefficient" in first_error(
            check_proof(tiny_script("partial", bad, ["n"], dom=dom))
        )


class TestFormulaRules:
    def test_invariance_partial_only(self):
        n = {
            "n": node(
                "invariance",
                pre=["b = 1", "cell(q, 5, 0, 1)"],
                cmd="H[q[0]]",
                post=["b = 1", "cell(q, 5, 0, 1)"],
            )
        }
        dom = VerificationDomain.of({"b": IntRange(1, 1)})
        assert check_proof(tiny_script("partial", n, ["n"], dom=dom)).ok
        assert "partial" in first_error(check_proof(tiny_script("total", n, ["n"], dom=dom)))

    def test_invariance_conj_rejects_changed_invariant(self):
        nodes = {
            "p": node(
                "assign",
                pre=["u + 1 = 1", "scalar(1)"],
                cmd="u := u + 1",
                post=["u = 1", "scalar(1)"],
            ),
            "n": node(
                "invariance-conj",
                pre=["u + 1 = 1 and u = 0", "scalar(1)"],
                cmd="u := u + 1",
                post=["u = 1 and u = 0", "scalar(1)"],
                premises=["p"],
            ),
        }
        dom = VerificationDomain.of({"u": IntRange(0, 1)})
        assert "assigns" in first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=dom)))

    def test_disjunction_and_conjunction(self):
        nodes = {
            "p0": node("skip", pre=["a = 0", "scalar(1)"], cmd="skip", post=["a = 0", "scalar(1)"]),
            "p1": node("skip", pre=["a = 1", "scalar(1)"], cmd="skip", post=["a = 1", "scalar(1)"]),
            "c0": node(
                "consequence",
                pre=["a = 0", "scalar(1)"],
                cmd="skip",
                post=["a <= 1", "scalar(1)"],
                premises=["p0"],
            ),
            "c1": node(
                "consequence",
                pre=["a = 1", "scalar(1)"],
                cmd="skip",
                post=["a <= 1", "scalar(1)"],
                premises=["p1"],
            ),
            "d": node(
                "disjunction",
                pre=["a = 0 or a = 1", "scalar(1)"],
                cmd="skip",
                post=["a <= 1", "scalar(1)"],
                premises=["c0", "c1"],
            ),
            "k0": node(
                "consequence",
                pre=["a = 0", "scalar(1)"],
                cmd="skip",
                post=["0 <= a", "scalar(1)"],
                premises=["p0"],
            ),
            "k1": node(
                "consequence",
                pre=["a = 0", "scalar(1)"],
                cmd="skip",
                post=["a <= 1", "scalar(1)"],
                premises=["p0"],
            ),
            "k": node(
                "conjunction",
                pre=["a = 0", "scalar(1)"],
                cmd="skip",
                post=["0 <= a and a <= 1", "scalar(1)"],
                premises=["k0", "k1"],
            ),
        }
        dom = VerificationDomain.of({"a": IntRange(0, 1)})
        rep = check_proof(tiny_script("partial", nodes, ["d", "k"], dom=dom))
        assert rep.ok, rep.errors

    def test_exists_intro(self):
        nodes = {
            "p": node(
                "gate",
                pre=["a = y", "zeros(q, 0, 0)"],
                cmd="X[q[0]]",
                post=["a = y", "cell(q, 0, 0, 1)"],
            ),
            "n": node(
                "exists-intro",
                pre=["exists y in [0 : 1] . a = y", "zeros(q, 0, 0)"],
                cmd="X[q[0]]",
                post=["exists y in [0 : 1] . a = y", "cell(q, 0, 0, 1)"],
                premises=["p"],
            ),
        }
        dom = VerificationDomain.of({"a": IntRange(0, 1), "y": IntRange(0, 1)})
        assert check_proof(tiny_script("partial", nodes, ["n"], dom=dom)).ok

    def test_exists_intro_rejects_captured_command_variable(self):
        nodes = {
            "p": node(
                "gate",
                pre=["a = y", "zeros(q, y, y)"],
                cmd="X[q[y]]",
                post=["a = y", "cell(q, y, 0, 1)"],
            ),
            "n": node(
                "exists-intro",
                pre=["exists y in [0 : 1] . a = y", "zeros(q, y, y)"],
                cmd="X[q[y]]",
                post=["exists y in [0 : 1] . a = y", "cell(q, y, 0, 1)"],
                premises=["p"],
            ),
        }
        dom = VerificationDomain.of({"a": IntRange(0, 1), "y": IntRange(0, 1)})
        assert "command" in first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=dom)))

    def test_substitution_renames_spectators(self):
        nodes = {
            "p": node(
                "skip",
                pre=["a = y", "bits(q, 0, 0, w)"],
                cmd="skip",
                post=["a = y", "bits(q, 0, 0, w)"],
            ),
            "n": node(
                "substitution",
                pre=["a = 2 * y", "bits(q, 0, 0, w)"],
                cmd="skip",
                post=["a = 2 * y", "bits(q, 0, 0, w)"],
                premises=["p"],
                mapping={"y": "2 * y"},
            ),
        }
        dom = VerificationDomain.of(
            {"a": IntRange(0, 2), "y": IntRange(0, 1), "w": BitArrayShape(0, 0)}
        )
        assert check_proof(tiny_script("partial", nodes, ["n"], dom=dom)).ok


class TestRecursion:
    def test_ghz_proof_replays_and_audits(self):
        script = script_from_json(ghz_script_json())
        rep = check_proof(script)
        assert rep.ok, rep.errors
        assert rep.nodes_checked == len(script.nodes)
        assert audit_soundness(script) == ()

    def test_ghz_proof_is_strict(self):
        # Every disjointness in this proof is settled by index arithmetic.
        rep = check_proof(script_from_json(ghz_script_json()), strict=True)
        assert rep.ok, rep.errors

    def test_rejects_negative_rank(self):
        obj = ghz_script_json()
        obj["nodes"]["root"]["ranks"] = ["a - c"]
        assert "negative" in first_error(check_proof(script_from_json(obj)))

    def test_rejects_stale_bound_variable(self):
        obj = ghz_script_json()
        obj["nodes"]["root"]["z"] = "c"
        assert "fresh" in first_error(check_proof(script_from_json(obj)))

    def test_rejects_uncovered_rank(self):
        obj = ghz_script_json()
        obj["domain"] = VerificationDomain.of(
            {"a": IntRange(0, 3), "c": IntRange(0, 3), "z": IntRange(0, 2)}
        ).to_json()
        assert "cover" in first_error(check_proof(script_from_json(obj)))

    def test_rejects_assumption_without_rank_guard(self):
        obj = ghz_script_json()
        obj["nodes"]["asm"]["triple"]["pre"][0] = A
        assert "assumption" in first_error(check_proof(script_from_json(obj)))

    def test_rejects_unwrapped_premise(self):
        obj = ghz_script_json()
        obj["nodes"]["root"]["premises"] = ["ifnode"]
        err = first_error(check_proof(script_from_json(obj)))
        assert "premise 0" in err and "bind" in err

    def test_assumption_needs_scope(self):
        s = tiny_script(
            "total",
            {
                "n": node(
                    "assumption",
                    pre=[ASM_F, "zeros(q, a, c)"],
                    cmd="GHZ(a, c)",
                    post=[A, "ghz(q, a, c)"],
                )
            },
            ["n"],
            decls=GHZ_DECLS,
        )
        assert "scope" in first_error(check_proof(s))

    def test_fixed_assumption_cannot_be_instantiated(self):
        obj = ghz_script_json()
        obj["nodes"]["root"]["rule"] = "rec-total"
        assert "verbatim" in first_error(check_proof(script_from_json(obj)))

    def test_partial_recursion_accepts_divergence(self):
        decls = "procedure Loop() <= Loop()"
        dom = VerificationDomain.of({"a": IntRange(0, 1)})
        obj = {
            "format": "rqc-proof/1",
            "mode": "partial",
            "domain": dom.to_json(),
            "declarations": decls,
            "nodes": {
                "root": node(
                    "rec-partial-gen",
                    premises=["asm"],
                    specs=[
                        {
                            "pre": ["0 <= a", "scalar(1)"],
                            "cmd": "Loop()",
                            "post": ["a < 0", "scalar(1)"],
                        }
                    ],
                    which=0,
                ),
                "asm": node(
                    "assumption",
                    pre=["0 <= a", "scalar(1)"],
                    cmd="Loop()",
                    post=["a < 0", "scalar(1)"],
                ),
            },
            "roots": ["root"],
            "fuel": 2000,
        }
        script = script_from_json(obj)
        rep = check_proof(script)
        assert rep.ok, rep.errors
        # The conclusion is vacuously sound: Loop() never finishes.
        assert audit_soundness(script) == ()

    def test_total_mode_rejects_partial_recursion(self):
        dom = VerificationDomain.of({"a": IntRange(0, 1)})
        obj = {
            "format": "rqc-proof/1",
            "mode": "total",
            "domain": dom.to_json(),
            "declarations": "procedure Loop() <= Loop()",
            "nodes": {
                "root": node(
                    "rec-partial-gen",
                    premises=["asm"],
                    specs=[
                        {
                            "pre": ["0 <= a", "scalar(1)"],
                            "cmd": "Loop()",
                            "post": ["a < 0", "scalar(1)"],
                        }
                    ],
                    which=0,
                ),
                "asm": node(
                    "assumption",
                    pre=["0 <= a", "scalar(1)"],
                    cmd="Loop()",
                    post=["a < 0", "scalar(1)"],
                ),
            },
            "roots": ["root"],
        }
        assert "partial" in first_error(check_proof(script_from_json(obj)))

    def test_cycle_detection(self):
        nodes = {
            "n": node(
                "consequence",
                pre=["a = 0", "scalar(1)"],
                cmd="skip",
                post=["a = 0", "scalar(1)"],
                premises=["n"],
            ),
        }
        assert "cycle" in first_error(check_proof(tiny_script("partial", nodes, ["n"])))


class TestBlocks:
    def good_nodes(self):
        return {
            "body": node(
                "gate",
                pre=["a = 0 and u = a + 1", "zeros(q, 1, 1)"],
                cmd="X[q[u]]",
                post=["a = 0 and u = a + 1", "cell(q, 1, 0, 1)"],
            ),
            "w": node(
                "consequence",
                pre=["a = 0 and u = a + 1", "zeros(q, 1, 1)"],
                cmd="X[q[u]]",
                post=["a = 0", "cell(q, 1, 0, 1)"],
                premises=["body"],
            ),
            "n": node(
                "block",
                pre=["a = 0", "zeros(q, 1, 1)"],
                cmd="begin local u := a + 1; X[q[u]] end",
                post=["a = 0", "cell(q, 1, 0, 1)"],
                premises=["w"],
            ),
        }

    BLOCK_DOM = VerificationDomain.of({"a": IntRange(0, 0), "u": IntRange(0, 1)})

    def test_general_block_introduces_locals(self):
        rep = check_proof(tiny_script("partial", self.good_nodes(), ["n"], dom=self.BLOCK_DOM))
        assert rep.ok, rep.errors

    def test_block_rejects_local_in_outer_state(self):
        nodes = self.good_nodes()
        for nid in ("body", "w"):
            nodes[nid]["triple"]["pre"][1] = "zeros(q, u, u)"
        nodes["n"]["triple"]["pre"][1] = "zeros(q, u, u)"
        err = first_error(check_proof(tiny_script("partial", nodes, ["n"], dom=self.BLOCK_DOM)))
        assert "precondition state" in err

    def test_block_alpha_renaming_of_locals(self):
        nodes = {
            "body": node(
                "gate",
                pre=["a = 0 and v = a + 1", "zeros(q, 1, 1)"],
                cmd="X[q[v]]",
                post=["a = 0 and v = a + 1", "cell(q, 1, 0, 1)"],
            ),
            "w": node(
                "consequence",
                pre=["a = 0 and v = a + 1", "zeros(q, 1, 1)"],
                cmd="X[q[v]]",
                post=["a = 0", "cell(q, 1, 0, 1)"],
                premises=["body"],
            ),
            "n": node(
                "block",
                pre=["a = 0", "zeros(q, 1, 1)"],
                cmd="begin local v := a + 1; X[q[v]] end",
                post=["a = 0", "cell(q, 1, 0, 1)"],
                premises=["w"],
            ),
            "top": node(
                "consequence",
                pre=["a = 0", "zeros(q, 1, 1)"],
                cmd="begin local u := a + 1; X[q[u]] end",
                post=["a = 0", "cell(q, 1, 0, 1)"],
                premises=["n"],
            ),
        }
        dom = VerificationDomain.of({"a": IntRange(0, 0), "v": IntRange(0, 1)})
        rep = check_proof(tiny_script("partial", nodes, ["top"], dom=dom))
        assert rep.ok, rep.errors


class TestLoader:
    def test_rejects_bad_format(self):
        with pytest.raises(ValueError, match="format"):
            script_from_json({"format": "nope"})

    def test_rejects_unknown_rule(self):
        obj = ghz_script_json()
        obj["nodes"]["root"]["rule"] = "modus-ponens"
        with pytest.raises(ValueError, match="unknown rule"):
            script_from_json(obj)

    def test_rejects_missing_root(self):
        obj = ghz_script_json()
        obj["roots"] = ["nowhere"]
        with pytest.raises(ValueError, match="root"):
            script_from_json(obj)

    def test_custom_gate_table(self):
        obj = {
            "format": "rqc-proof/1",
            "mode": "partial",
            "domain": VerificationDomain.of({"a": IntRange(0, 0)}).to_json(),
            "gates": {"U": {"matrix": [[[0, 0], [0, -1]], [[0, 1], [0, 0]]]}},
            "nodes": {
                "n": node(
                    "gate",
                    pre=["a = 0", "cell(q, 0, 1, 0)"],
                    cmd="U[q[0]]",
                    post=["a = 0", "cell(q, 0, 0, num(0.0, 1.0))"],
                ),
            },
            "roots": ["n"],
        }
        rep = check_proof(script_from_json(obj))
        assert rep.ok, rep.errors

    def test_report_json_shape(self):
        rep = check_proof(script_from_json(ghz_script_json()))
        js = rep.to_json()
        assert js["ok"] is True and js["mode"] == "total"
        assert js["nodes_checked"] == 13 and js["errors"] == []


class TestAtomGroups:
    def test_products_are_opaque(self):
        assert state_atom_groups(parse_state("prod(k, 0, 3, cell(q, k, 1, 0))")) is None

    def test_tensor_collects_factors(self):
        g = state_atom_groups(parse_state("tensor(cell(q, a, 1, 0), ghz(r, 0, 2))"))
        assert len(g) == 2
