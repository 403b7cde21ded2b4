"""Direct semantic checking of Hoare triples over finite domains."""

import pytest

from rqc.classical import ArrayVal, IntRange, VerificationDomain
from rqc.hoare import HoareTriple, check_entailment, check_triple
from rqc.parser import parse, parse_circuit, parse_formula, parse_state


def triple(pre_f, pre_s, cmd, post_f, post_s, gates=None):
    return HoareTriple(
        parse_formula(pre_f),
        parse_state(pre_s),
        parse_circuit(cmd, gates) if isinstance(cmd, str) else cmd,
        parse_formula(post_f),
        parse_state(post_s),
    )


DOM01 = VerificationDomain.of({"x": IntRange(0, 1)})


class TestCheckTriple:
    def test_hadamard_plus_state(self):
        t = triple(
            "true", "zeros(q, 0, 0)",
            "H[q[0]]",
            "true", "sum(1 / sqrt(2) : zeros(q, 0, 0), 1 / sqrt(2) : cell(q, 0, 0, 1))",
        )
        out = check_triple(t, VerificationDomain.of({}))
        assert out.status == "valid"
        assert out.checked == 1

    def test_wrong_post_state_caught(self):
        t = triple("true", "zeros(q, 0, 0)", "H[q[0]]", "true", "zeros(q, 0, 0)")
        out = check_triple(t, VerificationDomain.of({}))
        assert out.status == "failed"
        assert "quantum state" in out.detail

    def test_classical_post_checked_per_sigma(self):
        t = triple("true", "zeros(q, 0, 0)", "x := x + 1", "x <= 1", "zeros(q, 0, 0)")
        out = check_triple(t, DOM01)
        assert out.status == "failed"
        assert out.sigma["x"] == 1

    def test_precondition_filters_domain(self):
        t = triple("x = 0", "zeros(q, 0, 0)", "x := x + 1", "x = 1", "zeros(q, 0, 0)")
        out = check_triple(t, DOM01)
        assert out.status == "valid"
        assert out.checked == 1

    def test_stuck_run_vacuous_in_partial_mode(self):
        # CNOT on one cell twice is never legitimate
        t = triple("true", "zeros(q, 0, 1)", "CNOT[q[x], q[1]]", "true", "zeros(q, 0, 1)")
        dom = VerificationDomain.of({"x": IntRange(1, 1)})
        assert check_triple(t, dom, mode="partial").status == "valid"
        out = check_triple(t, dom, mode="total")
        assert out.status == "failed"
        assert "dist-violation" in out.detail

    def test_fuel_exhaustion_total_is_unknown_never_valid(self):
        src = "procedure Loop() <= Loop()"
        decls = parse(src).decls
        t = triple("true", "zeros(q, 0, 0)", "Loop()", "true", "zeros(q, 0, 0)")
        dom = VerificationDomain.of({})
        assert check_triple(t, dom, decls=decls, fuel=500, mode="partial").status == "valid"
        out = check_triple(t, dom, decls=decls, fuel=500, mode="total")
        assert out.status == "unknown"
        assert out.fuel_hits == 1

    def test_unbound_variable_is_an_error_in_both_modes(self):
        t = triple("true", "zeros(q, 0, 0)", "y := w + 1", "true", "zeros(q, 0, 0)")
        for mode in ("partial", "total"):
            out = check_triple(t, DOM01, mode=mode)
            assert out.status == "failed"
            assert "unbound" in out.detail

    def test_ghz_program_against_family(self):
        src = """
        procedure GHZ(a, c) <=
          if a = c then H[q[a]]
          else GHZ(a + 1, c); CNOT[q[a + 1], q[a]] fi
        """
        decls = parse(src).decls
        t = triple(
            "n >= 0", "zeros(q, 0, n)", "GHZ(0, n)", "n >= 0", "ghz(q, 0, n)"
        )
        out = check_triple(
            t, VerificationDomain.of({"n": IntRange(0, 3)}), decls=decls, mode="total"
        )
        assert out.status == "valid"
        assert out.checked == 4

    def test_mode_name_validated(self):
        t = triple("true", "zeros(q, 0, 0)", "skip", "true", "zeros(q, 0, 0)")
        with pytest.raises(ValueError, match="mode"):
            check_triple(t, DOM01, mode="sometimes")


class TestEntailment:
    def test_valid_entailment(self):
        out = check_entailment(
            (parse_formula("x = 0"), parse_state("zeros(q, 0, 0)")),
            (parse_formula("x <= 1"), parse_state("bits(q, 0, 0, j)")),
            VerificationDomain.of(
                {"x": IntRange(0, 1)}, {"j": ArrayVal.from_list([0])}
            ),
        )
        assert out.status == "valid"

    def test_formula_entailment_failure(self):
        out = check_entailment(
            (parse_formula("x <= 1"), parse_state("zeros(q, 0, 0)")),
            (parse_formula("x = 0"), parse_state("zeros(q, 0, 0)")),
            VerificationDomain.of({"x": IntRange(0, 1)}),
        )
        assert out.status == "failed"
        assert out.sigma["x"] == 1

    def test_state_mismatch_failure(self):
        out = check_entailment(
            (parse_formula("true"), parse_state("zeros(q, 0, 0)")),
            (parse_formula("true"), parse_state("cell(q, 0, 0, 1)")),
            VerificationDomain.of({}),
        )
        assert out.status == "failed"
        assert "differ" in out.detail

    def test_vacuous_on_unsatisfiable_formula(self):
        out = check_entailment(
            (parse_formula("x < 0"), parse_state("zeros(q, 0, 0)")),
            (parse_formula("false"), parse_state("cell(q, 0, 0, 1)")),
            VerificationDomain.of({"x": IntRange(0, 1)}),
        )
        assert out.status == "valid"
        assert out.checked == 0
