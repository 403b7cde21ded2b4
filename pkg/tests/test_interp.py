"""Small-step interpreter tests: rule-by-rule golden traces plus direct
vector-level checks against hand-built matrices.

Run ``python3 tests/test_interp.py --regen`` to rewrite the golden trace
files after a deliberate change to trace formatting or stepping order.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

from rqc.classical import ClassicalState, Const
from rqc.gates import builtin_gates
from rqc.interp import (
    InterpError,
    extract_unitary,
    format_trace,
    legitimacy_check,
    run,
)
from rqc.parser import parse, parse_circuit
from rqc.qstate import QuantumState, Registry
from rqc.syntax import Call

GOLDEN = Path(__file__).parent / "golden"
GATES = builtin_gates()

Q = lambda k: ("q", (k,))


def ghz_decls():
    return parse(
        "procedure GHZ(a, c) <= if a = c then H[q[c]] "
        "else GHZ(a, c - 1); CNOT[q[c - 1], q[c]] fi"
    ).decls


# circuit source, classical bindings, declarations source (or None)
TRACE_CASES = {
    "sk": ("skip", {}, None),
    "as": ("x, y := y, x", {"x": 1, "y": 2}, None),
    "ga": ("H[q[0]]", {}, None),
    "ga_dist": ("CNOT[q[i], q[j]]", {"i": 0, "j": 0}, None),
    "sc": ("skip; X[q[0]]", {}, None),
    "if_then": ("if x = 0 then X[q[0]] else skip fi", {"x": 0}, None),
    "if_else": ("if x = 0 then X[q[0]] else skip fi", {"x": 1}, None),
    "qif": ("H[q[0]]; qif[q[0]] |0> -> skip [] |1> -> X[q[1]] fiq", {}, None),
    "qif_diverge": (
        "qif[q[0]] |0> -> x := 1 [] |1> -> x := 2 fiq",
        {"x": 0},
        None,
    ),
    "bs": ("begin local x := 5; X[q[x]] end", {"x": 1}, None),
    "rc": ("P(3)", {}, "procedure P(k) <= X[q[k]]"),
}


def traced(name):
    src, bindings, decl_src = TRACE_CASES[name]
    decls = parse(decl_src).decls if decl_src else ()
    res = run(parse_circuit(src), ClassicalState(bindings), decls=decls, trace=True)
    return format_trace(res)


class TestGoldenTraces:
    @pytest.mark.parametrize("name", sorted(TRACE_CASES))
    def test_trace_matches_golden(self, name):
        assert traced(name) == (GOLDEN / f"{name}.txt").read_text()


class TestStepping:
    def test_plus_state(self):
        res = run(parse_circuit("H[q[0]]"))
        assert res.status == "done"
        assert np.allclose(res.state.vector, [2**-0.5, 2**-0.5])

    def test_registry_grows_in_allocation_order(self):
        res = run(parse_circuit("H[q[2]]; H[q[0]]"))
        assert res.state.registry.cells == (Q(2), Q(0))

    def test_assignment_is_simultaneous(self):
        res = run(parse_circuit("x, y := y, x"), ClassicalState({"x": 1, "y": 2}))
        assert res.sigma["x"] == 2 and res.sigma["y"] == 1

    def test_dist_violation_fails_cleanly(self):
        res = run(parse_circuit("CNOT[q[i], q[i]]"), ClassicalState({"i": 3}))
        assert res.status == "failed"
        assert res.failure.reason == "dist-violation"

    def test_unbound_variable_fails_cleanly(self):
        res = run(parse_circuit("H[q[i]]"))
        assert res.status == "failed" and res.failure.reason == "unbound"

    def test_block_restores_and_forgets(self):
        res = run(parse_circuit("begin local x, y := 5, 6; z := x + y end"),
                  ClassicalState({"x": 1}))
        assert res.status == "done"
        assert res.sigma["x"] == 1 and res.sigma["z"] == 11
        assert "y" not in res.sigma

    def test_fuel_exhaustion_reports_fuel(self):
        decls = parse("procedure P(k) <= P(k + 1)").decls
        res = run(Call("P", (Const(0),)), decls=decls, fuel=300)
        assert res.status == "fuel"

    def test_zero_amplitude_branch_still_runs(self):
        # the coin is |0>, yet an illegitimate gate in the |1> branch fails
        c = parse_circuit("qif[q[0]] |0> -> skip [] |1> -> CNOT[q[1], q[1]] fiq")
        res = run(c)
        assert res.status == "failed"
        assert res.failure.reason == "dist-violation"


class TestQuantumBranching:
    def test_matches_block_diagonal_action(self):
        rng = np.random.default_rng(11)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        reg = Registry([Q(0), Q(1)])
        c = parse_circuit("qif[q[0]] |0> -> H[q[1]] [] |1> -> Z[q[1]] fiq")
        res = run(c, state=QuantumState(reg, v))
        h, z = GATES.matrix("H"), GATES.matrix("Z")
        want = np.zeros((4, 4), dtype=complex)
        want[:2, :2] = h
        want[2:, 2:] = z
        assert res.status == "done"
        assert np.allclose(res.state.permuted(reg).vector, want @ v, atol=1e-12)

    def test_branch_allocation_is_merged(self):
        c = parse_circuit(
            "H[q[0]]; qif[q[0]] |0> -> X[q[1]] [] |1> -> X[q[2]] fiq"
        )
        res = run(c)
        assert res.status == "done"
        cells = set(res.state.registry.cells)
        assert cells == {Q(0), Q(1), Q(2)}
        assert abs(res.state.norm() - 1.0) < 1e-12

    def test_qif_behaves_like_cnot(self):
        c = parse_circuit("H[q[0]]; qif[q[0]] |0> -> skip [] |1> -> X[q[1]] fiq")
        res = run(c)
        reg = Registry([Q(0), Q(1)])
        got = res.state.permuted(reg).vector
        assert np.allclose(got, [2**-0.5, 0, 0, 2**-0.5], atol=1e-12)


class TestRecursion:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_ghz_cat_states(self, n):
        res = run(Call("GHZ", (Const(0), Const(n - 1))), decls=ghz_decls())
        assert res.status == "done"
        want = np.zeros(2**n)
        want[0] = want[-1] = 2**-0.5
        reg = Registry([Q(k) for k in range(n)])
        assert np.allclose(res.state.permuted(reg).vector, want, atol=1e-12)
        assert res.sigma == ClassicalState()  # formals fully cleaned up


class TestUnitaryExtraction:
    def test_single_hadamard(self):
        u = extract_unitary(parse_circuit("H[q[0]]"), [Q(0)])
        assert np.allclose(u, GATES.matrix("H"), atol=1e-12)

    def test_two_cell_program(self):
        u = extract_unitary(Call("GHZ", (Const(0), Const(1))), [Q(0), Q(1)],
                            decls=ghz_decls())
        want = GATES.matrix("CNOT") @ np.kron(GATES.matrix("H"), np.eye(2))
        assert np.allclose(u, want, atol=1e-12)

    def test_scratch_cell_must_return_to_zero(self):
        ok = extract_unitary(parse_circuit("X[q[5]]; X[q[5]]"), [Q(0)])
        assert np.allclose(ok, np.eye(2), atol=1e-12)
        with pytest.raises(InterpError, match="scratch"):
            extract_unitary(parse_circuit("X[q[5]]"), [Q(0)])

    def test_failing_run_raises(self):
        with pytest.raises(InterpError, match="failed"):
            extract_unitary(parse_circuit("CNOT[q[0], q[0]]"), [Q(0)])


class TestLegitimacy:
    def test_clean_circuit(self):
        assert legitimacy_check(parse_circuit("H[q[0]]; x := 1"),
                                ClassicalState()) is None

    def test_dist_violation_found_without_amplitudes(self):
        f = legitimacy_check(parse_circuit("CNOT[q[i], q[j]]"),
                             ClassicalState({"i": 2, "j": 2}))
        assert f is not None and f.reason == "dist-violation"

    def test_divergent_branches_found(self):
        f = legitimacy_check(
            parse_circuit("qif[q[0]] |0> -> x := 1 [] |1> -> x := 2 fiq"),
            ClassicalState({"x": 0}),
        )
        assert f is not None and f.reason == "qif-classical-divergence"

    def test_agrees_with_run_on_examples(self):
        decls = ghz_decls()
        c = Call("GHZ", (Const(0), Const(2)))
        assert legitimacy_check(c, ClassicalState(), decls) is None
        assert run(c, decls=decls).status == "done"


if __name__ == "__main__":
    if "--regen" in sys.argv:
        GOLDEN.mkdir(exist_ok=True)
        for name in sorted(TRACE_CASES):
            (GOLDEN / f"{name}.txt").write_text(traced(name))
            print(f"wrote golden/{name}.txt")
    else:
        print(__doc__)
