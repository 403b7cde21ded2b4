"""Lexer and recursive-descent parser for circuit source and formulas.

The grammar is keyword-delimited and whitespace-insensitive:

    program  ::= { decl } [ circuit ]
    decl     ::= "procedure" IDENT "(" [ IDENT {"," IDENT} ] ")" "<=" circuit
    circuit  ::= basic { ";" basic }
    basic    ::= "skip"
               | IDENT {"," IDENT} ":=" expr {"," expr}
               | IDENT [ "(" exprs ")" ] "[" qref {"," qref} "]"      gate
               | IDENT "(" [ exprs ] ")"                              call
               | "if" formula "then" circuit [ "else" circuit ] "fi"
               | "qif" "[" qref "]" |0> "->" circuit "[]" |1> "->" circuit "fiq"
               | "begin" "local" IDENT {"," IDENT} ":=" exprs ";" circuit "end"
    qref     ::= IDENT [ "[" expr {"," expr} "]" ]

Unicode forms are accepted on input (⇐ for <=, → for ->, □ for [], |0⟩
kets); the pretty printer always emits ASCII.  Comments run from ``//`` or
``#`` to end of line.  An application ``N[...]`` is a gate exactly when N
is in the gate table; an unknown name there is a parse error, while calls
to procedures not declared in the same source are allowed (resolution
happens at analysis time).

Formulas share the expression grammar: ``not/and/or/->``, chains like
``a <= b`` single comparisons, bounded quantifiers
``forall k in [lo:hi] . body``, bit windows ``j[m:n]``, ``store(d,i,t)``,
``dist(q[i], q[j])``, ``floor(e)``, and ``div``/``mod``/``^``.

Symbolic states (see states.py) have their own small grammar, parsed by
``parse_state`` / ``parse_coeff``: ``zeros(q, lo, hi)``,
``bits(q, lo, hi, word)``, ``cell(q, i, c0, c1)``, ``scalar(c)``,
``tensor(s, ...)``, ``prod(k, lo, hi, s)``, ``sum(c : s, ...)`` and the
named families ``ghz``/``fourier``/``splitwin``; coefficients are built
from integers, ``c(expr)``, ``sqrt``, ``exppi(expr)``, ``expi``,
``iv(formula)`` and arithmetic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .classical import (
    And, Const, Cmp, Distinct, Exists, Expr, Floor, Forall, Implies, Neg,
    Not, Or, BinOp, Sel, Store, Var, Window,
)
from .gates import GateTable, builtin_gates
from .syntax import (
    Assign, Block, Call, Circuit, Declaration, Gate, If, QIf, QVarRef, Seq,
    Skip,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


### lexer

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>//[^\n]*|\#[^\n]*)
    | (?P<ket>\|[01](?:>|⟩))
    | (?P<num>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<op>:=|<=|>=|!=|->|⇐|→|□|\[\]|[+\-*/^()\[\],;:.=<>])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "skip", "if", "then", "else", "fi", "qif", "fiq", "begin", "local",
    "end", "procedure", "true", "false", "forall", "exists", "in", "not",
    "and", "or", "div", "mod", "store", "floor", "dist",
}

_OP_CANON = {"⇐": "<=", "→": "->", "□": "[]"}


@dataclass(frozen=True)
class Token:
    kind: str  # NUM IDENT KW OP KET EOF
    text: str
    line: int
    col: int


def tokenize(source: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "num":
            tokens.append(Token("NUM", text, line, col))
        elif kind == "ident":
            tokens.append(Token("KW" if text in _KEYWORDS else "IDENT", text, line, col))
        elif kind == "ket":
            tokens.append(Token("KET", text[1], line, col))
        else:
            tokens.append(Token("OP", _OP_CANON.get(text, text), line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, n - line_start + 1))
    return tokens


### parser

@dataclass
class ParseResult:
    main: Circuit | None
    decls: list
    gates_used: set


class _Parser:
    def __init__(self, tokens, gates: GateTable, proc_arities: dict):
        self.toks = tokens
        self.i = 0
        self.gates = gates
        self.procs = proc_arities
        self.gates_used = set()

    ### token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, kind: str, text: str | None = None, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: str | None = None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    ### expressions / formulas

    def formula(self) -> Expr:
        a = self.or_expr()
        if self.accept("OP", "->"):
            return Implies(a, self.formula())
        return a

    def or_expr(self) -> Expr:
        a = self.and_expr()
        while self.accept("KW", "or"):
            a = Or(a, self.and_expr())
        return a

    def and_expr(self) -> Expr:
        a = self.not_expr()
        while self.accept("KW", "and"):
            a = And(a, self.not_expr())
        return a

    def not_expr(self) -> Expr:
        if self.accept("KW", "not"):
            return Not(self.not_expr())
        if self.at("KW", "forall") or self.at("KW", "exists"):
            return self.quantifier()
        return self.cmp_expr()

    def quantifier(self) -> Expr:
        kw = self.next().text
        var = self.expect("IDENT").text
        self.expect("KW", "in")
        self.expect("OP", "[")
        lo = self.add_expr()
        self.expect("OP", ":")
        hi = self.add_expr()
        self.expect("OP", "]")
        self.expect("OP", ".")
        body = self.formula()
        return (Forall if kw == "forall" else Exists)(var, lo, hi, body)

    def cmp_expr(self) -> Expr:
        a = self.add_expr()
        for op in ("=", "!=", "<=", ">=", "<", ">"):
            if self.accept("OP", op):
                return Cmp(op, a, self.add_expr())
        return a

    def add_expr(self) -> Expr:
        a = self.mul_expr()
        while True:
            if self.accept("OP", "+"):
                a = BinOp("+", a, self.mul_expr())
            elif self.accept("OP", "-"):
                a = BinOp("-", a, self.mul_expr())
            else:
                return a

    def mul_expr(self) -> Expr:
        a = self.unary_expr()
        while True:
            if self.accept("OP", "*"):
                a = BinOp("*", a, self.unary_expr())
            elif self.accept("OP", "/"):
                a = BinOp("/", a, self.unary_expr())
            elif self.accept("KW", "div"):
                a = BinOp("div", a, self.unary_expr())
            elif self.accept("KW", "mod"):
                a = BinOp("mod", a, self.unary_expr())
            else:
                return a

    def unary_expr(self) -> Expr:
        if self.accept("OP", "-"):
            inner = self.unary_expr()
            if isinstance(inner, Const) and isinstance(inner.value, int):
                return Const(-inner.value)
            return Neg(inner)
        return self.pow_expr()

    def pow_expr(self) -> Expr:
        a = self.postfix_expr()
        if self.accept("OP", "^"):
            return BinOp("^", a, self.unary_expr())
        return a

    def postfix_expr(self) -> Expr:
        a = self.atom()
        while self.at("OP", "[") and not self.at("OP", "[]"):
            self.next()
            first = self.add_expr()
            if self.accept("OP", ":"):
                hi = self.add_expr()
                self.expect("OP", "]")
                a = Window(a, first, hi)
            else:
                self.expect("OP", "]")
                a = Sel(a, first)
        return a

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "NUM":
            self.next()
            return Const(int(t.text))
        if self.accept("KW", "true"):
            return Const(True)
        if self.accept("KW", "false"):
            return Const(False)
        if self.accept("KW", "floor"):
            self.expect("OP", "(")
            e = self.formula()
            self.expect("OP", ")")
            return Floor(e)
        if self.accept("KW", "store"):
            self.expect("OP", "(")
            base = self.formula()
            self.expect("OP", ",")
            idx = self.formula()
            self.expect("OP", ",")
            val = self.formula()
            self.expect("OP", ")")
            return Store(base, idx, val)
        if self.accept("KW", "dist"):
            self.expect("OP", "(")
            refs = [self.qref()]
            while self.accept("OP", ","):
                refs.append(self.qref())
            self.expect("OP", ")")
            return Distinct(tuple((q.name, q.idx) for q in refs))
        if t.kind == "IDENT":
            self.next()
            return Var(t.text)
        if self.accept("OP", "("):
            e = self.formula()
            self.expect("OP", ")")
            return e
        self.fail(f"expected an expression, found {t.text or t.kind!r}")

    ### circuits

    def qref(self) -> QVarRef:
        name = self.expect("IDENT").text
        idx = ()
        if self.at("OP", "[") and not self.at("OP", "[]"):
            self.next()
            parts = [self.add_expr()]
            while self.accept("OP", ","):
                parts.append(self.add_expr())
            self.expect("OP", "]")
            idx = tuple(parts)
        return QVarRef(name, idx)

    def circuit(self) -> Circuit:
        c = self.basic()
        while self.accept("OP", ";"):
            c2 = self.basic()
            c = _append_seq(c, c2)
        return c

    def basic(self) -> Circuit:
        if self.accept("KW", "skip"):
            return Skip()
        if self.at("KW", "if"):
            return self.if_stmt()
        if self.at("KW", "qif"):
            return self.qif_stmt()
        if self.at("KW", "begin"):
            return self.block_stmt()
        if self.at("IDENT"):
            return self.ident_stmt()
        self.fail(f"expected a statement, found {self.peek().text or self.peek().kind!r}")

    def if_stmt(self) -> Circuit:
        self.expect("KW", "if")
        guard = self.formula()
        self.expect("KW", "then")
        then_c = self.circuit()
        else_c = Skip()
        if self.accept("KW", "else"):
            else_c = self.circuit()
        self.expect("KW", "fi")
        return If(guard, then_c, else_c)

    def qif_stmt(self) -> Circuit:
        self.expect("KW", "qif")
        self.expect("OP", "[")
        coin = self.qref()
        self.expect("OP", "]")
        k0 = self.expect("KET")
        if k0.text != "0":
            raise ParseError("qif branches must be |0> then |1>", k0.line, k0.col)
        self.expect("OP", "->")
        zero = self.circuit()
        self.expect("OP", "[]")
        k1 = self.expect("KET")
        if k1.text != "1":
            raise ParseError("qif branches must be |0> then |1>", k1.line, k1.col)
        self.expect("OP", "->")
        one = self.circuit()
        self.expect("KW", "fiq")
        return QIf(coin, zero, one)

    def block_stmt(self) -> Circuit:
        self.expect("KW", "begin")
        self.expect("KW", "local")
        names = [self.expect("IDENT").text]
        while self.accept("OP", ","):
            names.append(self.expect("IDENT").text)
        self.expect("OP", ":=")
        terms = [self.add_expr()]
        while self.accept("OP", ","):
            terms.append(self.add_expr())
        if len(terms) != len(names):
            self.fail(f"{len(names)} local(s) but {len(terms)} initializer(s)")
        self.expect("OP", ";")
        body = self.circuit()
        self.expect("KW", "end")
        return Block(tuple(names), tuple(terms), body)

    def ident_stmt(self) -> Circuit:
        # assignment if an ident-list is followed by :=
        if self._looks_like_assign():
            names = [self.expect("IDENT").text]
            while self.accept("OP", ","):
                names.append(self.expect("IDENT").text)
            self.expect("OP", ":=")
            terms = [self.add_expr()]
            while self.accept("OP", ","):
                terms.append(self.add_expr())
            if len(terms) != len(names):
                self.fail(f"{len(names)} variable(s) but {len(terms)} term(s)")
            if len(set(names)) != len(names):
                self.fail("repeated variable on assignment left-hand side")
            return Assign(tuple(names), tuple(terms))

        head = self.expect("IDENT")
        params: tuple = ()
        had_parens = False
        if self.accept("OP", "("):
            had_parens = True
            parts = []
            if not self.at("OP", ")"):
                parts.append(self.formula())
                while self.accept("OP", ","):
                    parts.append(self.formula())
            self.expect("OP", ")")
            params = tuple(parts)

        if self.at("OP", "[") and not self.at("OP", "[]"):
            # gate application
            if head.text not in self.gates:
                raise ParseError(f"unknown gate '{head.text}'", head.line, head.col)
            gd = self.gates.get(head.text)
            if len(params) != gd.n_params:
                raise ParseError(
                    f"gate '{head.text}' takes {gd.n_params} parameter(s), got {len(params)}",
                    head.line, head.col)
            self.next()
            qargs = [self.qref()]
            while self.accept("OP", ","):
                qargs.append(self.qref())
            self.expect("OP", "]")
            if len(qargs) != gd.n_qubits:
                raise ParseError(
                    f"gate '{head.text}' acts on {gd.n_qubits} qubit(s), got {len(qargs)}",
                    head.line, head.col)
            self.gates_used.add(head.text)
            return Gate(head.text, params, tuple(qargs))

        if had_parens:
            if head.text in self.procs and self.procs[head.text] != len(params):
                raise ParseError(
                    f"procedure '{head.text}' takes {self.procs[head.text]} argument(s), "
                    f"got {len(params)}", head.line, head.col)
            return Call(head.text, params)

        raise ParseError(
            f"'{head.text}' is neither an assignment, a gate, nor a call",
            head.line, head.col)

    def _looks_like_assign(self) -> bool:
        j = 0
        while True:
            if not self.at("IDENT", ahead=j):
                return False
            j += 1
            if self.at("OP", ":=", ahead=j):
                return True
            if self.at("OP", ",", ahead=j):
                j += 1
                continue
            return False

    ### top level

    def declaration(self) -> Declaration:
        self.expect("KW", "procedure")
        name = self.expect("IDENT").text
        self.expect("OP", "(")
        formals = []
        if not self.at("OP", ")"):
            formals.append(self.expect("IDENT").text)
            while self.accept("OP", ","):
                formals.append(self.expect("IDENT").text)
        self.expect("OP", ")")
        self.expect("OP", "<=")
        body = self.circuit()
        return Declaration(name, tuple(formals), body)

    def program(self) -> ParseResult:
        decls = []
        seen = set()
        while self.at("KW", "procedure"):
            t = self.peek()
            d = self.declaration()
            if d.name in seen:
                raise ParseError(f"duplicate declaration of '{d.name}'", t.line, t.col)
            seen.add(d.name)
            decls.append(d)
        main = None
        if not self.at("EOF"):
            main = self.circuit()
        self.expect("EOF")
        return ParseResult(main, decls, self.gates_used)


def _append_seq(c: Circuit, tail: Circuit) -> Circuit:
    """Keep sequences right-nested as they grow."""
    if isinstance(c, Seq):
        return Seq(c.first, _append_seq(c.second, tail))
    return Seq(c, tail)


def _scan_proc_arities(tokens) -> dict:
    procs = {}
    for i, t in enumerate(tokens):
        if t.kind == "KW" and t.text == "procedure":
            if i + 2 < len(tokens) and tokens[i + 1].kind == "IDENT":
                arity = 0
                j = i + 3
                if j < len(tokens) and not (tokens[j].kind == "OP" and tokens[j].text == ")"):
                    arity = 1
                    while j < len(tokens) and not (tokens[j].kind == "OP" and tokens[j].text == ")"):
                        if tokens[j].kind == "OP" and tokens[j].text == ",":
                            arity += 1
                        j += 1
                procs[tokens[i + 1].text] = arity
    return procs


def parse(source: str, gates: GateTable | None = None) -> ParseResult:
    """Parse a full source text: declarations followed by an optional
    main circuit."""
    gates = gates if gates is not None else builtin_gates()
    tokens = tokenize(source)
    p = _Parser(tokens, gates, _scan_proc_arities(tokens))
    return p.program()


def parse_circuit(source: str, gates: GateTable | None = None) -> Circuit:
    r = parse(source, gates)
    if r.decls or r.main is None:
        raise ParseError("expected a bare circuit", 1, 1)
    return r.main


def parse_formula(source: str) -> Expr:
    gates = builtin_gates()
    tokens = tokenize(source)
    p = _Parser(tokens, gates, {})
    e = p.formula()
    p.expect("EOF")
    return e


def parse_expr(source: str) -> Expr:
    return parse_formula(source)


### symbolic states

_STATE_HEADS = {
    "zeros", "bits", "cell", "scalar", "tensor", "prod", "sum",
    "ghz", "fourier", "splitwin",
}

_COEFF_HEADS = {"c", "sqrt", "exppi", "expi", "iv", "num"}


class _StateParser(_Parser):
    """Extends the expression parser with the state/coefficient layer."""

    def state(self):
        from . import states as st

        t = self.peek()
        if t.kind != "IDENT" or t.text not in _STATE_HEADS:
            self.fail(f"expected a state expression, found {t.text or t.kind!r}")
        head = self.next().text
        self.expect("OP", "(")
        if head == "zeros":
            name = self.expect("IDENT").text
            self.expect("OP", ",")
            lo = self.formula()
            self.expect("OP", ",")
            hi = self.formula()
            node = st.Zeros(name, lo, hi)
        elif head == "bits":
            name = self.expect("IDENT").text
            self.expect("OP", ",")
            lo = self.formula()
            self.expect("OP", ",")
            hi = self.formula()
            self.expect("OP", ",")
            word = self.formula()
            node = st.BitsKet(name, lo, hi, word)
        elif head == "cell":
            name = self.expect("IDENT").text
            self.expect("OP", ",")
            idx = self.formula()
            self.expect("OP", ",")
            c0 = self.coeff()
            self.expect("OP", ",")
            c1 = self.coeff()
            node = st.CellState(name, idx, c0, c1)
        elif head == "scalar":
            node = st.Scalar(self.coeff())
        elif head == "tensor":
            parts = [self.state()]
            while self.accept("OP", ","):
                parts.append(self.state())
            node = st.TensorS(tuple(parts))
        elif head == "prod":
            var = self.expect("IDENT").text
            self.expect("OP", ",")
            lo = self.formula()
            self.expect("OP", ",")
            hi = self.formula()
            self.expect("OP", ",")
            body = self.state()
            node = st.ProdS(var, lo, hi, body)
        elif head == "sum":
            terms = []
            while True:
                c = self.coeff()
                self.expect("OP", ":")
                terms.append((c, self.state()))
                if not self.accept("OP", ","):
                    break
            node = st.SumS(tuple(terms))
        else:  # a named family
            array = self.expect("IDENT").text
            args = []
            while self.accept("OP", ","):
                args.append(self.formula())
            node = st.BuiltinS(head, array, tuple(args))
        self.expect("OP", ")")
        return node

    def coeff(self):
        from . import states as st

        a = self.coeff_mul()
        while True:
            if self.accept("OP", "+"):
                a = st.CAdd(a, self.coeff_mul())
            elif self.accept("OP", "-"):
                a = st.CAdd(a, st.CNeg(self.coeff_mul()))
            else:
                return a

    def coeff_mul(self):
        from . import states as st

        a = self.coeff_unary()
        while True:
            if self.accept("OP", "*"):
                a = st.CMul(a, self.coeff_unary())
            elif self.accept("OP", "/"):
                a = st.CDiv(a, self.coeff_unary())
            else:
                return a

    def coeff_unary(self):
        from . import states as st

        if self.accept("OP", "-"):
            return st.CNeg(self.coeff_unary())
        return self.coeff_atom()

    def coeff_atom(self):
        from . import states as st

        t = self.peek()
        if t.kind == "NUM":
            self.next()
            return st.CNum(complex(int(t.text)))
        if t.kind == "IDENT" and t.text in _COEFF_HEADS:
            head = self.next().text
            self.expect("OP", "(")
            if head == "c":
                node = st.COf(self.formula())
            elif head == "sqrt":
                node = st.CSqrt(self.coeff())
            elif head == "exppi":
                node = st.CExpPi(self.formula())
            elif head == "expi":
                node = st.CExpI(self.coeff())
            elif head == "iv":
                node = st.CIv(self.formula())
            else:  # num(re, im): literal parts re-lexed as raw text
                re_part = self._raw_number()
                self.expect("OP", ",")
                im_part = self._raw_number()
                node = st.CNum(complex(re_part, im_part))
            self.expect("OP", ")")
            return node
        if self.accept("OP", "("):
            a = self.coeff()
            self.expect("OP", ")")
            return a
        self.fail(f"expected a coefficient, found {t.text or t.kind!r}")

    def _raw_number(self) -> float:
        """Reassemble a float literal from the tokens up to ``,`` or ``)``.

        The lexer has no float token (circuit sources never need one), so
        ``0.25`` or ``1e-05`` arrives as several tokens whose texts are
        simply concatenated back together."""
        start = self.peek()
        parts = []
        while not (self.at("OP", ",") or self.at("OP", ")")):
            tok = self.next()
            if tok.kind == "EOF":
                raise ParseError("unterminated number", tok.line, tok.col)
            parts.append(tok.text)
        try:
            return float("".join(parts))
        except ValueError:
            raise ParseError(
                f"bad number literal {''.join(parts)!r}", start.line, start.col
            ) from None


def parse_state(source: str):
    """Parse one symbolic state expression."""
    tokens = tokenize(source)
    p = _StateParser(tokens, builtin_gates(), {})
    s = p.state()
    p.expect("EOF")
    return s


def parse_coeff(source: str):
    """Parse one symbolic coefficient expression."""
    tokens = tokenize(source)
    p = _StateParser(tokens, builtin_gates(), {})
    c = p.coeff()
    p.expect("EOF")
    return c
