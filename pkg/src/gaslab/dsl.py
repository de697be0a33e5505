"""Small arithmetic expression language for field definitions in config files.

Expressions are closed over the variables xi, x, t, chi, the binary operators
+ - * / ^, unary minus, and the functions sin, cos, exp, ln, abs, min, max,
step, frac.  step(e) is 1.0 for e >= 0 and 0.0 otherwise (right-continuous at
the switch), frac(e) is e - floor(e).  Evaluation is pure and vectorizes over
numpy array bindings.
"""

from dataclasses import dataclass
import math

import numpy as np

VARIABLES = ("xi", "x", "t", "chi")
FUNCTIONS_1 = ("sin", "cos", "exp", "ln", "abs", "step", "frac")
FUNCTIONS_2 = ("min", "max")


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    """Malformed source; carries 1-based line/column and the expected-token set."""

    def __init__(self, message, line, col, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(expected))
        super().__init__(f"{line}:{col}: {message}")


class UnknownIdentifier(ExprError):
    def __init__(self, name, line, col):
        self.name = name
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: unknown identifier '{name}'")


class UnboundVariable(ExprError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"variable '{name}' is not bound")


class NonfiniteResult(ExprError):
    def __init__(self, source=""):
        super().__init__(f"expression produced a non-finite value: {source}")


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Expr = (Num, Var, Neg, Bin, Call)


# ---------------------------------------------------------------------------
# Tokenizer

_SINGLE = "+-*/^(),"


def _tokenize(source):
    """Yield (kind, text, line, col) tuples; kind in {num, name, op, end}."""
    tokens = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            col += 1
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(f"bad numeric literal '{text}'", line, col)
            tokens.append(("num", text, line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c in _SINGLE:
            tokens.append(("op", c, line, col))
            col += 1
            i += 1
            continue
        raise ExprSyntaxError(f"illegal character '{c}'", line, col)
    tokens.append(("end", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser: standard precedence, ^ right-associative and binding tighter than
# unary minus, then * /, then + -.

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text, expected):
        kind, tok, line, col = self.peek()
        if kind == "op" and tok == text:
            return self.advance()
        shown = tok if kind != "end" else "end of input"
        raise ExprSyntaxError(f"expected '{text}', found '{shown}'", line, col,
                              expected=expected)

    def parse(self):
        e = self.sum_()
        kind, tok, line, col = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected '{tok}' after expression", line, col,
                                  expected=("+", "-", "*", "/", "^", "end"))
        return e

    def sum_(self):
        e = self.term()
        while True:
            kind, tok, _, _ = self.peek()
            if kind == "op" and tok in "+-":
                self.advance()
                e = Bin(tok, e, self.term())
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, tok, _, _ = self.peek()
            if kind == "op" and tok in "*/":
                self.advance()
                e = Bin(tok, e, self.unary())
            else:
                return e

    def unary(self):
        kind, tok, _, _ = self.peek()
        if kind == "op" and tok == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.factor()
        kind, tok, _, _ = self.peek()
        if kind == "op" and tok == "^":
            self.advance()
            # right-associative; exponent may carry its own unary minus
            return Bin("^", base, self.unary())
        return base

    def factor(self):
        kind, tok, line, col = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(tok))
        if kind == "name":
            self.advance()
            if tok in VARIABLES:
                return Var(tok)
            if tok in FUNCTIONS_1 or tok in FUNCTIONS_2:
                self.expect("(", expected=("(",))
                args = [self.sum_()]
                while True:
                    k, t, ln, cl = self.peek()
                    if k == "op" and t == ",":
                        self.advance()
                        args.append(self.sum_())
                    else:
                        break
                self.expect(")", expected=(")", ","))
                arity = 1 if tok in FUNCTIONS_1 else 2
                if len(args) != arity:
                    raise ExprSyntaxError(
                        f"'{tok}' takes {arity} argument(s), got {len(args)}",
                        line, col)
                return Call(tok, tuple(args))
            raise UnknownIdentifier(tok, line, col)
        if kind == "op" and tok == "(":
            self.advance()
            e = self.sum_()
            self.expect(")", expected=(")",))
            return e
        shown = tok if kind != "end" else "end of input"
        raise ExprSyntaxError(f"expected a factor, found '{shown}'", line, col,
                              expected=("number", "variable", "function", "("))


def parse(source):
    """Parse source text into an AST; raises ExprSyntaxError / UnknownIdentifier."""
    return _Parser(_tokenize(source)).parse()


# ---------------------------------------------------------------------------
# Evaluation

def free_variables(e):
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.arg)
    if isinstance(e, Bin):
        return free_variables(e.lhs) | free_variables(e.rhs)
    if isinstance(e, Call):
        out = set()
        for a in e.args:
            out |= free_variables(a)
        return out
    raise TypeError(f"not an expression node: {e!r}")


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundVariable(e.name)
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Bin):
        a = _eval(e.lhs, env)
        b = _eval(e.rhs, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return np.divide(a, b)
        if e.op == "^":
            return np.power(a, b)
        raise TypeError(f"unknown operator {e.op}")
    if isinstance(e, Call):
        args = [_eval(a, env) for a in e.args]
        fn = e.fn
        if fn == "sin":
            return np.sin(args[0])
        if fn == "cos":
            return np.cos(args[0])
        if fn == "exp":
            return np.exp(args[0])
        if fn == "ln":
            return np.log(args[0])
        if fn == "abs":
            return np.abs(args[0])
        if fn == "step":
            return np.where(np.asarray(args[0]) >= 0.0, 1.0, 0.0)
        if fn == "frac":
            return args[0] - np.floor(args[0])
        if fn == "min":
            return np.minimum(args[0], args[1])
        if fn == "max":
            return np.maximum(args[0], args[1])
        raise TypeError(f"unknown function {fn}")
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, **bindings):
    """Evaluate an AST with the given variable bindings (scalars or arrays).

    Raises UnboundVariable for missing variables and NonfiniteResult if any
    sample of the result is NaN or infinite.
    """
    with np.errstate(all="ignore"):
        out = _eval(e, bindings)
    if np.isscalar(out) or np.ndim(out) == 0:
        out = float(out)
        if not math.isfinite(out):
            raise NonfiniteResult(pretty(e))
        return out
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NonfiniteResult(pretty(e))
    return out


# ---------------------------------------------------------------------------
# Pretty-printer (inverse of parse up to whitespace)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _wrap(text, needed):
    return f"({text})" if needed else text


def pretty(e, parent_prec=0):
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = pretty(e.arg, _PREC["neg"])
        return _wrap(f"-{inner}", parent_prec > _PREC["neg"])
    if isinstance(e, Bin):
        p = _PREC[e.op]
        # left operand at own precedence, right one notch tighter for the
        # non-associative/left-associative ops; ^ is right-associative
        if e.op == "^":
            lhs = pretty(e.lhs, p + 1)
            rhs = pretty(e.rhs, p)
        else:
            lhs = pretty(e.lhs, p)
            rhs = pretty(e.rhs, p + 1)
        return _wrap(f"{lhs} {e.op} {rhs}", parent_prec > p)
    if isinstance(e, Call):
        args = ", ".join(pretty(a) for a in e.args)
        return f"{e.fn}({args})"
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(source_or_expr, variables):
    """Return (expr, fn) where fn evaluates over the declared variable tuple.

    Rejects expressions whose free variables are not a subset of `variables`.
    """
    if isinstance(source_or_expr, str):
        e = parse(source_or_expr)
    else:
        e = source_or_expr
    extra = free_variables(e) - set(variables)
    if extra:
        raise UnboundVariable(sorted(extra)[0])

    def fn(**bindings):
        return evaluate(e, **bindings)

    return e, fn
