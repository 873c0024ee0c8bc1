"""Refraction coefficient n(x): a small arithmetic expression over x1, x2.

Grammar (recursive descent):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := num | 'x1' | 'x2' | '(' expr ')' | factor '^' uint

Exponents must be non-negative integers.  Parse errors carry the byte
offset of the offending token.
"""

import re

import numpy as np


class CoefficientParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__("%s (at offset %d)" % (message, offset))
        self.offset = offset


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|(x1|x2)|([()+\-*/^]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            off = len(text) - len(stripped)
            raise CoefficientParseError("unexpected character %r" % stripped[0], off)
        num, var, op = m.groups()
        start = m.end() - len(m.group().lstrip())
        if num is not None:
            tokens.append(("num", float(num), start))
        elif var is not None:
            tokens.append(("var", var, start))
        else:
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


# AST nodes are tuples: ('num', v), ('var', 'x1'|'x2'),
# ('+'|'-'|'*'|'/', lhs, rhs), ('^', base, uint)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, offset = self.next()
        if kind != "op" or value != op:
            raise CoefficientParseError("expected %r" % op, offset)

    def parse(self):
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise CoefficientParseError("unexpected trailing input %r" % (value,),
                                        offset)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                node = (value, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                node = (value, node, self.factor())
            else:
                return node

    def factor(self):
        kind, value, offset = self.next()
        if kind == "num":
            node = ("num", value)
        elif kind == "var":
            node = ("var", value)
        elif kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
        elif kind == "op" and value == "-":
            # unary minus, useful for constants like -1
            node = ("-", ("num", 0.0), self.factor())
        else:
            raise CoefficientParseError("expected number, x1, x2 or '('", offset)
        while True:
            kind, value, offset = self.peek()
            if kind == "op" and value == "^":
                self.next()
                ekind, evalue, eoffset = self.next()
                if ekind != "num" or evalue != int(evalue) or evalue < 0:
                    raise CoefficientParseError(
                        "exponent must be a non-negative integer", eoffset)
                node = ("^", node, int(evalue))
            else:
                return node


def _eval(node, x1, x2):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return x1 if node[1] == "x1" else x2
    if tag == "^":
        return _eval(node[1], x1, x2) ** node[2]
    a = _eval(node[1], x1, x2)
    b = _eval(node[2], x1, x2)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    return a / b


class Coefficient:
    """Evaluable coefficient, constant or an expression in x1, x2.

    ``lower`` and ``upper`` are the user-declared bounds 0 < n_s <= n(x)
    <= n_b on the domain; they drive case selection and are not estimated
    from the expression.
    """

    def __init__(self, text, ast, lower=None, upper=None):
        self.text = text
        self.ast = ast
        self.lower = lower
        self.upper = upper

    @property
    def is_constant(self):
        return self.ast[0] == "num"

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        value = _eval(self.ast, x1, x2)
        return np.broadcast_to(np.asarray(value, dtype=float), x1.shape).copy()

    def with_bounds(self, lower, upper):
        if not (0 < lower <= upper):
            raise ValueError("bounds must satisfy 0 < n_s <= n_b")
        return Coefficient(self.text, self.ast, lower, upper)

    def __repr__(self):
        return "Coefficient(%r)" % self.text


def parse_coefficient(text, lower=None, upper=None):
    ast = _Parser(text).parse()
    return Coefficient(text, ast, lower, upper)
