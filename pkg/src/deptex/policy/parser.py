"""PolicyLang front end: tokenizer and recursive-descent parser.

The language is deliberately small: let bindings, if/else, for-in over
lists, and call statements, with JSON-shaped expression values. There are
no user functions and no unbounded loops, so every program's step count is
bounded by its input. Every AST node carries line/column for error
reporting, and `#` starts a line comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from ..errors import PolicySyntaxError

KEYWORDS = {"let", "if", "else", "for", "in", "and", "or", "not", "true", "false", "null"}

_PUNCT = {
    "==", "!=", "<=", ">=",
    "(", ")", "{", "}", "[", "]",
    ",", ";", ".", ":", "=", "<", ">", "+", "-", "*", "/",
}

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


@dataclass
class Token:
    kind: str  # ident, keyword, number, string, punct, eof
    value: Any
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                value: Any = float(source[i:j])
            else:
                value = int(source[i:j])
            tokens.append(Token("number", value, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n or source[j] == "\n":
                    raise PolicySyntaxError(start_line, start_col, "unterminated string")
                c = source[j]
                if c == "\\":
                    if j + 1 >= n:
                        raise PolicySyntaxError(start_line, start_col, "unterminated escape")
                    esc = source[j + 1]
                    if esc not in _ESCAPES:
                        raise PolicySyntaxError(
                            line, col + (j - i), f"unknown escape \\{esc}"
                        )
                    buf.append(_ESCAPES[esc])
                    j += 2
                    continue
                if c == '"':
                    j += 1
                    break
                buf.append(c)
                j += 1
            tokens.append(Token("string", "".join(buf), start_line, start_col))
            col += j - i
            i = j
            continue
        two = source[i : i + 2]
        if two in _PUNCT:
            tokens.append(Token("punct", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(Token("punct", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise PolicySyntaxError(line, col, f"unexpected character {ch!r}")
    tokens.append(Token("eof", None, line, col))
    return tokens


# --- AST ---

@dataclass
class Node:
    line: int
    col: int


@dataclass
class Literal(Node):
    value: Any  # str | int | float | bool | None


@dataclass
class Identifier(Node):
    name: str


@dataclass
class ListLiteral(Node):
    items: list["Expr"]


@dataclass
class RecordLiteral(Node):
    entries: list[tuple[str, "Expr"]]


@dataclass
class Member(Node):
    obj: "Expr"
    attr: str


@dataclass
class Index(Node):
    obj: "Expr"
    index: "Expr"


@dataclass
class Unary(Node):
    op: str  # not, -
    operand: "Expr"


@dataclass
class Binary(Node):
    op: str  # and or == != < <= > >= + - * / in
    left: "Expr"
    right: "Expr"


@dataclass
class Call(Node):
    name: str
    args: list["Expr"]


Expr = Union[Literal, Identifier, ListLiteral, RecordLiteral, Member, Index, Unary, Binary, Call]


@dataclass
class LetStmt(Node):
    name: str
    value: Expr


@dataclass
class IfStmt(Node):
    condition: Expr
    then_body: list["Stmt"]
    else_body: list["Stmt"] = field(default_factory=list)


@dataclass
class ForStmt(Node):
    var: str
    iterable: Expr
    body: list["Stmt"]


@dataclass
class ExprStmt(Node):
    expr: Expr


Stmt = Union[LetStmt, IfStmt, ForStmt, ExprStmt]


@dataclass
class Program:
    body: list[Stmt]


def ast_to_dict(node: Any) -> Any:
    """Stable dict rendering of an AST, for snapshots and debugging."""
    if isinstance(node, Program):
        return {"program": [ast_to_dict(s) for s in node.body]}
    if isinstance(node, list):
        return [ast_to_dict(x) for x in node]
    if isinstance(node, tuple):
        return [node[0], ast_to_dict(node[1])]
    if isinstance(node, Node):
        out: dict[str, Any] = {"node": type(node).__name__, "line": node.line, "col": node.col}
        for key, value in node.__dict__.items():
            if key in ("line", "col"):
                continue
            if isinstance(value, (Node, list, tuple)):
                out[key] = ast_to_dict(value)
            else:
                out[key] = value
        return out
    return node


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def check(self, kind: str, value: Any = None) -> bool:
        token = self.current
        return token.kind == kind and (value is None or token.value == value)

    def match(self, kind: str, value: Any = None) -> Token | None:
        if self.check(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Any = None, what: str = "") -> Token:
        if self.check(kind, value):
            return self.advance()
        token = self.current
        wanted = what or (value if value is not None else kind)
        shown = "end of input" if token.kind == "eof" else repr(token.value)
        raise PolicySyntaxError(token.line, token.col, f"expected {wanted}, found {shown}")

    # --- statements ---

    def parse_program(self) -> Program:
        body = []
        while not self.check("eof"):
            body.append(self.parse_statement())
        return Program(body=body)

    def parse_statement(self) -> Stmt:
        token = self.current
        if self.check("keyword", "let"):
            return self.parse_let()
        if self.check("keyword", "if"):
            return self.parse_if()
        if self.check("keyword", "for"):
            return self.parse_for()
        expr = self.parse_expression()
        self.expect("punct", ";")
        return ExprStmt(line=token.line, col=token.col, expr=expr)

    def parse_let(self) -> LetStmt:
        kw = self.advance()
        name = self.expect("ident", what="variable name")
        self.expect("punct", "=")
        value = self.parse_expression()
        self.expect("punct", ";")
        return LetStmt(line=kw.line, col=kw.col, name=name.value, value=value)

    def parse_if(self) -> IfStmt:
        kw = self.advance()
        condition = self.parse_expression()
        then_body = self.parse_block()
        else_body: list[Stmt] = []
        if self.match("keyword", "else"):
            if self.check("keyword", "if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_block()
        return IfStmt(
            line=kw.line, col=kw.col, condition=condition,
            then_body=then_body, else_body=else_body,
        )

    def parse_for(self) -> ForStmt:
        kw = self.advance()
        var = self.expect("ident", what="loop variable")
        self.expect("keyword", "in")
        iterable = self.parse_expression()
        body = self.parse_block()
        return ForStmt(line=kw.line, col=kw.col, var=var.value, iterable=iterable, body=body)

    def parse_block(self) -> list[Stmt]:
        self.expect("punct", "{")
        body = []
        while not self.check("punct", "}"):
            if self.check("eof"):
                token = self.current
                raise PolicySyntaxError(token.line, token.col, "unterminated block")
            body.append(self.parse_statement())
        self.advance()
        return body

    # --- expressions, lowest precedence first ---

    def parse_expression(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.check("keyword", "or"):
            op = self.advance()
            right = self.parse_and()
            left = Binary(line=op.line, col=op.col, op="or", left=left, right=right)
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.check("keyword", "and"):
            op = self.advance()
            right = self.parse_not()
            left = Binary(line=op.line, col=op.col, op="and", left=left, right=right)
        return left

    def parse_not(self) -> Expr:
        if self.check("keyword", "not"):
            op = self.advance()
            operand = self.parse_not()
            return Unary(line=op.line, col=op.col, op="not", operand=operand)
        return self.parse_comparison()

    _COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        token = self.current
        if token.kind == "punct" and token.value in self._COMPARISONS:
            self.advance()
            right = self.parse_additive()
            return Binary(line=token.line, col=token.col, op=token.value, left=left, right=right)
        if self.check("keyword", "in"):
            self.advance()
            right = self.parse_additive()
            return Binary(line=token.line, col=token.col, op="in", left=left, right=right)
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.current.kind == "punct" and self.current.value in ("+", "-"):
            op = self.advance()
            right = self.parse_multiplicative()
            left = Binary(line=op.line, col=op.col, op=op.value, left=left, right=right)
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.current.kind == "punct" and self.current.value in ("*", "/"):
            op = self.advance()
            right = self.parse_unary()
            left = Binary(line=op.line, col=op.col, op=op.value, left=left, right=right)
        return left

    def parse_unary(self) -> Expr:
        if self.check("punct", "-"):
            op = self.advance()
            operand = self.parse_unary()
            return Unary(line=op.line, col=op.col, op="-", operand=operand)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while True:
            if self.check("punct", "."):
                dot = self.advance()
                attr = self.expect("ident", what="member name")
                expr = Member(line=dot.line, col=dot.col, obj=expr, attr=attr.value)
                continue
            if self.check("punct", "["):
                bracket = self.advance()
                index = self.parse_expression()
                self.expect("punct", "]")
                expr = Index(line=bracket.line, col=bracket.col, obj=expr, index=index)
                continue
            if self.check("punct", "("):
                if not isinstance(expr, Identifier):
                    token = self.current
                    raise PolicySyntaxError(
                        token.line, token.col, "only named functions can be called"
                    )
                self.advance()
                args = []
                if not self.check("punct", ")"):
                    args.append(self.parse_expression())
                    while self.match("punct", ","):
                        args.append(self.parse_expression())
                self.expect("punct", ")")
                expr = Call(line=expr.line, col=expr.col, name=expr.name, args=args)
                continue
            return expr

    def parse_primary(self) -> Expr:
        token = self.current
        if token.kind == "number" or token.kind == "string":
            self.advance()
            return Literal(line=token.line, col=token.col, value=token.value)
        if token.kind == "keyword" and token.value in ("true", "false", "null"):
            self.advance()
            value = {"true": True, "false": False, "null": None}[token.value]
            return Literal(line=token.line, col=token.col, value=value)
        if token.kind == "ident":
            self.advance()
            return Identifier(line=token.line, col=token.col, name=token.value)
        if self.match("punct", "("):
            expr = self.parse_expression()
            self.expect("punct", ")")
            return expr
        if token.kind == "punct" and token.value == "[":
            self.advance()
            items = []
            if not self.check("punct", "]"):
                items.append(self.parse_expression())
                while self.match("punct", ","):
                    items.append(self.parse_expression())
            self.expect("punct", "]")
            return ListLiteral(line=token.line, col=token.col, items=items)
        if token.kind == "punct" and token.value == "{":
            self.advance()
            entries: list[tuple[str, Expr]] = []
            if not self.check("punct", "}"):
                entries.append(self.parse_record_entry())
                while self.match("punct", ","):
                    entries.append(self.parse_record_entry())
            self.expect("punct", "}")
            return RecordLiteral(line=token.line, col=token.col, entries=entries)
        shown = "end of input" if token.kind == "eof" else repr(token.value)
        raise PolicySyntaxError(token.line, token.col, f"expected an expression, found {shown}")

    def parse_record_entry(self) -> tuple[str, Expr]:
        key = self.current
        if key.kind in ("ident", "string"):
            self.advance()
        else:
            raise PolicySyntaxError(key.line, key.col, "expected record key")
        self.expect("punct", ":")
        return (key.value, self.parse_expression())


def parse_policy(source: str) -> Program:
    """Parse PolicyLang source into an AST; errors carry line and column."""
    parser = _Parser(tokenize(source))
    return parser.parse_program()
