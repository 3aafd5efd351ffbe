"""Lexer and recursive-descent parser for the mini-Dafny subset."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional

from . import syntax as S

KEYWORDS = {
    "module", "datatype", "function", "method", "lemma", "predicate",
    "requires", "ensures", "decreases", "invariant", "modifies", "reads",
    "var", "if", "then", "else", "while", "return", "returns",
    "expect", "assert", "assume", "match", "case", "true", "false",
    "int", "bool", "real", "string", "char", "nat", "seq", "print",
}

_MARKER_RE = re.compile(r"^\s*// (@@[a-z_]+:[a-z_]+@@)\s*$")

_TOKEN_RE = re.compile(
    r"""
    (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<char>'(?:[^'\\\n]|\\.)')
  | (?P<ident>[A-Za-z_'?][A-Za-z0-9_'?]*)
  | (?P<op><==>|==>|==|=>|:=|::|!=|<=|>=|&&|\|\||\.\.|[{}()\[\]<>.,;:+\-*/%!=|&@])
    """,
    re.VERBOSE | re.DOTALL,
)


class StubParseError(Exception):
    def __init__(self, message: str, pos: S.Pos):
        super().__init__(message)
        self.message = message
        self.pos = pos


class Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: S.Pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r})"


def lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            line_start = i + 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        m = _TOKEN_RE.match(source, i)
        pos = S.Pos(line, i - line_start + 1)
        if m is None:
            raise StubParseError(f"unexpected character {ch!r}", pos)
        kind = m.lastgroup or "op"
        text = m.group()
        if kind == "comment":
            marker = _MARKER_RE.match(text)
            if marker:
                tokens.append(Token("marker", marker.group(1), pos))
            line += text.count("\n")
            if "\n" in text:
                line_start = i + text.rindex("\n") + 1
            i = m.end()
            continue
        tokens.append(Token(kind, text, pos))
        i = m.end()
    tokens.append(Token("eof", "", S.Pos(line, 1)))
    return tokens


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # --- primitives ---

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("op", "ident")

    def at_kind(self, kind: str) -> bool:
        return self.peek().kind == kind

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise StubParseError(f"expected {text!r} but found {tok.text!r}", tok.pos)
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise StubParseError(f"expected identifier but found {tok.text!r}", tok.pos)
        return self.advance()

    def take_markers(self) -> list[str]:
        markers = []
        while self.at_kind("marker"):
            markers.append(self.advance().text)
        return markers

    # --- program ---

    def parse_program(self) -> S.Program:
        markers = self.take_markers()
        module_name = None
        decls: list[S.Decl] = []
        closing = False
        if self.at("module"):
            self.advance()
            if self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
                module_name = self.advance().text
            self.expect("{")
            closing = True
        while True:
            markers += self.take_markers()
            tok = self.peek()
            if tok.kind == "eof":
                break
            if closing and tok.text == "}":
                self.advance()
                break
            decl = self.parse_decl()
            decl.markers = markers
            markers = []
            decls.append(decl)
        trailing = markers + self.take_markers()
        if self.peek().kind != "eof":
            raise StubParseError(f"trailing input {self.peek().text!r}", self.peek().pos)
        return S.Program(module_name, decls, trailing_markers=trailing)

    def parse_decl(self) -> S.Decl:
        tok = self.peek()
        if tok.text == "datatype":
            return self.parse_datatype()
        if tok.text == "function" or tok.text == "predicate":
            return self.parse_function()
        if tok.text in ("method", "lemma"):
            return self.parse_method()
        raise StubParseError(f"expected a declaration but found {tok.text!r}", tok.pos)

    def parse_datatype(self) -> S.DatatypeDecl:
        pos = self.expect("datatype").pos
        name = self.expect_ident().text
        typarams: list[str] = []
        if self.at("<"):
            self.advance()
            typarams.append(self.expect_ident().text)
            while self.at(","):
                self.advance()
                typarams.append(self.expect_ident().text)
            self.expect(">")
        self.expect("=")
        ctors = [self.parse_ctor()]
        while self.at("|"):
            self.advance()
            ctors.append(self.parse_ctor())
        return S.DatatypeDecl(name, typarams, ctors, pos)

    def parse_ctor(self) -> S.Ctor:
        tok = self.peek()
        if tok.kind != "ident":
            raise StubParseError(f"expected constructor name but found {tok.text!r}", tok.pos)
        name = self.advance().text
        fields: list[tuple[Optional[str], S.Type]] = []
        if self.at("("):
            self.advance()
            while not self.at(")"):
                field_name = None
                if (
                    self.peek().kind == "ident"
                    and self.peek().text not in KEYWORDS
                    and self.peek(1).text == ":"
                ):
                    field_name = self.advance().text
                    self.advance()
                fields.append((field_name, self.parse_type()))
                if self.at(","):
                    self.advance()
            self.expect(")")
        return S.Ctor(name, fields, tok.pos)

    def parse_type(self) -> S.Type:
        tok = self.peek()
        if tok.kind != "ident":
            raise StubParseError(f"expected a type but found {tok.text!r}", tok.pos)
        name = self.advance().text
        args: tuple[S.Type, ...] = ()
        if self.at("<"):
            self.advance()
            collected = [self.parse_type()]
            while self.at(","):
                self.advance()
                collected.append(self.parse_type())
            self.expect(">")
            args = tuple(collected)
        return S.Type(name, args)

    def parse_attrs(self) -> list[str]:
        attrs = []
        while self.at("{") and self.peek(1).text == ":":
            self.advance()
            self.advance()
            attrs.append(self.expect_ident().text)
            while not self.at("}"):
                self.advance()
            self.expect("}")
        return attrs

    def parse_params(self) -> list[S.Param]:
        self.expect("(")
        params: list[S.Param] = []
        while not self.at(")"):
            name = self.expect_ident().text
            self.expect(":")
            params.append(S.Param(name, self.parse_type()))
            if self.at(","):
                self.advance()
        self.expect(")")
        return params

    def parse_spec_clauses(self) -> tuple[list[S.Expr], list[S.Expr], list[S.Expr]]:
        requires: list[S.Expr] = []
        ensures: list[S.Expr] = []
        decreases: list[S.Expr] = []
        while True:
            if self.at("requires"):
                self.advance()
                requires.append(self.parse_expr())
            elif self.at("ensures"):
                self.advance()
                ensures.append(self.parse_expr())
            elif self.at("decreases"):
                self.advance()
                decreases.append(self.parse_expr())
                while self.at(","):
                    self.advance()
                    decreases.append(self.parse_expr())
            else:
                return requires, ensures, decreases

    def parse_function(self) -> S.FunctionDecl:
        pos = self.advance().pos  # function | predicate
        self.parse_attrs()
        name = self.expect_ident().text
        params = self.parse_params()
        self.expect(":")
        return_type = self.parse_type()
        requires, ensures, decreases = self.parse_spec_clauses()
        self.expect("{")
        body = self.parse_expr()
        self.expect("}")
        return S.FunctionDecl(name, params, return_type, requires, ensures, decreases, body, pos)

    def parse_method(self) -> S.MethodDecl:
        pos = self.advance().pos  # method | lemma
        attrs = self.parse_attrs()
        name = self.expect_ident().text
        params = self.parse_params()
        outs: list[S.Param] = []
        if self.at("returns"):
            self.advance()
            outs = self.parse_params()
        requires, ensures, decreases = self.parse_spec_clauses()
        body = None
        if self.at("{"):
            body = self.parse_block()
        return S.MethodDecl(name, attrs, params, outs, requires, ensures, decreases, body, pos)

    # --- statements ---

    def parse_block(self) -> list[S.Stmt]:
        self.expect("{")
        stmts: list[S.Stmt] = []
        while not self.at("}"):
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt(self) -> S.Stmt:
        tok = self.peek()
        if tok.kind == "marker":
            self.advance()
            return S.MarkerStmt(tok.pos, tok.text)
        if tok.text == "var":
            return self.parse_var_decl()
        if tok.text == "if":
            return self.parse_if()
        if tok.text == "while":
            return self.parse_while()
        if tok.text == "return":
            self.advance()
            values: list[S.Expr] = []
            if not self.at(";"):
                values.append(self.parse_expr())
                while self.at(","):
                    self.advance()
                    values.append(self.parse_expr())
            self.expect(";")
            return S.ReturnStmt(tok.pos, values)
        if tok.text == "expect":
            self.advance()
            cond = self.parse_expr()
            message = None
            if self.at(","):
                self.advance()
                message = self.parse_expr()
            self.expect(";")
            return S.ExpectStmt(tok.pos, cond, message)
        if tok.text == "assert":
            self.advance()
            cond = self.parse_expr()
            self.expect(";")
            return S.AssertStmt(tok.pos, cond)
        if tok.text == "assume":
            self.advance()
            axiom = False
            if self.at("{") and self.peek(1).text == ":":
                attrs = self.parse_attrs()
                axiom = "axiom" in attrs
            cond = self.parse_expr()
            self.expect(";")
            return S.AssumeStmt(tok.pos, cond, axiom)
        # bare method call: name(args);
        if tok.kind == "ident" and tok.text not in KEYWORDS and self.peek(1).text == "(":
            name = self.advance().text
            self.advance()
            args: list[S.Expr] = []
            while not self.at(")"):
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
            self.expect(")")
            self.expect(";")
            return S.CallStmt(tok.pos, S.Call(tok.pos, name, args))
        # assignment: lhs (, lhs)* := rhs (, rhs)* ;
        targets = [self.expect_ident().text]
        while self.at(","):
            self.advance()
            targets.append(self.expect_ident().text)
        self.expect(":=")
        rhs = [self.parse_expr()]
        while self.at(","):
            self.advance()
            rhs.append(self.parse_expr())
        self.expect(";")
        return S.AssignStmt(tok.pos, targets, rhs)

    def parse_var_decl(self) -> S.VarDeclStmt:
        pos = self.expect("var").pos
        names = []
        types: list[Optional[S.Type]] = []
        while True:
            names.append(self.expect_ident().text)
            if self.at(":"):
                self.advance()
                types.append(self.parse_type())
            else:
                types.append(None)
            if self.at(","):
                self.advance()
                continue
            break
        rhs: list[S.Expr] = []
        if self.at(":="):
            self.advance()
            rhs.append(self.parse_expr())
            while self.at(","):
                self.advance()
                rhs.append(self.parse_expr())
        self.expect(";")
        return S.VarDeclStmt(pos, names, types, rhs)

    def parse_if(self) -> S.IfStmt:
        pos = self.expect("if").pos
        cond = self.parse_expr()
        then = self.parse_block()
        orelse: list[S.Stmt] = []
        if self.at("else"):
            self.advance()
            if self.at("if"):
                orelse = [self.parse_if()]
            else:
                orelse = self.parse_block()
        return S.IfStmt(pos, cond, then, orelse)

    def parse_while(self) -> S.WhileStmt:
        pos = self.expect("while").pos
        cond = self.parse_expr()
        invariants: list[S.Expr] = []
        decreases: list[S.Expr] = []
        while True:
            if self.at("invariant"):
                self.advance()
                invariants.append(self.parse_expr())
            elif self.at("decreases"):
                self.advance()
                decreases.append(self.parse_expr())
                while self.at(","):
                    self.advance()
                    decreases.append(self.parse_expr())
            else:
                break
        body = self.parse_block()
        return S.WhileStmt(pos, cond, invariants, decreases, body)

    # --- expressions (precedence climbing) ---

    _BINARY_LEVELS = [
        ["<==>"],
        ["==>"],
        ["||"],
        ["&&"],
        ["==", "!=", "<", "<=", ">", ">="],
        ["+", "-"],
        ["*", "/", "%"],
    ]

    def parse_expr(self) -> S.Expr:
        return self._parse_binary(0)

    def _parse_binary(self, level: int) -> S.Expr:
        if level >= len(self._BINARY_LEVELS):
            return self._parse_unary()
        ops = self._BINARY_LEVELS[level]
        left = self._parse_binary(level + 1)
        while self.peek().kind == "op" and self.peek().text in ops:
            op_tok = self.advance()
            right = self._parse_binary(level + 1)
            left = S.Binary(op_tok.pos, op_tok.text, left, right)
        return left

    def _parse_unary(self) -> S.Expr:
        tok = self.peek()
        if tok.text in ("-", "!"):
            self.advance()
            return S.Unary(tok.pos, tok.text, self._parse_unary())
        return self._parse_postfix()

    def _parse_postfix(self) -> S.Expr:
        expr = self._parse_primary()
        while True:
            if self.at("["):
                pos = self.advance().pos
                index = self.parse_expr()
                self.expect("]")
                expr = S.Index(pos, expr, index)
            elif self.at("(") and isinstance(expr, S.Var):
                pos = self.advance().pos
                args: list[S.Expr] = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.advance()
                self.expect(")")
                expr = S.Call(pos, expr.name, args)
            else:
                return expr

    def _parse_primary(self) -> S.Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return S.Lit(tok.pos, int(tok.text), "int")
        if tok.kind == "real":
            self.advance()
            return S.Lit(tok.pos, Fraction(tok.text), "real")
        if tok.kind == "string":
            self.advance()
            return S.Lit(tok.pos, _unquote(tok.text), "string")
        if tok.kind == "char":
            self.advance()
            return S.Lit(tok.pos, _unquote(tok.text), "char")
        if tok.text == "true":
            self.advance()
            return S.Lit(tok.pos, True, "bool")
        if tok.text == "false":
            self.advance()
            return S.Lit(tok.pos, False, "bool")
        if tok.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.text == "[":
            self.advance()
            elements: list[S.Expr] = []
            while not self.at("]"):
                elements.append(self.parse_expr())
                if self.at(","):
                    self.advance()
            self.expect("]")
            return S.SeqDisplay(tok.pos, elements)
        if tok.text == "|":
            self.advance()
            inner = self.parse_expr()
            self.expect("|")
            return S.Cardinality(tok.pos, inner)
        if tok.text == "if":
            self.advance()
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_expr()
            self.expect("else")
            orelse = self.parse_expr()
            return S.Ite(tok.pos, cond, then, orelse)
        if tok.text == "match":
            return self._parse_match()
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            return S.Var(tok.pos, tok.text)
        raise StubParseError(f"expected an expression but found {tok.text!r}", tok.pos)

    def _parse_match(self) -> S.Match:
        pos = self.expect("match").pos
        scrutinee = self.parse_expr()
        braced = False
        if self.at("{"):
            self.advance()
            braced = True
        cases: list[tuple[S.CasePattern, S.Expr]] = []
        while self.at("case"):
            self.advance()
            pattern = self._parse_pattern()
            self.expect("=>")
            cases.append((pattern, self.parse_expr()))
        if braced:
            self.expect("}")
        if not cases:
            raise StubParseError("match needs at least one case", pos)
        return S.Match(pos, scrutinee, cases)

    def _parse_pattern(self) -> S.CasePattern:
        tok = self.peek()
        if tok.text == "_":
            self.advance()
            return S.CasePattern(tok.pos, "wild")
        if tok.kind == "int":
            self.advance()
            return S.CasePattern(tok.pos, "lit", int(tok.text))
        if tok.text == "-" and self.peek(1).kind == "int":
            self.advance()
            lit = self.advance()
            return S.CasePattern(tok.pos, "lit", -int(lit.text))
        if tok.text in ("true", "false"):
            self.advance()
            return S.CasePattern(tok.pos, "lit", tok.text == "true")
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            binders: list[str] = []
            if self.at("("):
                self.advance()
                while not self.at(")"):
                    binders.append(self.expect_ident().text)
                    if self.at(","):
                        self.advance()
                self.expect(")")
            return S.CasePattern(tok.pos, "ctor", tok.text, binders)
        raise StubParseError(f"unsupported match pattern {tok.text!r}", tok.pos)


def parse_program(source: str) -> S.Program:
    return Parser(lex(source)).parse_program()


def _unquote(text: str) -> str:
    body = text[1:-1]
    return body.encode("utf-8").decode("unicode_escape")
