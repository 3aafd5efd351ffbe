"""AST for the mini-Dafny subset the stub toolchain understands."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


# --- types ---


@dataclass(frozen=True)
class Type:
    name: str  # int | bool | real | string | char | nat | seq | <datatype name>
    args: tuple["Type", ...] = ()

    def __str__(self) -> str:
        if self.args:
            return f"{self.name}<{', '.join(map(str, self.args))}>"
        return self.name


# --- expressions ---


@dataclass
class Expr:
    pos: Pos


@dataclass
class Lit(Expr):
    value: object  # int | bool | Fraction | str
    kind: str  # "int" | "bool" | "real" | "string" | "char"


@dataclass
class Var(Expr):
    name: str


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Call(Expr):
    name: str
    args: list[Expr]


@dataclass
class SeqDisplay(Expr):
    elements: list[Expr]


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Cardinality(Expr):
    operand: Expr


@dataclass
class Ite(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass
class CasePattern:
    pos: Pos
    kind: str  # "lit" | "wild" | "ctor"
    value: object = None  # literal value or ctor name
    binders: list[str] = field(default_factory=list)


@dataclass
class Match(Expr):
    scrutinee: Expr
    cases: list[tuple[CasePattern, Expr]]


# --- statements ---


@dataclass
class Stmt:
    pos: Pos


@dataclass
class VarDeclStmt(Stmt):
    names: list[str]
    types: list[Optional[Type]]
    rhs: list[Expr]  # may be empty (declaration only)


@dataclass
class AssignStmt(Stmt):
    targets: list[str]
    rhs: list[Expr]


@dataclass
class CallStmt(Stmt):
    call: "Call"


@dataclass
class IfStmt(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: list[Stmt]


@dataclass
class WhileStmt(Stmt):
    cond: Expr
    invariants: list[Expr]
    decreases: list[Expr]
    body: list[Stmt]


@dataclass
class ReturnStmt(Stmt):
    values: list[Expr]


@dataclass
class ExpectStmt(Stmt):
    cond: Expr
    message: Optional[Expr] = None


@dataclass
class AssertStmt(Stmt):
    cond: Expr


@dataclass
class AssumeStmt(Stmt):
    cond: Expr
    axiom: bool = False


@dataclass
class MarkerStmt(Stmt):
    text: str  # full-line @@...@@ comment, passed through to backends


# --- declarations ---


@dataclass
class Param:
    name: str
    type: Type


@dataclass
class Ctor:
    name: str
    fields: list[tuple[Optional[str], Type]]
    pos: Pos


@dataclass
class DatatypeDecl:
    name: str
    typarams: list[str]
    ctors: list[Ctor]
    pos: Pos
    markers: list[str] = field(default_factory=list)


@dataclass
class FunctionDecl:
    name: str
    params: list[Param]
    return_type: Type
    requires: list[Expr]
    ensures: list[Expr]
    decreases: list[Expr]
    body: Expr
    pos: Pos
    markers: list[str] = field(default_factory=list)


@dataclass
class MethodDecl:
    name: str
    attrs: list[str]
    params: list[Param]
    outs: list[Param]
    requires: list[Expr]
    ensures: list[Expr]
    decreases: list[Expr]
    body: Optional[list[Stmt]]
    pos: Pos
    markers: list[str] = field(default_factory=list)


Decl = Union[DatatypeDecl, FunctionDecl, MethodDecl]


@dataclass
class Program:
    module_name: Optional[str]
    decls: list[Decl]
    trailing_markers: list[str] = field(default_factory=list)

    def functions(self) -> list[FunctionDecl]:
        return [d for d in self.decls if isinstance(d, FunctionDecl)]

    def methods(self) -> list[MethodDecl]:
        return [d for d in self.decls if isinstance(d, MethodDecl)]

    def datatypes(self) -> list[DatatypeDecl]:
        return [d for d in self.decls if isinstance(d, DatatypeDecl)]

    def find(self, name: str) -> Optional[Decl]:
        for d in self.decls:
            if getattr(d, "name", None) == name:
                return d
        return None

    def entry_method(self) -> Optional[MethodDecl]:
        for d in self.methods():
            if "testEntry" in d.attrs:
                return d
        return None
