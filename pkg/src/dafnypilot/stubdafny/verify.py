"""Dynamic stand-in for the verifier: checked evaluation over sampled inputs.

Each function is evaluated on a pool of inputs satisfying its requires
clauses, catching precondition violations at call sites, runaway recursion,
division-by-zero and bounds faults. Each method with a real body is executed
the same way and its ensures clauses are checked against the functional
results. A method whose body is the axiom placeholder discharges trivially,
exactly like the axiom does for the real verifier.

Sampling cannot prove anything; it is a corpus-scoped emulation that keeps
the pipeline honest where no real toolchain exists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from . import syntax as S
from .evaluate import (
    AxiomAssumed,
    DtValue,
    EvalAbort,
    Evaluator,
    is_stub_body,
)

MAX_SAMPLES = 48

_INT_POOL = [-3, -1, 0, 1, 2, 3, 4, 5, 8]
_NAT_POOL = [0, 1, 2, 3, 5, 8]
_BOOL_POOL = [False, True]
_REAL_POOL = [Fraction(-3, 2), Fraction(0), Fraction(3, 2), Fraction(5, 2)]
_STRING_POOL = ["", "a", "bar"]
_CHAR_POOL = ["a", "z"]
_INT_SEQ_POOL = [(), (0,), (1, 2, 3), (13, 1), (1, 13, 5, 7, 9, 13)]


@dataclass(frozen=True)
class StubDiagnostic:
    line: int
    col: int
    severity: str  # "Error" | "Warning"
    message: str

    def render(self, filename: str) -> str:
        return f"{filename}({self.line},{self.col}): {self.severity}: {self.message}"


def sample_values(type_: S.Type, datatypes: dict[str, S.DatatypeDecl], depth: int = 0) -> list:
    """Small value pool for a type; bounded recursion for datatypes."""
    name = type_.name
    if name == "int":
        return list(_INT_POOL)
    if name == "nat":
        return list(_NAT_POOL)
    if name == "bool":
        return list(_BOOL_POOL)
    if name == "real":
        return list(_REAL_POOL)
    if name == "string":
        return list(_STRING_POOL)
    if name == "char":
        return list(_CHAR_POOL)
    if name == "seq":
        elem = type_.args[0] if type_.args else S.Type("int")
        if elem.name == "int":
            return list(_INT_SEQ_POOL)
        inner = sample_values(elem, datatypes, depth + 1)[:2]
        pool: list = [()]
        if inner:
            pool.append((inner[0],))
        if len(inner) > 1:
            pool.append((inner[0], inner[1]))
        return pool
    if name in datatypes and depth < 3:
        pool = []
        for ctor in datatypes[name].ctors[:3]:
            if not ctor.fields:
                pool.append(DtValue(name, ctor.name, ()))
                continue
            field_pools = [sample_values(ft, datatypes, depth + 1)[:2] for _, ft in ctor.fields]
            for combo in itertools.islice(itertools.product(*field_pools), 2):
                pool.append(DtValue(name, ctor.name, tuple(combo)))
        return pool
    return []  # type parameters and unknown types: nothing to sample


def sample_args(params: list[S.Param], datatypes: dict[str, S.DatatypeDecl]) -> list[list]:
    if not params:
        return [[]]
    pools = [sample_values(p.type, datatypes) for p in params]
    if any(not pool for pool in pools):
        return []
    combos = itertools.product(*pools)
    return [list(c) for c in itertools.islice(combos, MAX_SAMPLES)]


def _admissible(ev: Evaluator, requires: list[S.Expr], env: dict) -> Optional[bool]:
    """Does a sample satisfy the requires clauses? None when undecidable."""
    try:
        return all(ev.eval(clause, env) for clause in requires)
    except (EvalAbort, AxiomAssumed):
        return None


def check_program(program: S.Program) -> list[StubDiagnostic]:
    diagnostics: list[StubDiagnostic] = []
    datatypes = {d.name: d for d in program.datatypes()}

    unresolved = _check_resolution(program)
    if unresolved:
        return unresolved

    for func in program.functions():
        diag = _check_function(program, func, datatypes)
        if diag is not None:
            diagnostics.append(diag)

    for method in program.methods():
        if method.body is None or is_stub_body(method.body):
            continue  # bodyless or axiom-stubbed: nothing to execute
        if method.name == "Main" and not method.ensures:
            continue  # the harness is runtime-checked, not verified
        diagnostics.extend(_check_method(program, method, datatypes))

    return diagnostics


def _known_names(program: S.Program) -> set[str]:
    names = set()
    for d in program.decls:
        names.add(d.name)
        if isinstance(d, S.DatatypeDecl):
            for ctor in d.ctors:
                names.add(ctor.name)
    return names


def _check_resolution(program: S.Program) -> list[StubDiagnostic]:
    known = _known_names(program)
    diags = []
    for expr, _ in _walk_calls(program):
        if expr.name not in known:
            diags.append(StubDiagnostic(expr.pos.line, expr.pos.col, "Error", f"unresolved identifier: {expr.name}"))
    return diags


def _walk_calls(program: S.Program) -> Iterable[tuple[S.Call, S.Decl]]:
    def from_expr(expr):
        if isinstance(expr, S.Call):
            yield expr
            for a in expr.args:
                yield from from_expr(a)
        elif isinstance(expr, S.Unary):
            yield from from_expr(expr.operand)
        elif isinstance(expr, S.Binary):
            yield from from_expr(expr.left)
            yield from from_expr(expr.right)
        elif isinstance(expr, S.SeqDisplay):
            for e in expr.elements:
                yield from from_expr(e)
        elif isinstance(expr, S.Index):
            yield from from_expr(expr.base)
            yield from from_expr(expr.index)
        elif isinstance(expr, S.Cardinality):
            yield from from_expr(expr.operand)
        elif isinstance(expr, S.Ite):
            yield from from_expr(expr.cond)
            yield from from_expr(expr.then)
            yield from from_expr(expr.orelse)
        elif isinstance(expr, S.Match):
            yield from from_expr(expr.scrutinee)
            for _, body in expr.cases:
                yield from from_expr(body)

    def from_stmt(stmt):
        if isinstance(stmt, S.CallStmt):
            yield from from_expr(stmt.call)
        for child in getattr(stmt, "rhs", []) or []:
            yield from from_expr(child)
        for attr in ("cond", "message"):
            child = getattr(stmt, attr, None)
            if child is not None:
                yield from from_expr(child)
        for child in getattr(stmt, "values", []) or []:
            yield from from_expr(child)
        for child in getattr(stmt, "invariants", []) or []:
            yield from from_expr(child)
        for child in getattr(stmt, "decreases", []) or []:
            yield from from_expr(child)
        for block_attr in ("then", "orelse", "body"):
            for child in getattr(stmt, block_attr, []) or []:
                if isinstance(child, S.Stmt):
                    yield from from_stmt(child)

    for decl in program.decls:
        exprs: list[S.Expr] = []
        if isinstance(decl, (S.FunctionDecl, S.MethodDecl)):
            exprs += decl.requires + decl.ensures + decl.decreases
        if isinstance(decl, S.FunctionDecl):
            exprs.append(decl.body)
        for expr in exprs:
            for call in from_expr(expr):
                yield call, decl
        if isinstance(decl, S.MethodDecl) and decl.body is not None:
            for stmt in decl.body:
                for call in from_stmt(stmt):
                    yield call, decl


def _check_function(
    program: S.Program, func: S.FunctionDecl, datatypes: dict[str, S.DatatypeDecl]
) -> Optional[StubDiagnostic]:
    for args in sample_args(func.params, datatypes):
        ev = Evaluator(program, check_expects=False)
        env = {p.name: v for p, v in zip(func.params, args)}
        if _admissible(ev, func.requires, env) is not True:
            continue
        try:
            ev.call_function(func.name, args, func.pos)
        except AxiomAssumed:
            continue
        except EvalAbort as abort:
            return StubDiagnostic(abort.pos.line, abort.pos.col, "Error", abort.detail)
    return None


def _check_method(
    program: S.Program, method: S.MethodDecl, datatypes: dict[str, S.DatatypeDecl]
) -> list[StubDiagnostic]:
    for args in sample_args(method.params, datatypes):
        ev = Evaluator(program, check_expects=False)
        env = {p.name: v for p, v in zip(method.params, args)}
        if _admissible(ev, method.requires, env) is not True:
            continue
        try:
            outs = ev.run_method(method, args)
        except AxiomAssumed:
            continue
        except EvalAbort as abort:
            return [StubDiagnostic(abort.pos.line, abort.pos.col, "Error", abort.detail)]
        post_env = dict(env)
        for out, value in zip(method.outs, outs):
            post_env[out.name] = value
        for clause in method.ensures:
            try:
                holds = ev.eval(clause, post_env)
            except AxiomAssumed:
                continue
            except EvalAbort as abort:
                return [StubDiagnostic(abort.pos.line, abort.pos.col, "Error", abort.detail)]
            if not holds:
                return [
                    StubDiagnostic(
                        clause.pos.line,
                        clause.pos.col,
                        "Error",
                        "a postcondition could not be proved on this return path",
                    )
                ]
    return []
