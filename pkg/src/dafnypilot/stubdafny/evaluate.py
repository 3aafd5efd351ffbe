"""Checked evaluator for the mini-Dafny subset.

Executes function and method bodies over concrete values while enforcing
preconditions at call sites, loop invariants, assertions, index bounds and
division safety, with recursion/step limits standing in for termination
checking. The verify command drives this over sampled inputs; the test
generator reuses the same evaluator with coverage recording switched on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import syntax as S


class EvalAbort(Exception):
    """Base for anything that stops evaluation with a diagnostic."""

    message = "evaluation failed"

    def __init__(self, pos: S.Pos, detail: str = ""):
        super().__init__(detail or self.message)
        self.pos = pos
        self.detail = detail or self.message


class PreconditionViolation(EvalAbort):
    message = "a precondition for this call could not be proved"


class AssertionViolation(EvalAbort):
    message = "assertion might not hold"


class InvariantEntryViolation(EvalAbort):
    message = "this loop invariant could not be proved on entry"


class InvariantMaintainViolation(EvalAbort):
    message = "this invariant could not be proved to be maintained by the loop"


class DivisionByZero(EvalAbort):
    message = "possible division by zero"


class IndexOutOfRange(EvalAbort):
    message = "index out of range"


class UnresolvedName(EvalAbort):
    message = "unresolved identifier"


class UnassignedRead(EvalAbort):
    message = "variable might not have been initialized"


class TerminationExceeded(EvalAbort):
    message = "cannot prove termination; try supplying a decreases clause"


class ExpectViolation(EvalAbort):
    message = "expectation violation"


class AxiomAssumed(Exception):
    """Control flow: an `assume {:axiom}` discharged the rest of this path."""


class _ReturnSignal(Exception):
    def __init__(self, values: Optional[list] = None):
        self.values = values


_UNASSIGNED = object()


@dataclass(frozen=True)
class DtValue:
    datatype: str
    ctor: str
    fields: tuple

    def __repr__(self) -> str:
        if not self.fields:
            return self.ctor
        return f"{self.ctor}({', '.join(map(repr, self.fields))})"


class Evaluator:
    def __init__(
        self,
        program: S.Program,
        step_budget: int = 2_000_000,
        depth_limit: int = 400,
        check_expects: bool = True,
        coverage: Optional[set] = None,
    ):
        self.program = program
        self.functions = {d.name: d for d in program.functions()}
        self.methods = {d.name: d for d in program.methods()}
        self.ctors: dict[str, tuple[S.DatatypeDecl, S.Ctor]] = {}
        for dt in program.datatypes():
            for ctor in dt.ctors:
                self.ctors[ctor.name] = (dt, ctor)
        self.step_budget = step_budget
        self.depth_limit = depth_limit
        self.check_expects = check_expects
        self.coverage = coverage
        self._steps = 0
        self._depth = 0
        self._last_pos = S.Pos(0, 0)

    # --- entry points ---

    def call_function(self, name: str, args: list, pos: S.Pos) -> object:
        decl = self.functions.get(name)
        if decl is None:
            raise UnresolvedName(pos, f"unresolved identifier: {name}")
        if len(args) != len(decl.params):
            raise UnresolvedName(pos, f"wrong number of arguments to {name}")
        env = {p.name: v for p, v in zip(decl.params, args)}
        for clause in decl.requires:
            if not self.eval(clause, env):
                raise PreconditionViolation(pos)
        self._depth += 1
        if self._depth > self.depth_limit:
            self._depth = 0
            raise TerminationExceeded(pos)
        try:
            self._cover(("function", decl.name))
            return self.eval(decl.body, env)
        finally:
            self._depth -= 1

    def run_method(self, decl: S.MethodDecl, args: list, pos: Optional[S.Pos] = None) -> list:
        pos = pos or decl.pos
        if len(args) != len(decl.params):
            raise UnresolvedName(pos, f"wrong number of arguments to {decl.name}")
        env = {p.name: v for p, v in zip(decl.params, args)}
        for clause in decl.requires:
            if not self.eval(clause, env):
                raise PreconditionViolation(pos)
        for out in decl.outs:
            env[out.name] = _UNASSIGNED
        self._depth += 1
        if self._depth > self.depth_limit:
            self._depth = 0
            raise TerminationExceeded(pos)
        try:
            self._cover(("method", decl.name))
            if decl.body is not None:
                try:
                    self.exec_block(decl.body, env)
                except _ReturnSignal as sig:
                    if sig.values is not None:
                        if len(sig.values) != len(decl.outs):
                            raise UnresolvedName(pos, "wrong number of return values")
                        for out, value in zip(decl.outs, sig.values):
                            env[out.name] = value
        finally:
            self._depth -= 1
        results = []
        for out in decl.outs:
            value = env[out.name]
            if value is _UNASSIGNED:
                raise UnassignedRead(pos, f"out-parameter {out.name} might not have been initialized")
            results.append(value)
        return results

    # --- statements ---

    def exec_block(self, stmts: list[S.Stmt], env: dict) -> None:
        for stmt in stmts:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: S.Stmt, env: dict) -> None:
        self._tick(stmt.pos)
        if isinstance(stmt, S.MarkerStmt):
            return
        if isinstance(stmt, S.VarDeclStmt):
            values = self._eval_rhs(stmt.rhs, len(stmt.names), stmt.pos, env) if stmt.rhs else None
            for i, name in enumerate(stmt.names):
                env[name] = values[i] if values is not None else _UNASSIGNED
            return
        if isinstance(stmt, S.AssignStmt):
            values = self._eval_rhs(stmt.rhs, len(stmt.targets), stmt.pos, env)
            for name, value in zip(stmt.targets, values):
                env[name] = value
            return
        if isinstance(stmt, S.IfStmt):
            if self._bool(self.eval(stmt.cond, env), stmt.pos):
                self._cover(("branch", stmt.pos.line, stmt.pos.col, True))
                self.exec_block(stmt.then, env)
            else:
                self._cover(("branch", stmt.pos.line, stmt.pos.col, False))
                self.exec_block(stmt.orelse, env)
            return
        if isinstance(stmt, S.WhileStmt):
            for inv in stmt.invariants:
                if not self._bool(self.eval(inv, env), inv.pos):
                    raise InvariantEntryViolation(inv.pos)
            entered = False
            while self._bool(self.eval(stmt.cond, env), stmt.pos):
                entered = True
                self._cover(("loop", stmt.pos.line, stmt.pos.col))
                self.exec_block(stmt.body, env)
                for inv in stmt.invariants:
                    if not self._bool(self.eval(inv, env), inv.pos):
                        raise InvariantMaintainViolation(inv.pos)
                self._tick(stmt.pos)
            if not entered:
                self._cover(("loop-skip", stmt.pos.line, stmt.pos.col))
            return
        if isinstance(stmt, S.ReturnStmt):
            if stmt.values:
                raise _ReturnSignal(self._eval_rhs(stmt.values, len(stmt.values), stmt.pos, env))
            raise _ReturnSignal(None)
        if isinstance(stmt, S.ExpectStmt):
            if self.check_expects and not self._bool(self.eval(stmt.cond, env), stmt.pos):
                raise ExpectViolation(stmt.pos)
            return
        if isinstance(stmt, S.AssertStmt):
            if not self._bool(self.eval(stmt.cond, env), stmt.pos):
                raise AssertionViolation(stmt.pos)
            return
        if isinstance(stmt, S.AssumeStmt):
            if stmt.axiom:
                raise AxiomAssumed()
            return
        if isinstance(stmt, S.CallStmt):
            call = stmt.call
            args = [self.eval(a, env) for a in call.args]
            if call.name in self.methods:
                self.run_method(self.methods[call.name], args, call.pos)
            elif call.name in self.functions:
                self.call_function(call.name, args, call.pos)
            else:
                raise UnresolvedName(call.pos, f"unresolved identifier: {call.name}")
            return
        raise UnresolvedName(stmt.pos, f"unsupported statement {type(stmt).__name__}")

    def _eval_rhs(self, rhs: list[S.Expr], n_targets: int, pos: S.Pos, env: dict) -> list:
        # a single method call may produce several values
        if len(rhs) == 1 and isinstance(rhs[0], S.Call) and rhs[0].name in self.methods:
            call = rhs[0]
            args = [self.eval(a, env) for a in call.args]
            outs = self.run_method(self.methods[call.name], args, call.pos)
            if len(outs) != n_targets:
                raise UnresolvedName(pos, "mismatched assignment arity")
            return outs
        values = [self.eval(e, env) for e in rhs]
        if len(values) != n_targets:
            raise UnresolvedName(pos, "mismatched assignment arity")
        return values

    # --- expressions ---

    def eval(self, expr: S.Expr, env: dict) -> object:
        self._tick(expr.pos)
        if isinstance(expr, S.Lit):
            return expr.value
        if isinstance(expr, S.Var):
            if expr.name in env:
                value = env[expr.name]
                if value is _UNASSIGNED:
                    raise UnassignedRead(expr.pos, f"variable {expr.name} might not have been initialized")
                return value
            if expr.name in self.ctors:
                dt, ctor = self.ctors[expr.name]
                if ctor.fields:
                    raise UnresolvedName(expr.pos, f"constructor {expr.name} needs arguments")
                return DtValue(dt.name, ctor.name, ())
            raise UnresolvedName(expr.pos, f"unresolved identifier: {expr.name}")
        if isinstance(expr, S.Unary):
            value = self.eval(expr.operand, env)
            if expr.op == "-":
                return -value
            if expr.op == "!":
                return not self._bool(value, expr.pos)
            raise UnresolvedName(expr.pos, f"unsupported operator {expr.op}")
        if isinstance(expr, S.Binary):
            return self._binary(expr, env)
        if isinstance(expr, S.Call):
            if expr.name in self.ctors:
                dt, ctor = self.ctors[expr.name]
                args = tuple(self.eval(a, env) for a in expr.args)
                if len(args) != len(ctor.fields):
                    raise UnresolvedName(expr.pos, f"wrong number of arguments to constructor {expr.name}")
                return DtValue(dt.name, ctor.name, args)
            if expr.name in self.functions:
                args = [self.eval(a, env) for a in expr.args]
                return self.call_function(expr.name, args, expr.pos)
            if expr.name in self.methods:
                raise UnresolvedName(expr.pos, f"method {expr.name} called in expression position")
            raise UnresolvedName(expr.pos, f"unresolved identifier: {expr.name}")
        if isinstance(expr, S.SeqDisplay):
            return tuple(self.eval(e, env) for e in expr.elements)
        if isinstance(expr, S.Index):
            base = self.eval(expr.base, env)
            index = self.eval(expr.index, env)
            if not isinstance(base, (tuple, str)):
                raise UnresolvedName(expr.pos, "indexing a non-sequence value")
            if not isinstance(index, int) or not 0 <= index < len(base):
                raise IndexOutOfRange(expr.pos)
            return base[index]
        if isinstance(expr, S.Cardinality):
            value = self.eval(expr.operand, env)
            if not isinstance(value, (tuple, str)):
                raise UnresolvedName(expr.pos, "cardinality of a non-sequence value")
            return len(value)
        if isinstance(expr, S.Ite):
            if self._bool(self.eval(expr.cond, env), expr.pos):
                return self.eval(expr.then, env)
            return self.eval(expr.orelse, env)
        if isinstance(expr, S.Match):
            return self._match(expr, env)
        raise UnresolvedName(expr.pos, f"unsupported expression {type(expr).__name__}")

    def _binary(self, expr: S.Binary, env: dict) -> object:
        op = expr.op
        if op in ("&&", "||", "==>", "<==>"):
            left = self._bool(self.eval(expr.left, env), expr.pos)
            if op == "&&" and not left:
                return False
            if op == "||" and left:
                return True
            if op == "==>" and not left:
                return True
            right = self._bool(self.eval(expr.right, env), expr.pos)
            if op == "<==>":
                return left == right
            return right
        left = self.eval(expr.left, env)
        right = self.eval(expr.right, env)
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op in ("<", "<=", ">", ">="):
            return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                raise DivisionByZero(expr.pos)
            if isinstance(left, Fraction) or isinstance(right, Fraction):
                return Fraction(left) / Fraction(right)
            return euclidean_div(left, right)
        if op == "%":
            if right == 0:
                raise DivisionByZero(expr.pos)
            return euclidean_mod(left, right)
        raise UnresolvedName(expr.pos, f"unsupported operator {op}")

    def _match(self, expr: S.Match, env: dict) -> object:
        value = self.eval(expr.scrutinee, env)
        for pattern, body in expr.cases:
            if pattern.kind == "wild":
                self._cover(("case", pattern.pos.line, pattern.pos.col))
                return self.eval(body, env)
            if pattern.kind == "lit" and value == pattern.value:
                self._cover(("case", pattern.pos.line, pattern.pos.col))
                return self.eval(body, env)
            if pattern.kind == "ctor" and isinstance(value, DtValue) and value.ctor == pattern.value:
                self._cover(("case", pattern.pos.line, pattern.pos.col))
                inner = dict(env)
                for binder, field_value in zip(pattern.binders, value.fields):
                    inner[binder] = field_value
                return self.eval(body, inner)
        raise UnresolvedName(expr.pos, "match is not exhaustive for this value")

    # --- helpers ---

    def _bool(self, value: object, pos: S.Pos) -> bool:
        if not isinstance(value, bool):
            raise UnresolvedName(pos, "condition is not boolean")
        return value

    def _tick(self, pos: S.Pos) -> None:
        self._last_pos = pos
        self._steps += 1
        if self._steps > self.step_budget:
            raise TerminationExceeded(pos)

    def _cover(self, block: tuple) -> None:
        if self.coverage is not None:
            self.coverage.add(block)


def euclidean_div(a: int, b: int) -> int:
    q = a // b
    if a - q * b < 0:
        q += 1
    return q


def euclidean_mod(a: int, b: int) -> int:
    r = a % b
    if r < 0:
        r -= b if b < 0 else -b
    return r


def is_stub_body(body: Optional[list[S.Stmt]]) -> bool:
    """True for the canonical placeholder body `assume {:axiom} false;`."""
    if body is None:
        return False
    real = [s for s in body if not isinstance(s, S.MarkerStmt)]
    return len(real) == 1 and isinstance(real[0], S.AssumeStmt) and real[0].axiom
