"""Coverage-guided test generation for the annotated entry method.

Runs the entry method over the sampling pools with coverage recording on,
greedily keeps inputs that visit new blocks (coverage is recorded through
calls, so it is the inlined notion), and emits one {:test} method per kept
input. Each generated test re-checks the entry's ensures clauses at
runtime, which for spec-function contracts yields the familiar
`entry(x) == entryFunc(x)` equivalence checks.
"""

from __future__ import annotations

from fractions import Fraction

from . import syntax as S
from .evaluate import AxiomAssumed, DtValue, EvalAbort, Evaluator, is_stub_body
from .verify import sample_args


class TestgenRefusal(Exception):
    """The construct is out of scope for test generation."""


def render_value(value: object) -> str:
    """A value as Dafny literal text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value) if value >= 0 else f"({value})"
    if isinstance(value, Fraction):
        as_float = value.numerator / value.denominator
        return f"{as_float}" if "." in str(as_float) else f"{as_float}.0"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, tuple):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, DtValue):
        if not value.fields:
            return value.ctor
        return f"{value.ctor}(" + ", ".join(render_value(v) for v in value.fields) + ")"
    raise TestgenRefusal(f"cannot render value {value!r}")


def render_expr(expr: S.Expr, substitution: dict[str, str]) -> str:
    """Dafny text for an expression with identifiers substituted."""
    if isinstance(expr, S.Lit):
        if expr.kind == "string":
            return render_value(expr.value)
        if expr.kind == "bool":
            return "true" if expr.value else "false"
        return str(expr.value)
    if isinstance(expr, S.Var):
        return substitution.get(expr.name, expr.name)
    if isinstance(expr, S.Unary):
        return f"{expr.op}{render_expr(expr.operand, substitution)}"
    if isinstance(expr, S.Binary):
        return f"({render_expr(expr.left, substitution)} {expr.op} {render_expr(expr.right, substitution)})"
    if isinstance(expr, S.Call):
        args = ", ".join(render_expr(a, substitution) for a in expr.args)
        return f"{expr.name}({args})"
    if isinstance(expr, S.SeqDisplay):
        return "[" + ", ".join(render_expr(e, substitution) for e in expr.elements) + "]"
    if isinstance(expr, S.Index):
        return f"{render_expr(expr.base, substitution)}[{render_expr(expr.index, substitution)}]"
    if isinstance(expr, S.Cardinality):
        return f"|{render_expr(expr.operand, substitution)}|"
    if isinstance(expr, S.Ite):
        return (
            f"(if {render_expr(expr.cond, substitution)} then "
            f"{render_expr(expr.then, substitution)} else {render_expr(expr.orelse, substitution)})"
        )
    raise TestgenRefusal(f"cannot render expression {type(expr).__name__}")


def literal_length_ok(args: list, limit: int) -> bool:
    return all(len(render_value(a)) <= limit for a in args)


def generate_tests(program: S.Program, coverage_mode: str, length_limit: int) -> str:
    entry = program.entry_method()
    if entry is None:
        raise TestgenRefusal("no method carries the {:testEntry} attribute")
    if entry.body is None or is_stub_body(entry.body):
        raise TestgenRefusal("the entry method has no implementation to cover")
    for param in entry.params:
        if param.type.name == "real":
            raise TestgenRefusal("test generation does not support real-valued parameters")

    datatypes = {d.name: d for d in program.datatypes()}
    candidates = sample_args(entry.params, datatypes)

    chosen: list[tuple[list, list]] = []  # (args, outs)
    covered: set = set()
    for args in candidates:
        if not literal_length_ok(args, length_limit):
            continue
        coverage: set = set()
        ev = Evaluator(program, check_expects=False, coverage=coverage)
        env = {p.name: v for p, v in zip(entry.params, args)}
        try:
            if not all(ev.eval(r, env) for r in entry.requires):
                continue
            outs = ev.run_method(entry, args)
        except (EvalAbort, AxiomAssumed):
            continue
        if not chosen or not coverage <= covered:
            chosen.append((args, outs))
            covered |= coverage

    if not chosen:
        raise TestgenRefusal("no admissible inputs found for the entry method")

    lines = [f"// dafny-stub generate-tests coverage={coverage_mode} length-limit={length_limit}"]
    for idx, (args, _) in enumerate(chosen):
        out_names = [f"r{j}" for j in range(len(entry.outs))] or []
        call_args = ", ".join(render_value(a) for a in args)
        lines.append(f"method {{:test}} {entry.name}Test{idx}() {{")
        if out_names:
            lines.append(f"  var {', '.join(out_names)} := {entry.name}({call_args});")
        else:
            lines.append(f"  {entry.name}({call_args});")
        substitution = {out.name: rn for out, rn in zip(entry.outs, out_names)}
        substitution.update({p.name: render_value(v) for p, v in zip(entry.params, args)})
        for clause in entry.ensures:
            lines.append(f"  expect {render_expr(clause, substitution)};")
        if not entry.ensures and out_names:
            lines.append(f"  expect {out_names[0]} == {out_names[0]};")
        lines.append("}")
    return "\n".join(lines) + "\n"
