"""Native-type boundary shims for compiled output.

Compiled programs operate on runtime classes (sequences, rationals, code
points, tagged unions) that do not compare equal to native Python values.
The shim derives type shapes from the entry method's signature and emits a
thin wrapper converting native arguments in and runtime results out.

The conversion table covers: int, bool, rational <-> float, runtime string
<-> str, sequences (nested) <-> lists, Option <-> nullable, and tagged
unions whose constructors carry at most one converted payload (the
mixed-type-list case). Anything else raises UnsupportedTypeShape: the
deliverable stays usable without the shim, and scaling this table further
is explicitly not a goal.

Everything between the EMBED markers is copied verbatim into each
deliverable's `native.py`, so it must only depend on the `_dafny` runtime
name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from . import dafny_runtime as _dafny
from . import dafny_text


class UnsupportedTypeShape(Exception):
    pass


# --- EMBED BEGIN (copied into deliverable native.py) ---


def to_native(value, shape, ns=None):
    """Runtime value to native Python, directed by a type shape."""
    kind = shape["kind"]
    if kind in ("int", "bool"):
        return value
    if kind == "real":
        return value.as_float()
    if kind == "string":
        return "".join(cp.value for cp in value)
    if kind == "seq":
        return [to_native(e, shape["elem"], ns) for e in value]
    if kind == "option":
        if value._ctor == "None":
            return None
        return to_native(value.fields[0], shape["elem"], ns)
    if kind == "union":
        for arm in shape["arms"]:
            if value._ctor == arm["ctor"]:
                if arm["payload"] is None:
                    return None
                return to_native(value.fields[0], arm["payload"], ns)
        raise ValueError(f"no union arm for constructor {value._ctor}")
    raise ValueError(f"unknown shape kind {kind}")


def _native_matches(value, shape):
    kind = shape["kind"]
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "real":
        return isinstance(value, float)
    if kind == "string":
        return isinstance(value, str)
    if kind == "seq":
        return isinstance(value, (list, tuple))
    return False


def from_native(value, shape, ns):
    """Native Python value to runtime value, directed by a type shape."""
    kind = shape["kind"]
    if kind in ("int", "bool"):
        return value
    if kind == "real":
        return _dafny.BigRational(_to_fraction(value))
    if kind == "string":
        return _dafny.string_of(value)
    if kind == "seq":
        return _dafny.Seq([from_native(e, shape["elem"], ns) for e in value])
    if kind == "option":
        if value is None:
            return ns[shape["none_class"]]()
        return ns[shape["some_class"]](from_native(value, shape["elem"], ns))
    if kind == "union":
        for arm in shape["arms"]:
            if arm["payload"] is None:
                if value is None:
                    return ns[arm["class"]]()
            elif _native_matches(value, arm["payload"]):
                return ns[arm["class"]](from_native(value, arm["payload"], ns))
        raise ValueError(f"no union arm accepts {value!r}")
    raise ValueError(f"unknown shape kind {kind}")


def _to_fraction(value):
    from fractions import Fraction

    return Fraction(value)


# --- EMBED END ---


@dataclass(frozen=True)
class InteropShim:
    entry_name: str
    native_signature: str
    param_shapes: tuple[dict, ...]
    return_shapes: tuple[dict, ...]


def _parse_datatypes(source: str) -> dict[str, list[tuple[str, list[str]]]]:
    """Datatype name -> [(ctor, [payload type texts])], parsed lexically."""
    result: dict[str, list[tuple[str, list[str]]]] = {}
    pattern = re.compile(r"datatype\s+(\w+)(?:<[^>]*>)?\s*=\s*([^\n]+(?:\n\s*\|[^\n]+)*)")
    for m in pattern.finditer(source):
        name = m.group(1)
        ctors = []
        for part in _split_top(m.group(2), "|"):
            part = part.strip()
            cm = re.match(r"(\w+)\s*(?:\((.*)\))?\s*$", part, re.DOTALL)
            if not cm:
                continue
            payloads = []
            if cm.group(2) is not None:
                for f in _split_top(cm.group(2), ","):
                    f = f.strip()
                    payloads.append(f.split(":", 1)[1].strip() if ":" in f else f)
            ctors.append((cm.group(1), payloads))
        result[name] = ctors
    return result


def _split_top(text: str, sep: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch in "(<[":
            depth += 1
        elif ch in ")>]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


_PRIMITIVES = {"int": "int", "bool": "bool", "real": "real", "string": "string", "nat": "int"}


def shape_of_type(type_text: str, datatypes: dict, stack: tuple[str, ...] = ()) -> dict:
    """Type shape for a lexical Dafny type; raises UnsupportedTypeShape."""
    text = type_text.strip()
    if text in _PRIMITIVES:
        return {"kind": _PRIMITIVES[text]}
    m = re.match(r"seq\s*<(.+)>$", text, re.DOTALL)
    if m:
        return {"kind": "seq", "elem": shape_of_type(m.group(1), datatypes, stack)}
    m = re.match(r"(\w+)\s*(?:<(.+)>)?$", text, re.DOTALL)
    if m and m.group(1) in datatypes:
        name = m.group(1)
        if name in stack:
            raise UnsupportedTypeShape(f"recursive datatype {name}")
        ctors = datatypes[name]
        type_arg = m.group(2)
        ctor_names = {c for c, _ in ctors}
        if ctor_names == {"None", "Some"} and type_arg:
            return {
                "kind": "option",
                "elem": shape_of_type(type_arg, datatypes, stack + (name,)),
                "none_class": f"{name}_None",
                "some_class": f"{name}_Some",
            }
        if type_arg:
            raise UnsupportedTypeShape(f"type-parameterised datatype {text}")
        arms = []
        seen_kinds = set()
        for ctor, payloads in ctors:
            if len(payloads) > 1:
                raise UnsupportedTypeShape(f"constructor {ctor} carries {len(payloads)} fields")
            if not payloads:
                arms.append({"ctor": ctor, "payload": None, "class": f"{name}_{ctor}"})
                key = "none"
            else:
                payload = shape_of_type(payloads[0], datatypes, stack + (name,))
                arms.append({"ctor": ctor, "payload": payload, "class": f"{name}_{ctor}"})
                key = payload["kind"]
            if key in seen_kinds:
                raise UnsupportedTypeShape(f"union {name} has two constructors of kind {key}")
            seen_kinds.add(key)
        return {"kind": "union", "union_name": name, "arms": arms}
    raise UnsupportedTypeShape(f"no conversion for type {text!r}")


def _split_params(params_text: str) -> list[tuple[str, str]]:
    inner = params_text.strip()
    if inner.startswith("("):
        inner = inner[1:]
    if inner.endswith(")"):
        inner = inner[:-1]
    if not inner.strip():
        return []
    out = []
    for part in _split_top(inner, ","):
        name, _, type_text = part.partition(":")
        out.append((name.strip(), type_text.strip()))
    return out


def build_shim(dafny_source: str) -> InteropShim:
    """Derive the entry's conversion shim from the program source."""
    ol = dafny_text.outline(dafny_source)
    entry = dafny_text.entry_decl(ol)
    if entry is None:
        raise UnsupportedTypeShape("no {:testEntry} method to wrap")
    datatypes = _parse_datatypes(dafny_source)
    params = _split_params(entry.params_text)
    returns_text = entry.returns_text
    if returns_text.startswith("returns"):
        returns_text = returns_text[len("returns") :].strip()
    outs = _split_params(returns_text)
    param_shapes = tuple(shape_of_type(t, datatypes) for _, t in params)
    return_shapes = tuple(shape_of_type(t, datatypes) for _, t in outs)
    signature = f"{entry.name}({', '.join(n for n, _ in params)})"
    return InteropShim(entry.name, signature, param_shapes, return_shapes)


def _embedded_converters() -> str:
    source = open(__file__, "r", encoding="utf-8").read()
    begin = source.index("# --- EMBED BEGIN")
    begin = source.index("\n", begin) + 1
    end = source.index("# --- EMBED END")
    return source[begin:end].rstrip() + "\n"


def render_native_module(shim: InteropShim, mangled_entry: str) -> str:
    """Source of the deliverable's `native.py`."""
    params = ", ".join(f"a{i}" for i in range(len(shim.param_shapes)))
    lines = [
        '"""Native-type facade over the compiled entry point."""',
        "",
        "import json",
        "",
        "import _dafny",
        "import impl",
        "",
        "",
        _embedded_converters(),
        "",
        f"_PARAM_SHAPES = json.loads({json.dumps(json.dumps(list(shim.param_shapes)))})",
        f"_RETURN_SHAPES = json.loads({json.dumps(json.dumps(list(shim.return_shapes)))})",
        "",
        "",
        f"def {shim.entry_name}({params}):",
        "    ns = vars(impl)",
        f"    args = [from_native(v, s, ns) for v, s in zip([{params}], _PARAM_SHAPES)]",
        f"    out = impl.Default.{mangled_entry}(*args)",
        "    if not _RETURN_SHAPES:",
        "        return None",
        "    outs = [out] if len(_RETURN_SHAPES) == 1 else list(out)",
        "    results = [to_native(v, s, ns) for v, s in zip(outs, _RETURN_SHAPES)]",
        "    return results[0] if len(results) == 1 else tuple(results)",
        "",
    ]
    return "\n".join(lines)
