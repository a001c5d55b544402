"""
Run configuration: a flat ``key = value`` format with four sections.

::

    # small loop around the EP, clockwise, starting on the branch cut
    [system]
    omega_0 = 2*pi*10
    Omega = 2*pi*0.1

    [loop]
    gamma_0 = Omega
    a_gamma = Omega/30
    a_theta = pi/30
    omega_c = Omega/8
    gamma_phase = pi

    [integrator]
    dt = auto

    [run]
    initial_label = plus
    direction = cw

The mode frequencies may be given as ``omega_0`` (default ``2*pi*10``) and
``Omega``, or directly as ``omega_x0`` and ``omega_y0``. Numeric values are arithmetic expressions over numbers, ``pi`` and (outside
``[system]``) ``Omega`` and ``omega_0``, so angles read as multiples of pi and
rates as multiples of the detuning. ``#`` starts a comment. Unknown sections
or keys are rejected.
"""

from __future__ import annotations

import ast
import dataclasses
import math
import operator
from dataclasses import dataclass, field

from . import dynamics, model, schedule
from .errors import ParseError, ValidationError

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}

# (default, kind); None marks a required key, "" an optional one without default
SCHEMA = {
    "system": {
        "omega_0": ("", "number"),
        "Omega": ("", "number"),
        "omega_x0": ("", "number"),
        "omega_y0": ("", "number"),
        "gamma": ("0", "number"),
        "max_detuning_ratio": ("0.1", "number"),
    },
    "loop": {
        "gamma_0": (None, "number"),
        "a_gamma": ("0", "number"),
        "a_theta": (None, "number"),
        "omega_c": (None, "number"),
        "theta_center": ("pi/4", "number"),
        "n_periods": ("1", "int"),
        "gamma_phase": ("0", "number"),
    },
    "integrator": {
        "method": ("rk4", "word"),
        "dt": ("auto", "number_or_auto"),
        "full_dt": ("auto", "number_or_auto"),
        "record_stride": ("1", "int"),
    },
    "run": {
        "initial_label": ("plus", "word"),
        "direction": ("auto", "word"),
        "tie_ratio": ("10", "number"),
        "tol": ("0.05", "number"),
        "outputs": ("trajectory,report", "word"),
    },
}


def evaluate(expr, names=None):
    """Evaluate a restricted arithmetic expression."""
    names = {"pi": math.pi, **(names or {})}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown name {node.id!r}")
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError("only numbers, names and + - * / ** are allowed")

    return ev(ast.parse(expr.strip(), mode="eval"))


@dataclass(frozen=True)
class RunOptions:
    initial_label: str = "plus"
    direction: str = schedule.CCW
    tie_ratio: float = 10.0
    tol: float = 0.05
    outputs: tuple = ("trajectory", "report")


@dataclass(frozen=True)
class RunConfig:
    system: model.SystemParams
    loop: schedule.LoopSpec
    integrator: dynamics.IntegratorOptions = field(default_factory=dynamics.IntegratorOptions)
    full_integrator: dynamics.IntegratorOptions = field(default_factory=dynamics.IntegratorOptions)
    run: RunOptions = field(default_factory=RunOptions)

    def with_overrides(self, direction=None, initial_label=None):
        """Copy with the traversal direction and/or initial label replaced."""
        loop, run = self.loop, self.run
        if direction:
            loop = loop.with_direction(direction)
            run = dataclasses.replace(run, direction=loop.direction)
        if initial_label:
            if initial_label not in dynamics.LABELS:
                raise ValidationError(f"initial label must be plus or minus, got {initial_label!r}")
            run = dataclasses.replace(run, initial_label=initial_label)
        return dataclasses.replace(self, loop=loop, run=run)


def _tokenize(text):
    """Yield ``(section, key, value, line, value_column)`` for each assignment."""
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", lineno, indent + 1)
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise ValidationError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, indent + 1)
        if section is None:
            raise ParseError("assignment before any [section]", lineno, indent + 1)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError("missing key", lineno, indent + 1)
        if key not in SCHEMA[section]:
            raise ValidationError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in seen:
            raise ParseError(f"duplicate key {key!r}", lineno, indent + 1)
        seen.add((section, key))
        column = line.index("=") + 2 + (len(value) - len(value.lstrip()))
        yield section, key, value.strip(), lineno, column


def _convert(kind, raw, names, where):
    line, column = where
    if kind == "word":
        return raw
    if kind == "number_or_auto" and raw == "auto":
        return None
    try:
        value = evaluate(raw, names)
    except SyntaxError as exc:
        raise ParseError(f"bad expression {raw!r}", line, column + max((exc.offset or 1) - 1, 0))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ParseError(f"cannot evaluate {raw!r}: {exc}", line, column)
    if not math.isfinite(value):
        raise ValidationError(f"line {line}: value {raw!r} is not finite")
    if kind == "int":
        if value != int(value):
            raise ValidationError(f"line {line}: expected an integer, got {raw!r}")
        return int(value)
    return value


def parse_config(text):
    """Parse and validate configuration text into a :class:`RunConfig`.

    Raises
    ------
    ParseError
        Malformed text or expression, with line and column.
    ValidationError
        Unknown or missing keys, or values that break an invariant.
    """
    raw = {s: {} for s in SCHEMA}
    where = {}
    for section, key, value, line, column in _tokenize(text):
        raw[section][key] = value
        where[section, key] = (line, column)

    values = {}
    names = {}
    for section in ("system", "loop", "integrator", "run"):
        out = {}
        for key, (default, kind) in SCHEMA[section].items():
            if key in raw[section]:
                text_value = raw[section][key]
            elif default is None:
                raise ValidationError(f"missing required key {key!r} in [{section}]")
            elif default == "":
                out[key] = None
                continue
            else:
                text_value = default
            out[key] = _convert(kind, text_value, names, where.get((section, key), (0, 0)))
        if section == "system":
            out = _resolve_frequencies(out)
            names = {"Omega": out["omega_x0"] - out["omega_y0"],
                     "omega_0": (out["omega_x0"] + out["omega_y0"]) / 2}
        values[section] = out
    return _build(values)


def _resolve_frequencies(sysv):
    """Mode frequencies from either ``omega_x0, omega_y0`` or ``omega_0, Omega``."""
    pair_xy = sysv["omega_x0"] is not None or sysv["omega_y0"] is not None
    pair_od = sysv["omega_0"] is not None or sysv["Omega"] is not None
    if pair_xy and pair_od:
        raise ValidationError("give either omega_x0/omega_y0 or omega_0/Omega, not both")
    out = dict(sysv)
    if pair_xy:
        if sysv["omega_x0"] is None or sysv["omega_y0"] is None:
            raise ValidationError("omega_x0 and omega_y0 must be given together")
    else:
        if sysv["Omega"] is None:
            raise ValidationError("missing required key 'Omega' in [system]")
        omega_0 = 2 * math.pi * 10 if sysv["omega_0"] is None else sysv["omega_0"]
        out["omega_x0"] = omega_0 + sysv["Omega"] / 2
        out["omega_y0"] = omega_0 - sysv["Omega"] / 2
    return out


def _build(values):
    sysv, loopv, intv, runv = (values[s] for s in ("system", "loop", "integrator", "run"))
    try:
        system = model.SystemParams(
            sysv["omega_x0"], sysv["omega_y0"], sysv["gamma"], sysv["max_detuning_ratio"])
        loop = schedule.LoopSpec(**loopv)
        direction = runv["direction"].upper()
        if direction != "AUTO":
            loop = loop.with_direction(direction)
        integrator = dynamics.IntegratorOptions(intv["dt"], intv["method"], intv["record_stride"])
        full = dynamics.IntegratorOptions(intv["full_dt"], intv["method"], intv["record_stride"])
        label = runv["initial_label"]
        if label not in dynamics.LABELS:
            raise ValueError(f"initial_label must be plus or minus, got {label!r}")
        outputs = tuple(o.strip() for o in runv["outputs"].split(",") if o.strip())
        bad = set(outputs) - {"trajectory", "report"}
        if bad:
            raise ValueError(f"unknown outputs {sorted(bad)}")
        if not runv["tie_ratio"] > 1:
            raise ValueError("tie_ratio must exceed 1")
        if not runv["tol"] > 0:
            raise ValueError("tol must be positive")
        run = RunOptions(label, loop.direction, runv["tie_ratio"], runv["tol"], outputs)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    return RunConfig(system, loop, integrator, full, run)


def _num(x):
    return format(float(x), ".17g")


def serialize_config(cfg):
    """Fully resolved configuration text; ``parse_config`` reproduces ``cfg`` exactly."""
    s, lp, it, fi, run = cfg.system, cfg.loop, cfg.integrator, cfg.full_integrator, cfg.run
    lines = [
        "[system]",
        f"# omega_0 = {_num(s.omega_0)}, Omega = {_num(s.Omega)}",
        f"omega_x0 = {_num(s.omega_x0)}",
        f"omega_y0 = {_num(s.omega_y0)}",
        f"gamma = {_num(s.gamma)}",
        f"max_detuning_ratio = {_num(s.max_detuning_ratio)}",
        "",
        "[loop]",
        f"gamma_0 = {_num(lp.gamma_0)}",
        f"a_gamma = {_num(lp.a_gamma)}",
        f"a_theta = {_num(lp.a_theta)}",
        f"omega_c = {_num(lp.omega_c)}",
        f"theta_center = {_num(lp.theta_center)}",
        f"n_periods = {int(lp.n_periods)}",
        f"gamma_phase = {_num(lp.gamma_phase)}",
        "",
        "[integrator]",
        f"method = {it.method}",
        f"dt = {'auto' if it.dt is None else _num(it.dt)}",
        f"full_dt = {'auto' if fi.dt is None else _num(fi.dt)}",
        f"record_stride = {int(it.record_stride)}",
        "",
        "[run]",
        f"initial_label = {run.initial_label}",
        f"direction = {run.direction.lower()}",
        f"tie_ratio = {_num(run.tie_ratio)}",
        f"tol = {_num(run.tol)}",
        f"outputs = {','.join(run.outputs)}",
    ]
    return "\n".join(lines) + "\n"
