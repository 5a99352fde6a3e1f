"""Run configuration: a flat TOML schema with layered overrides.

Values are resolved in the order defaults < config file < ``--set`` pairs <
dedicated command-line flags.  Every key is listed in :data:`SCHEMA`;
anything else is rejected.

Wavenumbers may be written as numbers or as arithmetic in ``pi``, for
example ``k = "pi/2"`` or ``k = ["0", "pi/4", "pi/2"]``.  ``k = "all"``
selects the full grid ``2 pi n / (N ell)``.

Sweep axes are strings ``"name=start:stop:points"`` (inclusive, evenly
spaced) or ``"name=v1,v2,..."``.  Axis names are parameter fields,
``delta`` or ``s_z``.
"""

from __future__ import annotations

import ast
import math
import operator
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import ModelParams, PopulationProfile, build_k_grid, parse_profile

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

__all__ = [
    "COMMANDS",
    "SCHEMA",
    "SweepAxis",
    "RunConfig",
    "parse_axis",
    "eval_k",
    "load_toml",
    "parse_set",
    "build_config",
]

COMMANDS = ("bands", "gf", "transport", "chi", "threshold", "oracle-check", "sweep")
FORMATS = ("csv", "json", "svg")
CURVE_COMMANDS = ("bands", "gf", "transport", "chi", "sweep")
AXIS_COMMANDS = ("bands", "transport", "threshold", "sweep")
PARAM_KEYS = ModelParams.field_names()
AXIS_NAMES = PARAM_KEYS + ("delta", "s_z")

_defaults = ModelParams()

# key -> (type tag, default)
SCHEMA: dict[str, tuple[str, object]] = {
    **{name: ("int" if name in ("n_sites", "n_atoms") else "float", getattr(_defaults, name)) for name in PARAM_KEYS},
    "delta": ("float", None),
    "s_z": ("float", -1.0),
    "profile": ("profile", None),
    "k": ("k", "all"),
    "omega_min": ("float", None),
    "omega_max": ("float", None),
    "omega_points": ("int", 401),
    "eps": ("float", 1e-3),
    "domain": ("str", "frequency"),
    "t_max": ("float", 50.0),
    "t_points": ("int", 501),
    "delta_min": ("float", -10.0),
    "delta_max": ("float", 10.0),
    "delta_points": ("int", 401),
    "axes": ("list", []),
    "columns": ("list", []),
    "oracle_n": ("int", 8),
    "oracle_trials": ("int", 50),
    "oracle_seed": ("int", 0),
    "workers": ("int", None),
    "title": ("str", ""),
    "command": ("str", None),
}


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    raise ValueError("unsupported expression")


def eval_k(expr) -> float:
    """Evaluate a number or an arithmetic expression in ``pi``."""
    if isinstance(expr, bool):
        raise ValidationError(f"invalid wavenumber {expr!r}")
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        value = _eval_node(ast.parse(str(expr).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"invalid wavenumber expression {expr!r}") from exc
    if not math.isfinite(value):
        raise ValidationError(f"invalid wavenumber expression {expr!r}")
    return value


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple[float, ...]

    def __len__(self):
        return len(self.values)


def parse_axis(text: str) -> SweepAxis:
    """Parse ``"name=start:stop:points"`` or ``"name=v1,v2,..."``."""
    if not isinstance(text, str) or "=" not in text:
        raise ValidationError(f"axis must look like name=start:stop:points, got {text!r}")
    name, body = (part.strip() for part in text.split("=", 1))
    if name not in AXIS_NAMES:
        raise ValidationError(f"unknown sweep field {name!r}; expected one of {', '.join(AXIS_NAMES)}")
    try:
        if ":" in body:
            parts = body.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
            if points < 1:
                raise ValidationError(f"axis {name!r} has an empty range")
            if points == 1:
                if start != stop:
                    raise ValidationError(f"axis {name!r}: one point needs start == stop")
                values = (start,)
            else:
                if not stop > start:
                    raise ValidationError(f"axis {name!r} has an empty range")
                values = tuple(float(v) for v in np.linspace(start, stop, points))
        else:
            values = tuple(float(v) for v in body.split(",") if v.strip())
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"malformed axis {text!r}") from exc
    if not values:
        raise ValidationError(f"axis {name!r} has an empty range")
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"axis {name!r} contains non-finite values")
    if name in ("n_sites", "n_atoms") and any(v != int(v) for v in values):
        raise ValidationError(f"axis {name!r} needs integer values")
    return SweepAxis(name, tuple(sorted(set(values))))


def _coerce(key: str, value):
    kind, _ = SCHEMA[key]
    if value is None:
        return None
    try:
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and value != int(value)):
                raise TypeError
            return int(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == "list":
            if isinstance(value, str):
                return [value]
            if not isinstance(value, list):
                raise TypeError
            return [str(v) for v in value]
        if kind == "k":
            if isinstance(value, list):
                return [eval_k(v) for v in value]
            if isinstance(value, str) and value.strip() == "all":
                return "all"
            return [eval_k(value)]
        if kind == "profile":
            if isinstance(value, (str, list, int, float)) and not isinstance(value, bool):
                return value
            raise TypeError
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"invalid value for {key!r}: {value!r}") from exc
    raise AssertionError(kind)


def load_toml(path) -> dict:
    """Read a flat TOML file.  I/O errors propagate as ``OSError``."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValidationError(f"{path}: tables are not supported ({', '.join(nested)})")
    return data


def parse_set(pair: str) -> tuple[str, object]:
    """Split ``key=value``; the value is read as a TOML literal when possible."""
    if "=" not in pair:
        raise ValidationError(f"--set expects key=value, got {pair!r}")
    key, raw = (s.strip() for s in pair.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


@dataclass(frozen=True)
class RunConfig:
    """Fully validated inputs for one CLI invocation."""

    command: str
    params: ModelParams
    s_z: float
    profile: PopulationProfile
    k_values: tuple[float, ...]
    omega_window: tuple[float | None, float | None, int]
    eps: float
    domain: str
    t_window: tuple[float, int]
    delta_window: tuple[float, float, int]
    axes: tuple[SweepAxis, ...]
    columns: tuple[str, ...]
    oracle: tuple[int, int, int]
    output: str | None
    format: str
    workers: int
    title: str
    resolved: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        """The resolved key-value view echoed into JSON output."""
        return dict(self.resolved)


def _layer(values: dict, updates: dict, source: str) -> None:
    for key, value in updates.items():
        if key not in SCHEMA:
            raise ValidationError(f"unknown configuration key {key!r} ({source})")
        values[key] = _coerce(key, value)
        # detuning and cavity frequency are two spellings of one degree of freedom
        if key == "delta":
            values.pop("omega_c", None)
        elif key == "omega_c":
            values.pop("delta", None)


def _default_workers() -> int:
    env = os.environ.get("CROWQED_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValidationError(f"CROWQED_WORKERS must be an integer, got {env!r}") from exc
        return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def build_config(
    command: str,
    file_values: dict | None = None,
    set_values: list[tuple[str, object]] | None = None,
    flags: dict | None = None,
) -> RunConfig:
    """Merge the configuration layers and validate the result."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    values: dict = {}
    _layer(values, file_values or {}, "config file")
    _layer(values, dict(set_values or []), "--set")
    flags = dict(flags or {})
    output = flags.pop("out", None)
    fmt = flags.pop("format", None)
    _layer(values, {k: v for k, v in flags.items() if v is not None}, "flag")

    def get(key):
        return values.get(key, SCHEMA[key][1])

    if get("command") not in (None, command):
        raise ValidationError(f"configuration is for {get('command')!r}, not {command!r}")

    param_values = {name: get(name) for name in PARAM_KEYS}
    if "delta" in values:
        param_values["omega_c"] = param_values["omega_a"] + values["delta"]
    params = ModelParams(**param_values)

    s_z = get("s_z")
    profile_spec = get("profile")
    if profile_spec is None:
        profile = PopulationProfile.uniform(s_z, params.n_sites, params.n_atoms)
    else:
        profile = parse_profile(profile_spec, params.n_sites, params.n_atoms)
        if "s_z" in values and profile.is_homogeneous and not math.isclose(profile.mean_inversion(), s_z):
            raise ValidationError("s_z and a homogeneous profile disagree")
        s_z = profile.mean_inversion() if profile.is_homogeneous else s_z
    if not profile.is_homogeneous and command != "gf":
        raise ValidationError(f"{command!r} needs a homogeneous population; inhomogeneous profiles apply to 'gf'")

    k_sel = get("k")
    k_values = tuple(build_k_grid(params).values) if k_sel == "all" else tuple(k_sel)

    omega_window = (get("omega_min"), get("omega_max"), get("omega_points"))
    if omega_window[2] < 2:
        raise ValidationError("omega_points must be at least 2")
    if None not in omega_window[:2] and not omega_window[1] > omega_window[0]:
        raise ValidationError("omega_max must exceed omega_min")
    eps = get("eps")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    domain = get("domain")
    if domain not in ("frequency", "time"):
        raise ValidationError("domain must be 'frequency' or 'time'")
    t_window = (get("t_max"), get("t_points"))
    if not t_window[0] > 0 or t_window[1] < 2:
        raise ValidationError("time window needs t_max > 0 and t_points >= 2")
    delta_window = (get("delta_min"), get("delta_max"), get("delta_points"))
    if delta_window[2] < 2 or not delta_window[1] > delta_window[0]:
        raise ValidationError("delta window needs delta_max > delta_min and delta_points >= 2")

    axes = tuple(parse_axis(a) for a in get("axes"))
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValidationError("each sweep axis may appear once")
    if "delta" in names and "omega_c" in names:
        raise ValidationError("delta and omega_c cannot both be swept")
    if command == "sweep" and not axes:
        raise ValidationError("sweep needs at least one axis")
    if axes and command not in AXIS_COMMANDS:
        raise ValidationError(f"{command!r} does not take sweep axes")
    if axes and not profile.is_homogeneous:
        raise ValidationError("sweeps need a homogeneous population")

    if fmt is None:
        suffix = os.path.splitext(output)[1].lstrip(".").lower() if output else ""
        fmt = suffix if suffix in FORMATS else ("json" if command == "oracle-check" else "csv")
    if fmt not in FORMATS:
        raise ValidationError(f"format must be one of {', '.join(FORMATS)}")
    if fmt == "svg" and command not in CURVE_COMMANDS:
        raise ValidationError(f"svg output is only available for {', '.join(CURVE_COMMANDS)}")

    workers = get("workers")
    if workers is None:
        workers = _default_workers()
    if workers < 1:
        raise ValidationError("workers must be at least 1")

    oracle = (get("oracle_n"), get("oracle_trials"), get("oracle_seed"))
    if oracle[0] < 1 or oracle[1] < 1:
        raise ValidationError("oracle_n and oracle_trials must be positive")

    resolved = {key: get(key) for key in SCHEMA if key not in ("workers", "command")}
    resolved.update({name: getattr(params, name) for name in PARAM_KEYS})
    resolved["delta"] = params.delta
    resolved["s_z"] = s_z
    resolved["command"] = command
    return RunConfig(
        command=command,
        params=params,
        s_z=float(s_z),
        profile=profile,
        k_values=k_values,
        omega_window=omega_window,
        eps=eps,
        domain=domain,
        t_window=t_window,
        delta_window=delta_window,
        axes=axes,
        columns=tuple(get("columns")),
        oracle=oracle,
        output=output,
        format=fmt,
        workers=int(workers),
        title=get("title"),
        resolved=resolved,
    )
