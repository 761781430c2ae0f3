"""Experiment configuration files.

Grammar (one item per line)::

    # comment            ; comment
    [section]
    key = value

Values are numbers, booleans (``true``/``false``), bare strings or
comma-separated lists of numbers.  Every key must be known; unknown
sections and keys are parse errors reported with line and column.
Semantic problems are collected and reported together.
"""
import hashlib
import re
from dataclasses import dataclass, field

from .core import FluidConfig, SpectralGrid, validate_config, PROFILE_KINDS
from .errors import ConfigParseError, ConfigValidationError, OrderingViolation

__all__ = ["ExperimentConfig", "parse_config", "parse_config_text", "SCHEMA"]

REQUIRED = object()

# section -> key -> (kind, default)
SCHEMA = {
    "fluid": {
        "densities": ("floats", REQUIRED),
        "depths": ("floats", REQUIRED),
    },
    "grid": {
        "L": ("float", 50.0),
        "N": ("int", 512),
    },
    "initial": {
        "kind": ("str", "gaussian_bumps"),
        "eps": ("float", 1e-3),
        "width": ("float", 2.0),
        "centers": ("floats", None),
        "weights": ("floats", None),
        "beta": ("float", 0.45),
        "band": ("floats", None),
        "seed": ("int", 0),
        "kmax": ("float", 1.0),
        "k": ("int", 1),
        "m": ("int", 1),
        "gamma": ("float", None),
    },
    "stepper": {
        "tol": ("float", 1e-2),
        "dt_max": ("float", 10.0),
        "dt_min": ("float", 1e-6),
        "nonlinear_mode": ("str", "quadrature"),
        "series_L": ("int", 8),
        "dealias": ("bool", True),
        "linear_only": ("bool", False),
        "T_final": ("float", 100.0),
        "periods": ("int", 1),
        "refine": ("int", 1),
    },
    "diagnostics": {
        "s_list": ("floats", (0.0, 1.0)),
        "t_first": ("float", 1.0),
        "per_decade": ("int", 10),
        "decay_window": ("floats", None),
    },
    "spectrum": {
        "xi_min": ("float", 1e-3),
        "xi_max": ("float", 100.0),
        "count": ("int", 200),
    },
    "velocity": {
        "x1": ("floats", (-2.0, 2.0, 9.0)),
        "x2": ("floats", (-1.0, 2.0, 7.0)),
        "fd_step": ("float", 1e-3),
    },
    "output": {
        "directory": ("str", "out"),
        "checkpoint_every": ("int", 0),
        "formats": ("str", "csv"),
    },
}

_SECTION = re.compile(r"^\s*\[\s*([A-Za-z_][\w-]*)\s*\]\s*$")
_ITEM = re.compile(r"^(\s*)([A-Za-z_]\w*)\s*=\s*(.*?)\s*$")


@dataclass
class ExperimentConfig:
    values: dict
    source: str = ""
    lines: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.values[section]

    @property
    def fluid(self) -> FluidConfig:
        f = self.values["fluid"]
        return FluidConfig(tuple(f["densities"]), tuple(f["depths"]))

    @property
    def grid(self) -> SpectralGrid:
        g = self.values["grid"]
        return SpectralGrid(g["L"], g["N"])

    def profile_params(self) -> dict:
        p = {k: v for k, v in self.values["initial"].items()
             if v is not None and k not in ("kind", "gamma")}
        if "band" in p:
            p["band"] = tuple(p["band"])
        return p

    def resolved_text(self) -> str:
        """Canonical ``[section] key = value`` dump of every setting."""
        out = []
        for sec in SCHEMA:
            out.append(f"[{sec}]")
            for key in SCHEMA[sec]:
                out.append(f"{key} = {_render(self.values[sec][key])}")
        return "\n".join(out) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()

    def header_lines(self):
        lines = [f"config-sha256: {self.sha256()}"]
        lines += self.resolved_text().splitlines()
        return lines


def _render(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(kind, raw):
    if raw.lower() == "none":
        return None
    if kind == "float":
        return float(raw)
    if kind == "int":
        f = float(raw)
        if f != int(f):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(f)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    if kind == "floats":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(float(p) for p in parts)
    return raw


def parse_config_text(text: str, source="<string>") -> ExperimentConfig:
    raw = {}
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigParseError(
                    f"{source}:{lineno}:{line.index(section) + 1}: unknown "
                    f"section [{section}]", line=lineno,
                    column=line.index(section) + 1, section=section)
            raw.setdefault(section, {})
            continue
        m = _ITEM.match(line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigParseError(
                f"{source}:{lineno}:{col}: expected '[section]' or "
                f"'key = value'", line=lineno, column=col)
        col = len(m.group(1)) + 1
        key, value = m.group(2), m.group(3)
        if section is None:
            raise ConfigParseError(
                f"{source}:{lineno}:{col}: key {key!r} outside any section",
                line=lineno, column=col, key=key)
        if key not in SCHEMA[section]:
            raise ConfigParseError(
                f"{source}:{lineno}:{col}: unknown key {key!r} in "
                f"[{section}]", line=lineno, column=col, key=key)
        if key in raw[section]:
            raise ConfigParseError(
                f"{source}:{lineno}:{col}: duplicate key {key!r} in "
                f"[{section}]", line=lineno, column=col, key=key)
        raw[section][key] = value
        where[(section, key)] = lineno

    violations = []
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (kind, default) in keys.items():
            if key in raw.get(sec, {}):
                try:
                    values[sec][key] = _convert(kind, raw[sec][key])
                except ValueError as exc:
                    violations.append(
                        f"line {where[(sec, key)]}: [{sec}] {key}: {exc}")
                    values[sec][key] = None
            elif default is REQUIRED:
                violations.append(f"[{sec}] {key} is required")
                values[sec][key] = None
            else:
                values[sec][key] = default
    if not violations:
        violations += _validate(values)
    if violations:
        raise ConfigValidationError(violations)
    return ExperimentConfig(values, source, where)


def _validate(v):
    errs = []
    f = v["fluid"]
    try:
        validate_config(FluidConfig(f["densities"], f["depths"]))
    except OrderingViolation as exc:
        errs.append(f"[fluid] ordering rule: {exc}")
    except ValueError as exc:
        errs.append(f"[fluid] {exc}")
    g = v["grid"]
    if not g["L"] > 0:
        errs.append("[grid] L must be positive")
    if g["N"] < 8 or g["N"] % 2:
        errs.append("[grid] N must be even and >= 8")
    ini = v["initial"]
    if ini["kind"] not in PROFILE_KINDS:
        errs.append(f"[initial] kind must be one of {', '.join(PROFILE_KINDS)}")
    if not ini["eps"] > 0:
        errs.append("[initial] eps must be positive")
    if ini["kind"] == "spectral_powerlaw" and not 0 < ini["beta"] < 0.5:
        errs.append("[initial] beta must lie in (0, 1/2)")
    if ini["band"] is not None and len(ini["band"]) != 2:
        errs.append("[initial] band takes two values")
    st = v["stepper"]
    if not st["tol"] > 0:
        errs.append("[stepper] tol must be positive")
    if not st["dt_max"] > 0:
        errs.append("[stepper] dt_max must be positive")
    if not 0 < st["dt_min"] <= st["dt_max"]:
        errs.append("[stepper] need 0 < dt_min <= dt_max")
    if st["nonlinear_mode"] not in ("quadrature", "series"):
        errs.append("[stepper] nonlinear_mode must be quadrature or series")
    if st["series_L"] < 1:
        errs.append("[stepper] series_L must be >= 1")
    if not st["T_final"] > 0:
        errs.append("[stepper] T_final must be positive")
    if st["periods"] < 1 or st["refine"] < 1:
        errs.append("[stepper] periods and refine must be >= 1")
    d = v["diagnostics"]
    if any(s < 0 for s in d["s_list"]):
        errs.append("[diagnostics] s_list entries must be >= 0")
    if not d["t_first"] > 0 or d["per_decade"] < 1:
        errs.append("[diagnostics] need t_first > 0 and per_decade >= 1")
    if d["decay_window"] is not None and (
            len(d["decay_window"]) != 2
            or not 0 <= d["decay_window"][0] < d["decay_window"][1]):
        errs.append("[diagnostics] decay_window takes t0, t1 with 0 <= t0 < t1")
    sp = v["spectrum"]
    if not 0 <= sp["xi_min"] < sp["xi_max"] or sp["count"] < 1:
        errs.append("[spectrum] need 0 <= xi_min < xi_max and count >= 1")
    ve = v["velocity"]
    for key in ("x1", "x2"):
        r = ve[key]
        if len(r) != 3 or r[2] < 1 or r[2] != int(r[2]):
            errs.append(f"[velocity] {key} takes min, max, count")
    if not ve["fd_step"] > 0:
        errs.append("[velocity] fd_step must be positive")
    out = v["output"]
    if out["formats"] != "csv":
        errs.append("[output] formats: only 'csv' is supported")
    if out["checkpoint_every"] < 0:
        errs.append("[output] checkpoint_every must be >= 0")
    return errs


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, str(path))
