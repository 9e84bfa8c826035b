"""Experiment configuration: INI-style sections, strict schema, all errors at once.

Example::

    [grid]
    nx = 128
    nv = 257

    [solver]
    dt = 1e-3
    t_final = 5
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigurationError

SUBCOMMANDS = (
    "simulate", "linear-spectrum", "linear-decay", "macro-run",
    "sweep-epsilon", "green-check", "constants",
)

MACRO_PRESETS = ("smooth-wave", "equilibrium", "random-smooth")
LINEAR_PRESETS = ("pi-mode", "random-admissible")
INITIAL_PRESETS = MACRO_PRESETS + LINEAR_PRESETS

# preset used when the config does not name one
DEFAULT_PRESET = {"linear-decay": "pi-mode"}


def _float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default); None default means "derived"
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "grid": {
        "nx": (int, 128),
        "nv": (int, 257),
        "T_cap": (float, 1.0),
        "v_max": (float, None),
    },
    "solver": {
        "dt": (float, 1e-3),
        "D": (float, 1.0),
        "t_final": (float, 1.0),
        "temperature_floor": (float, 0.0),
        "splitting": (str, "strang"),
        "diagnostics_stride": (int, 10),
        "eps": (float, 1.0),
    },
    "initial": {
        "preset": (str, None),
        "rho_mean": (float, 1.0),
        "rho_amp": (float, 0.5),
        "T_mean": (float, 1.0),
        "T_amp": (float, 0.3),
        "mode": (int, 1),
        "amplitude": (float, 1.0),
    },
    "equilibrium": {
        "rho_inf": (float, 1.0),
        "T_inf": (float, 1.0),
    },
    "linear": {
        "k_max": (int, None),
        "random_states": (int, 100),
    },
    "macro": {
        "eps_list": (_float_list, (0.4, 0.2, 0.1, 0.05)),
        "t_star": (float, 0.5),
        "relaxation_resolution": (float, 0.05),
        "macro_dt": (float, 1e-4),
        "scheme": (str, "midpoint"),
        "snapshot_stride": (int, 1000),
    },
    "heat": {
        "times": (_float_list, (1e-3, 0.1, 1.0, 10.0)),
        "t": (float, 0.1),
        "n_times": (int, 101),
        "truncation_tol": (float, 1e-15),
        "image_cap": (int, 64),
    },
    "output": {
        "snapshots": (_bool, False),
    },
}


@dataclass
class ExperimentConfig:
    values: dict[str, dict[str, Any]]
    subcommand: str = "simulate"
    seed: int = 0
    sources: list[str] = field(default_factory=list)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    def get(self, dotted: str) -> Any:
        section, key = dotted.split(".", 1)
        return self.values[section][key]

    def resolved(self) -> dict:
        out = {s: dict(v) for s, v in self.values.items()}
        out["seed"] = self.seed
        out["subcommand"] = self.subcommand
        return out


def _defaults() -> dict[str, dict[str, Any]]:
    return {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}


def _read_ini(text: str, origin: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keep key case (D, T_cap)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigurationError(f"{origin}: {exc}") from exc
    return parser


def parse_config(source: str | Path | None = None, *, text: str | None = None,
                 overrides: list[str] | None = None, subcommand: str = "simulate",
                 seed: int = 0, preset: str | None = None) -> ExperimentConfig:
    """Build a validated config from a file, inline text and ``section.key=value`` overrides.

    Raises ConfigurationError listing every violation found.
    """
    values = _defaults()
    problems: list[str] = []
    origins: list[str] = []

    chunks: list[tuple[str, str]] = []
    if source is not None:
        path = Path(source)
        try:
            chunks.append((path.read_text(), str(path)))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if text is not None:
        chunks.append((text, "<inline>"))
    if overrides:
        lines: dict[str, list[str]] = {}
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                problems.append(f"override {item!r} must look like section.key=value")
                continue
            lhs, rhs = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            lines.setdefault(section, []).append(f"{key} = {rhs.strip()}")
        body = "\n".join(f"[{s}]\n" + "\n".join(v) for s, v in lines.items())
        chunks.append((body, "<overrides>"))

    for text_chunk, origin in chunks:
        origins.append(origin)
        parser = _read_ini(text_chunk, origin)
        for section in parser.sections():
            if section not in SCHEMA:
                problems.append(f"{origin}: unknown section [{section}]")
                continue
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    problems.append(f"{origin}: unknown key {section}.{key}")
                    continue
                conv = SCHEMA[section][key][0]
                try:
                    values[section][key] = conv(raw)
                except ValueError as exc:
                    problems.append(f"{origin}: {section}.{key} = {raw!r}: {exc}")

    if subcommand not in SUBCOMMANDS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    if preset is not None:
        values["initial"]["preset"] = preset
    if values["initial"]["preset"] is None:
        values["initial"]["preset"] = DEFAULT_PRESET.get(subcommand, "smooth-wave")
    if values["grid"]["v_max"] is None and isinstance(values["grid"]["T_cap"], float):
        values["grid"]["v_max"] = 8.0 * math.sqrt(max(values["grid"]["T_cap"], 0.0))
    if values["linear"]["k_max"] is None and isinstance(values["grid"]["nx"], int):
        values["linear"]["k_max"] = values["grid"]["nx"] // 2

    problems.extend(_validate(values, subcommand))
    if not (0 <= seed < 2**64):
        problems.append(f"seed must be an unsigned 64-bit integer, got {seed}")
    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems))
    return ExperimentConfig(values, subcommand, seed, origins)


def _positive(values, dotted, problems, integer=False):
    section, key = dotted.split(".")
    v = values[section][key]
    if integer:
        ok = isinstance(v, int) and v > 0
    else:
        ok = isinstance(v, (int, float)) and math.isfinite(v) and v > 0
    if not ok:
        problems.append(f"{dotted} must be positive, got {v!r}")


def _validate(values: dict, subcommand: str) -> list[str]:
    from .kinetic_solver import SolverConfig
    from .phase_space import build_grid

    problems: list[str] = []
    g = values["grid"]
    try:
        build_grid(g["nx"], g["nv"], g["v_max"])
    except ConfigurationError as exc:
        problems.extend(f"grid: {p}" for p in str(exc).split("; "))
    _positive(values, "grid.T_cap", problems)

    s = values["solver"]
    scfg = SolverConfig(s["dt"], s["D"], s["t_final"], s["temperature_floor"], s["splitting"],
                        s["diagnostics_stride"], s["eps"])
    problems.extend(f"solver: {p}" for p in scfg.violations())

    ini = values["initial"]
    allowed = LINEAR_PRESETS if subcommand == "linear-decay" else MACRO_PRESETS
    if ini["preset"] not in allowed:
        problems.append(f"initial.preset for {subcommand} must be one of {allowed}, got {ini['preset']!r}")
    for key in ("rho_mean", "T_mean"):
        _positive(values, f"initial.{key}", problems)
    for mean, amp in (("rho_mean", "rho_amp"), ("T_mean", "T_amp")):
        if isinstance(ini[amp], float) and abs(ini[amp]) >= ini[mean]:
            problems.append(f"initial.{amp} must satisfy |{amp}| < {mean} to keep the data positive")
    if not (isinstance(ini["mode"], int) and 1 <= ini["mode"] <= g["nx"] // 2 - 1):
        problems.append(f"initial.mode must lie in [1, nx/2 - 1], got {ini['mode']!r}")

    for key in ("rho_inf", "T_inf"):
        _positive(values, f"equilibrium.{key}", problems)

    lin = values["linear"]
    if not (isinstance(lin["k_max"], int) and 0 <= lin["k_max"] <= g["nx"] // 2):
        problems.append(f"linear.k_max must lie in [0, nx/2], got {lin['k_max']!r}")
    _positive(values, "linear.random_states", problems, integer=True)

    m = values["macro"]
    eps = m["eps_list"]
    if not eps or any(not (0 < e <= 1) for e in eps):
        problems.append(f"macro.eps_list entries must lie in (0, 1], got {eps!r}")
    elif any(b >= a for a, b in zip(eps, eps[1:])):
        problems.append("macro.eps_list must be strictly decreasing")
    for key in ("t_star", "relaxation_resolution", "macro_dt"):
        _positive(values, f"macro.{key}", problems)
    _positive(values, "macro.snapshot_stride", problems, integer=True)
    if m["scheme"] not in ("euler", "midpoint"):
        problems.append(f"macro.scheme must be 'euler' or 'midpoint', got {m['scheme']!r}")

    h = values["heat"]
    if not h["times"] or any(not t > 0 for t in h["times"]):
        problems.append(f"heat.times must be positive, got {h['times']!r}")
    _positive(values, "heat.t", problems)
    if not (isinstance(h["n_times"], int) and h["n_times"] >= 2):
        problems.append(f"heat.n_times must be an integer >= 2, got {h['n_times']!r}")
    if not (isinstance(h["truncation_tol"], float) and 0 < h["truncation_tol"] < 1e-8):
        problems.append(f"heat.truncation_tol must lie in (0, 1e-8), got {h['truncation_tol']!r}")
    _positive(values, "heat.image_cap", problems, integer=True)
    return problems
