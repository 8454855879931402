"""Flat ``key = value`` run configuration with dotted section prefixes.

Example::

    # logistic growth with exponential memory
    model.alpha = 0.8
    model.sigma = 0.5
    model.a = 1
    model.b = 1
    kernel.kind = exponential
    kernel.gamma = 1
    time.T = 200
    time.N = 2000

Blank lines and ``#`` comments are ignored. Every key not listed in
:data:`DEFAULTS` or :data:`REQUIRED` is rejected, as is a key given twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fracvolterra.fracops import TimeMesh, default_grading
from fracvolterra.model import (
    ExponentialKernel,
    GammaKernel,
    ModelParams,
    load_kernel_csv,
)
from fracvolterra.solver import SCHEMES, SolverConfig
from fracvolterra.spectral import GridSpec, NodalField

__all__ = [
    "ConfigError",
    "REQUIRED",
    "DEFAULTS",
    "InitSpec",
    "RunConfig",
    "parse_text",
    "parse_config",
    "build_config",
]

REQUIRED = ("model.alpha", "model.sigma", "model.a", "model.b",
            "kernel.kind", "time.T", "time.N")

DEFAULTS = {
    "kernel.gamma": "1.0",
    "kernel.file": "",
    "time.grading": "auto",
    "grid.L": "pi",
    "grid.N": "64",
    "grid.M": "auto",
    "solver.scheme": "L1Spectral",
    "solver.picard_tol": "1e-10",
    "solver.picard_max_iters": "50",
    "solver.blowup_threshold": "1e6",
    "solver.diagnostics_every": "100",
    "solver.reaction": "true",
    "solver.corrector_steps": "1",
    "init.kind": "cosine",
    "init.value": "0.5",
    "init.amplitude": "0.2",
    "init.mode": "1",
    "output.dir": "out",
    "output.every": "1",
    "output.formats": "csv",
    "verify.suite": "none",
    "verify.positivity_tol": "1e-8",
    "verify.bound_tol": "1e-6",
    "verify.equilibrium_tol": "none",
}

INIT_KINDS = ("constant", "cosine", "mode", "random")
SUITES = ("none", "specfun", "fracops", "spectral", "model", "solver", "all")


class ConfigError(ValueError):
    """Parse or validation failure; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


# {{{ parsing

def parse_text(text: str, source: str = "<config>") -> dict:
    """Split ``key = value`` lines into a dict, keeping no defaults."""
    entries = {}
    lines = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            problems.append(f"{source}:{lineno}: empty key or value in {raw.strip()!r}")
        elif key in entries:
            problems.append(
                f"{source}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        elif key not in DEFAULTS and key not in REQUIRED:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
        else:
            entries[key] = value
            lines[key] = lineno
    if problems:
        raise ConfigError(problems)
    return entries

# }}}


# {{{ materialized configuration

@dataclass(frozen=True)
class InitSpec:
    """Initial condition.

    * ``constant``: ``value``
    * ``cosine``: ``value + amplitude cos(mode pi x / L)`` along the first axis
    * ``mode``: ``amplitude`` times the normalised eigenfunction ``mode``
    * ``random``: a seeded smooth positive field with mean about ``value``
    """

    kind: str = "cosine"
    value: float = 0.5
    amplitude: float = 0.2
    mode: int = 1

    def field(self, grid: GridSpec, seed: int = 0) -> NodalField:
        x = grid.coords[0]
        L = grid.lengths[0]
        if self.kind == "constant":
            v = np.full(grid.shape, self.value)
        elif self.kind == "cosine":
            v = self.value + self.amplitude * np.cos(self.mode * math.pi * x / L)
        elif self.kind == "mode":
            index = (self.mode,) + (0,) * (grid.dim - 1)
            v = self.amplitude * grid.eigenfunction(index, *grid.coords)
        else:
            v = random_smooth_field(grid, np.random.default_rng(seed),
                                    self.value, self.amplitude)
        return NodalField(grid, v)


def random_smooth_field(grid: GridSpec, rng: np.random.Generator,
                        mean: float, amplitude: float, n_modes: int = 5) -> np.ndarray:
    """Positive field from a few low cosine modes with decaying random weights."""
    c = np.zeros(grid.mode_shape)
    m = min(n_modes, grid.mode_shape[0] - 1)
    c[(0,) * grid.dim] = mean * math.sqrt(grid.volume)
    for n in range(1, m + 1):
        c[(n,) + (0,) * (grid.dim - 1)] = amplitude * rng.normal() / n ** 2
    v = grid.values_from_modal(c)
    floor = 0.1 * mean
    if v.min() < floor:
        v = v + (floor - v.min())
    return v


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: GridSpec
    solver: SolverConfig
    init: InitSpec
    output_dir: str
    output_every: int
    suite: str
    positivity_tol: float
    bound_tol: float
    equilibrium_tol: float | None
    entries: tuple

    def echo(self) -> str:
        """Every materialized key, one ``key = value`` per line."""
        return "\n".join(f"{k} = {v}" for k, v in self.entries)


def _number(entries, key, problems, cast=float):
    if key not in entries:
        return None
    raw = entries[key]
    try:
        if cast is float and raw.lower() in ("pi", "π"):
            return math.pi
        return cast(raw)
    except ValueError:
        problems.append(f"{key}: expected {cast.__name__}, got {raw!r}")
        return None


def _tuple(entries, key, problems, cast=float):
    raw = entries[key]
    out = []
    for part in raw.split(","):
        part = part.strip()
        try:
            out.append(math.pi if cast is float and part.lower() in ("pi", "π") else cast(part))
        except ValueError:
            problems.append(f"{key}: expected a {cast.__name__} or a comma-separated list, "
                            f"got {raw!r}")
            return None
    return tuple(out)


def _bool(entries, key, problems):
    raw = entries[key].lower()
    if raw in ("true", "yes", "on", "1"):
        return True
    if raw in ("false", "no", "off", "0"):
        return False
    problems.append(f"{key}: expected true/false, got {entries[key]!r}")
    return None


def build_config(entries: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate parsed entries, fill defaults and build the run objects."""
    problems = [f"missing required key {key!r}" for key in REQUIRED if key not in entries]
    full = dict(DEFAULTS)
    full.update(entries)

    alpha = _number(full, "model.alpha", problems)
    sigma = _number(full, "model.sigma", problems)
    a = _number(full, "model.a", problems)
    b = _number(full, "model.b", problems)
    if alpha is not None and not 0 < alpha < 1:
        problems.append("alpha must lie in (0,1)")
    if sigma is not None and not 0 < sigma < 1:
        problems.append("sigma must lie in (0,1)")
    if a is not None and not a > 0:
        problems.append("a must be positive")
    if b is not None and not b > 0:
        problems.append("b must be positive")

    kind = full.get("kernel.kind", "").lower()
    kernel = None
    if not kind:
        pass
    elif kind in ("exponential", "gamma"):
        gamma = _number(full, "kernel.gamma", problems)
        if gamma is not None and not gamma > 0:
            problems.append("kernel.gamma must be positive")
        elif gamma is not None:
            kernel = ExponentialKernel(gamma) if kind == "exponential" else GammaKernel(gamma)
    elif kind == "tabulated":
        path = Path(full["kernel.file"])
        if not full["kernel.file"]:
            problems.append("kernel.file is required for a tabulated kernel")
        else:
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            try:
                kernel = load_kernel_csv(path)
            except (OSError, ValueError) as exc:
                problems.append(f"kernel.file: {exc}")
    else:
        problems.append(f"kernel.kind must be exponential, gamma or tabulated, got {kind!r}")

    T = _number(full, "time.T", problems)
    N = _number(full, "time.N", problems, int)
    if T is not None and not T > 0:
        problems.append("time.T must be positive")
    if N is not None and N < 2:
        problems.append("time.N must be at least 2")

    scheme = full["solver.scheme"]
    if scheme not in SCHEMES:
        problems.append(f"solver.scheme must be one of {SCHEMES}, got {scheme!r}")
    grading = full["time.grading"]
    if grading == "auto":
        r = None
    else:
        r = _number(full, "time.grading", problems)
        if r is not None and r < 1:
            problems.append("time.grading must be >= 1 or 'auto'")
        if r is not None and r != 1 and scheme == "MildPicard":
            problems.append("MildPicard needs a uniform mesh (time.grading = 1)")

    lengths = _tuple(full, "grid.L", problems)
    points = _tuple(full, "grid.N", problems, int)
    modes_raw = full["grid.M"]
    modes = None if modes_raw == "auto" else _tuple(full, "grid.M", problems, int)

    init = None
    init_kind = full["init.kind"]
    if init_kind not in INIT_KINDS:
        problems.append(f"init.kind must be one of {INIT_KINDS}, got {init_kind!r}")
    value = _number(full, "init.value", problems)
    amplitude = _number(full, "init.amplitude", problems)
    mode = _number(full, "init.mode", problems, int)
    if None not in (value, amplitude, mode) and init_kind in INIT_KINDS:
        init = InitSpec(init_kind, value, amplitude, mode)

    every = _number(full, "output.every", problems, int)
    if every is not None and every < 1:
        problems.append("output.every must be >= 1")
    if full["output.formats"].lower() != "csv":
        problems.append(f"output.formats: only 'csv' is supported, got {full['output.formats']!r}")
    suite = full["verify.suite"]
    if suite not in SUITES:
        problems.append(f"verify.suite must be one of {SUITES}, got {suite!r}")
    positivity_tol = _number(full, "verify.positivity_tol", problems)
    bound_tol = _number(full, "verify.bound_tol", problems)
    for key, v in (("verify.positivity_tol", positivity_tol), ("verify.bound_tol", bound_tol)):
        if v is not None and not v > 0:
            problems.append(f"{key} must be positive")
    eq_raw = full["verify.equilibrium_tol"]
    equilibrium_tol = None if eq_raw == "none" else _number(full, "verify.equilibrium_tol", problems)
    if equilibrium_tol is not None and not equilibrium_tol > 0:
        problems.append("verify.equilibrium_tol must be positive or 'none'")

    solver_numbers = {
        "picard_tol": _number(full, "solver.picard_tol", problems),
        "picard_max_iters": _number(full, "solver.picard_max_iters", problems, int),
        "blowup_threshold": _number(full, "solver.blowup_threshold", problems),
        "diagnostics_every": _number(full, "solver.diagnostics_every", problems, int),
        "corrector_steps": _number(full, "solver.corrector_steps", problems, int),
    }
    reaction = _bool(full, "solver.reaction", problems)
    if problems:
        raise ConfigError(problems)

    # objects validate their own invariants; collect rather than stop at one
    objects = {}
    for name, make in (
        ("params", lambda: ModelParams(alpha, sigma, a, b, kernel)),
        ("grid", lambda: GridSpec(lengths, points, modes if modes is not None
                                  else tuple(max(1, n // 2) for n in _expand(points, lengths)))),
        ("mesh", lambda: TimeMesh(T, N, r if r is not None else (
            1.0 if scheme == "MildPicard" else default_grading(alpha)))),
    ):
        try:
            objects[name] = make()
        except ValueError as exc:
            problems.append(f"{name}: {exc}")
    if not problems:
        try:
            objects["solver"] = SolverConfig(objects["mesh"], scheme=scheme,
                                             reaction=reaction, **solver_numbers)
        except ValueError as exc:
            problems.append(f"solver: {exc}")
    if init is not None and init.kind == "mode" and reaction:
        problems.append("init.kind = mode gives signed data; it needs solver.reaction = false")
    if problems:
        raise ConfigError(problems)

    mesh = objects["mesh"]
    grid = objects["grid"]
    full["time.grading"] = repr(mesh.r) if grading == "auto" else grading
    full["grid.M"] = ",".join(str(m) for m in grid.modes)
    return RunConfig(
        params=objects["params"],
        grid=grid,
        solver=objects["solver"],
        init=init,
        output_dir=full["output.dir"],
        output_every=every,
        suite=suite,
        positivity_tol=positivity_tol,
        bound_tol=bound_tol,
        equilibrium_tol=equilibrium_tol,
        entries=tuple(sorted(full.items())),
    )


def _expand(points, lengths):
    return points * len(lengths) if len(points) == 1 else points


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from None
    return build_config(parse_text(text, str(path)), base_dir=path.parent)

# }}}
