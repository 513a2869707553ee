"""Flat ``key = value`` run configuration.

One entry per line, ``#`` starts a comment, keys are dotted names from
:data:`SCHEMA`.  Lists (potential coefficients, vectors) are comma or
whitespace separated, optionally wrapped in brackets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigurationError
from .integrator import COUPLINGS, StepperConfig
from .materials import QUARTIC_COEFFICIENTS, ConductivitySpec, MaterialLaws, PotentialSpec
from .spectral import make_grid

INITIAL_KINDS = ("constant", "single_mode", "random_bandlimited", "from_snapshot")


def _floats(text):
    parts = text.strip().strip("[]()").replace(",", " ").split()
    return tuple(float(p) for p in parts)


def _ints(text):
    parts = text.strip().strip("[]()").replace(",", " ").split()
    return tuple(int(p) for p in parts)


def _optional_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _optional_str(text):
    text = text.strip().strip('"').strip("'")
    return None if text.lower() in ("", "none") else text


def _str(text):
    return text.strip().strip('"').strip("'")


# key -> (parser, default, description of the expected type)
SCHEMA = {
    "grid.n": (int, 64, "even integer >= 8"),
    "potential.kind": (_str, "quartic", "quartic | polynomial"),
    "potential.coefficients": (_floats, QUARTIC_COEFFICIENTS, "list of reals, constant term first"),
    "potential.lambda": (float, 1.0, "real >= 0"),
    "potential.p_F": (float, 2.0, "real >= 1"),
    "potential.c0": (float, 0.0, "real >= 0"),
    "conductivity.q": (float, 2.0, "real >= 2"),
    "stepper.dt": (float, 1e-3, "real > 0"),
    "stepper.stabilization_s": (float, 2.0, "real >= potential.lambda"),
    "stepper.theta_floor": (float, 1e-8, "real > 0"),
    "stepper.max_halvings": (int, 20, "integer >= 0"),
    "stepper.kappa_ref": (_optional_float, None, "real or auto"),
    "stepper.coupling": (_str, "semi_implicit", " | ".join(COUPLINGS)),
    "horizon": (float, 1.0, "real >= 0"),
    "record_every": (int, 100, "integer >= 1"),
    "initial_condition.kind": (_str, "random_bandlimited", " | ".join(INITIAL_KINDS)),
    "initial_condition.seed": (int, 0, "integer"),
    "initial_condition.amplitude": (float, 0.1, "real >= 0"),
    "initial_condition.theta_amplitude": (float, 0.1, "real >= 0"),
    "initial_condition.velocity_amplitude": (float, 0.1, "real >= 0"),
    "initial_condition.m": (float, 0.0, "real"),
    "initial_condition.theta_bar": (float, 1.0, "real > 0"),
    "initial_condition.theta_min": (_optional_float, None, "real > 0 or none"),
    "initial_condition.velocity_mean": (_floats, (0.0, 0.0), "two reals"),
    "initial_condition.mode": (_ints, (1, 0), "two integers"),
    "initial_condition.bandwidth": (int, 4, "integer >= 1"),
    "initial_condition.gamma": (float, 1.5, "real >= 0"),
    "initial_condition.path": (_optional_str, None, "snapshot path"),
    "omega.tol": (float, 1e-6, "real > 0"),
    "omega.window": (int, 50, "integer >= 1"),
    "diagnostics.r": (float, 0.5, "real in (0, 1/2]"),
    "diagnostics.alpha": (float, 2.0, "real > 1"),
    "outputs.series": (_optional_str, None, "CSV path"),
    "outputs.snapshot": (_optional_str, None, "snapshot path"),
    "outputs.snapshot_every": (int, 0, "integer >= 0"),
}


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "random_bandlimited"
    seed: int = 0
    amplitude: float = 0.1
    theta_amplitude: float = 0.1
    velocity_amplitude: float = 0.1
    m: float = 0.0
    theta_bar: float = 1.0
    theta_min: Optional[float] = None
    velocity_mean: tuple = (0.0, 0.0)
    mode: tuple = (1, 0)
    bandwidth: int = 4
    gamma: float = 1.5
    path: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    n: int = 64
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    conductivity: ConductivitySpec = field(default_factory=ConductivitySpec)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    horizon: float = 1.0
    record_every: int = 100
    initial: InitialCondition = field(default_factory=InitialCondition)
    omega_tol: float = 1e-6
    omega_window: int = 50
    r: float = 0.5
    alpha: float = 2.0
    series_path: Optional[str] = None
    snapshot_path: Optional[str] = None
    snapshot_every: int = 0

    @property
    def laws(self):
        return MaterialLaws(self.potential, self.conductivity)

    @property
    def grid(self):
        return make_grid(self.n)


def _read_pairs(text, problems):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append((None, f"line {lineno}: expected 'key = value', got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            problems.append((key, f"line {lineno}: unknown key {key!r}"))
        elif key in raw:
            problems.append((key, f"line {lineno}: duplicate key {key!r}"))
        else:
            raw[key] = value
    return raw


def _coerce(raw, problems):
    values = {}
    for key, (parse, default, expected) in SCHEMA.items():
        if key not in raw:
            values[key] = default
            continue
        try:
            values[key] = parse(raw[key])
        except ValueError:
            problems.append((key, f"{key}: expected {expected}, got {raw[key]!r}"))
            values[key] = default
    return values


def _attempt(problems, build):
    try:
        return build()
    except ConfigurationError as exc:
        problems.extend(exc.problems)
        return None


def _check(problems, ok, key, message):
    if not ok:
        problems.append((key, f"{key} {message}"))


def parse_config(text):
    """Parse and validate a run configuration; all problems are reported at once."""
    problems = []
    v = _coerce(_read_pairs(text, problems), problems)

    grid = _attempt(problems, lambda: make_grid(v["grid.n"]))
    potential = _attempt(problems, lambda: PotentialSpec(
        kind=v["potential.kind"], coefficients=v["potential.coefficients"],
        lam=v["potential.lambda"], p_F=v["potential.p_F"], c0=v["potential.c0"],
    ))
    conductivity = _attempt(problems, lambda: ConductivitySpec(q=v["conductivity.q"]))
    stepper = _attempt(problems, lambda: StepperConfig(
        dt=v["stepper.dt"], stabilization_s=v["stepper.stabilization_s"],
        theta_floor=v["stepper.theta_floor"], max_halvings=v["stepper.max_halvings"],
        kappa_ref=v["stepper.kappa_ref"], coupling=v["stepper.coupling"],
    ))
    if stepper is not None and potential is not None:
        _attempt(problems, lambda: stepper.validate(MaterialLaws(potential, ConductivitySpec())))

    _check(problems, v["horizon"] >= 0, "horizon", f"must be >= 0, got {v['horizon']}")
    _check(problems, v["record_every"] >= 1, "record_every", f"must be >= 1, got {v['record_every']}")
    _check(problems, v["omega.tol"] > 0, "omega.tol", f"must be > 0, got {v['omega.tol']}")
    _check(problems, v["omega.window"] >= 1, "omega.window", f"must be >= 1, got {v['omega.window']}")
    _check(problems, 0 < v["diagnostics.r"] <= 0.5, "diagnostics.r", f"must lie in (0, 1/2], got {v['diagnostics.r']}")
    _check(problems, v["diagnostics.alpha"] > 1, "diagnostics.alpha", f"must exceed 1, got {v['diagnostics.alpha']}")
    _check(problems, v["outputs.snapshot_every"] >= 0, "outputs.snapshot_every", "must be >= 0")

    kind = v["initial_condition.kind"]
    _check(problems, kind in INITIAL_KINDS, "initial_condition.kind", f"must be one of {INITIAL_KINDS}, got {kind!r}")
    _check(problems, v["initial_condition.theta_bar"] > 0, "initial_condition.theta_bar",
           f"must be > 0, got {v['initial_condition.theta_bar']}")
    tmin = v["initial_condition.theta_min"]
    _check(problems, tmin is None or tmin > 0, "initial_condition.theta_min", f"must be > 0, got {tmin}")
    for key in ("amplitude", "theta_amplitude", "velocity_amplitude", "gamma"):
        full = f"initial_condition.{key}"
        _check(problems, v[full] >= 0, full, f"must be >= 0, got {v[full]}")
    _check(problems, len(v["initial_condition.velocity_mean"]) == 2, "initial_condition.velocity_mean",
           "must have two components")
    mode = v["initial_condition.mode"]
    _check(problems, len(mode) == 2, "initial_condition.mode", "must have two components")
    bw = v["initial_condition.bandwidth"]
    _check(problems, bw >= 1, "initial_condition.bandwidth", f"must be >= 1, got {bw}")
    if grid is not None:
        _check(problems, bw <= grid.max_retained, "initial_condition.bandwidth",
               f"must not exceed the dealias cutoff {grid.max_retained} for n={grid.n}")
        if len(mode) == 2:
            _check(problems, max(abs(mode[0]), abs(mode[1])) <= grid.max_retained, "initial_condition.mode",
                   f"must be a retained mode for n={grid.n}")
    if kind == "from_snapshot":
        _check(problems, v["initial_condition.path"] is not None, "initial_condition.path",
               "is required for kind from_snapshot")

    if problems:
        lines = "\n".join(f"  - {msg}" for _, msg in problems)
        raise ConfigurationError(f"invalid configuration:\n{lines}", key=problems[0][0], problems=problems)

    initial = InitialCondition(
        kind=kind, seed=v["initial_condition.seed"], amplitude=v["initial_condition.amplitude"],
        theta_amplitude=v["initial_condition.theta_amplitude"],
        velocity_amplitude=v["initial_condition.velocity_amplitude"], m=v["initial_condition.m"],
        theta_bar=v["initial_condition.theta_bar"], theta_min=tmin,
        velocity_mean=tuple(v["initial_condition.velocity_mean"]), mode=tuple(mode), bandwidth=bw,
        gamma=v["initial_condition.gamma"], path=v["initial_condition.path"],
    )
    return RunConfig(
        n=grid.n, potential=potential, conductivity=conductivity, stepper=stepper,
        horizon=v["horizon"], record_every=v["record_every"], initial=initial,
        omega_tol=v["omega.tol"], omega_window=v["omega.window"], r=v["diagnostics.r"],
        alpha=v["diagnostics.alpha"], series_path=v["outputs.series"],
        snapshot_path=v["outputs.snapshot"], snapshot_every=v["outputs.snapshot_every"],
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
