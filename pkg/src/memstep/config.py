"""Run configuration: schema, parsing, validation, and problem construction.

The config format is a flat key = value document with dotted section prefixes
(TOML syntax; both ``kernel.lambda = 1.0`` at top level and a ``[kernel]``
table are accepted).  Unknown keys are rejected.  ``format_config`` emits the
canonical sorted dotted-key form, which round-trips through ``parse_config``.
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel import KernelSpec
from .operators import (
    ConstantForcing,
    Forcing,
    PolynomialForcing,
    ProblemInstance,
    SineForcing,
    ZeroForcing,
    make_diag_linear,
    make_laplacian_spd_1d,
    make_p_laplacian_1d,
    make_scalar_cubic,
    make_scaled_identity_spd,
)
from .stepper import StepperConfig


class ConfigError(ValueError):
    pass


# key -> (python type, default, one-line description)
SCHEMA: dict[str, tuple[type, object, str]] = {
    "problem.operator_a": (str, "linear", "one of: linear, cubic, p_laplacian"),
    "problem.operator_b": (str, "identity", "one of: identity, laplacian"),
    "problem.d": (int, 1, "state dimension for algebraic operators"),
    "problem.a": (float, 1.0, "coefficient of the linear operator a*v"),
    "problem.a3": (float, 1.0, "cubic coefficient a3*v^3"),
    "problem.a1": (float, 0.0, "linear part of the cubic operator"),
    "problem.b": (float, 1.0, "scale of the identity coupling operator"),
    "problem.p": (float, 3.0, "p-Laplacian exponent, must lie in (2, inf)"),
    "problem.m": (int, 32, "interior nodes of the 1-D grid"),
    "problem.L": (float, 1.0, "domain length of the 1-D grid"),
    "kernel.lambda": (float, 1.0, "kernel decay rate, must be positive"),
    "kernel.T": (float, 1.0, "final time, must be positive"),
    "data.v0": (str, "constant:1.0", "initial state: constant:<c>, sine[:<amp>], file:<path>"),
    "data.u0": (str, "constant:0.0", "initial memory: constant:<c>, sine[:<amp>], file:<path>"),
    "data.f": (str, "zero", "forcing: zero, constant:<c>, poly:<c0>,<c1>,..., sine:<amp>,<omega>, file:<path>"),
    "stepper.N": (int, 256, "number of time steps"),
    "stepper.newton_tol": (float, 1e-10, "Newton residual tolerance"),
    "stepper.newton_max_iter": (int, 50, "Newton iteration cap"),
    "stepper.cg_tol": (float, 1e-12, "CG relative residual tolerance"),
    "stepper.cg_max_iter": (int, 0, "CG iteration cap (0 = 10*d)"),
    "stepper.picard_fallback": (bool, True, "enable the Picard fallback"),
    "experiment.seed": (int, 0, "seed for randomised experiments"),
    "experiment.n_list": (str, "64,128,256,512,1024", "dyadic N ladder for converge"),
    "experiment.deltas": (str, "1e-1,1e-2,1e-3", "perturbation sizes for stability"),
    "experiment.mus": (str, "1.1,2,10", "perturbed rates for lambda-sweep"),
    "experiment.fine_steps": (int, 0, "oracle RK4 steps (0 = 32*max N)"),
}


@dataclass(frozen=True)
class RunConfig:
    values: tuple[tuple[str, object], ...]

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def as_dict(self) -> dict:
        return dict(self.values)


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, f"{dotted}."))
        else:
            flat[dotted] = val
    return flat


def _validate(flat: dict) -> dict:
    out = {}
    for key, val in flat.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        typ = SCHEMA[key][0]
        if typ is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if not isinstance(val, typ) or (typ is int and isinstance(val, bool)):
            raise ConfigError(
                f"config key {key!r} expects {typ.__name__}, got {type(val).__name__}"
            )
        out[key] = val
    for key, (_, default, _) in SCHEMA.items():
        out.setdefault(key, default)
    if out["kernel.lambda"] <= 0.0:
        raise ConfigError("kernel.lambda must be positive")
    if out["kernel.T"] <= 0.0:
        raise ConfigError("kernel.T must be positive")
    if out["problem.operator_a"] == "p_laplacian" and out["problem.p"] <= 2.0:
        raise ConfigError(
            f"problem.p = {out['problem.p']} rejected: the exponent must lie in (2, ∞)"
        )
    return out


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse and validate a config document; ``overrides`` are repeatable
    ``key=value`` strings applied on top."""
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config document: {exc}") from None
    flat = _flatten(tree)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        typ = SCHEMA[key][0]
        try:
            if typ is bool:
                flat[key] = {"true": True, "false": False}[raw.lower()]
            elif typ is str:
                flat[key] = raw.strip("\"'")
            else:
                flat[key] = typ(raw)
        except (ValueError, KeyError):
            raise ConfigError(
                f"override for {key!r} expects {typ.__name__}, got {raw!r}"
            ) from None
    out = _validate(flat)
    return RunConfig(values=tuple(sorted(out.items())))


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(), overrides)


def format_config(cfg: RunConfig) -> str:
    """Canonical dotted key = value emission; parses back to an equal config."""
    lines = []
    for key, val in cfg.values:
        if isinstance(val, bool):
            rendered = "true" if val else "false"
        elif isinstance(val, str):
            rendered = f'"{val}"'
        elif isinstance(val, float):
            rendered = f"{val:.17g}"
            if "." not in rendered and "e" not in rendered and "n" not in rendered:
                rendered += ".0"
        else:
            rendered = str(val)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def _vector_from_spec(spec: str, dim: int, kind: str) -> np.ndarray:
    head, _, arg = spec.partition(":")
    if head == "constant":
        try:
            return np.full(dim, float(arg or 0.0))
        except ValueError:
            raise ConfigError(f"{kind}: bad constant value {arg!r}") from None
    if head == "sine":
        amp = float(arg) if arg else 1.0
        i = np.arange(1, dim + 1)
        return amp * np.sin(np.pi * i / (dim + 1))
    if head == "file":
        vec = np.loadtxt(arg, ndmin=1)
        if vec.shape != (dim,):
            raise ConfigError(f"{kind}: file {arg!r} has shape {vec.shape}, expected ({dim},)")
        return vec
    raise ConfigError(f"{kind}: unknown data spec {spec!r}")


def _forcing_from_spec(spec: str, dim: int) -> Forcing:
    head, _, arg = spec.partition(":")
    ones = np.ones(dim)
    if head == "zero":
        return ZeroForcing(dim)
    if head == "constant":
        return ConstantForcing(float(arg or 0.0) * ones)
    if head == "poly":
        try:
            coeffs = [float(c) for c in arg.split(",")]
        except ValueError:
            raise ConfigError(f"data.f: bad polynomial coefficients {arg!r}") from None
        return PolynomialForcing(coeffs, ones)
    if head == "sine":
        parts = arg.split(",") if arg else []
        amp = float(parts[0]) if parts else 1.0
        omega = float(parts[1]) if len(parts) > 1 else 1.0
        return SineForcing(amp, omega, ones)
    if head == "file":
        return ConstantForcing(np.loadtxt(arg, ndmin=1))
    raise ConfigError(f"data.f: unknown forcing spec {spec!r}")


def build_problem(cfg: RunConfig) -> tuple[ProblemInstance, StepperConfig]:
    c = cfg.as_dict()
    name_a = c["problem.operator_a"]
    if name_a == "linear":
        A = make_diag_linear(c["problem.a"], dim=c["problem.d"])
    elif name_a == "cubic":
        A = make_scalar_cubic(c["problem.a3"], c["problem.a1"], dim=c["problem.d"])
    elif name_a == "p_laplacian":
        A = make_p_laplacian_1d(c["problem.m"], c["problem.p"], c["problem.L"])
    else:
        raise ConfigError(f"problem.operator_a: unknown operator {name_a!r}")

    name_b = c["problem.operator_b"]
    if name_b == "identity":
        B = make_scaled_identity_spd(c["problem.b"], dim=A.dim)
    elif name_b == "laplacian":
        if name_a != "p_laplacian":
            raise ConfigError("problem.operator_b = 'laplacian' requires the grid operator")
        B = make_laplacian_spd_1d(c["problem.m"], c["problem.L"])
    else:
        raise ConfigError(f"problem.operator_b: unknown operator {name_b!r}")

    kernel = KernelSpec(lam=c["kernel.lambda"], T=c["kernel.T"])
    problem = ProblemInstance(
        A=A,
        B=B,
        u0=_vector_from_spec(c["data.u0"], A.dim, "data.u0"),
        v0=_vector_from_spec(c["data.v0"], A.dim, "data.v0"),
        forcing=_forcing_from_spec(c["data.f"], A.dim),
        kernel=kernel,
    )
    stepper = StepperConfig(
        N=c["stepper.N"],
        newton_tol=c["stepper.newton_tol"],
        newton_max_iter=c["stepper.newton_max_iter"],
        cg_tol=c["stepper.cg_tol"],
        cg_max_iter=c["stepper.cg_max_iter"],
        picard_fallback=c["stepper.picard_fallback"],
    )
    return problem, stepper


def int_list(text: str, key: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None


def float_list(text: str, key: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated floats, got {text!r}") from None
