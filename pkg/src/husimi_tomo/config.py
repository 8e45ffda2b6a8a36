"""Run configuration: strict YAML schema for the command-line front end.

Every section is a mapping with a fixed key set; unknown keys are errors.
Example::

    subcommand: husimi-kernel
    seed: 42
    output: husimi.csv
    state:
      kind: mixture
      dim: 64
      components:
        - weight: 0.5
          state: {kind: coherent, z_re: 1.0, z_im: 0.5}
        - weight: 0.5
          state: {kind: number, n: 2}
    grid: {q_min: -4, q_max: 4, p_min: -4, p_max: 4, nq: 21, np: 21}
    scheme: {theta_nodes: 128, x_nodes: 160}
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any

import yaml

from .errors import ConfigError
from .quadrature import QuadratureScheme
from .states import (
    DEFAULT_DIM,
    DensityMatrix,
    make_coherent_state,
    make_mixture,
    make_number_state,
    make_pure_state,
    make_thermal_state,
)

SUBCOMMANDS = (
    "husimi-direct",
    "husimi-kernel",
    "husimi-mc",
    "sample",
    "kernel-eval",
    "check-identities",
    "inverse-divergence",
)

STATE_KINDS = ("number", "coherent", "thermal", "mixture", "pure_superposition")

_STATE_KEYS = {
    "number": {"n"},
    "coherent": {"z_re", "z_im"},
    "thermal": {"nbar"},
    "mixture": {"components"},
    "pure_superposition": {"amplitudes"},
}


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(d: dict, allowed, where: str) -> None:
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, extra))}")


def _number(d: dict, key: str, where: str, default=None, *, integer=False, minimum=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
        v = int(v)
    elif not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# State specs
# ---------------------------------------------------------------------------


def _validate_state(spec, where: str, *, top_level: bool) -> dict:
    spec = _mapping(spec, where)
    kind = spec.get("kind")
    if kind not in STATE_KINDS:
        raise ConfigError(f"{where}.kind must be one of {', '.join(STATE_KINDS)}, got {kind!r}")
    allowed = {"kind"} | _STATE_KEYS[kind] | ({"dim"} if top_level else set())
    _reject_unknown(spec, allowed, where)
    out: dict[str, Any] = {"kind": kind}
    if top_level:
        out["dim"] = _number(spec, "dim", where, DEFAULT_DIM, integer=True, minimum=1)
    if kind == "number":
        out["n"] = _number(spec, "n", where, integer=True, minimum=0)
    elif kind == "coherent":
        out["z_re"] = float(_number(spec, "z_re", where, 0.0))
        out["z_im"] = float(_number(spec, "z_im", where, 0.0))
    elif kind == "thermal":
        out["nbar"] = float(_number(spec, "nbar", where, minimum=0.0))
    elif kind == "mixture":
        comps = spec.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{where}.components must be a nonempty list")
        out["components"] = []
        for i, comp in enumerate(comps):
            cw = f"{where}.components[{i}]"
            comp = _mapping(comp, cw)
            _reject_unknown(comp, {"weight", "state"}, cw)
            out["components"].append(
                {
                    "weight": float(_number(comp, "weight", cw, minimum=0.0)),
                    "state": _validate_state(comp.get("state"), cw + ".state", top_level=False),
                }
            )
    else:
        amps = spec.get("amplitudes")
        if not isinstance(amps, list) or not amps:
            raise ConfigError(f"{where}.amplitudes must be a nonempty list")
        out["amplitudes"] = []
        for i, amp in enumerate(amps):
            aw = f"{where}.amplitudes[{i}]"
            amp = _mapping(amp, aw)
            _reject_unknown(amp, {"n", "re", "im"}, aw)
            out["amplitudes"].append(
                {
                    "n": _number(amp, "n", aw, integer=True, minimum=0),
                    "re": float(_number(amp, "re", aw, 0.0)),
                    "im": float(_number(amp, "im", aw, 0.0)),
                }
            )
    return out


def build_state(spec: dict, dim: int | None = None) -> DensityMatrix:
    """Construct the density matrix described by a validated state spec."""
    dim = spec.get("dim", dim)
    kind = spec["kind"]
    try:
        if kind == "number":
            return make_number_state(spec["n"], dim)
        if kind == "coherent":
            return make_coherent_state(complex(spec["z_re"], spec["z_im"]), dim)
        if kind == "thermal":
            return make_thermal_state(spec["nbar"], dim)
        if kind == "mixture":
            comps = spec["components"]
            return make_mixture(
                [c["weight"] for c in comps], [build_state(c["state"], dim) for c in comps]
            )
        psi = [0j] * dim
        for amp in spec["amplitudes"]:
            if amp["n"] >= dim:
                raise ValueError(f"amplitude index {amp['n']} does not fit into dim={dim}")
            psi[amp["n"]] += complex(amp["re"], amp["im"])
        return make_pure_state(psi, dim)
    except ConfigError:
        raise
    except ValueError as exc:
        if getattr(exc, "category", None) == "truncation":
            raise
        raise ConfigError(f"state: {exc}") from exc


def state_hash(spec: dict) -> str:
    blob = json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# Run config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    q_min: float = -4.0
    q_max: float = 4.0
    p_min: float = -4.0
    p_max: float = 4.0
    nq: int = 21
    np: int = 21

    @property
    def q_range(self):
        return (self.q_min, self.q_max)

    @property
    def p_range(self):
        return (self.p_min, self.p_max)


@dataclass(frozen=True)
class KernelEvalSpec:
    q: float = 0.0
    p: float = 0.0
    theta_min: float = 0.0
    theta_max: float = 2 * math.pi
    n_theta: int = 8
    x_min: float = -5.0
    x_max: float = 5.0
    n_x: int = 21
    k_max: int = 48


@dataclass(frozen=True)
class InverseSpec:
    theta: float = 0.0
    x: float = 0.0
    u: float = 0.0
    v: float = 0.0
    radii: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True)
class ChecksSpec:
    n_pairs: int = 20
    max_amplitude: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    state: dict
    grid: GridSpec
    scheme: QuadratureScheme
    n_samples: int = 100_000
    seed: int = 0
    output_path: str = "out.csv"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    kernel_eval: KernelEvalSpec = KernelEvalSpec()
    inverse: InverseSpec = InverseSpec()
    checks: ChecksSpec = ChecksSpec()

    def resolved(self) -> dict:
        d = asdict(self)
        d["scheme"] = asdict(self.scheme)
        d["inverse"]["radii"] = list(self.inverse.radii)
        return d


_TOP_KEYS = {
    "subcommand", "state", "grid", "scheme", "n_samples", "seed", "output",
    "threads", "kernel_eval", "inverse", "checks",
}


def _section(raw: dict, key: str, cls, where: str, *, ints=(), mins=None):
    d = _mapping(raw.get(key), where)
    defaults = cls()
    _reject_unknown(d, asdict(defaults).keys(), where)
    kwargs = {}
    for name, default in asdict(defaults).items():
        if isinstance(default, (list, tuple)):
            continue
        kwargs[name] = _number(
            d, name, where, default, integer=name in ints, minimum=(mins or {}).get(name)
        )
    return d, kwargs


def parse_config(raw: dict | None, **overrides) -> RunConfig:
    """Validate a raw mapping (e.g. loaded YAML) into a RunConfig.

    ``overrides`` (subcommand, seed, output, threads) win over file values
    when not None.
    """
    raw = dict(_mapping(raw, "config"))
    _reject_unknown(raw, _TOP_KEYS, "config")
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value

    sub = raw.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"subcommand must be one of {', '.join(SUBCOMMANDS)}, got {sub!r}")

    state = _validate_state(raw.get("state", {"kind": "number", "n": 0}), "state", top_level=True)

    _, g = _section(raw, "grid", GridSpec, "grid", ints=("nq", "np"), mins={"nq": 1, "np": 1})
    grid = GridSpec(**g)
    if not (grid.q_min < grid.q_max and grid.p_min < grid.p_max):
        raise ConfigError("grid bounds must satisfy min < max")

    sd = _mapping(raw.get("scheme"), "scheme")
    _reject_unknown(sd, {"theta_nodes", "x_nodes", "x_limit"}, "scheme")
    x_limit = math.sqrt(2 * state["dim"]) + 6.0
    try:
        scheme = QuadratureScheme(
            _number(sd, "theta_nodes", "scheme", 128, integer=True),
            _number(sd, "x_nodes", "scheme", 160, integer=True),
            float(_number(sd, "x_limit", "scheme", x_limit)),
        )
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from exc

    _, k = _section(
        raw, "kernel_eval", KernelEvalSpec, "kernel_eval",
        ints=("n_theta", "n_x", "k_max"), mins={"n_theta": 1, "n_x": 1, "k_max": 0},
    )
    kernel_eval = KernelEvalSpec(**k)

    inv_raw, inv = _section(raw, "inverse", InverseSpec, "inverse")
    radii = inv_raw.get("radii", list(InverseSpec.radii))
    if not isinstance(radii, list) or not radii:
        raise ConfigError("inverse.radii must be a nonempty list")
    radii = tuple(float(_number({"r": r}, "r", "inverse.radii", minimum=0.0)) for r in radii)
    inverse = InverseSpec(radii=radii, **inv)

    _, c = _section(raw, "checks", ChecksSpec, "checks", ints=("n_pairs",), mins={"n_pairs": 1})
    checks = ChecksSpec(**c)

    output = raw.get("output", "out.csv")
    if not isinstance(output, str) or not output:
        raise ConfigError("output must be a nonempty path string")

    return RunConfig(
        subcommand=sub,
        state=state,
        grid=grid,
        scheme=scheme,
        n_samples=_number(raw, "n_samples", "config", 100_000, integer=True, minimum=2),
        seed=_number(raw, "seed", "config", 0, integer=True),
        output_path=output,
        threads=_number(raw, "threads", "config", os.cpu_count() or 1, integer=True, minimum=1),
        kernel_eval=kernel_eval,
        inverse=inverse,
        checks=checks,
    )


def load_config(path, **overrides) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}".replace("\n", " ")) from exc
    return parse_config(raw, **overrides)
