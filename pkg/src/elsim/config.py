"""Scenario files: strict JSON parsing, canonical serialization, bundled examples.

The on-disk document mirrors the scenario one-to-one: sections
``physical_params``, ``topology``, ``gains``, ``kappa``, ``sign_mode``,
``integrator``, ``leader``, ``init`` and the optional top-level
``observer_feed``. Unknown keys are rejected, every numeric constraint is
re-checked at parse time, and error messages name the offending key.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import ParameterError, PhysicalParams
from .engine import ScenarioConfig
from .network import GainSet, Topology, TopologyError


class ConfigError(ValueError):
    """A scenario document failed validation; the message names the key."""


_PHYS_KEYS = ("m1", "m2", "l1", "l2", "lc1", "lc2", "j1", "j2", "g")
_GAIN_KEYS = ("ko1", "ko2", "kc1", "kc2", "kc3")
_LEADER_KINDS = ("ramp_sine_joint", "ramp_sine_transformed", "constant_velocity")


def _section(doc: dict, key: str, kind=dict, required: bool = True):
    if key not in doc:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return None
    val = doc[key]
    if not isinstance(val, kind):
        raise ConfigError(f"key {key!r} must be a {kind.__name__}")
    return val

def _no_unknown(d: dict, allowed, path: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {path}.{k!r}")

def _number(d: dict, key: str, path: str, positive: bool = False) -> float:
    if key not in d:
        raise ConfigError(f"missing required key {path}.{key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key {path}.{key!r} must be a number")
    if positive and not v > 0:
        raise ConfigError(f"key {path}.{key!r} must be positive")
    return float(v)

def _integer(d: dict, key: str, path: str, minimum: int = 0) -> int:
    if key not in d:
        raise ConfigError(f"missing required key {path}.{key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"key {path}.{key!r} must be an integer")
    if v < minimum:
        raise ConfigError(f"key {path}.{key!r} must be >= {minimum}")
    return v


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a decoded scenario document and build the ScenarioConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("top-level document must be an object")
    _no_unknown(doc, ("physical_params", "topology", "gains", "kappa", "sign_mode",
                      "integrator", "leader", "init", "observer_feed"), "$")

    phys = _section(doc, "physical_params")
    _no_unknown(phys, _PHYS_KEYS, "physical_params")
    try:
        physical = PhysicalParams(**{k: _number(phys, k, "physical_params", positive=True)
                                     for k in _PHYS_KEYS})
    except ParameterError as exc:
        raise ConfigError(f"physical_params: {exc}") from exc

    topo = _section(doc, "topology")
    _no_unknown(topo, ("adjacency", "leader_links"), "topology")
    if "adjacency" not in topo or "leader_links" not in topo:
        raise ConfigError("topology requires 'adjacency' and 'leader_links'")
    try:
        topology = Topology(adjacency=np.asarray(topo["adjacency"], dtype=float),
                            leader_links=np.asarray(topo["leader_links"], dtype=float))
    except (TopologyError, ValueError) as exc:
        raise ConfigError(f"topology: {exc}") from exc

    gd = _section(doc, "gains")
    _no_unknown(gd, _GAIN_KEYS, "gains")
    kappa = _number(doc, "kappa", "$")
    if not kappa > 1.0:
        raise ConfigError("key 'kappa' must exceed 1")

    sm = _section(doc, "sign_mode")
    _no_unknown(sm, ("kind", "epsilon"), "sign_mode")
    kind = sm.get("kind")
    if kind not in ("exact", "boundary_layer"):
        raise ConfigError("key sign_mode.'kind' must be 'exact' or 'boundary_layer'")
    epsilon = _number(sm, "epsilon", "sign_mode", positive=True) if "epsilon" in sm else 0.01

    integ = _section(doc, "integrator")
    _no_unknown(integ, ("dt", "t_end", "decimation"), "integrator")
    dt = _number(integ, "dt", "integrator", positive=True)
    t_end = _number(integ, "t_end", "integrator", positive=True)
    decimation = _integer(integ, "decimation", "integrator", minimum=1)

    lead = _section(doc, "leader")
    _no_unknown(lead, ("kind", "zbar0"), "leader")
    lkind = lead.get("kind")
    if lkind not in _LEADER_KINDS:
        raise ConfigError(f"key leader.'kind' must be one of {_LEADER_KINDS}")
    zbar0 = _number(lead, "zbar0", "leader", positive=True)

    init = _section(doc, "init")
    _no_unknown(init, ("x_range", "seed"), "init")
    xr = init.get("x_range")
    if (not isinstance(xr, list) or len(xr) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in xr)
            or not xr[0] < xr[1]):
        raise ConfigError("key init.'x_range' must be an increasing [lo, hi] pair")
    seed = _integer(init, "seed", "init", minimum=0)

    observer_feed = doc.get("observer_feed", "reconstructed")
    if observer_feed not in ("reconstructed", "exact"):
        raise ConfigError("key 'observer_feed' must be 'reconstructed' or 'exact'")

    try:
        gains = GainSet(**{k: _number(gd, k, "gains", positive=True) for k in _GAIN_KEYS},
                        kappa=kappa, zbar0=zbar0)
        return ScenarioConfig(
            physical=physical, topology=topology, gains=gains,
            sign_mode=kind, epsilon=epsilon, dt=dt, t_end=t_end,
            decimation=decimation, leader_kind=lkind,
            x_range=(float(xr[0]), float(xr[1])), seed=seed,
            observer_feed=observer_feed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Scenario as a plain document; parse(serialize(cfg)) is the identity."""
    p = cfg.physical
    return {
        "physical_params": {k: getattr(p, k) for k in _PHYS_KEYS},
        "topology": {
            "adjacency": cfg.topology.adjacency.astype(int).tolist(),
            "leader_links": cfg.topology.leader_links.astype(int).tolist(),
        },
        "gains": {k: getattr(cfg.gains, k) for k in _GAIN_KEYS},
        "kappa": cfg.gains.kappa,
        "sign_mode": {"kind": cfg.sign_mode, "epsilon": cfg.epsilon},
        "integrator": {"dt": cfg.dt, "t_end": cfg.t_end, "decimation": cfg.decimation},
        "leader": {"kind": cfg.leader_kind, "zbar0": cfg.gains.zbar0},
        "init": {"x_range": list(cfg.x_range), "seed": cfg.seed},
        "observer_feed": cfg.observer_feed,
    }


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical JSON text: sorted keys, stable float formatting."""
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n"


def builtin_config_path(name: str) -> Path:
    """Filesystem path of a bundled example scenario."""
    ref = resources.files("elsim") / "configs" / name
    with resources.as_file(ref) as path:
        return Path(path)


def list_builtin_configs() -> list[str]:
    return sorted(
        entry.name for entry in (resources.files("elsim") / "configs").iterdir()
        if entry.name.endswith(".json")
    )
