"""Run configuration: YAML schema, experiment presets, validation, resolution.

A run is described by a nested key-value document (YAML).  Sections and keys:

    run:          label, seed, out_dir, paper_scale, threads
    particles:    count
    collision:    gamma {const, slope, component}, strength, epsilon ('auto'),
                  regularization ('antisymmetric' | 'symmetric')
    uncertainty:  distributions [{kind: uniform} | {kind: beta, alpha, beta}],
                  order (int or [m1, m2]), quadrature_nodes ('auto', int, or list)
    initial:      kind ('bimodal_radial' | 'bkw' | 'anisotropic_gaussian' |
                  'triangle_gaussians'), temperature {const, slope, component},
                  temp_y, radius
    time:         dt, t_final, cadence
    domain:       extent ('auto' = four standard deviations of the hottest
                  axis temperature), grid_points
    output:       density_times, density_statistics
    guards:       momentum_drift, mass_error

Affine parameter maps are written as mappings with ``const``, optional
``slope`` and optional 1-based ``component`` selecting z1 or z2.  Presets
encode the published experiment configurations; the default particle counts
are desk scale, and ``paper_scale`` restores the printed ones.

Unknown keys, type mismatches, and range violations raise :class:`ConfigError`
with the line of the enclosing section when the source is a YAML document.
"""

from __future__ import annotations

import copy
import io
from dataclasses import dataclass, field

import numpy as np
import yaml

from .benchmarks import (
    AffineMap,
    AnisotropicGaussian,
    BimodalRadial,
    Bkw,
    InitialCondition,
    TriangleGaussians,
)
from .gpc import AnyBasis, Beta, Distribution, Uniform01, build_basis, tensor_basis
from .kernels import CollisionParams
from .solver import default_epsilon, default_extent

INITIAL_KINDS = ("bimodal_radial", "bkw", "anisotropic_gaussian", "triangle_gaussians")
DENSITY_STATISTICS = ("expectation", "variance", "nodes")


class ConfigError(ValueError):
    """A configuration document failed to parse or validate."""


# ----------------------------------------------------------------------------
# YAML loading with section line numbers

_LINE_KEY = "__line__"


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=deep)
    mapping[_LINE_KEY] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _strip_lines(obj):
    if isinstance(obj, dict):
        return {k: _strip_lines(v) for k, v in obj.items() if k != _LINE_KEY}
    if isinstance(obj, list):
        return [_strip_lines(v) for v in obj]
    return obj


# ----------------------------------------------------------------------------
# schema walk

_SCHEMA = {
    "run": {"label", "seed", "out_dir", "paper_scale", "threads", "preset", "variant"},
    "particles": {"count", "paper_count"},
    "collision": {"gamma", "strength", "epsilon", "regularization"},
    "uncertainty": {"distributions", "order", "quadrature_nodes"},
    "initial": {"kind", "temperature", "temp_y", "radius"},
    "time": {"dt", "t_final", "cadence"},
    "domain": {"extent", "grid_points"},
    "output": {"density_times", "density_statistics"},
    "guards": {"momentum_drift", "mass_error"},
}

_MAP_KEYS = {"const", "slope", "component"}
_DIST_KEYS = {"kind", "alpha", "beta"}


def _where(mapping: dict, fallback: str) -> str:
    line = mapping.get(_LINE_KEY)
    return f"line {line}" if line is not None else fallback


def _check_unknown_keys(data: dict) -> None:
    for section, content in data.items():
        if section == _LINE_KEY:
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r} ({_where(data, 'top level')})")
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in content.items():
            if key == _LINE_KEY:
                continue
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {section}.{key} ({_where(content, 'unknown line')})"
                )
            allowed = None
            if isinstance(value, dict):
                allowed = _MAP_KEYS
            if key == "distributions" and isinstance(value, list):
                for entry in value:
                    if isinstance(entry, dict):
                        extra = set(entry) - _DIST_KEYS - {_LINE_KEY}
                        if extra:
                            raise ConfigError(
                                f"unknown distribution key(s) {sorted(extra)} "
                                f"({_where(entry, 'unknown line')})"
                            )
                continue
            if allowed is not None:
                extra = set(value) - allowed - {_LINE_KEY}
                if extra:
                    raise ConfigError(
                        f"unknown key(s) {sorted(extra)} under {section}.{key} "
                        f"({_where(value, 'unknown line')})"
                    )


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


# ----------------------------------------------------------------------------
# presets

_COMMON = {
    "run": {"seed": 20260810, "paper_scale": False},
    "collision": {"strength": 1.0 / 16.0, "epsilon": "auto", "regularization": "antisymmetric"},
    "uncertainty": {
        "distributions": [{"kind": "uniform"}],
        "order": 3,
        "quadrature_nodes": "auto",
    },
    "time": {"dt": 0.01, "t_final": 1.0, "cadence": 10},
    "domain": {"extent": "auto", "grid_points": 200},
    "output": {"density_times": [], "density_statistics": ["expectation", "variance"]},
    "guards": {"momentum_drift": 1e-10, "mass_error": 1e-12},
}

_BETA_VARIANTS = {
    "uniform": {"uncertainty": {"distributions": [{"kind": "uniform"}]}},
    "beta25": {"uncertainty": {"distributions": [{"kind": "beta", "alpha": 2.0, "beta": 5.0}]}},
    "beta52": {"uncertainty": {"distributions": [{"kind": "beta", "alpha": 5.0, "beta": 2.0}]}},
}

PRESETS: dict[str, dict] = {
    "test1": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test1"},
                "particles": {"count": 900, "paper_count": 2500},
                "collision": {"gamma": {"const": 0.0}},
                "initial": {
                    "kind": "bimodal_radial",
                    "temperature": {"const": 1.0, "slope": 0.2, "component": 1},
                },
            },
        ),
        "variants": {
            "maxwell": {"collision": {"gamma": {"const": 0.0}}},
            "coulomb": {"collision": {"gamma": {"const": -3.0}}},
        },
        "default_variant": "maxwell",
    },
    "test2": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test2"},
                "particles": {"count": 900, "paper_count": 2500},
                "collision": {"gamma": {"const": 0.0, "slope": -3.0, "component": 1}},
                "initial": {"kind": "bimodal_radial", "temperature": {"const": 1.0}},
                "time": {"t_final": 2.0},
            },
        ),
        "variants": _BETA_VARIANTS,
        "default_variant": "uniform",
    },
    "test3": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test3"},
                "particles": {"count": 900, "paper_count": 2500},
                "collision": {"gamma": {"const": 0.0, "slope": -3.0, "component": 2}},
                "uncertainty": {
                    "distributions": [{"kind": "uniform"}, {"kind": "uniform"}],
                    "order": [3, 3],
                },
                "initial": {
                    "kind": "bimodal_radial",
                    "temperature": {"const": 1.0, "slope": 0.2, "component": 1},
                },
            },
        ),
        "variants": {
            "uniform": {},
            "beta25": {
                "uncertainty": {
                    "distributions": [{"kind": "uniform"}, {"kind": "beta", "alpha": 2.0, "beta": 5.0}]
                }
            },
            "beta52": {
                "uncertainty": {
                    "distributions": [{"kind": "uniform"}, {"kind": "beta", "alpha": 5.0, "beta": 2.0}]
                }
            },
        },
        "default_variant": "uniform",
    },
    "test4": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test4"},
                "particles": {"count": 3600, "paper_count": 14400},
                "collision": {"gamma": {"const": 0.0}},
                "initial": {
                    "kind": "bkw",
                    "temperature": {"const": 0.5, "slope": 0.1, "component": 1},
                },
                "time": {"t_final": 5.0},
                "output": {"density_times": [0.0, 1.0, 5.0]},
            },
        ),
        "variants": {"default": {}},
        "default_variant": "default",
    },
    "test5": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test5"},
                "particles": {"count": 3600, "paper_count": 14400},
                "initial": {"kind": "anisotropic_gaussian"},
                "time": {"t_final": 1.0, "cadence": 1},
            },
        ),
        "variants": {
            "maxwell": {
                "collision": {"gamma": {"const": 0.0}, "strength": 0.5},
                "initial": {"temperature": {"const": 0.7, "slope": 0.1, "component": 1}, "temp_y": 0.5},
            },
            "coulomb-a": {
                "collision": {"gamma": {"const": -3.0}, "strength": 2.0},
                "initial": {"temperature": {"const": 0.9, "slope": 0.1, "component": 1}, "temp_y": 0.3},
            },
            "coulomb-b": {
                "collision": {"gamma": {"const": -3.0}, "strength": 2.0},
                "initial": {"temperature": {"const": 0.7, "slope": 0.1, "component": 1}, "temp_y": 0.5},
            },
        },
        "default_variant": "maxwell",
    },
    "test6": {
        "base": _merge(
            _COMMON,
            {
                "run": {"label": "test6"},
                "particles": {"count": 3600, "paper_count": 14400},
                "collision": {"gamma": {"const": -3.0}},
                "initial": {
                    "kind": "triangle_gaussians",
                    "temperature": {"const": 0.5, "slope": 0.1, "component": 1},
                    "radius": 2.0,
                },
                "time": {"t_final": 200.0, "cadence": 100},
                "output": {"density_times": [0.0, 50.0, 200.0]},
            },
        ),
        "variants": {"default": {}},
        "default_variant": "default",
    },
}


# ----------------------------------------------------------------------------
# resolved configuration

@dataclass
class RunConfig:
    """Fully resolved, validated run description."""

    label: str
    seed: int
    out_dir: str
    paper_scale: bool
    threads: int | None
    num_particles: int
    gamma: AffineMap
    strength: float
    epsilon: float | None  # None -> derived from the extent and particle count
    regularization: str
    distributions: list[Distribution]
    orders: list[int]
    quadrature_nodes: list[int]
    initial_kind: str
    temperature: AffineMap
    temp_y: float | None
    radius: float | None
    dt: float
    t_final: float
    cadence: int
    extent: float | None  # None -> four standard deviations of the hottest axis
    grid_points: int
    density_times: list[float]
    density_statistics: list[str]
    momentum_guard: float
    mass_guard: float
    raw: dict = field(repr=False, default_factory=dict)

    # ---- derived builders -------------------------------------------------

    def initial_condition(self) -> InitialCondition:
        if self.initial_kind == "bimodal_radial":
            return BimodalRadial(self.temperature)
        if self.initial_kind == "bkw":
            return Bkw(self.temperature)
        if self.initial_kind == "anisotropic_gaussian":
            return AnisotropicGaussian(self.temperature, self.temp_y)
        return TriangleGaussians(self.temperature, self.radius)

    def basis(self) -> AnyBasis:
        parts = [
            build_basis(dist, order, nodes)
            for dist, order, nodes in zip(self.distributions, self.orders, self.quadrature_nodes)
        ]
        return parts[0] if len(parts) == 1 else tensor_basis(parts[0], parts[1])

    def resolved_extent(self, basis: AnyBasis) -> float:
        if self.extent is not None:
            return self.extent
        condition = self.initial_condition()
        nodes = np.asarray(basis.nodes)
        t_max = max(condition.axis_temperature(z) for z in nodes)
        return default_extent(t_max)

    def resolved_epsilon(self, extent: float) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return default_epsilon(self.num_particles, extent)

    def params_at_nodes(self, basis: AnyBasis, epsilon: float) -> tuple[CollisionParams, ...]:
        nodes = np.asarray(basis.nodes)
        return tuple(
            CollisionParams(self.gamma.at(z), self.strength, epsilon) for z in nodes
        )

    def resolved_document(self) -> dict:
        """Plain mapping with every default filled in, for the provenance echo."""
        doc = copy.deepcopy(self.raw)
        basis = self.basis()
        extent = self.resolved_extent(basis)
        doc.setdefault("resolved", {})
        doc["resolved"] = {
            "num_particles": self.num_particles,
            "orders": list(self.orders),
            "quadrature_nodes": list(self.quadrature_nodes),
            "extent": float(extent),
            "epsilon": float(self.resolved_epsilon(extent)),
            "seed": self.seed,
            "dt": self.dt,
            "t_final": self.t_final,
        }
        return doc


# ----------------------------------------------------------------------------
# validation helpers

def _need(data: dict, section: str, key: str):
    try:
        return data[section][key]
    except KeyError:
        raise ConfigError(f"missing required key {section}.{key}") from None


def _get(data: dict, section: str, key: str, default):
    return data.get(section, {}).get(key, default)


def _as_positive(value, name: str, strict: bool = True) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if (strict and out <= 0) or (not strict and out < 0):
        raise ConfigError(f"{name} must be positive, got {out}")
    return out


def _as_int(value, name: str, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def _as_map(value, name: str, z_dims: int) -> AffineMap:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return AffineMap(float(value))
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a number or a {{const, slope, component}} mapping")
    clean = {k: v for k, v in value.items() if k != _LINE_KEY}
    const = clean.get("const")
    if const is None:
        raise ConfigError(f"{name} needs a 'const' entry ({_where(value, name)})")
    slope = float(clean.get("slope", 0.0))
    component = _as_int(clean.get("component", 1), f"{name}.component", 1)
    if component > z_dims and slope != 0.0:
        raise ConfigError(
            f"{name} reads parameter component {component} but only {z_dims} are configured"
        )
    return AffineMap(float(const), slope, component - 1)


def _as_distribution(entry, index: int) -> Distribution:
    if not isinstance(entry, dict):
        raise ConfigError(f"distribution #{index + 1} must be a mapping")
    kind = entry.get("kind")
    if kind == "uniform":
        return Uniform01()
    if kind == "beta":
        if "alpha" not in entry or "beta" not in entry:
            raise ConfigError(
                f"beta distribution #{index + 1} needs alpha and beta "
                f"({_where(entry, 'distributions')})"
            )
        try:
            return Beta(float(entry["alpha"]), float(entry["beta"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown distribution kind {kind!r} (expected 'uniform' or 'beta')")


def _int_list(value, name: str, length: int, minimum: int) -> list[int]:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value] * length
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{name} must be an integer or a list of {length} integers")
    return [_as_int(v, name, minimum) for v in value]


def resolve(data: dict, paper_scale_override: bool | None = None) -> RunConfig:
    """Validate a configuration mapping and fill in every default."""
    _check_unknown_keys(data)

    paper_scale = bool(_get(data, "run", "paper_scale", False))
    if paper_scale_override is not None:
        paper_scale = paper_scale_override

    particles = data.get("particles", {})
    count = particles.get("paper_count") if paper_scale and "paper_count" in particles else None
    if count is None:
        count = _need(data, "particles", "count")
    num_particles = _as_int(count, "particles.count", 1)

    dists_raw = _get(data, "uncertainty", "distributions", [{"kind": "uniform"}])
    if not isinstance(dists_raw, list) or not 1 <= len(dists_raw) <= 2:
        raise ConfigError("uncertainty.distributions must list one or two entries")
    distributions = [_as_distribution(d, i) for i, d in enumerate(dists_raw)]
    z_dims = len(distributions)

    orders = _int_list(_get(data, "uncertainty", "order", 3), "uncertainty.order", z_dims, 0)
    nodes_raw = _get(data, "uncertainty", "quadrature_nodes", "auto")
    if nodes_raw == "auto":
        quadrature_nodes = [2 * (m + 1) for m in orders]
    else:
        quadrature_nodes = _int_list(nodes_raw, "uncertainty.quadrature_nodes", z_dims, 1)
    for m, l in zip(orders, quadrature_nodes):
        if l < m + 1:
            raise ConfigError(f"quadrature_nodes {l} is below order+1 = {m + 1}")

    gamma = _as_map(_need(data, "collision", "gamma"), "collision.gamma", z_dims)
    strength = _as_positive(_get(data, "collision", "strength", 1.0 / 16.0), "collision.strength")
    eps_raw = _get(data, "collision", "epsilon", "auto")
    epsilon = None if eps_raw == "auto" else _as_positive(eps_raw, "collision.epsilon")
    regularization = _get(data, "collision", "regularization", "antisymmetric")
    if regularization not in ("antisymmetric", "symmetric"):
        raise ConfigError(f"unknown regularization {regularization!r}")

    kind = _need(data, "initial", "kind")
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"unknown initial.kind {kind!r} (expected one of {INITIAL_KINDS})")
    temperature = _as_map(_need(data, "initial", "temperature"), "initial.temperature", z_dims)
    temp_y = _get(data, "initial", "temp_y", None)
    radius = _get(data, "initial", "radius", None)
    if kind == "anisotropic_gaussian":
        temp_y = _as_positive(temp_y, "initial.temp_y") if temp_y is not None else None
        if temp_y is None:
            raise ConfigError("anisotropic_gaussian needs initial.temp_y")
    if kind == "triangle_gaussians":
        radius = _as_positive(radius, "initial.radius") if radius is not None else None
        if radius is None:
            raise ConfigError("triangle_gaussians needs initial.radius")

    dt = _as_positive(_get(data, "time", "dt", 0.01), "time.dt")
    t_final = _as_positive(_get(data, "time", "t_final", 1.0), "time.t_final")
    cadence = _as_int(_get(data, "time", "cadence", 10), "time.cadence", 1)

    extent_raw = _get(data, "domain", "extent", "auto")
    extent = None if extent_raw == "auto" else _as_positive(extent_raw, "domain.extent")
    grid_points = _as_int(_get(data, "domain", "grid_points", 200), "domain.grid_points", 2)

    density_times = [
        _as_positive(t, "output.density_times", strict=False)
        for t in _get(data, "output", "density_times", [])
    ]
    density_statistics = list(_get(data, "output", "density_statistics", ["expectation"]))
    for stat in density_statistics:
        if stat not in DENSITY_STATISTICS:
            raise ConfigError(f"unknown density statistic {stat!r}")

    threads = _get(data, "run", "threads", None)
    if threads is not None:
        threads = _as_int(threads, "run.threads", 1)

    seed = _as_int(_get(data, "run", "seed", 0), "run.seed", 0)

    return RunConfig(
        label=str(_get(data, "run", "label", "run")),
        seed=seed,
        out_dir=str(_get(data, "run", "out_dir", "out")),
        paper_scale=paper_scale,
        threads=threads,
        num_particles=num_particles,
        gamma=gamma,
        strength=strength,
        epsilon=epsilon,
        regularization=regularization,
        distributions=distributions,
        orders=orders,
        quadrature_nodes=quadrature_nodes,
        initial_kind=kind,
        temperature=temperature,
        temp_y=temp_y,
        radius=radius,
        dt=dt,
        t_final=t_final,
        cadence=cadence,
        extent=extent,
        grid_points=grid_points,
        density_times=density_times,
        density_statistics=density_statistics,
        momentum_guard=_as_positive(_get(data, "guards", "momentum_drift", 1e-10), "guards.momentum_drift"),
        mass_guard=_as_positive(_get(data, "guards", "mass_error", 1e-12), "guards.mass_error"),
        raw=_strip_lines(data),
    )


def preset_document(name: str, variant: str | None = None) -> dict:
    """The raw configuration mapping of a named preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (expected one of {sorted(PRESETS)})")
    spec = PRESETS[name]
    variant = variant or spec["default_variant"]
    if variant not in spec["variants"]:
        raise ConfigError(
            f"unknown variant {variant!r} for preset {name} "
            f"(expected one of {sorted(spec['variants'])})"
        )
    doc = _merge(spec["base"], spec["variants"][variant])
    doc["run"]["label"] = f"{name}-{variant}" if len(spec["variants"]) > 1 else name
    return doc


def parse_config(
    text: str,
    preset: str | None = None,
    variant: str | None = None,
    overrides: dict | None = None,
    paper_scale: bool | None = None,
) -> RunConfig:
    """Parse a YAML document (optionally layered over a preset) into a RunConfig."""
    try:
        data = yaml.load(io.StringIO(text), Loader=_LineLoader) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("the configuration document must be a mapping of sections")
    preset = data.get("run", {}).get("preset", preset)
    variant = data.get("run", {}).get("variant", variant)
    if preset is not None:
        base = preset_document(preset, variant)
        data = _merge(base, data)
    if overrides:
        data = _merge(data, overrides)
    return resolve(data, paper_scale_override=paper_scale)
