"""Observables over ensembles and stochastic-Galerkin states.

Scalar observables (mass, momentum, energy, fourth moment, directional
temperatures, entropy, dissipation) are recorded pointwise at every quadrature
node and as expectation/variance over the parameter, all with the node weights
of the state's basis.  Field observables reconstruct the blob density on a
velocity grid.  Temperatures are central second moments, so mean drift cannot
contaminate anisotropy decay measurements.

The convergence metric between two states sharing particle count and initial
draw is the weighted l2 norm over the parameter of the fourth-moment mismatch,

    error = sqrt( sum_l (M4_ref(z_l) - M4(z_l))^2 omega_l ),

evaluated on the finer of the two quadrature rules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _sweeps
from .kernels import COINCIDENCE_RADIUS
from .solver import ParticleEnsemble, SgState, VelocityGrid, _variation_antisym_all, blob_density


@dataclass(frozen=True)
class MomentRecord:
    """One diagnostics row: scalar observables at a time for one z-statistic."""

    time: float
    statistic: str
    mass: float
    momentum_x: float
    momentum_y: float
    energy: float
    m4: float
    temp_x: float
    temp_y: float
    entropy: float
    dissipation: float

    COLUMNS = (
        "t",
        "statistic",
        "mass",
        "px",
        "py",
        "energy",
        "M4",
        "Tx",
        "Ty",
        "H",
        "D",
    )

    def values(self) -> tuple:
        return (
            self.time,
            self.statistic,
            self.mass,
            self.momentum_x,
            self.momentum_y,
            self.energy,
            self.m4,
            self.temp_x,
            self.temp_y,
            self.entropy,
            self.dissipation,
        )


def moments(ensemble: ParticleEnsemble) -> dict[str, float]:
    """Mass, momentum, energy, fourth moment and central axis temperatures."""
    v, w = ensemble.velocities, ensemble.weights
    mass = float(w.sum())
    px = float(np.dot(w, v[:, 0]))
    py = float(np.dot(w, v[:, 1]))
    r2 = np.sum(v * v, axis=1)
    mean = np.array([px, py]) / mass
    return {
        "mass": mass,
        "px": px,
        "py": py,
        "energy": float(np.dot(w, r2)),
        "m4": float(np.dot(w, r2 * r2)),
        "temp_x": float(np.dot(w, (v[:, 0] - mean[0]) ** 2)) / mass,
        "temp_y": float(np.dot(w, (v[:, 1] - mean[1]) ** 2)) / mass,
    }


def discrete_entropy(ensemble: ParticleEnsemble) -> tuple[float, float]:
    """Discrete entropy H = sum_i w_i log(ftilde(v_i)) and its dissipation D >= 0."""
    g, ftilde = _variation_antisym_all(ensemble)
    _, dissipation = _sweeps.collision_sums(
        ensemble.velocities,
        ensemble.weights,
        g,
        ensemble.params.gamma,
        ensemble.params.strength,
        COINCIDENCE_RADIUS**2,
    )
    return float(np.dot(ensemble.weights, np.log(ftilde))), float(dissipation)


def _weighted_stats(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    mean = float(np.dot(weights, values))
    var = float(np.dot(weights, values**2) - mean**2)
    return mean, var


def moment_rows(
    state: SgState,
    entropy_per_node: np.ndarray,
    dissipation_per_node: np.ndarray,
) -> list[MomentRecord]:
    """Per-node rows plus expectation and variance rows at the state's time."""
    nodal = state.nodal_velocities()
    num_nodes = state.basis.num_nodes
    cols = np.empty((num_nodes, 9))
    rows = []
    for l in range(num_nodes):
        m = moments(state.nodal_ensemble(l, nodal[l]))
        cols[l] = (
            m["mass"],
            m["px"],
            m["py"],
            m["energy"],
            m["m4"],
            m["temp_x"],
            m["temp_y"],
            entropy_per_node[l],
            dissipation_per_node[l],
        )
        rows.append(MomentRecord(state.time, f"node{l:02d}", *cols[l]))
    omega = np.asarray(state.basis.weights)
    stats = [_weighted_stats(cols[:, k], omega) for k in range(9)]
    rows.append(MomentRecord(state.time, "expectation", *(s[0] for s in stats)))
    rows.append(MomentRecord(state.time, "variance", *(s[1] for s in stats)))
    return rows


@dataclass(frozen=True)
class DensityField:
    """Blob density on a velocity grid for one z-statistic."""

    grid: VelocityGrid
    values: np.ndarray
    statistic: str
    time: float

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.spacing**2)


def _nodal_density_fields(state: SgState, grid: VelocityGrid) -> np.ndarray:
    """Blob density of every nodal ensemble on the grid, shape (L, n_g, n_g)."""
    points = grid.cell_centers()
    nodal = state.nodal_velocities()
    n_g = grid.points_per_dim
    out = np.empty((state.basis.num_nodes, n_g, n_g))
    for l in range(state.basis.num_nodes):
        eps = state.params_at_nodes[l].epsilon
        f = _sweeps.grid_blob_density(points, np.ascontiguousarray(nodal[l]), state.weights, eps)
        out[l] = f.reshape(n_g, n_g)
    return out


def density_field(
    source: SgState | ParticleEnsemble,
    grid: VelocityGrid,
    statistic: str | int = "expectation",
    time: float | None = None,
) -> DensityField:
    """Density field for a node index, the expectation, or the variance over z.

    A plain ensemble is its own (only) node; variance is clamped to zero where
    quadrature round-off makes it negative.
    """
    if isinstance(source, ParticleEnsemble):
        n_g = grid.points_per_dim
        values = blob_density(source, grid.cell_centers()).reshape(n_g, n_g)
        return DensityField(grid, values, "nodal", 0.0 if time is None else time)
    fields = _nodal_density_fields(source, grid)
    omega = np.asarray(source.basis.weights)
    t = source.time if time is None else time
    if isinstance(statistic, (int, np.integer)):
        return DensityField(grid, fields[int(statistic)], f"node{int(statistic):02d}", t)
    expectation = np.tensordot(omega, fields, axes=([0], [0]))
    if statistic == "expectation":
        return DensityField(grid, expectation, "expectation", t)
    if statistic == "variance":
        second = np.tensordot(omega, fields**2, axes=([0], [0]))
        return DensityField(grid, np.maximum(second - expectation**2, 0.0), "variance", t)
    raise ValueError(f"unknown statistic {statistic!r}")


def m4_at(state: SgState, z_points: np.ndarray) -> np.ndarray:
    """Fourth moment sum_i w_i |v_i(z)|^4 at each given parameter point."""
    z_points = np.asarray(z_points, dtype=float)
    out = np.empty(z_points.shape[0])
    for idx in range(z_points.shape[0]):
        v = state.velocities_at(z_points[idx])
        r2 = np.sum(v * v, axis=1)
        out[idx] = float(np.dot(state.weights, r2 * r2))
    return out


def sg_error_m4(state: SgState, reference: SgState) -> float:
    """Weighted l2-in-z mismatch of the fourth moment against a finer reference."""
    if state.num_particles != reference.num_particles:
        raise ValueError(
            f"particle counts differ: {state.num_particles} vs {reference.num_particles}"
        )
    finer = reference if reference.basis.num_nodes >= state.basis.num_nodes else state
    nodes = np.asarray(finer.basis.nodes)
    omega = np.asarray(finer.basis.weights)
    diff = m4_at(reference, nodes) - m4_at(state, nodes)
    return float(np.sqrt(np.dot(omega, diff**2)))


def l2_relative_density_error(
    state: SgState,
    analytic,
    grid: VelocityGrid,
    time: float | None = None,
) -> tuple[np.ndarray, float]:
    """Relative l2 density error against an analytic density, per node and expected.

    ``analytic(points, z, t)`` must be strictly positive on the grid; the error
    at each node is the midpoint-rule value of
    sqrt( integral |f_exact - f_blob|^2 / |f_exact|^2 dv ).
    """
    points = grid.cell_centers()
    fields = _nodal_density_fields(state, grid)
    omega = np.asarray(state.basis.weights)
    nodes = np.asarray(state.basis.nodes)
    t = state.time if time is None else time
    h2 = grid.spacing**2
    per_node = np.empty(state.basis.num_nodes)
    for l in range(state.basis.num_nodes):
        exact = analytic(points, nodes[l], t)
        if np.any(exact <= 0):
            raise ValueError("analytic density must be strictly positive on the grid")
        ratio = (exact - fields[l].ravel()) ** 2 / exact**2
        per_node[l] = np.sqrt(h2 * ratio.sum())
    return per_node, float(np.dot(omega, per_node))
