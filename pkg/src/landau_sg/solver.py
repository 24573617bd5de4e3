"""Particle state and the regularized interaction dynamics.

The ensemble of N weighted velocities evolves by

    dv_i/dt = U(v_i) = - sum_j w_j A(v_i - v_j) (g_i - g_j),

where g_i is the gradient of the variation of a regularized entropy.  Two
regularizations are provided:

* ``antisymmetric`` (default, fully discrete): with ftilde the blob density,

      g_i = grad ftilde(v_i) / ftilde(v_i)
            + sum_k w_k grad psi_eps(v_i - v_k) / ftilde(v_k);

* ``symmetric`` (semi-discrete; needs a velocity grid):

      g_i = integral grad psi_eps(v_i - y) log(ftilde(y)) dy,

  approximated with the midpoint rule on the grid.

Because A(q) projects onto the perpendicular of q and the pair term enters with
opposite signs at its two endpoints, mass, momentum and energy are conserved by
the semi-discrete flow, and the forward Euler step inherits them up to an
O(dt^2) energy drift.  The same step applied at every quadrature node of a gPC
basis, followed by projection of the nodal fields, advances the coefficient
array of the stochastic-Galerkin state.

Uncertain exponents are resolved per quadrature node once at setup; the general
power law |q|^(gamma+2) is evaluated as exp((gamma+2) log|q|) behind the
coincidence guard.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _sweeps
from .gpc import AnyBasis
from .kernels import COINCIDENCE_RADIUS, CollisionParams

REGULARIZATIONS = ("antisymmetric", "symmetric")

# floor applied to grid densities before taking logs: far-field cells underflow
# to zero exactly, where the mollifier gradient vanishes as well
_LOG_FLOOR = 1e-300


class TruncationWarning(UserWarning):
    """A particle sits too close to the velocity-grid boundary for quadrature."""


@dataclass(frozen=True)
class ParticleEnsemble:
    """N weighted velocities in d = 2; the empirical measure of the solution."""

    velocities: np.ndarray
    weights: np.ndarray
    params: CollisionParams

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.velocities, dtype=float))
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"velocities must have shape (N, 2), got {v.shape}")
        if w.shape != (v.shape[0],):
            raise ValueError("weights must be a vector matching the particle count")
        if np.any(w <= 0):
            raise ValueError("particle weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"particle weights must sum to one, got {w.sum()!r}")
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.velocities.shape[0]


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered grid on [-extent, extent]^2 for midpoint quadrature."""

    extent: float
    points_per_dim: int

    def __post_init__(self):
        if self.extent <= 0 or self.points_per_dim < 1:
            raise ValueError("grid needs positive extent and at least one point per axis")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points_per_dim

    @property
    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.extent + h * (np.arange(self.points_per_dim) + 0.5)

    def cell_centers(self) -> np.ndarray:
        """All midpoints as an (n_g^2, 2) array, row-major in (x, y)."""
        x, y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])


def default_extent(axis_temperature_max: float) -> float:
    """Grid half-width covering 5.2 standard deviations of the hottest Maxwellian.

    Leaves less than 5e-7 of the mass outside the box, so density fields
    integrate to one within the 1e-6 output tolerance.
    """
    return 5.2 * np.sqrt(axis_temperature_max)


def default_epsilon(num_particles: int, extent: float) -> float:
    """Mollifier variance eps = h^2 with h the per-dimension spacing 2 extent / sqrt(N)."""
    n_side = int(round(np.sqrt(num_particles)))
    return (2.0 * extent / max(n_side, 1)) ** 2


def blob_density(ensemble: ParticleEnsemble, at: np.ndarray) -> float | np.ndarray:
    """Smoothed (blob) density at one point or an (..., 2) array of points."""
    at = np.asarray(at, dtype=float)
    single = at.ndim == 1
    pts = np.ascontiguousarray(at.reshape(-1, 2))
    out = _sweeps.grid_blob_density(
        pts, ensemble.velocities, ensemble.weights, ensemble.params.epsilon
    )
    return float(out[0]) if single else out.reshape(at.shape[:-1])


def _variation_antisym_all(ensemble: ParticleEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Fully discrete variation gradient g at every particle, plus the blob density."""
    v, w = ensemble.velocities, ensemble.weights
    eps = ensemble.params.epsilon
    ftilde, grad = _sweeps.mollifier_sums(v, w, eps)
    score = _sweeps.score_sums(v, np.ascontiguousarray(w / ftilde), eps)
    return grad / ftilde[:, None] + score, ftilde


def entropy_variation_antisym(ensemble: ParticleEnsemble, particle_index: int) -> np.ndarray:
    """Variation gradient of the fully discrete entropy at one particle."""
    g, _ = _variation_antisym_all(ensemble)
    return g[particle_index]


def _variation_sym_all(ensemble: ParticleEnsemble, grid: VelocityGrid) -> np.ndarray:
    v, w = ensemble.velocities, ensemble.weights
    eps = ensemble.params.epsilon
    margin = grid.extent - 6.0 * np.sqrt(eps)
    if np.any(np.abs(v) > margin):
        warnings.warn(
            "particles within six mollifier widths of the grid boundary; "
            "the midpoint quadrature of the entropy variation is truncated",
            TruncationWarning,
            stacklevel=3,
        )
    cells = grid.cell_centers()
    log_f = np.log(np.maximum(_sweeps.grid_blob_density(cells, v, w, eps), _LOG_FLOOR))
    h2 = grid.spacing**2
    g = np.zeros((ensemble.size, 2))
    # block over cells to bound the (N, block, 2) temporaries
    block = max(1, 2_000_000 // max(ensemble.size, 1))
    pref = 1.0 / (2.0 * np.pi * eps)
    for start in range(0, cells.shape[0], block):
        sl = slice(start, start + block)
        diff = v[:, None, :] - cells[None, sl, :]
        psi = pref * np.exp(-np.sum(diff**2, axis=-1) / (2.0 * eps))
        g += h2 * np.einsum("nc,ncd,c->nd", psi, -diff / eps, log_f[sl])
    return g


def entropy_variation_sym(
    ensemble: ParticleEnsemble, particle_index: int, grid: VelocityGrid
) -> np.ndarray:
    """Variation gradient of the symmetric entropy at one particle (midpoint quadrature)."""
    return _variation_sym_all(ensemble, grid)[particle_index]


def velocity_field(
    ensemble: ParticleEnsemble,
    regularization: str = "antisymmetric",
    grid: VelocityGrid | None = None,
    with_extras: bool = False,
):
    """Right-hand side U at every particle; optionally also (ftilde, dissipation).

    The i = j pair contributes zero by construction.  ``with_extras`` is only
    available with the anti-symmetric regularization, where the blob density at
    the particles and the entropy dissipation come for free.
    """
    if regularization not in REGULARIZATIONS:
        raise ValueError(f"unknown regularization {regularization!r}")
    if regularization == "symmetric":
        if grid is None:
            raise ValueError("the symmetric regularization requires a velocity grid")
        g = _variation_sym_all(ensemble, grid)
        ftilde = None
    else:
        g, ftilde = _variation_antisym_all(ensemble)
    u, dissipation = _sweeps.collision_sums(
        ensemble.velocities,
        ensemble.weights,
        g,
        ensemble.params.gamma,
        ensemble.params.strength,
        COINCIDENCE_RADIUS**2,
    )
    if with_extras:
        return u, ftilde, dissipation
    return u


def _entropy_of_ensemble(
    ensemble: ParticleEnsemble,
    regularization: str,
    grid: VelocityGrid | None,
    ftilde: np.ndarray | None,
) -> float:
    """Regularized entropy: discrete form when fully discrete, else grid quadrature."""
    if regularization == "antisymmetric":
        if ftilde is None:
            ftilde, _ = _sweeps.mollifier_sums(
                ensemble.velocities, ensemble.weights, ensemble.params.epsilon
            )
        return float(np.dot(ensemble.weights, np.log(ftilde)))
    f_grid = _sweeps.grid_blob_density(
        grid.cell_centers(), ensemble.velocities, ensemble.weights, ensemble.params.epsilon
    )
    f_grid = np.maximum(f_grid, _LOG_FLOOR)
    return float(grid.spacing**2 * np.sum(f_grid * np.log(f_grid)))


def euler_step(
    ensemble: ParticleEnsemble,
    dt: float,
    regularization: str = "antisymmetric",
    grid: VelocityGrid | None = None,
) -> ParticleEnsemble:
    """One forward Euler step; weights are untouched."""
    if dt < 0:
        raise ValueError(f"time step must be nonnegative, got {dt}")
    u = velocity_field(ensemble, regularization, grid)
    v_new = ensemble.velocities + dt * u
    if np.any(np.isnan(v_new)):
        raise FloatingPointError("NaN velocity after Euler step")
    return replace(ensemble, velocities=v_new)


@dataclass(frozen=True)
class SgState:
    """Stochastic-Galerkin state: per-particle coefficient rows over a gPC basis.

    ``coefficients[i, m, :]`` is the m-th coefficient of particle i; evaluating
    all modes at a quadrature node yields a plain ensemble with the shared
    weights and that node's collision parameters.
    """

    coefficients: np.ndarray
    basis: AnyBasis
    weights: np.ndarray
    params_at_nodes: tuple[CollisionParams, ...]
    time: float = 0.0

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coefficients, dtype=float))
        if c.ndim != 3 or c.shape[1] != self.basis.num_modes or c.shape[2] != 2:
            raise ValueError(
                f"coefficients must have shape (N, {self.basis.num_modes}, 2), got {c.shape}"
            )
        if len(self.params_at_nodes) != self.basis.num_nodes:
            raise ValueError("need one parameter set per quadrature node")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "weights", np.ascontiguousarray(np.asarray(self.weights, float)))

    @property
    def num_particles(self) -> int:
        return self.coefficients.shape[0]

    def nodal_velocities(self) -> np.ndarray:
        """Velocities at every quadrature node, shape (L, N, 2)."""
        return np.einsum("nkd,kl->lnd", self.coefficients, self.basis.table)

    def velocities_at(self, z) -> np.ndarray:
        """Velocities at an arbitrary parameter value, shape (N, 2)."""
        return np.einsum("nkd,k->nd", self.coefficients, self.basis.eval_modes(z))

    def nodal_ensemble(self, node: int, velocities: np.ndarray | None = None) -> ParticleEnsemble:
        if velocities is None:
            velocities = self.nodal_velocities()[node]
        return ParticleEnsemble(velocities, self.weights, self.params_at_nodes[node])


def sg_state_from_nodal(
    nodal_velocities: np.ndarray,
    basis: AnyBasis,
    weights: np.ndarray,
    params_at_nodes: tuple[CollisionParams, ...],
    time: float = 0.0,
) -> SgState:
    """Project per-node velocities (L, N, 2) onto the basis to form a state."""
    coeff = np.einsum(
        "lnd,ml,l->nmd", np.asarray(nodal_velocities, float), basis.table, basis.weights
    )
    return SgState(coeff, basis, weights, params_at_nodes, time)


@dataclass(frozen=True)
class SgRhsResult:
    """Per-step products of one right-hand-side evaluation.

    ``coefficient_rhs`` drives the step; the per-node entropy, dissipation and
    field magnitude sum_i w_i |U_i|^2 feed the diagnostics at no extra sweeps.
    """

    coefficient_rhs: np.ndarray
    entropy: np.ndarray
    dissipation: np.ndarray
    field_square: np.ndarray


def sg_rhs_full(
    state: SgState,
    regularization: str = "antisymmetric",
    grid: VelocityGrid | None = None,
) -> SgRhsResult:
    """Evaluate the nodal velocity fields and project them back to coefficients."""
    nodal = state.nodal_velocities()
    num_nodes = state.basis.num_nodes
    n = state.num_particles
    u_nodes = np.empty((num_nodes, n, 2))
    entropy = np.empty(num_nodes)
    dissipation = np.empty(num_nodes)
    field_square = np.empty(num_nodes)
    for l in range(num_nodes):
        ens = state.nodal_ensemble(l, nodal[l])
        u, ftilde, d = velocity_field(ens, regularization, grid, with_extras=True)
        entropy[l] = _entropy_of_ensemble(ens, regularization, grid, ftilde)
        u_nodes[l] = u
        dissipation[l] = d
        field_square[l] = float(np.dot(state.weights, np.sum(u * u, axis=1)))
    coeff_rhs = np.einsum("lnd,ml,l->nmd", u_nodes, state.basis.table, state.basis.weights)
    return SgRhsResult(coeff_rhs, entropy, dissipation, field_square)


def sg_rhs(
    state: SgState,
    regularization: str = "antisymmetric",
    grid: VelocityGrid | None = None,
) -> np.ndarray:
    """Time derivative of the coefficient array, shape (N, K, 2)."""
    return sg_rhs_full(state, regularization, grid).coefficient_rhs


def apply_sg_step(state: SgState, coefficient_rhs: np.ndarray, dt: float) -> SgState:
    """Advance coefficients by one forward Euler increment."""
    coeff = state.coefficients + dt * coefficient_rhs
    if np.any(np.isnan(coeff)):
        raise FloatingPointError(f"NaN coefficient after step at t = {state.time!r}")
    return replace(state, coefficients=coeff, time=state.time + dt)


def sg_euler_step(
    state: SgState,
    dt: float,
    regularization: str = "antisymmetric",
    grid: VelocityGrid | None = None,
) -> SgState:
    """One forward Euler step of the coefficient system."""
    if dt < 0:
        raise ValueError(f"time step must be nonnegative, got {dt}")
    return apply_sg_step(state, sg_rhs(state, regularization, grid), dt)
