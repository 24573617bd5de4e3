"""Initial conditions and analytic references for the validation suite.

Samplers draw one set of underlying uniforms per (seed, N) and transform it per
parameter value, so ensembles at different z (and different expansion orders)
share their sampling noise and convergence studies in the polynomial order are
not polluted by resampling.  All transforms are exact inverse-CDF or Box-Muller
maps; no rejection.

Analytic references:

* the closed-form self-similar solution of the Maxwell case (BKW), with width
      K(t, z) = T(z) (1 - exp(-t/8) / 2),
  whose t = 0 profile equals the radially bimodal initial density
  |v|^2 exp(-|v|^2/T) / (pi T^2): substituting K = T/2 cancels the constant
  term and leaves exactly that profile, which is why one sampler serves both;
* Trubnikov's relaxation law Delta T(t) ~ Delta T(0) exp(-t/tau) with
  tau = 1/(8 C rho) for Maxwell molecules and tau = 4 T^(3/2) / (C rho sqrt(pi))
  for the Coulomb case (rho = 1 throughout, matching unit total weight).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import CollisionParams
from .solver import ParticleEnsemble, SgState, sg_state_from_nodal, uniform_weights


@dataclass(frozen=True)
class AffineMap:
    """Affine parameter map z -> const + slope * z[component]."""

    const: float
    slope: float = 0.0
    component: int = 0

    def at(self, z) -> float:
        """Value at a single parameter point (scalar or 2-vector)."""
        if self.slope == 0.0:
            return self.const
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return float(self.const + self.slope * z[self.component])

    def at_nodes(self, nodes: np.ndarray) -> np.ndarray:
        """Values at an array of parameter points, one per leading row."""
        nodes = np.asarray(nodes, dtype=float)
        if self.slope == 0.0:
            return np.full(nodes.shape[0], self.const)
        zc = nodes[:, self.component] if nodes.ndim == 2 else nodes
        return self.const + self.slope * zc

    @property
    def is_constant(self) -> bool:
        return self.slope == 0.0

    @property
    def z_dim(self) -> int:
        return 1 if self.is_constant else self.component + 1


def gamma2_inverse_cdf(u: np.ndarray, tol: float = 1e-14, max_iter: int = 64) -> np.ndarray:
    """Inverse CDF of Gamma(shape 2, scale 1), F(x) = 1 - (1 + x) exp(-x).

    Newton iteration from an asymptotic starting point; accurate to ~1e-14
    relative over the full uniform range.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u >= 1.0)):
        raise ValueError("uniform variates must lie in [0, 1)")
    x = np.maximum(np.sqrt(2.0 * u), -np.log1p(-u))
    for _ in range(max_iter):
        emx = np.exp(-x)
        f = -np.expm1(-x) - x * emx - u  # F(x) - u, written cancellation-free
        x_new = np.clip(x - f / np.maximum(x * emx, 1e-300), 0.0, 750.0)
        if np.all(np.abs(x_new - x) <= tol * (1.0 + x)):
            return x_new
        x = x_new
    return x


def _box_muller(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)


class BimodalRadial:
    """Radially symmetric bimodal density |v|^2 exp(-|v|^2/T(z)) / (pi T(z)^2).

    The squared radius is Gamma(shape 2, scale T); sampling draws the unit-scale
    radius by inverse CDF and a uniform angle, so the z-dependence is a pure
    radial rescaling of one base draw.
    """

    def __init__(self, temperature: AffineMap):
        self.temperature = temperature

    @property
    def depends_on_z(self) -> bool:
        return not self.temperature.is_constant

    @property
    def z_dim(self) -> int:
        return self.temperature.z_dim

    def base_draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        x = gamma2_inverse_cdf(u[:, 0])
        angle = 2.0 * np.pi * u[:, 1]
        return np.sqrt(x)[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])

    def transform(self, base: np.ndarray, z) -> np.ndarray:
        return np.sqrt(self.temperature.at(z)) * base

    def density(self, v: np.ndarray, z) -> np.ndarray:
        t = self.temperature.at(z)
        r2 = np.sum(np.asarray(v, float) ** 2, axis=-1)
        return r2 / (np.pi * t**2) * np.exp(-r2 / t)

    def axis_temperature(self, z) -> float:
        # E|v|^2 = 2T, hence per-axis variance T
        return self.temperature.at(z)


class Bkw(BimodalRadial):
    """Initial profile of the closed-form Maxwell-case solution.

    At t = 0 the solution reduces algebraically to the radial bimodal density
    with the same temperature, so sampling is inherited.
    """

    def density(self, v: np.ndarray, z) -> np.ndarray:
        return bkw_density(v, 0.0, z, self.temperature)


class AnisotropicGaussian:
    """Centered Gaussian with distinct axis temperatures T_x(z), T_y."""

    def __init__(self, temp_x: AffineMap, temp_y: float):
        self.temp_x = temp_x
        self.temp_y = float(temp_y)

    @property
    def depends_on_z(self) -> bool:
        return not self.temp_x.is_constant

    @property
    def z_dim(self) -> int:
        return self.temp_x.z_dim

    def base_draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        g1, g2 = _box_muller(u[:, 0], u[:, 1])
        return np.column_stack([g1, g2])

    def transform(self, base: np.ndarray, z) -> np.ndarray:
        scale = np.array([np.sqrt(self.temp_x.at(z)), np.sqrt(self.temp_y)])
        return base * scale

    def density(self, v: np.ndarray, z) -> np.ndarray:
        tx, ty = self.temp_x.at(z), self.temp_y
        v = np.asarray(v, float)
        return (
            np.exp(-v[..., 0] ** 2 / (2 * tx) - v[..., 1] ** 2 / (2 * ty))
            / (2 * np.pi * np.sqrt(tx * ty))
        )

    def axis_temperature(self, z) -> float:
        return max(self.temp_x.at(z), self.temp_y)


class TriangleGaussians:
    """Equal mixture of three Gaussians at the vertices of an equilateral triangle.

    The vertices sit on a circle of radius ``radius`` centered at the origin and
    each component has variance T(z); the total temperature of the mixture is
    T(z) + radius^2 / 2, conserved by the dynamics.
    """

    def __init__(self, gaussian_temperature: AffineMap, radius: float):
        self.gaussian_temperature = gaussian_temperature
        self.radius = float(radius)

    @property
    def vertices(self) -> np.ndarray:
        d = self.radius
        s = np.sqrt(3.0) / 2.0
        return np.array([[0.0, d], [-d * s, -d / 2.0], [d * s, -d / 2.0]])

    @property
    def depends_on_z(self) -> bool:
        return not self.gaussian_temperature.is_constant

    @property
    def z_dim(self) -> int:
        return self.gaussian_temperature.z_dim

    def total_temperature(self, z) -> float:
        return self.gaussian_temperature.at(z) + self.radius**2 / 2.0

    def base_draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 3))
        g1, g2 = _box_muller(u[:, 0], u[:, 1])
        component = np.minimum((3.0 * u[:, 2]).astype(np.int64), 2)
        return np.column_stack([g1, g2, component.astype(float)])

    def transform(self, base: np.ndarray, z) -> np.ndarray:
        scale = np.sqrt(self.gaussian_temperature.at(z))
        centers = self.vertices[base[:, 2].astype(np.int64)]
        return centers + scale * base[:, :2]

    def density(self, v: np.ndarray, z) -> np.ndarray:
        t = self.gaussian_temperature.at(z)
        v = np.asarray(v, float)
        out = 0.0
        for c in self.vertices:
            r2 = np.sum((v - c) ** 2, axis=-1)
            out = out + np.exp(-r2 / (2 * t)) / (2 * np.pi * t)
        return out / 3.0

    def axis_temperature(self, z) -> float:
        # per-axis variance of the mixture equals the total temperature
        return self.total_temperature(z)


InitialCondition = BimodalRadial | Bkw | AnisotropicGaussian | TriangleGaussians


def sample_velocities(condition: InitialCondition, n: int, z, seed: int) -> np.ndarray:
    """Velocities sampled at one parameter point, or stacked per node.

    ``z`` is a single point (scalar, or 2-vector matching ``condition.z_dim``),
    or an array of points with one leading row per quadrature node; every row
    comes from the same underlying draw.
    """
    if n < 1:
        raise ValueError(f"need at least one particle, got {n}")
    base = condition.base_draw(n, np.random.default_rng(seed))
    z = np.asarray(z, dtype=float)
    single = z.ndim == 0 or (z.ndim == 1 and condition.z_dim == 2 and z.shape == (2,))
    if single:
        return condition.transform(base, z)
    return np.stack([condition.transform(base, zl) for zl in z])


def sample_initial(
    condition: InitialCondition, n: int, z, seed: int, params: CollisionParams
) -> ParticleEnsemble:
    """Ensemble of n i.i.d. particles from the condition at a single parameter value."""
    return ParticleEnsemble(sample_velocities(condition, n, z, seed), uniform_weights(n), params)


def initial_sg_state(
    condition: InitialCondition,
    n: int,
    basis,
    seed: int,
    params_at_nodes: tuple[CollisionParams, ...],
) -> SgState:
    """Project the per-node initial sample onto the basis.

    For z-independent conditions the higher modes are set to zero exactly
    rather than to the O(eps) residue of the discrete projection.
    """
    if not condition.depends_on_z:
        v0 = sample_velocities(condition, n, np.asarray(basis.nodes)[0], seed)
        coeff = np.zeros((n, basis.num_modes, 2))
        coeff[:, 0, :] = v0
        return SgState(coeff, basis, uniform_weights(n), params_at_nodes, 0.0)
    nodal = sample_velocities(condition, n, basis.nodes, seed)
    return sg_state_from_nodal(nodal, basis, uniform_weights(n), params_at_nodes, 0.0)


def bkw_density(v: np.ndarray, t: float, z, temperature: AffineMap) -> np.ndarray:
    """Closed-form Maxwell-case density at time t and parameter z.

    Positive for t >= 0 (the width satisfies 2K >= T); tends to the Maxwellian
    of temperature T(z) as t grows.
    """
    if t < 0:
        raise ValueError("the closed-form solution is evaluated at t >= 0")
    t_z = temperature.at(z)
    k = t_z * (1.0 - 0.5 * np.exp(-t / 8.0))
    r2 = np.sum(np.asarray(v, float) ** 2, axis=-1)
    return (
        np.exp(-r2 / (2.0 * k))
        / (2.0 * np.pi * k)
        * ((2.0 * k - t_z) / k + (t_z - k) / (2.0 * k**2) * r2)
    )


def trubnikov_tau(potential: str, strength: float, rho: float, temperature) -> float | np.ndarray:
    """Relaxation time of the anisotropy decay law.

    Maxwell molecules: tau = 1/(8 C rho), independent of the temperature.
    Coulomb: tau = 4 T^(3/2) / (C rho sqrt(pi)), per node when T is an array.
    """
    if strength <= 0 or rho <= 0:
        raise ValueError("collision strength and density must be positive")
    if potential == "maxwell":
        return 1.0 / (8.0 * strength * rho)
    if potential == "coulomb":
        t = np.asarray(temperature, dtype=float)
        if np.any(t <= 0):
            raise ValueError("temperature must be positive")
        out = 4.0 * t**1.5 / (strength * rho * np.sqrt(np.pi))
        return float(out) if out.ndim == 0 else out
    raise ValueError(f"unknown potential {potential!r}")


def fit_decay_rate(times: np.ndarray, series: np.ndarray) -> float | np.ndarray:
    """Decay rate of ``series ~ exp(-rate t)`` by least squares on the log.

    ``series`` may be (n_times,) or (n_times, n_nodes); returns a scalar or
    per-node rates.  A nonpositive value truncates the fit window with a
    warning.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    flat = series.ndim == 1
    data = series[:, None] if flat else series
    if times.shape[0] != data.shape[0] or times.shape[0] < 2:
        raise ValueError("need at least two samples with matching times")
    rates = np.empty(data.shape[1])
    for col in range(data.shape[1]):
        y = data[:, col]
        bad = np.nonzero(y <= 0)[0]
        stop = int(bad[0]) if bad.size else y.shape[0]
        if stop < y.shape[0]:
            warnings.warn(
                f"nonpositive values from sample {stop}; fitting on the leading window",
                stacklevel=2,
            )
        if stop < 2:
            raise ValueError("fewer than two positive samples to fit")
        slope = np.polyfit(times[:stop], np.log(y[:stop]), 1)[0]
        rates[col] = -slope
    return float(rates[0]) if flat else rates
