"""Pure mathematical kernels shared by every solver path.

The mollifier is the Gaussian of variance eps in d = 2,

    psi_eps(q) = exp(-|q|^2 / (2 eps)) / (2 pi eps),

and the interaction matrix acts matrix-free as

    A(q) b = C |q|^(gamma+2) (b - (q.b) q / |q|^2),

i.e. the projection of b onto the plane perpendicular to q, scaled by the
power-law cross-section.  The output is orthogonal to q, which is what makes
momentum and energy conservation structural rather than approximate.

Coincident pairs: A(q) b is returned as zero for |q| below a small guard radius.
In the particle sums the diagonal term vanishes identically (b(v, v) = 0), so
zero is the value of every well-defined limit, and it avoids overflow for soft
potentials where gamma + 2 < 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# pairs closer than this are treated as coincident (soft potentials would
# otherwise amplify round-off through |q|^(gamma+2) with a negative exponent)
COINCIDENCE_RADIUS = 1e-10


@dataclass(frozen=True)
class CollisionParams:
    """Interaction exponent, strength, dimension and mollifier variance."""

    gamma: float
    strength: float = 1.0 / 16.0
    epsilon: float = 0.01
    dimension: int = 2

    def __post_init__(self):
        if self.strength <= 0:
            raise ValueError(f"collision strength must be positive, got {self.strength}")
        if self.epsilon <= 0:
            raise ValueError(f"mollifier variance must be positive, got {self.epsilon}")
        if self.dimension != 2:
            raise ValueError("only dimension 2 is implemented")
        if not -self.dimension - 1.0 <= self.gamma <= 1.0:
            raise ValueError(
                f"exponent {self.gamma} outside the admissible range "
                f"[{-self.dimension - 1.0}, 1]"
            )


def mollifier(q: np.ndarray, epsilon: float) -> float | np.ndarray:
    """Gaussian mollifier psi_eps(q); q may be a single vector or an (..., 2) array."""
    if epsilon <= 0:
        raise ValueError(f"mollifier variance must be positive, got {epsilon}")
    q = np.asarray(q, dtype=float)
    r2 = np.sum(q * q, axis=-1)
    return np.exp(-r2 / (2.0 * epsilon)) / (2.0 * np.pi * epsilon)


def mollifier_gradient(q: np.ndarray, epsilon: float) -> np.ndarray:
    """Gradient of the mollifier, -(q / eps) psi_eps(q); anti-symmetric in q."""
    q = np.asarray(q, dtype=float)
    return -(q / epsilon) * np.asarray(mollifier(q, epsilon))[..., None]


def collision_apply(q: np.ndarray, b: np.ndarray, params: CollisionParams) -> np.ndarray:
    """Matrix-free A(q) b; zero for |q| below the coincidence guard.

    Broadcasts over leading axes of q and b (trailing axis is the component).
    """
    q = np.asarray(q, dtype=float)
    b = np.asarray(b, dtype=float)
    r2 = np.sum(q * q, axis=-1)
    safe = r2 >= COINCIDENCE_RADIUS**2
    r2s = np.where(safe, r2, 1.0)
    factor = params.strength * r2s ** (0.5 * (params.gamma + 2.0))
    perp = b - (np.sum(q * b, axis=-1) / r2s)[..., None] * q
    return np.where(safe[..., None], factor[..., None] * perp, 0.0)
