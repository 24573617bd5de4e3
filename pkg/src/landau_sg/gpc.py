"""Orthonormal polynomial bases and Gaussian quadrature on the parameter interval [0, 1].

A random parameter z with density p(z) on [0, 1] (uniform, or Beta(alpha, beta))
gets an orthonormal polynomial family {Psi_m} with

    sum_l Psi_m(z_l) Psi_n(z_l) omega_l = delta_{mn},

where (z_l, omega_l) is the L-point Gauss rule of the same measure.  The rule is
exact for polynomials of degree <= 2L-1, and the weights absorb p(z), so they sum
to one.  Uniform maps to (shifted) Legendre polynomials and Beta to Jacobi
polynomials; both families are generated from the three-term recurrence of the
measure, and the quadrature from the eigendecomposition of its Jacobi matrix
(Golub-Welsch).

Convention note: the Jacobi weight (1-x)^a (1+x)^b on [-1, 1] corresponds, after
x = 2z - 1, to the Beta(alpha, beta) density with a = beta - 1 and b = alpha - 1.
The order swap is deliberate and is pinned by the Beta-moment tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal


@dataclass(frozen=True)
class Uniform01:
    """Uniform distribution on [0, 1]."""

    def jacobi_exponents(self) -> tuple[float, float]:
        return 0.0, 0.0

    def label(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class Beta:
    """Beta(alpha, beta) distribution on [0, 1], density z^(a-1) (1-z)^(b-1) / B(a, b)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    def jacobi_exponents(self) -> tuple[float, float]:
        # weight (1-x)^a (1+x)^b on [-1,1]; order swap per the weight-function convention
        return self.beta - 1.0, self.alpha - 1.0

    def label(self) -> str:
        return f"beta({self.alpha:g},{self.beta:g})"


Distribution = Uniform01 | Beta


def recurrence_coefficients(distribution: Distribution, n: int) -> tuple[np.ndarray, np.ndarray]:
    """First n rows (a_k, b_k) of the Jacobi matrix of the probability measure on [0, 1].

    Monic recurrence pi_{k+1}(z) = (z - a_k) pi_k(z) - b_k pi_{k-1}(z), with
    b_0 = 1 (the measure has unit mass).
    """
    a, b = distribution.jacobi_exponents()
    k = np.arange(n, dtype=float)
    denom = 2.0 * k + a + b
    alpha = np.empty(n)
    alpha[0] = (b - a) / (a + b + 2.0)
    if n > 1:
        alpha[1:] = (b * b - a * a) / (denom[1:] * (denom[1:] + 2.0))
    beta = np.empty(n)
    beta[0] = 1.0
    if n > 1:
        kk = k[1:]
        beta[1:] = (
            4.0 * kk * (kk + a) * (kk + b) * (kk + a + b)
            / (denom[1:] ** 2 * (denom[1:] + 1.0) * (denom[1:] - 1.0))
        )
    # map [-1, 1] -> [0, 1]
    return (alpha + 1.0) / 2.0, beta / np.where(np.arange(n) == 0, 1.0, 4.0)


def gauss_quadrature(distribution: Distribution, num_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule (nodes, weights) for the distribution; exact to degree 2L - 1.

    Nodes are interior to [0, 1]; weights are positive and sum to one.
    """
    if num_nodes < 1:
        raise ValueError(f"need at least one quadrature node, got {num_nodes}")
    a, b = recurrence_coefficients(distribution, num_nodes)
    if num_nodes == 1:
        return a[:1].copy(), np.ones(1)
    nodes, vectors = eigh_tridiagonal(a, np.sqrt(b[1:]))
    weights = vectors[0, :] ** 2
    weights /= weights.sum()
    return nodes, weights


def _orthonormal_table(a: np.ndarray, b: np.ndarray, z: np.ndarray, order: int) -> np.ndarray:
    """Evaluate the orthonormal family p_0..p_order at points z, shape (order+1, len(z))."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    table = np.empty((order + 1, z.size))
    table[0] = 1.0
    if order >= 1:
        table[1] = (z - a[0]) / np.sqrt(b[1])
    for m in range(1, order):
        table[m + 1] = ((z - a[m]) * table[m] - np.sqrt(b[m]) * table[m - 1]) / np.sqrt(b[m + 1])
    return table


@dataclass(frozen=True)
class GpcBasis:
    """Orthonormal basis of one random parameter with its Gauss rule.

    ``table[m, l] = Psi_m(z_l)`` satisfies the discrete orthonormality invariant;
    the stored norm scales make ``eval_modes`` consistent with the table at
    arbitrary z in [0, 1].
    """

    distribution: Distribution
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    table: np.ndarray
    _rec_a: np.ndarray = field(repr=False)
    _rec_b: np.ndarray = field(repr=False)
    _scales: np.ndarray = field(repr=False)

    @property
    def num_modes(self) -> int:
        return self.order + 1

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def z_dim(self) -> int:
        return 1

    def eval_modes(self, z) -> np.ndarray:
        """Psi_m(z) for all modes; shape (num_modes,) for scalar z, else (num_modes, len(z))."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z_arr < 0.0) or np.any(z_arr > 1.0):
            raise ValueError("parameter value outside the domain [0, 1]")
        out = _orthonormal_table(self._rec_a, self._rec_b, z_arr, self.order)
        out *= self._scales[:, None]
        return out[:, 0] if np.isscalar(z) or np.ndim(z) == 0 else out


def build_basis(distribution: Distribution, order: int, num_nodes: int | None = None) -> GpcBasis:
    """Construct the orthonormal basis of degree <= order with an L-point Gauss rule.

    Defaults to L = 2(order + 1) nodes, giving exactness margin for integrands
    that are nonlinear in z.  Requires L >= order + 1.
    """
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    if num_nodes is None:
        num_nodes = 2 * (order + 1)
    if num_nodes < order + 1:
        raise ValueError(f"need at least order+1={order + 1} nodes, got {num_nodes}")
    nodes, weights = gauss_quadrature(distribution, num_nodes)
    a, b = recurrence_coefficients(distribution, order + 1)
    raw = _orthonormal_table(a, b, nodes, order)
    # pin the discrete norms to one exactly (they are already 1 + O(eps))
    scales = 1.0 / np.sqrt(np.einsum("ml,l->m", raw**2, weights))
    return GpcBasis(
        distribution=distribution,
        order=order,
        nodes=nodes,
        weights=weights,
        table=raw * scales[:, None],
        _rec_a=a,
        _rec_b=b,
        _scales=scales,
    )


@dataclass(frozen=True)
class TensorGpcBasis:
    """Product basis for two independent parameters, flattened to single indices.

    Modes are ordered m = m1 * (M2 + 1) + m2 and nodes l = l1 * L2 + l2, so the
    flat ``table``/``weights`` plug into the same projection machinery as the
    one-dimensional basis.  ``nodes`` has shape (L, 2).
    """

    basis_1: GpcBasis
    basis_2: GpcBasis
    nodes: np.ndarray
    weights: np.ndarray
    table: np.ndarray

    @property
    def num_modes(self) -> int:
        return self.basis_1.num_modes * self.basis_2.num_modes

    @property
    def num_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def z_dim(self) -> int:
        return 2

    @property
    def orders(self) -> tuple[int, int]:
        return self.basis_1.order, self.basis_2.order

    def eval_modes(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (2,):
            raise ValueError(f"expected a 2-component parameter, got shape {z.shape}")
        e1 = self.basis_1.eval_modes(z[0])
        e2 = self.basis_2.eval_modes(z[1])
        return np.kron(e1, e2)


def tensor_basis(basis_1: GpcBasis, basis_2: GpcBasis) -> TensorGpcBasis:
    """Tensorize two one-dimensional bases (statistically independent components)."""
    z1, z2 = np.meshgrid(basis_1.nodes, basis_2.nodes, indexing="ij")
    nodes = np.column_stack([z1.ravel(), z2.ravel()])
    weights = np.kron(basis_1.weights, basis_2.weights)
    table = np.kron(basis_1.table, basis_2.table)
    return TensorGpcBasis(basis_1, basis_2, nodes, weights, table)


AnyBasis = GpcBasis | TensorGpcBasis


def project(nodal_values: np.ndarray, basis: AnyBasis) -> np.ndarray:
    """Discrete projection of per-node data onto the basis.

    ``nodal_values`` has shape (L, ...); returns coefficients of shape (K, ...)
    with ``coeff_m = sum_l nodal[l] Psi_m(z_l) omega_l`` applied componentwise.
    """
    nodal_values = np.asarray(nodal_values, dtype=float)
    if nodal_values.shape[0] != basis.num_nodes:
        raise ValueError(
            f"nodal data has {nodal_values.shape[0]} rows, basis has {basis.num_nodes} nodes"
        )
    return np.tensordot(basis.table * basis.weights, nodal_values, axes=([1], [0]))


def evaluate(coefficients: np.ndarray, basis: AnyBasis, z=None) -> np.ndarray:
    """Reconstruct sum_m coeff_m Psi_m(z); at all quadrature nodes when z is None.

    Returns shape (L, ...) for z None, (...) for a single z.  Together with
    :func:`project` this is the identity on nodal data polynomial of degree <= M.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape[0] != basis.num_modes:
        raise ValueError(
            f"coefficient array has {coefficients.shape[0]} modes, basis has {basis.num_modes}"
        )
    modes = basis.table if z is None else basis.eval_modes(z)
    return np.tensordot(modes, coefficients, axes=([0], [0]))
