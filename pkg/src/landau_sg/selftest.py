"""Quick structural checks, printed one line each; exit code 0 iff all pass."""

from __future__ import annotations

import numpy as np

from . import gpc
from .benchmarks import AffineMap, BimodalRadial, initial_sg_state
from .diagnostics import moments
from .kernels import CollisionParams, collision_apply
from .runner import write_moments_csv
from .solver import (
    ParticleEnsemble,
    apply_sg_step,
    sg_rhs_full,
    uniform_weights,
    velocity_field,
)


def _check(name: str, ok: bool, detail: str = "") -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
    return ok


def run_selftest() -> int:
    ok = True
    rng = np.random.default_rng(1234)

    basis = gpc.build_basis(gpc.Beta(2.0, 5.0), 6, 14)
    gram = np.einsum("ml,nl,l->mn", basis.table, basis.table, basis.weights)
    err = np.abs(gram - np.eye(7)).max()
    ok &= _check("basis orthonormality (beta)", err < 1e-12, f"gram error {err:.1e}")

    nodes, weights = gpc.gauss_quadrature(gpc.Uniform01(), 5)
    exact = np.array([1.0 / (k + 1) for k in range(10)])
    err = np.abs(np.array([(nodes**k * weights).sum() for k in range(10)]) - exact).max()
    ok &= _check("quadrature exactness (uniform)", err < 1e-13, f"moment error {err:.1e}")

    q = rng.normal(size=(500, 2))
    b = rng.normal(size=(500, 2))
    params = CollisionParams(gamma=-3.0, epsilon=0.05)
    ab = collision_apply(q, b, params)
    err = np.abs(np.sum(q * ab, axis=1)).max()
    ok &= _check("interaction output orthogonal to q", err < 1e-12, f"max |q.Ab| {err:.1e}")

    n = 400
    ens = ParticleEnsemble(rng.normal(size=(n, 2)), uniform_weights(n), params)
    u, _, d = velocity_field(ens, with_extras=True)
    p_err = np.abs(ens.weights @ u).max()
    e_err = abs(np.sum(ens.weights * np.sum(ens.velocities * u, axis=1)))
    ok &= _check("momentum structure of the field", p_err < 1e-13, f"{p_err:.1e}")
    ok &= _check("energy structure of the field", e_err < 1e-13, f"{e_err:.1e}")
    ok &= _check("dissipation nonnegative", d >= -1e-14, f"D {d:.3e}")

    condition = BimodalRadial(AffineMap(1.0, 0.2))
    basis1 = gpc.build_basis(gpc.Uniform01(), 0, 1)
    params1 = (CollisionParams(0.0, epsilon=0.05),)
    state = initial_sg_state(condition, 64, basis1, 7, params1)
    det = state.nodal_ensemble(0)
    res = sg_rhs_full(state)
    u_det = velocity_field(det)
    bit = np.array_equal(res.coefficient_rhs[:, 0, :], u_det)
    ok &= _check("single-mode state matches the plain solver bitwise", bit)

    basis3 = gpc.build_basis(gpc.Uniform01(), 3, 8)
    params3 = tuple(CollisionParams(0.0, epsilon=0.05) for _ in range(8))
    state = initial_sg_state(condition, 64, basis3, 7, params3)
    import io
    from pathlib import Path
    import tempfile

    rows = []
    for _ in range(2):
        st = initial_sg_state(condition, 64, basis3, 7, params3)
        for _ in range(3):
            st = apply_sg_step(st, sg_rhs_full(st).coefficient_rhs, 0.01)
        rows.append(st.coefficients.copy())
    bit = np.array_equal(rows[0], rows[1])
    ok &= _check("repeated runs bitwise identical", bit)

    m = moments(det)
    ok &= _check("unit mass", abs(m["mass"] - 1.0) < 1e-14, f"{m['mass']!r}")

    print("selftest:", "all checks passed" if ok else "FAILURES above")
    return 0 if ok else 1
