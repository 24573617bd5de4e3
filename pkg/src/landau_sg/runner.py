"""Experiment orchestration: stepping loops, guards, and artifact writing.

Artifacts of a run, all under the output directory:

* ``moments.csv`` - one row per recorded time per z-statistic (every node,
  expectation, variance) with columns t, statistic, mass, px, py, energy, M4,
  Tx, Ty, H, D, printed with 17 significant digits so regression comparisons
  can be byte-exact;
* ``density_<statistic>_t<time>.txt`` - dense row-major grids with a one-line
  header (extent, points per dimension, statistic, time);
* ``resolved_config.yaml`` and ``run_meta.yaml`` - provenance echo of every
  resolved default plus seed and wall-clock metadata.

Conservation guards run on every recorded step: total weight must stay exact
and the momentum at every quadrature node may not drift beyond the configured
threshold.  A NaN or a guard trip aborts the run with the offending step.

Diagnostics rows are assembled from the same right-hand-side evaluation that
advances the state, so recording at every step costs no extra pair sweeps.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .benchmarks import bkw_density, fit_decay_rate, initial_sg_state, trubnikov_tau
from .config import RunConfig
from .diagnostics import MomentRecord, density_field, m4_at, moment_rows
from .solver import SgState, VelocityGrid, apply_sg_step, sg_rhs_full

_FMT = "%.16e"


class GuardViolation(RuntimeError):
    """A conservation guard failed during a run."""


def format_float(x: float) -> str:
    return _FMT % x


def write_moments_csv(path: Path, records: list[MomentRecord]) -> None:
    lines = [",".join(MomentRecord.COLUMNS)]
    for rec in records:
        vals = rec.values()
        lines.append(
            ",".join([format_float(vals[0]), vals[1]] + [format_float(v) for v in vals[2:]])
        )
    path.write_text("\n".join(lines) + "\n")


def write_density_grid(path: Path, field) -> None:
    header = (
        f"extent={field.grid.extent:.17g} n_g={field.grid.points_per_dim} "
        f"statistic={field.statistic} time={field.time:.17g}"
    )
    np.savetxt(path, field.values, fmt=_FMT, header=header)


@dataclass
class RunResult:
    config: RunConfig
    state: SgState
    records: list[MomentRecord]
    extent: float
    epsilon: float
    num_steps: int
    out_dir: Path | None
    wall_seconds: float

    def series(self, statistic: str, column: str) -> tuple[np.ndarray, np.ndarray]:
        """Time series of one column for one z-statistic from the recorded rows."""
        idx = MomentRecord.COLUMNS.index(column)
        rows = [r for r in self.records if r.statistic == statistic]
        return (
            np.array([r.time for r in rows]),
            np.array([r.values()[idx] for r in rows], dtype=float),
        )


def _apply_threads(threads: int | None) -> None:
    if threads is not None:
        import numba

        numba.set_num_threads(threads)


def _check_guards(cfg: RunConfig, records: list[MomentRecord], initial: dict, step: int) -> None:
    for rec in records:
        if not rec.statistic.startswith("node"):
            continue
        if abs(rec.mass - 1.0) > cfg.mass_guard:
            raise GuardViolation(f"mass guard tripped at step {step} ({rec.statistic})")
        p0 = initial[rec.statistic]
        drift = max(abs(rec.momentum_x - p0[0]), abs(rec.momentum_y - p0[1]))
        if drift > cfg.momentum_guard:
            raise GuardViolation(
                f"momentum drift {drift:.3e} beyond {cfg.momentum_guard:.1e} "
                f"at step {step} ({rec.statistic})"
            )


def run_simulation(cfg: RunConfig, out_dir: str | Path | None = None) -> RunResult:
    """Advance the configured state to t_final, recording and writing artifacts.

    ``out_dir`` overrides the configured directory; None with an empty
    configured value disables writing (API use).
    """
    t_start = _time.perf_counter()
    _apply_threads(cfg.threads)
    basis = cfg.basis()
    extent = cfg.resolved_extent(basis)
    epsilon = cfg.resolved_epsilon(extent)
    params = cfg.params_at_nodes(basis, epsilon)
    condition = cfg.initial_condition()
    state = initial_sg_state(condition, cfg.num_particles, basis, cfg.seed, params)
    grid = VelocityGrid(extent, cfg.grid_points)
    quad_grid = grid if cfg.regularization == "symmetric" else None

    num_steps = int(round(cfg.t_final / cfg.dt))
    records: list[MomentRecord] = []
    density_fields = []
    pending_times = sorted(cfg.density_times)

    def density_due(t: float) -> list[float]:
        due = [tau for tau in pending_times if abs(t - tau) <= cfg.dt / 2.0]
        for tau in due:
            pending_times.remove(tau)
        return due

    def emit_density(t: float) -> None:
        for tau in density_due(t):
            for stat in cfg.density_statistics:
                if stat == "nodes":
                    for l in range(basis.num_nodes):
                        density_fields.append(density_field(state, grid, l, time=tau))
                else:
                    density_fields.append(density_field(state, grid, stat, time=tau))

    initial_momenta: dict[str, tuple[float, float]] = {}
    for step in range(num_steps + 1):
        last = step == num_steps
        res = sg_rhs_full(state, cfg.regularization, quad_grid)
        if step % cfg.cadence == 0 or last:
            rows = moment_rows(state, res.entropy, res.dissipation)
            if step == 0:
                initial_momenta = {
                    r.statistic: (r.momentum_x, r.momentum_y)
                    for r in rows
                    if r.statistic.startswith("node")
                }
            _check_guards(cfg, rows, initial_momenta, step)
            records.extend(rows)
        emit_density(state.time)
        if last:
            break
        state = apply_sg_step(state, res.coefficient_rhs, cfg.dt)

    wall = _time.perf_counter() - t_start
    result = RunResult(cfg, state, records, extent, epsilon, num_steps, None, wall)

    target = Path(out_dir) if out_dir is not None else (Path(cfg.out_dir) if cfg.out_dir else None)
    if target is not None:
        target.mkdir(parents=True, exist_ok=True)
        write_moments_csv(target / "moments.csv", records)
        for fld in density_fields:
            name = f"density_{fld.statistic}_t{fld.time:g}.txt"
            write_density_grid(target / name, fld)
        (target / "resolved_config.yaml").write_text(
            yaml.safe_dump(cfg.resolved_document(), sort_keys=False)
        )
        (target / "run_meta.yaml").write_text(
            yaml.safe_dump(
                {
                    "label": cfg.label,
                    "seed": cfg.seed,
                    "num_steps": num_steps,
                    "wall_seconds": round(wall, 3),
                    "extent": float(extent),
                    "epsilon": float(epsilon),
                },
                sort_keys=False,
            )
        )
        result.out_dir = target
    return result


# ----------------------------------------------------------------------------
# convergence sweep over the expansion order


def with_order(cfg: RunConfig, order: int, nodes: int | None = None) -> RunConfig:
    """Copy of the configuration at a different expansion order (auto node rule)."""
    orders = [order] * len(cfg.orders)
    quad = [nodes if nodes is not None else 2 * (m + 1) for m in orders]
    return replace(cfg, orders=orders, quadrature_nodes=quad)


@dataclass
class SweepResult:
    orders: list[int]
    eval_times: list[float]
    errors: np.ndarray  # (n_orders, n_times)
    variance_times: np.ndarray
    variances: np.ndarray  # (n_orders, n_times_recorded)
    reference_order: int


def _evolve_capture_m4(
    cfg: RunConfig, capture_nodes: np.ndarray, eval_steps: list[int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run one configuration, capturing M4 over z at given steps.

    Returns (m4 at capture_nodes per eval step, recorded times, M4 variance
    series on the run's own rule).
    """
    basis = cfg.basis()
    extent = cfg.resolved_extent(basis)
    epsilon = cfg.resolved_epsilon(extent)
    params = cfg.params_at_nodes(basis, epsilon)
    state = initial_sg_state(cfg.initial_condition(), cfg.num_particles, basis, cfg.seed, params)
    num_steps = int(round(cfg.t_final / cfg.dt))
    own_nodes = np.asarray(basis.nodes)
    omega = np.asarray(basis.weights)
    captures = np.empty((len(eval_steps), capture_nodes.shape[0]))
    var_times, variances = [], []
    for step in range(num_steps + 1):
        if step in eval_steps:
            captures[eval_steps.index(step)] = m4_at(state, capture_nodes)
        if step % cfg.cadence == 0 or step == num_steps:
            m4_own = m4_at(state, own_nodes)
            mean = float(omega @ m4_own)
            var_times.append(state.time)
            variances.append(float(omega @ m4_own**2) - mean**2)
        if step == num_steps:
            break
        state = apply_sg_step(state, sg_rhs_full(state).coefficient_rhs, cfg.dt)
    return captures, np.array(var_times), np.array(variances)


def sweep_orders(
    cfg: RunConfig,
    orders: list[int],
    reference_order: int,
    eval_times: list[float],
    nodes_rule=None,
) -> SweepResult:
    """Convergence of the fourth moment against a higher-order reference run.

    Every run shares the seed (hence the initial draw); errors are the
    weighted l2-in-z mismatch of M4 on the reference quadrature rule.
    ``nodes_rule`` optionally maps an order to a node count.
    """
    _apply_threads(cfg.threads)
    eval_steps = [int(round(t / cfg.dt)) for t in eval_times]
    ref_cfg = with_order(cfg, reference_order, nodes_rule(reference_order) if nodes_rule else None)
    ref_basis = ref_cfg.basis()
    ref_nodes = np.asarray(ref_basis.nodes)
    ref_omega = np.asarray(ref_basis.weights)
    ref_m4, _, _ = _evolve_capture_m4(ref_cfg, ref_nodes, eval_steps)

    errors = np.empty((len(orders), len(eval_times)))
    var_times = None
    variances = []
    for row, m in enumerate(orders):
        run_cfg = with_order(cfg, m, nodes_rule(m) if nodes_rule else None)
        m4, var_times, var = _evolve_capture_m4(run_cfg, ref_nodes, eval_steps)
        errors[row] = np.sqrt((ref_omega * (ref_m4 - m4) ** 2).sum(axis=1))
        variances.append(var)
    return SweepResult(
        list(orders), list(eval_times), errors, var_times, np.array(variances), reference_order
    )


def write_convergence_csv(path: Path, result: SweepResult, label: str) -> None:
    lines = ["label,M,t,error"]
    for row, m in enumerate(result.orders):
        for col, t in enumerate(result.eval_times):
            lines.append(f"{label},{m},{format_float(t)},{format_float(result.errors[row, col])}")
    path.write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# comparison against the closed-form Maxwell-case solution


@dataclass
class ExactErrorResult:
    counts: list[int]
    eval_times: np.ndarray
    expected_errors: np.ndarray  # (n_counts, n_times)


def bkw_error_study(
    cfg: RunConfig, counts: list[int], eval_every: float = 0.5
) -> ExactErrorResult:
    """Expected relative l2 density error against the exact solution vs N and t."""
    _apply_threads(cfg.threads)
    eval_times = np.arange(0.0, cfg.t_final + cfg.dt / 2.0, eval_every)
    tmap = cfg.temperature

    def analytic(points, z, t):
        return bkw_density(points, t, z, tmap)

    from .diagnostics import l2_relative_density_error

    all_errors = np.empty((len(counts), eval_times.size))
    for row, n in enumerate(counts):
        run_cfg = replace(cfg, num_particles=n)
        basis = run_cfg.basis()
        extent = run_cfg.resolved_extent(basis)
        epsilon = run_cfg.resolved_epsilon(extent)
        params = run_cfg.params_at_nodes(basis, epsilon)
        state = initial_sg_state(
            run_cfg.initial_condition(), n, basis, run_cfg.seed, params
        )
        grid = VelocityGrid(extent, run_cfg.grid_points)
        num_steps = int(round(run_cfg.t_final / run_cfg.dt))
        eval_steps = {int(round(t / run_cfg.dt)): col for col, t in enumerate(eval_times)}
        for step in range(num_steps + 1):
            if step in eval_steps:
                _, expected = l2_relative_density_error(state, analytic, grid)
                all_errors[row, eval_steps[step]] = expected
            if step == num_steps:
                break
            state = apply_sg_step(state, sg_rhs_full(state).coefficient_rhs, run_cfg.dt)
    return ExactErrorResult(list(counts), eval_times, all_errors)


def write_bkw_csv(path: Path, result: ExactErrorResult) -> None:
    lines = ["N,t,expected_l2_error"]
    for row, n in enumerate(result.counts):
        for col, t in enumerate(result.eval_times):
            lines.append(
                f"{n},{format_float(t)},{format_float(result.expected_errors[row, col])}"
            )
    path.write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# anisotropy relaxation study


@dataclass
class RelaxationResult:
    scenario: str
    times: np.ndarray
    ratio_expectation: np.ndarray
    fitted_rate: float
    predicted_rate: float

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_rate - self.predicted_rate) / self.predicted_rate


def relaxation_study(
    cfg: RunConfig,
    scenario: str,
    fit_window: tuple[float, float] = (0.0, 1.0),
) -> RelaxationResult:
    """Fit the decay rate of the expected temperature anisotropy.

    The prediction uses the relaxation time of the configured potential; the
    Coulomb rate is the node-weighted expectation of the per-node rates at the
    measured initial total temperatures.
    """
    result = run_simulation(replace(cfg, out_dir=""), out_dir=None)
    potential = "maxwell" if cfg.gamma.at(0.5) == 0.0 else "coulomb"
    basis = cfg.basis()
    omega = np.asarray(basis.weights)
    num_nodes = basis.num_nodes

    node_rows: dict[str, list[MomentRecord]] = {}
    for rec in result.records:
        if rec.statistic.startswith("node"):
            node_rows.setdefault(rec.statistic, []).append(rec)
    times = np.array([r.time for r in node_rows["node00"]])
    delta = np.column_stack(
        [
            np.array([r.temp_x - r.temp_y for r in node_rows[f"node{l:02d}"]])
            for l in range(num_nodes)
        ]
    )
    ratio = delta / delta[0]
    ratio_expectation = ratio @ omega

    mask = (times >= fit_window[0]) & (times <= fit_window[1])
    fitted = fit_decay_rate(times[mask], ratio_expectation[mask])
    if potential == "maxwell":
        predicted = 1.0 / trubnikov_tau("maxwell", cfg.strength, 1.0, None)
    else:
        t_nodes = np.array(
            [
                0.5 * (node_rows[f"node{l:02d}"][0].temp_x + node_rows[f"node{l:02d}"][0].temp_y)
                for l in range(num_nodes)
            ]
        )
        predicted = float(omega @ (1.0 / trubnikov_tau("coulomb", cfg.strength, 1.0, t_nodes)))
    return RelaxationResult(scenario, times, ratio_expectation, float(fitted), float(predicted))


def write_relaxation_csv(path: Path, results: list[RelaxationResult]) -> None:
    lines = ["scenario,fitted_rate,predicted_rate,relative_error"]
    for res in results:
        lines.append(
            f"{res.scenario},{format_float(res.fitted_rate)},"
            f"{format_float(res.predicted_rate)},{format_float(res.relative_error)}"
        )
    path.write_text("\n".join(lines) + "\n")
