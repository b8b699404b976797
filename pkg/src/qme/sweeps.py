"""Parameter sweeps producing plot-ready work, efficiency and gap data.

Every sweep point is independent. Points are evaluated on a thread pool
(size from ``QME_THREADS``) and always returned in grid order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import engine
from .engine import CycleMetrics, DetectorSpec, MeasurementBranch, SystemSpec
from .optimizer import FeedbackLandscape, SearchConfig, optimal_feedback, optimal_global_feedback
from .errors import UnsupportedSize

CONFIGURATIONS = ("n1", "n2_D1", "n2_D1D2")
CONFIG_LABELS = {"n1": "n=1", "n2_D1": "n=2:D1", "n2_D1D2": "n=2:D1D2", "global": "global"}
BRANCH_POLICIES = ("all", "plus_only", "expected")


def default_kappa_grid() -> np.ndarray:
    return np.round(np.arange(1, 100) / 100, 12)


def default_delta_grid() -> np.ndarray:
    return np.round(np.linspace(-0.6, 0.6, 121), 12)


def default_xi_grid() -> np.ndarray:
    return np.round(np.linspace(0.0, 0.5, 26), 12)


@dataclass(frozen=True, eq=False)
class SweepRecord:
    variable: str
    value: float
    configuration: str
    branch: str
    probability: float
    theta_opt: np.ndarray | None
    metrics: CycleMetrics
    expected_work: float | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {
            "variable": self.variable,
            "value": self.value,
            "configuration": self.configuration,
            "branch": self.branch,
            "probability": self.probability,
            "theta": None if self.theta_opt is None else [float(t) for t in self.theta_opt],
        }
        out.update(self.metrics.as_dict())
        out["expected_work"] = self.expected_work
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class GapRecord:
    delta_z: float
    eigenvalues: np.ndarray
    gap: float
    gap_closed_form: float | None

    def row(self) -> dict:
        out = {"delta_z": self.delta_z}
        out.update({f"e{i}": float(e) for i, e in enumerate(self.eigenvalues)})
        out["gap"] = self.gap
        out["gap_closed_form"] = self.gap_closed_form
        return out


def thread_count() -> int:
    raw = os.environ.get("QME_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _pmap(func: Callable, items: Sequence, threads: int | None = None) -> list:
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def configure(spec: SystemSpec, configuration: str, kappa: float) -> tuple[SystemSpec, list[DetectorSpec]]:
    """Working medium and detector list for one of the engine configurations.

    ``n1`` is a standalone single qubit carrying the first on-site energy of
    ``spec``; ``n2_D1`` measures site 1 of the pair and ``n2_D1D2`` both sites.
    """
    if configuration == "n1":
        return SystemSpec(1, (spec.epsilon[0],), {}, spec.beta), [DetectorSpec(1, kappa)]
    if spec.n_sites != 2:
        raise UnsupportedSize(f"configuration {configuration} needs a two-site system")
    if configuration == "n2_D1":
        return spec, [DetectorSpec(1, kappa)]
    if configuration == "n2_D1D2":
        return spec, [DetectorSpec(1, kappa), DetectorSpec(2, kappa)]
    raise ValueError(f"unknown configuration {configuration!r}")


def _plus_label(n_detectors: int) -> str:
    return "+" * n_detectors


def optimise_branches(spec: SystemSpec, detectors: Sequence[DetectorSpec], method: str = "hybrid",
                      cfg: SearchConfig | None = None, labels: Iterable[str] | None = None):
    """Optimal local feedback per branch: list of (branch, theta, metrics), null branches skipped."""
    out = []
    wanted = None if labels is None else set(labels)
    for br in engine.measure(spec.thermal, detectors):
        if br.is_null or (wanted is not None and br.label not in wanted):
            continue
        best = optimal_feedback(br.state, spec, method, cfg)
        out.append((br, best.theta, engine.cycle_metrics(spec, br, best.theta)))
    return out


def expected_metrics(results) -> CycleMetrics:
    """Probability-weighted average of per-branch metrics."""
    total = sum(br.probability for br, _, _ in results)
    avg = {
        name: sum(br.probability * getattr(m, name) for br, _, m in results) / total
        for name in ("e_initial", "e_measured", "e_feedback", "work_extracted", "work_erasure")
    }
    e_m = avg["e_measured"]
    eta = None if abs(e_m) < 1e-14 else (avg["work_extracted"] - avg["work_erasure"]) / e_m
    return CycleMetrics(efficiency=eta, **avg)


def _records_for_point(variable: str, value: float, label: str, spec: SystemSpec, detectors, branch_policy: str,
                       method: str, cfg: SearchConfig | None) -> list[SweepRecord]:
    if branch_policy not in BRANCH_POLICIES:
        raise ValueError(f"unknown branch policy {branch_policy!r}")
    labels = [_plus_label(len(detectors))] if branch_policy == "plus_only" else None
    results = optimise_branches(spec, detectors, method, cfg, labels)
    if branch_policy == "expected":
        m = expected_metrics(results)
        return [SweepRecord(variable, value, label, "expected", 1.0, None, m, m.work_extracted)]
    expected = None
    if branch_policy == "all":
        expected = sum(br.probability * m.work_extracted for br, _, m in results)
    return [SweepRecord(variable, value, label, br.label, br.probability, theta, m, expected)
            for br, theta, m in results]


def kappa_sweep(spec: SystemSpec, configuration: str, kappa_grid=None, branch_policy: str = "plus_only",
                method: str = "hybrid", cfg: SearchConfig | None = None, threads: int | None = None) -> list[SweepRecord]:
    kappa_grid = default_kappa_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    label = CONFIG_LABELS[configuration]

    def point(kappa):
        sub, detectors = configure(spec, configuration, float(kappa))
        return _records_for_point("kappa", float(kappa), label, sub, detectors, branch_policy, method, cfg)

    return [r for rs in _pmap(point, list(kappa_grid), threads) for r in rs]


def coupling_sweep(epsilon_pair=(0.5, 0.5), delta_grid=None, beta: float = 1.0) -> list[GapRecord]:
    """Two-qubit spectrum and gap along a coupling grid.

    The closed-form piecewise gap is attached when both on-site energies are 0.5.
    """
    delta_grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, dtype=float)
    symmetric = tuple(float(e) for e in epsilon_pair) == (0.5, 0.5)
    out = []
    for d in delta_grid:
        spec = SystemSpec.two_qubit(epsilon_pair[0], epsilon_pair[1], float(d), beta)
        eigenvalues, gap = engine.spectrum_and_gap(spec)
        closed = engine.two_qubit_gap_closed_form(float(d)) if symmetric else None
        out.append(GapRecord(float(d), eigenvalues, gap, closed))
    return out


def detuning_sweep(base_spec: SystemSpec, xi_grid=None, kappa: float = 0.10,
                   configurations: Sequence[str] = ("n2_D1", "n2_D1D2"), branch_policy: str = "plus_only",
                   method: str = "hybrid", cfg: SearchConfig | None = None,
                   threads: int | None = None) -> list[SweepRecord]:
    """Symmetry-breaking study: eps_2 = eps_1 + xi with everything else from ``base_spec``."""
    if base_spec.n_sites != 2:
        raise UnsupportedSize("detuning sweep needs a two-site system")
    xi_grid = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    eps1 = base_spec.epsilon[0]
    tasks = [(c, float(xi)) for c in configurations for xi in xi_grid]

    def point(task):
        configuration, xi = task
        spec = base_spec.replace(epsilon=(eps1, eps1 + xi))
        sub, detectors = configure(spec, configuration, kappa)
        return _records_for_point("xi", xi, CONFIG_LABELS[configuration], sub, detectors, branch_policy, method, cfg)

    return [r for rs in _pmap(point, tasks, threads) for r in rs]


def local_vs_global(spec: SystemSpec, kappa_grid=None, configuration: str = "n2_D1D2",
                    cfg: SearchConfig | None = None, threads: int | None = None):
    """Per kappa and branch, the best local (two-angle) and global (one-angle) feedback records.

    Returns a list of ``(local_record, global_record)`` pairs.
    """
    if spec.n_sites != 2:
        raise UnsupportedSize("local-vs-global comparison needs a two-site system")
    kappa_grid = default_kappa_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    label = CONFIG_LABELS[configuration]

    def point(kappa):
        sub, detectors = configure(spec, configuration, float(kappa))
        pairs = []
        for br, theta, m in optimise_branches(sub, detectors, "hybrid", cfg):
            local = SweepRecord("kappa", float(kappa), label, br.label, br.probability, theta, m)
            g = optimal_global_feedback(br.state, sub, cfg)
            gm = engine.cycle_metrics(sub, br, g.theta, mode="global")
            glob = SweepRecord("kappa", float(kappa), "global", br.label, br.probability, g.theta, gm,
                               extra={"feedback_mode": "global"})
            pairs.append((local, glob))
        return pairs

    return [p for ps in _pmap(point, list(kappa_grid), threads) for p in ps]


def perturbation_set(n_sites: int, magnitude: float, n_random: int = 32, seed: int = 0) -> np.ndarray:
    """All 2**N sign corners at ``magnitude`` plus random directions scaled to the same l-infinity size."""
    corners = np.array(list(np.ndindex(*([2] * n_sites))), dtype=float) * 2 - 1
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n_random, n_sites))
    directions /= np.max(np.abs(directions), axis=1, keepdims=True)
    return magnitude * np.vstack([corners, directions])


def robustness_sweep(spec: SystemSpec, branch: MeasurementBranch, theta_opt, error_grid_degrees,
                     n_random: int = 32, seed: int = 0) -> list[dict]:
    """Work retained under additive feedback-angle errors.

    For each error magnitude ``d`` (degrees) returns the worst ratio
    W_ext(theta* + delta) / W_ext(theta*) over the perturbation set, and the
    ratio for the uniform signed shift ``delta_j = d`` on every angle.
    """
    land = FeedbackLandscape.from_state(branch.state, spec)
    theta_opt = np.atleast_1d(np.asarray(theta_opt, dtype=float))
    e_m = engine.energy(branch.state, spec.hamiltonian)
    w_star = e_m - float(land.energy(theta_opt))
    out = []
    for deg in error_grid_degrees:
        d = math.radians(float(deg))
        deltas = perturbation_set(spec.n_sites, abs(d), n_random, seed)
        works = e_m - land.energy(theta_opt + deltas)
        uniform = e_m - float(land.energy(theta_opt + d))
        if w_star > 0:
            worst, uni = float(np.min(works) / w_star), uniform / w_star
        else:
            worst = uni = None
        out.append({"delta_deg": float(deg), "work_optimal": w_star, "worst_work": float(np.min(works)),
                    "worst_ratio": worst, "uniform_ratio": uni})
    return out


def beta_scan(spec_template: SystemSpec, beta_grid, detectors: Sequence[DetectorSpec], target=None,
              method: str = "hybrid", cfg: SearchConfig | None = None, threads: int | None = None):
    """Optimal-feedback cycle per (beta, branch).

    With ``target = (W, eta)`` each record carries the relative mismatch
    sqrt(((W - W_t)/W_t)^2 + ((eta - eta_t)/eta_t)^2) and the best-fitting
    record is returned alongside the list; otherwise the best fit is None.
    """
    betas = [float(b) for b in beta_grid]

    def point(beta):
        spec = spec_template.replace(beta=beta)
        recs = []
        for br, theta, m in optimise_branches(spec, detectors, method, cfg):
            extra = {}
            if target is not None:
                extra["mismatch"] = _mismatch(m, target)
            recs.append(SweepRecord("beta", beta, "beta_scan", br.label, br.probability, theta, m, extra=extra))
        return recs

    records = [r for rs in _pmap(point, betas, threads) for r in rs]
    best = None
    if target is not None:
        scored = [r for r in records if r.extra["mismatch"] is not None]
        if scored:
            best = min(scored, key=lambda r: (round(r.extra["mismatch"], 12), r.value, r.branch))
    return records, best


def _mismatch(m: CycleMetrics, target) -> float | None:
    w_t, eta_t = target
    if m.efficiency is None:
        return None
    return math.hypot((m.work_extracted - w_t) / w_t, (m.efficiency - eta_t) / eta_t)
