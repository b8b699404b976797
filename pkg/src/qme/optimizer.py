"""Feedback-angle optimisation.

For local sigma_y feedback the post-feedback energy is, in each angle
separately, a sinusoid

    E_F(theta_j) = C_j + A_j cos(theta_j) - B_j sin(theta_j)

whose coefficients depend only on the other angles. ``FeedbackLandscape``
holds the one- and two-body Pauli correlators of the post-measurement state,
from which E_F, (A_j, B_j), gradients and Hessians are evaluated in closed
form and vectorised over many angle vectors at once.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import engine, linalg
from .engine import SystemSpec
from .errors import CrossCheckFailed, SearchFailed, SizeLimit, UnsupportedSize, ValidationError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DEGENERATE_EIGENVALUE = 1e-7
HESSIAN_STEP = 1e-4
FLAT_TOL = 1e-14


def wrap_angle(theta):
    """Map angles onto [-pi, pi)."""
    out = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    # mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= math.pi, out - TWO_PI, out)


def angle_distance(a, b):
    """Per-coordinate wrapped distance, max over coordinates (l-infinity)."""
    d = np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))
    return np.max(d, axis=-1)


@dataclass(frozen=True)
class SearchConfig:
    grid_spacing: float = 0.1
    grid_range: tuple[float, float] = (-math.pi, math.pi)
    k_max: int = 200
    convergence_tol: float = 1e-10
    cluster_tol: float = 1e-3
    gradient_tol: float = 1e-8

    def __post_init__(self):
        for name in ("grid_spacing", "convergence_tol", "cluster_tol", "gradient_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"search.{name}", "must be > 0")
        lo, hi = self.grid_range
        if not self.grid_spacing < hi - lo:
            raise ValidationError("search.grid_spacing", "must be smaller than the grid range")
        if self.k_max < 1:
            raise ValidationError("search.k_max", "must be >= 1")

    def seeds_1d(self) -> np.ndarray:
        lo, hi = self.grid_range
        return np.arange(lo, hi - 1e-12, self.grid_spacing)

    def as_dict(self) -> dict:
        return {
            "grid_spacing": self.grid_spacing,
            "grid_range": list(self.grid_range),
            "k_max": self.k_max,
            "convergence_tol": self.convergence_tol,
            "cluster_tol": self.cluster_tol,
            "gradient_tol": self.gradient_tol,
        }


@dataclass(frozen=True, eq=False)
class StationaryPoint:
    theta: np.ndarray
    feedback_energy: float
    gradient_norm: float
    classification: str  # minimum | maximum | saddle | degenerate

    def as_dict(self) -> dict:
        return {
            "theta": [float(t) for t in self.theta],
            "feedback_energy": self.feedback_energy,
            "gradient_norm": self.gradient_norm,
            "classification": self.classification,
        }


@dataclass(frozen=True, eq=False)
class FeedbackLandscape:
    epsilon: np.ndarray
    coupling: np.ndarray
    a: np.ndarray
    b: np.ndarray
    czz: np.ndarray
    czx: np.ndarray
    cxz: np.ndarray
    cxx: np.ndarray
    offset: float = 0.5
    _wz: np.ndarray = field(init=False, repr=False)
    _wzx: np.ndarray = field(init=False, repr=False)
    _wxz: np.ndarray = field(init=False, repr=False)
    _wxx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name, corr in (("_wz", self.czz), ("_wzx", self.czx), ("_wxz", self.cxz), ("_wxx", self.cxx)):
            object.__setattr__(self, name, self.coupling * corr)

    @classmethod
    def from_state(cls, rho_m: np.ndarray, spec: SystemSpec) -> "FeedbackLandscape":
        """Collect <Z_j>, <X_j> and the four zz/zx/xz/xx two-point correlators of ``rho_m``."""
        n = spec.n_sites
        if rho_m.shape != (1 << n, 1 << n):
            raise ValueError(f"state shape {rho_m.shape} does not match N={n}")
        a = np.array([linalg.pauli_expectation(rho_m, {j: "z"}, n) for j in range(1, n + 1)])
        b = np.array([linalg.pauli_expectation(rho_m, {j: "x"}, n) for j in range(1, n + 1)])
        corr = {key: np.zeros((n, n)) for key in ("zz", "zx", "xz", "xx")}
        cm = spec.coupling_matrix()
        for j, k in itertools.permutations(range(n), 2):
            if cm[j, k] == 0.0:
                continue
            for key in corr:
                corr[key][j, k] = linalg.pauli_expectation(rho_m, {j + 1: key[0], k + 1: key[1]}, n)
        return cls(np.asarray(spec.epsilon, dtype=float), cm, a, b, corr["zz"], corr["zx"], corr["xz"], corr["xx"])

    @property
    def n_sites(self) -> int:
        return len(self.epsilon)

    def coefficients(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """(A, B) arrays, shape (..., N); entry j uses only the angles k != j."""
        theta = np.asarray(theta, dtype=float)
        c, s = np.cos(theta), np.sin(theta)
        a_coef = 0.5 * self.epsilon * self.a + c @ self._wz.T - s @ self._wzx.T
        b_coef = 0.5 * self.epsilon * self.b + c @ self._wxz.T - s @ self._wxx.T
        return a_coef, b_coef

    def energy(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        c, s = np.cos(theta), np.sin(theta)
        one = np.sum(0.5 * self.epsilon * (self.a * c - self.b * s), axis=-1)
        # full double sum over ordered pairs counts each j<k twice
        two = 0.5 * (
            np.einsum("...j,...k,jk->...", c, c, self._wz)
            - np.einsum("...j,...k,jk->...", c, s, self._wzx)
            - np.einsum("...j,...k,jk->...", s, c, self._wxz)
            + np.einsum("...j,...k,jk->...", s, s, self._wxx)
        )
        return self.offset + one + two

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        a_coef, b_coef = self.coefficients(theta)
        return -(a_coef * np.sin(theta) + b_coef * np.cos(theta))

    def hessian(self, theta, h: float = HESSIAN_STEP) -> np.ndarray:
        """Central second differences of E_F with step ``h``."""
        theta = np.asarray(theta, dtype=float)
        n = theta.size
        e0 = float(self.energy(theta))
        eye = np.eye(n) * h
        out = np.empty((n, n))
        for j in range(n):
            out[j, j] = (float(self.energy(theta + eye[j])) - 2 * e0 + float(self.energy(theta - eye[j]))) / h**2
            for k in range(j + 1, n):
                pp = self.energy(theta + eye[j] + eye[k])
                pm = self.energy(theta + eye[j] - eye[k])
                mp = self.energy(theta - eye[j] + eye[k])
                mm = self.energy(theta - eye[j] - eye[k])
                out[j, k] = out[k, j] = float(pp - pm - mp + mm) / (4 * h**2)
        return out

    def is_flat(self) -> bool:
        scale = np.abs(self.epsilon) * (np.abs(self.a) + np.abs(self.b))
        pair = np.abs(self._wz) + np.abs(self._wzx) + np.abs(self._wxz) + np.abs(self._wxx)
        return float(np.sum(scale) + np.sum(pair)) < FLAT_TOL

    def classify(self, theta) -> str:
        eig = np.linalg.eigvalsh(self.hessian(theta))
        if np.any(np.abs(eig) < DEGENERATE_EIGENVALUE):
            return "degenerate"
        if np.all(eig > 0):
            return "minimum"
        if np.all(eig < 0):
            return "maximum"
        return "saddle"

    def stationary_point(self, theta) -> StationaryPoint:
        theta = wrap_angle(theta)
        return StationaryPoint(
            theta=theta,
            feedback_energy=float(self.energy(theta)),
            gradient_norm=float(np.linalg.norm(self.gradient(theta))),
            classification=self.classify(theta),
        )


def _landscape(rho_m, spec) -> FeedbackLandscape:
    if isinstance(rho_m, FeedbackLandscape):
        return rho_m
    return FeedbackLandscape.from_state(rho_m, spec)


# -- operator-level energy and coefficient extraction ------------------------

def feedback_energy(rho_m: np.ndarray, spec: SystemSpec, theta) -> float:
    """Tr(rho_M U^dagger H_S U) evaluated with dense operators."""
    u = engine.local_feedback_unitary(np.atleast_1d(theta))
    h_feedback = u.conj().T @ spec.hamiltonian @ u
    return engine.energy(rho_m, h_feedback)


def _full_theta(theta_others, j: int, n: int) -> np.ndarray:
    theta_others = np.atleast_1d(np.asarray(theta_others, dtype=float))
    if theta_others.size == n:
        return theta_others.copy()
    if theta_others.size == n - 1:
        return np.insert(theta_others, j - 1, 0.0)
    raise ValueError(f"expected {n - 1} or {n} angles, got {theta_others.size}")


def stationarity_coeffs_analytic(rho_m, spec: SystemSpec, j: int, theta_others) -> tuple[float, float]:
    """(A_j, B_j) from correlators rotated on every site other than ``j`` (1-based).

    ``theta_others`` holds either the N-1 angles k != j in site order, or a
    full angle vector whose j-th entry is ignored.
    """
    land = _landscape(rho_m, spec)
    theta = _full_theta(theta_others, j, spec.n_sites)
    a_coef, b_coef = land.coefficients(theta)
    return float(a_coef[j - 1]), float(b_coef[j - 1])


def stationarity_coeffs_numeric(rho_m: np.ndarray, spec: SystemSpec, j: int, theta_others) -> tuple[float, float]:
    """(A_j, B_j) by sampling the dense-operator energy at theta_j in {0, pi/2, pi, 3pi/2}."""
    theta = _full_theta(theta_others, j, spec.n_sites)

    def at(angle):
        t = theta.copy()
        t[j - 1] = angle
        return feedback_energy(rho_m, spec, t)

    a_coef = 0.5 * (at(0.0) - at(math.pi))
    b_coef = 0.5 * (at(1.5 * math.pi) - at(0.5 * math.pi))
    return a_coef, b_coef


def gradient(rho_m, spec: SystemSpec, theta) -> np.ndarray:
    return _landscape(rho_m, spec).gradient(np.atleast_1d(theta))


def hessian(rho_m, spec: SystemSpec, theta) -> np.ndarray:
    return _landscape(rho_m, spec).hessian(np.atleast_1d(theta))


# -- Algorithm 1: seed-and-refine ---------------------------------------------

def _coordinate_update(a_coef, b_coef, current, maximise):
    """Stationary angle of C + A cos t - B sin t on the requested branch.

    atan2(-B, A) is the crest of the sinusoid and its pi-shift the trough;
    both candidate energies are compared so the kept branch is the one that
    minimises (or maximises) E_F. Flat coordinates keep their angle.
    """
    crest = np.arctan2(-b_coef, a_coef)
    trough = crest + math.pi
    e_crest = a_coef * np.cos(crest) - b_coef * np.sin(crest)
    e_trough = a_coef * np.cos(trough) - b_coef * np.sin(trough)
    pick_crest = (e_crest > e_trough) == maximise
    new = wrap_angle(np.where(pick_crest, crest, trough))
    flat = np.hypot(a_coef, b_coef) < FLAT_TOL
    return np.where(flat, current, new)


def _refine_batch(land: FeedbackLandscape, seeds: np.ndarray, cfg: SearchConfig, maximise: np.ndarray):
    """Cyclic coordinate fixed-point updates for many seeds at once.

    ``maximise`` is a length-N boolean vector choosing the branch per coordinate.
    Returns wrapped angles, converged flags, and iteration counts.
    """
    theta = wrap_angle(np.array(seeds, dtype=float, copy=True))
    s, n = theta.shape
    active = np.ones(s, dtype=bool)
    iterations = np.zeros(s, dtype=int)
    converged = np.zeros(s, dtype=bool)
    for _ in range(cfg.k_max):
        if not active.any():
            break
        sub = theta[active]
        previous = sub.copy()
        for j in range(n):
            a_coef, b_coef = land.coefficients(sub)
            sub[:, j] = _coordinate_update(a_coef[:, j], b_coef[:, j], sub[:, j], maximise[j])
        theta[active] = sub
        iterations[active] += 1
        done = angle_distance(sub, previous) < cfg.convergence_tol
        idx = np.flatnonzero(active)
        converged[idx[done]] = True
        active[idx[done]] = False
    return theta, converged, iterations


def fixed_point_refine(rho_m, spec: SystemSpec, seed, cfg: SearchConfig | None = None, policy: str = "min"):
    """Refine one seed by the self-consistent atan2 update.

    ``policy`` is ``"min"`` (keep the energy-minimising branch per coordinate),
    ``"max"`` (keep atan2(-B_j, A_j) itself), or a string of ``n``/``x``
    characters choosing per coordinate. Returns (angles, converged, iterations).
    """
    cfg = cfg or SearchConfig()
    land = _landscape(rho_m, spec)
    seed = np.atleast_1d(np.asarray(seed, dtype=float))
    if not np.all(np.isfinite(seed)):
        raise ValueError("seed must be finite")
    maximise = _policy_mask(policy, land.n_sites)
    theta, conv, its = _refine_batch(land, seed[None, :], cfg, maximise)
    return theta[0], bool(conv[0]), int(its[0])


def _policy_mask(policy: str, n: int) -> np.ndarray:
    if policy == "min":
        return np.zeros(n, dtype=bool)
    if policy == "max":
        return np.ones(n, dtype=bool)
    if len(policy) == n and set(policy) <= {"n", "x"}:
        return np.array([c == "x" for c in policy])
    raise ValueError(f"bad refinement policy {policy!r}")


def cluster_angles(points: np.ndarray, energies: np.ndarray, tol: float) -> list[int]:
    """Single-linkage clustering under the wrapped l-infinity metric.

    Returns the index of the lowest-energy member of every cluster, ordered
    by (energy, angles).
    """
    if len(points) == 0:
        return []
    points = wrap_angle(points)
    # collapse near-identical points first so the pairwise pass stays small
    keys = np.round(points / (tol * 1e-3)).astype(np.int64)
    order = np.lexsort((energies,) + tuple(keys.T[::-1]))
    _, first = np.unique(keys[order], axis=0, return_index=True)
    reps = order[first]
    pts = points[reps]
    dist = angle_distance(pts[:, None, :], pts[None, :, :])
    _, labels = connected_components(dist < tol, directed=False)
    best = {}
    for lab, idx in zip(labels, reps):
        if lab not in best or energies[idx] < energies[best[lab]]:
            best[lab] = idx
    chosen = list(best.values())
    chosen.sort(key=lambda i: (energies[i], *points[i]))
    return chosen


def _degenerate_result(land: FeedbackLandscape) -> list[StationaryPoint]:
    theta = np.zeros(land.n_sites)
    return [StationaryPoint(theta, float(land.energy(theta)), 0.0, "degenerate")]


def _sorted_points(points: list[StationaryPoint]) -> list[StationaryPoint]:
    return sorted(points, key=lambda p: (p.feedback_energy, *p.theta))


MIXED_SEED_BUDGET = 256
MIXED_MAX_ITERATIONS = 50


def _mixed_policy_seeds(axis: np.ndarray, n: int, anchors: np.ndarray) -> np.ndarray:
    """Reduced seed set for the mixed min/max refinement policies.

    Coordinate-wise products of the already-found stationary points (exact
    saddles when the sites decouple) plus a strided subset of the seed grid.
    """
    per_axis = [np.unique(np.round(anchors[:, j], 12)) for j in range(n)]
    products = np.array(list(itertools.product(*per_axis))) if len(anchors) else np.empty((0, n))
    products = products[: MIXED_SEED_BUDGET]
    stride = max(1, math.ceil((len(axis) ** n / MIXED_SEED_BUDGET) ** (1.0 / n)))
    coarse = np.array(list(itertools.product(axis[::stride], repeat=n)))
    return np.vstack([products, coarse])


def hybrid_search(rho_m, spec: SystemSpec, cfg: SearchConfig | None = None) -> list[StationaryPoint]:
    """Seed-and-refine search: refine every grid seed, cluster, classify, rank by E_F.

    Every seed is refined keeping the energy-minimising branch of each
    coordinate update and again keeping atan2(-B_j, A_j) itself, so both
    mod-pi branches of the tangent equations are surfaced and ranked. Mixed
    per-coordinate branch choices target saddles; they rarely converge on
    coupled surfaces, so they run on a reduced seed set.
    """
    cfg = cfg or SearchConfig()
    land = _landscape(rho_m, spec)
    n = land.n_sites
    if land.is_flat():
        return _degenerate_result(land)
    axis = cfg.seeds_1d()
    seeds = np.array(list(itertools.product(axis, repeat=n)))
    found = []
    for mask in (np.zeros(n, dtype=bool), np.ones(n, dtype=bool)):
        theta, conv, _ = _refine_batch(land, seeds, cfg, mask)
        found.append(theta[conv])
    if n > 1:
        pure = np.concatenate(found)
        reps = pure[cluster_angles(pure, land.energy(pure), cfg.cluster_tol)] if len(pure) else pure
        mixed_seeds = _mixed_policy_seeds(axis, n, reps)
        mixed_cfg = replace(cfg, k_max=min(cfg.k_max, MIXED_MAX_ITERATIONS))
        for mask in itertools.product((False, True), repeat=n):
            if 0 < sum(mask) < n:
                theta, conv, _ = _refine_batch(land, mixed_seeds, mixed_cfg, np.array(mask))
                found.append(theta[conv])
    found = np.concatenate(found)
    if len(found) == 0:
        raise SearchFailed("no seed converged")
    energies = land.energy(found)
    reps = cluster_angles(found, energies, cfg.cluster_tol)
    return _sorted_points([land.stationary_point(found[i]) for i in reps])


# -- Algorithm 2: grid sweep --------------------------------------------------

def _lattice_local_minima(values: np.ndarray, periodic: bool) -> np.ndarray:
    """Mask of lattice points no larger than any of their 3**N - 1 neighbours.

    With ``periodic`` the last index on every axis duplicates the first
    (a closed [-pi, pi] lattice) and neighbourhoods wrap around.
    """
    n = values.ndim
    if periodic:
        core = values[(slice(0, -1),) * n]
        mask = np.ones(core.shape, dtype=bool)
        for shift in itertools.product((-1, 0, 1), repeat=n):
            if any(shift):
                mask &= core <= np.roll(core, shift, axis=tuple(range(n)))
        full = np.pad(mask, [(0, 1)] * n, mode="wrap")
        return full
    padded = np.pad(values, 1, mode="constant", constant_values=np.inf)
    mask = np.ones(values.shape, dtype=bool)
    for shift in itertools.product((-1, 0, 1), repeat=n):
        if not any(shift):
            continue
        window = tuple(slice(1 + d, 1 + d + size) for d, size in zip(shift, values.shape))
        mask &= values <= padded[window]
    return mask


def _newton_polish(land: FeedbackLandscape, theta: np.ndarray, max_step: float, steps: int = 5) -> np.ndarray:
    for _ in range(steps):
        g = land.gradient(theta)
        if np.linalg.norm(g) < 1e-15:
            break
        step = -np.linalg.lstsq(land.hessian(theta), g, rcond=None)[0]
        biggest = np.max(np.abs(step))
        if biggest > max_step:
            step *= max_step / biggest
        theta = theta + step
    return wrap_angle(theta)


def grid_search(rho_m, spec: SystemSpec, cfg: SearchConfig | None = None, grid_size: int = 100) -> list[StationaryPoint]:
    """Lattice sweep of the gradient norm, candidate filter, clustering and Newton polish.

    Candidates are lattice points whose gradient norm is below
    ``cfg.gradient_tol`` or is a local minimum over the lattice neighbourhood;
    the latter catches stationary points that fall between lattice sites.
    """
    cfg = cfg or SearchConfig()
    land = _landscape(rho_m, spec)
    n = land.n_sites
    if n > 3:
        raise SizeLimit("grid search is limited to N <= 3")
    if grid_size < 8:
        raise ValueError("grid_size must be >= 8")
    lo, hi = cfg.grid_range
    axis = np.linspace(lo, hi, grid_size)
    spacing = (hi - lo) / (grid_size - 1)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1)
    gnorm = np.linalg.norm(land.gradient(mesh), axis=-1)
    below = gnorm < cfg.gradient_tol
    if below.all() or land.is_flat():
        return _degenerate_result(land)
    periodic = abs((hi - lo) - TWO_PI) < 1e-12
    candidates_mask = below | _lattice_local_minima(gnorm, periodic)
    candidates = mesh[candidates_mask]
    if len(candidates) == 0:
        raise SearchFailed("no lattice point passed the gradient filter")
    reps = cluster_angles(candidates, land.energy(candidates), cfg.cluster_tol)
    polished = np.array([_newton_polish(land, candidates[i], spacing) for i in reps])
    # a gradient-norm valley can leave candidates that are not near any stationary point
    polished = polished[np.linalg.norm(land.gradient(polished), axis=-1) < cfg.gradient_tol]
    if len(polished) == 0:
        raise SearchFailed("no candidate polished to a stationary point")
    # distinct lattice candidates can polish onto the same stationary point
    keep = cluster_angles(polished, land.energy(polished), cfg.cluster_tol)
    return _sorted_points([land.stationary_point(polished[i]) for i in keep])


# -- selection ----------------------------------------------------------------

def _best_minimum(points: Sequence[StationaryPoint]) -> StationaryPoint:
    for p in points:
        if p.classification in ("minimum", "degenerate"):
            return p
    return points[0]


def optimal_feedback(rho_m, spec: SystemSpec, method: str = "hybrid", cfg: SearchConfig | None = None,
                     grid_size: int = 361) -> StationaryPoint:
    """Lowest-energy minimum found by the hybrid search, the grid sweep, or both (cross-checked)."""
    land = _landscape(rho_m, spec)
    if method == "hybrid":
        return _best_minimum(hybrid_search(land, spec, cfg))
    if method == "grid":
        return _best_minimum(grid_search(land, spec, cfg, grid_size))
    if method == "both":
        hyb = _best_minimum(hybrid_search(land, spec, cfg))
        grd = _best_minimum(grid_search(land, spec, cfg, grid_size))
        diff = abs(hyb.feedback_energy - grd.feedback_energy)
        if diff > 1e-4:
            raise CrossCheckFailed(f"hybrid and grid minima differ by {diff:.3e}")
        if diff > 1e-6:
            log.warning("hybrid and grid minima differ by %.3e", diff)
        return hyb
    raise ValueError(f"unknown method {method!r}")


# -- global (two-site sigma_y sigma_y) feedback --------------------------------

@dataclass(frozen=True)
class GlobalLandscape:
    """E_F(theta) = const + P cos(2 theta) - Q sin(2 theta) for U = exp(-i theta Y1 Y2)."""

    const: float
    p: float
    q: float

    @classmethod
    def from_state(cls, rho_m: np.ndarray, spec: SystemSpec) -> "GlobalLandscape":
        if spec.n_sites != 2:
            raise UnsupportedSize("global feedback is defined for N=2 only")
        e1, e2 = spec.epsilon
        delta = spec.coupling.get((1, 2), 0.0)
        a1 = linalg.pauli_expectation(rho_m, {1: "z"}, 2)
        a2 = linalg.pauli_expectation(rho_m, {2: "z"}, 2)
        cxy = linalg.pauli_expectation(rho_m, {1: "x", 2: "y"}, 2)
        cyx = linalg.pauli_expectation(rho_m, {1: "y", 2: "x"}, 2)
        czz = linalg.pauli_expectation(rho_m, {1: "z", 2: "z"}, 2)
        return cls(0.5 + delta * czz, 0.5 * (e1 * a1 + e2 * a2), 0.5 * (e1 * cxy + e2 * cyx))

    def energy(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.const + self.p * np.cos(2 * theta) - self.q * np.sin(2 * theta)

    def minimiser(self) -> float:
        if math.hypot(self.p, self.q) < FLAT_TOL:
            return 0.0
        # P cos x - Q sin x peaks at x = atan2(-Q, P); the trough is half a turn away
        return float(wrap_angle(0.5 * (math.atan2(-self.q, self.p) + math.pi)))


def global_feedback_energy(rho_m: np.ndarray, spec: SystemSpec, theta: float) -> float:
    return float(GlobalLandscape.from_state(rho_m, spec).energy(theta))


def optimal_global_feedback(rho_m: np.ndarray, spec: SystemSpec, cfg: SearchConfig | None = None) -> StationaryPoint:
    """Closed-form minimum of the global-feedback energy, cross-checked on a 1-D grid."""
    cfg = cfg or SearchConfig()
    land = GlobalLandscape.from_state(rho_m, spec)
    theta = land.minimiser()
    lo, hi = cfg.grid_range
    grid = np.linspace(lo, hi, 3601)
    grid_min = float(np.min(land.energy(grid)))
    e_star = float(land.energy(theta))
    if e_star > grid_min + 1e-12:
        raise CrossCheckFailed(f"closed-form global optimum {e_star} above grid minimum {grid_min}")
    r = math.hypot(land.p, land.q)
    grad = -2 * (land.p * math.sin(2 * theta) + land.q * math.cos(2 * theta))
    curvature = 4 * r
    cls = "degenerate" if curvature < DEGENERATE_EIGENVALUE else "minimum"
    return StationaryPoint(np.array([theta]), e_star, abs(grad), cls)
