"""Working medium, measurement and feedback strokes, and cycle thermodynamics.

Units are hbar = k_B = 1; temperature enters only through ``beta``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .errors import BadSite, BadStrength, NumericalDrift, SupportViolation, UnsupportedSize, ValidationError
from .linalg import embed_site, pauli

NULL_BRANCH = 1e-14


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """N Ising-coupled two-level systems at inverse temperature ``beta``.

    ``coupling`` maps 1-based site pairs ``(j, k)`` with ``j < k`` to the zz
    coupling strength. Absent pairs are uncoupled.
    """

    n_sites: int
    epsilon: tuple[float, ...]
    coupling: Mapping[tuple[int, int], float] = field(default_factory=dict)
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))
        object.__setattr__(self, "coupling", {(int(j), int(k)): float(v) for (j, k), v in dict(self.coupling).items()})
        if self.n_sites < 1:
            raise ValidationError("system.n_sites", "must be >= 1")
        if self.n_sites > linalg.N_MAX:
            raise ValidationError("system.n_sites", f"must be <= {linalg.N_MAX}")
        if len(self.epsilon) != self.n_sites:
            raise ValidationError("system.epsilon", f"expected {self.n_sites} values")
        for j, k in self.coupling:
            if not 1 <= j < k <= self.n_sites:
                raise ValidationError("system.coupling", f"key ({j},{k}) must satisfy 1 <= j < k <= {self.n_sites}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValidationError("system.beta", "must be positive and finite")

    @classmethod
    def two_qubit(cls, eps1: float, eps2: float, delta: float, beta: float = 1.0) -> "SystemSpec":
        return cls(2, (eps1, eps2), {(1, 2): delta}, beta)

    def replace(self, **changes) -> "SystemSpec":
        fields = dict(n_sites=self.n_sites, epsilon=self.epsilon, coupling=self.coupling, beta=self.beta)
        fields.update(changes)
        return SystemSpec(**fields)

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric N x N array of zz couplings with zero diagonal."""
        c = np.zeros((self.n_sites, self.n_sites))
        for (j, k), v in self.coupling.items():
            c[j - 1, k - 1] = c[k - 1, j - 1] = v
        return c

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return build_hamiltonian(self)

    @cached_property
    def thermal(self) -> np.ndarray:
        return thermal_state(self)

    def as_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "epsilon": list(self.epsilon),
            "coupling": {f"{j},{k}": v for (j, k), v in sorted(self.coupling.items())},
            "beta": self.beta,
        }


@dataclass(frozen=True)
class DetectorSpec:
    site: int
    kappa: float

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise BadStrength(f"kappa={self.kappa} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class MeasurementBranch:
    """One outcome history; ``state`` is None when the branch is (numerically) impossible."""

    label: str
    probability: float
    state: np.ndarray | None

    @property
    def is_null(self) -> bool:
        return self.state is None


@dataclass(frozen=True)
class CycleMetrics:
    e_initial: float
    e_measured: float
    e_feedback: float
    work_extracted: float
    work_erasure: float
    efficiency: float | None

    def as_dict(self) -> dict:
        return {
            "e_initial": self.e_initial,
            "e_measured": self.e_measured,
            "e_feedback": self.e_feedback,
            "work_extracted": self.work_extracted,
            "work_erasure": self.work_erasure,
            "efficiency": self.efficiency,
        }


def _diagonal_energies(spec: SystemSpec) -> np.ndarray:
    n = spec.n_sites
    idx = np.arange(1 << n)
    # z eigenvalue +1 for bit 0, -1 for bit 1
    z = np.stack([1 - 2 * ((idx >> (n - j)) & 1) for j in range(1, n + 1)])
    energies = 0.5 + 0.5 * np.asarray(spec.epsilon) @ z
    for (j, k), v in spec.coupling.items():
        energies = energies + v * z[j - 1] * z[k - 1]
    return energies


def build_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """(1/2) I + sum_j (eps_j/2) Z_j + sum_{j<k} D_jk Z_j Z_k, diagonal in the computational basis."""
    linalg._check_dim(1 << spec.n_sites)
    return np.diag(_diagonal_energies(spec)).astype(complex)


def thermal_state(spec: SystemSpec) -> np.ndarray:
    h = spec.hamiltonian
    ground = np.real(np.diag(h)).min()
    unnormalised = linalg.matrix_function(h, lambda w: np.exp(-spec.beta * (w - ground)))
    return unnormalised / np.trace(unnormalised).real


def kraus_pair(det: DetectorSpec, n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    """Weak sigma_x measurement operators (M_plus, M_minus) for one detector."""
    if not 0.0 <= det.kappa <= 1.0:
        raise BadStrength(f"kappa={det.kappa} outside [0, 1]")
    sk, sq = math.sqrt(det.kappa), math.sqrt(1.0 - det.kappa)
    eye = np.eye(1 << n_sites, dtype=complex)
    sx = embed_site(pauli("x"), det.site, n_sites)
    even = 0.5 * (sk + sq) * eye
    odd = 0.5 * (sk - sq) * sx
    return even + odd, even - odd


def measure(rho: np.ndarray, detectors: Sequence[DetectorSpec]) -> list[MeasurementBranch]:
    """Apply detectors in list order and return all 2**m outcome branches.

    Branch labels are strings over ``+``/``-``, one character per detector.
    """
    n = linalg.n_sites_of(rho)
    for det in detectors:
        if not 1 <= det.site <= n:
            raise BadSite(f"detector site {det.site} outside 1..{n}")
    pairs = [kraus_pair(det, n) for det in detectors]
    branches = []
    for outcome in itertools.product((0, 1), repeat=len(detectors)):
        m = np.eye(rho.shape[0], dtype=complex)
        for (plus, minus), o in zip(pairs, outcome):
            m = (minus if o else plus) @ m
        unnormalised = m @ rho @ m.conj().T
        p = float(np.trace(unnormalised).real)
        label = "".join("-" if o else "+" for o in outcome)
        state = None
        if p >= NULL_BRANCH:
            state = unnormalised / p
            state = 0.5 * (state + state.conj().T)
        branches.append(MeasurementBranch(label, p, state))
    return branches


def unconditional_state(rho: np.ndarray, detectors: Sequence[DetectorSpec]) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for br in measure(rho, detectors):
        if not br.is_null:
            out += br.probability * br.state
    return out


def select_branch(branches: Sequence[MeasurementBranch], label: str) -> MeasurementBranch:
    for br in branches:
        if br.label == label:
            return br
    raise KeyError(label)


def rotation_y(theta: float) -> np.ndarray:
    """exp(-i theta sigma_y / 2) in closed form."""
    return math.cos(theta / 2) * np.eye(2, dtype=complex) - 1j * math.sin(theta / 2) * pauli("y")


def local_feedback_unitary(theta: Sequence[float]) -> np.ndarray:
    return linalg.kron_all([rotation_y(float(t)) for t in np.atleast_1d(theta)])


def global_feedback_unitary(theta: float, n_sites: int = 2) -> np.ndarray:
    """cos(theta) I - i sin(theta) Y1 Y2; defined for two sites only."""
    if n_sites != 2:
        raise UnsupportedSize("global feedback is defined for N=2 only")
    yy = np.kron(pauli("y"), pauli("y"))
    return math.cos(theta) * np.eye(4, dtype=complex) - 1j * math.sin(theta) * yy


def apply_feedback(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    if rho.shape != u.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {u.shape}")
    return u @ rho @ u.conj().T


def energy(rho: np.ndarray, h: np.ndarray) -> float:
    value = np.trace(rho @ h)
    if abs(value.imag) >= 1e-10:
        raise NumericalDrift(f"Tr(rho H) has imaginary part {value.imag:.3e}")
    return float(value.real)


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Quantum relative entropy Tr[rho (ln rho - ln sigma)] in nats."""
    sig = linalg.hermitian_eig(sigma)
    if sig.eigenvalues.min() < linalg.ZERO_EIGENVALUE:
        raise SupportViolation("sigma is not full rank")
    w = linalg.hermitian_eig(0.5 * (rho + rho.conj().T)).eigenvalues
    w = w[w > linalg.ZERO_EIGENVALUE]
    neg_entropy = float(np.sum(w * np.log(w)))
    v = sig.eigenvectors
    log_sigma = (v * np.log(sig.eigenvalues)) @ v.conj().T
    cross = float(np.trace(rho @ log_sigma).real)
    return neg_entropy - cross


def feedback_unitary(theta, mode: str, n_sites: int) -> np.ndarray:
    if mode == "local":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (n_sites,):
            raise ValueError(f"local feedback needs {n_sites} angles, got {theta.shape}")
        return local_feedback_unitary(theta)
    if mode == "global":
        return global_feedback_unitary(float(np.ravel(theta)[0]), n_sites)
    raise ValueError(f"unknown feedback mode {mode!r}")


def cycle_metrics(spec: SystemSpec, branch: MeasurementBranch, theta, mode: str = "local") -> CycleMetrics:
    if branch.is_null:
        raise ValueError(f"branch {branch.label!r} has vanishing probability")
    h = spec.hamiltonian
    rho_th = spec.thermal
    rho_m = branch.state
    rho_f = apply_feedback(rho_m, feedback_unitary(theta, mode, spec.n_sites))
    e_i = energy(rho_th, h)
    e_m = energy(rho_m, h)
    e_f = energy(rho_f, h)
    w_ext = e_m - e_f
    w_er = relative_entropy(rho_f, rho_th) / spec.beta
    eta = None if abs(e_m) < 1e-14 else (w_ext - w_er) / e_m
    return CycleMetrics(e_i, e_m, e_f, w_ext, w_er, eta)


def _equivalent_site_classes(spec: SystemSpec, tol: float = 1e-12) -> list[int]:
    """Class label per site; sites j, k share a class when swapping them leaves H invariant."""
    n = spec.n_sites
    eps = np.asarray(spec.epsilon)
    cm = spec.coupling_matrix()
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for j, k in itertools.combinations(range(n), 2):
        if abs(eps[j] - eps[k]) > tol:
            continue
        others = [l for l in range(n) if l not in (j, k)]
        if all(abs(cm[j, l] - cm[k, l]) <= tol for l in others):
            parent[find(k)] = find(j)
    return [find(i) for i in range(n)]


def spectrum_and_gap(spec: SystemSpec) -> tuple[np.ndarray, float]:
    """Ascending eigenvalues and the excitation gap.

    Basis states related by a site permutation that leaves H invariant form
    one level; the gap is the distance between the two lowest levels. Two
    distinct levels meeting at a crossing therefore give a zero gap, while
    symmetry-enforced multiplets (E_01 = E_10 for equal on-site energies)
    count once.
    """
    eigenvalues = linalg.hermitian_eig(spec.hamiltonian).eigenvalues
    n = spec.n_sites
    classes = _equivalent_site_classes(spec)
    labels = sorted(set(classes))
    diag = _diagonal_energies(spec)
    levels: dict[tuple[int, ...], float] = {}
    for s, e in enumerate(diag):
        bits = [(s >> (n - j)) & 1 for j in range(1, n + 1)]
        key = tuple(sum(b for b, c in zip(bits, classes) if c == lab) for lab in labels)
        levels.setdefault(key, float(e))
    ordered = sorted(levels.values())
    gap = ordered[1] - ordered[0] if len(ordered) > 1 else 0.0
    return eigenvalues, gap


def two_qubit_gap_closed_form(delta_z: float) -> float:
    """Piecewise gap for two qubits with eps = (0.5, 0.5)."""
    if delta_z <= -0.25:
        return 1.0
    if delta_z <= 0.25:
        return 0.5 - 2.0 * delta_z
    return 2.0 * delta_z - 0.5
