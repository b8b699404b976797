"""Dense complex matrix kernel.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Site indices
are 1-based and site 1 is the leftmost tensor factor, i.e. the most
significant bit of a computational-basis index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Mapping

import numpy as np

from .errors import BadSite, DomainError, NotHermitian, SizeLimit

N_MAX = 12
ZERO_EIGENVALUE = 1e-14

_PAULI = {
    "identity": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI["i"] = _PAULI["identity"]


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def pauli(which: str) -> np.ndarray:
    """Return a fresh copy of the 2x2 Pauli matrix ``x``, ``y``, ``z`` or ``identity``."""
    try:
        return _PAULI[which.lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}") from None


def n_sites_of(a: np.ndarray) -> int:
    dim = a.shape[0]
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def _check_dim(dim: int) -> None:
    if dim > 1 << N_MAX:
        raise SizeLimit(f"dimension {dim} exceeds 2**{N_MAX}")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def kron_all(ops) -> np.ndarray:
    return reduce(kron, ops)


def embed_site(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Place a single-site operator at ``site`` (1-based) in an ``n_sites`` register."""
    if not 1 <= site <= n_sites:
        raise BadSite(f"site {site} outside 1..{n_sites}")
    _check_dim(1 << n_sites)
    left = np.eye(1 << (site - 1), dtype=complex)
    right = np.eye(1 << (n_sites - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def pauli_string(ops: Mapping[int, str], n_sites: int) -> np.ndarray:
    """Dense product of Pauli factors, e.g. ``{1: "z", 3: "x"}``."""
    factors = [pauli("identity")] * n_sites
    for site, label in ops.items():
        if not 1 <= site <= n_sites:
            raise BadSite(f"site {site} outside 1..{n_sites}")
        factors = factors[: site - 1] + [pauli(label)] + factors[site:]
    return kron_all(factors)


def pauli_expectation(rho: np.ndarray, ops: Mapping[int, str], n_sites: int | None = None) -> float:
    """Tr(rho P) for a Pauli string without forming P.

    P maps |s> to phase(s) |s xor flip>, so the trace collapses to a single
    gather over the band ``rho[s xor flip, s]``.
    """
    if n_sites is None:
        n_sites = n_sites_of(rho)
    idx = np.arange(1 << n_sites)
    flip = 0
    phase = np.ones(idx.shape, dtype=complex)
    for site, label in ops.items():
        if not 1 <= site <= n_sites:
            raise BadSite(f"site {site} outside 1..{n_sites}")
        bit = n_sites - site
        occupied = (idx >> bit) & 1
        label = label.lower()
        if label in ("x", "y"):
            flip |= 1 << bit
        if label == "z":
            phase *= 1 - 2 * occupied
        elif label == "y":
            # sigma_y |0> = i|1>, sigma_y |1> = -i|0>
            phase *= 1j * (1 - 2 * occupied)
        elif label not in ("x", "i", "identity"):
            raise ValueError(f"unknown Pauli label {label!r}")
    value = np.sum(rho[idx, idx ^ flip] * phase)
    return float(value.real)


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) < tol


def is_unitary(a: np.ndarray, tol: float = 1e-10) -> bool:
    eye = np.eye(a.shape[0])
    return np.max(np.abs(a.conj().T @ a - eye)) < tol


def is_density_matrix(a: np.ndarray, tol: float = 1e-10) -> bool:
    if not is_hermitian(a):
        return False
    if abs(np.trace(a) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(a).min() >= -tol)


def hermitian_eig(a: np.ndarray, *, tol: float = 1e-12) -> EigenDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    if not is_hermitian(a, tol):
        raise NotHermitian("matrix is not Hermitian within %.0e" % tol)
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(w, v)


def matrix_function(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """V f(L) V^dagger for Hermitian ``a``; ``f`` acts on the eigenvalue array."""
    eig = hermitian_eig(a)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(eig.eigenvalues), dtype=float)
    if not np.all(np.isfinite(fw)):
        raise DomainError("function undefined at an eigenvalue")
    v = eig.eigenvectors
    return (v * fw) @ v.conj().T


def psd_log(a: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a positive semidefinite matrix.

    Eigenvalues below ``ZERO_EIGENVALUE`` are treated as exact zeros and
    mapped to 0; callers only ever contract the result against a state whose
    support excludes that kernel (the 0 log 0 = 0 convention).
    """
    eig = hermitian_eig(a)
    w = eig.eigenvalues
    if w.min() < -1e-10:
        raise DomainError("log of a matrix with a negative eigenvalue")
    lw = np.where(w > ZERO_EIGENVALUE, np.log(np.clip(w, ZERO_EIGENVALUE, None)), 0.0)
    v = eig.eigenvectors
    return (v * lw) @ v.conj().T
