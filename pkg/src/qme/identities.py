"""Numerical battery of the Pauli conjugation identities behind the feedback Hamiltonian.

Each check draws random angles, builds both sides densely and reports the
largest absolute deviation. Used by the ``identities`` subcommand and the
test-suite as an independent oracle for the closed-form coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import global_feedback_unitary, local_feedback_unitary, rotation_y
from .linalg import pauli, pauli_string

TOLERANCE = 1e-12

X, Y, Z, I2 = (pauli(s) for s in ("x", "y", "z", "identity"))


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_error: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} max_error={self.max_error:.3e}"


def _conj(u, op):
    return u.conj().T @ op @ u


def _err(a, b) -> float:
    return float(np.max(np.abs(a - b)))


def _p(ops: dict) -> np.ndarray:
    return pauli_string(ops, 2)


def _one_body(thetas):
    ex = ez = 0.0
    for t in thetas:
        u = rotation_y(t)
        ex = max(ex, _err(_conj(u, X), X * np.cos(t) + Z * np.sin(t)))
        ez = max(ez, _err(_conj(u, Z), -X * np.sin(t) + Z * np.cos(t)))
    return {"local one-body sigma_x": ex, "local one-body sigma_z": ez}


def _two_body(pairs):
    xx, xz, zx, zz = _p({1: "x", 2: "x"}), _p({1: "x", 2: "z"}), _p({1: "z", 2: "x"}), _p({1: "z", 2: "z"})
    errs = dict.fromkeys(("zz", "zx", "xz", "xx"), 0.0)
    for t1, t2 in pairs:
        u = local_feedback_unitary([t1, t2])
        c1, s1, c2, s2 = np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)
        expected = {
            "zz": xx * s1 * s2 - xz * s1 * c2 - zx * c1 * s2 + zz * c1 * c2,
            "zx": -xx * s1 * c2 - xz * s1 * s2 + zx * c1 * c2 + zz * c1 * s2,
            "xz": -xx * c1 * s2 + xz * c1 * c2 - zx * s1 * s2 + zz * s1 * c2,
            "xx": xx * c1 * c2 + xz * c1 * s2 + zx * s1 * c2 + zz * s1 * s2,
        }
        for key, rhs in expected.items():
            op = _p({1: key[0], 2: key[1]})
            errs[key] = max(errs[key], _err(_conj(u, op), rhs))
    return {f"local two-body sigma_{k[0]}sigma_{k[1]}": v for k, v in errs.items()}


def _global(thetas):
    z1, z2, zz = _p({1: "z"}), _p({2: "z"}), _p({1: "z", 2: "z"})
    x1y2, y1x2 = _p({1: "x", 2: "y"}), _p({1: "y", 2: "x"})
    yy = _p({1: "y", 2: "y"})
    e_exp = e1 = e2 = e12 = 0.0
    for t in thetas:
        u = global_feedback_unitary(t)
        # exp(-i t Y1Y2) via the eigen-decomposition of the Hermitian generator
        w, v = np.linalg.eigh(yy)
        e_exp = max(e_exp, _err(u, (v * np.exp(-1j * t * w)) @ v.conj().T))
        c, s = np.cos(2 * t), np.sin(2 * t)
        e1 = max(e1, _err(_conj(u, z1), c * z1 - s * x1y2))
        e2 = max(e2, _err(_conj(u, z2), c * z2 - s * y1x2))
        e12 = max(e12, _err(_conj(u, zz), zz))
    return {
        "global unitary exponential form": e_exp,
        "global sigma_z^1": e1,
        "global sigma_z^2": e2,
        "global sigma_z^1 sigma_z^2 invariant": e12,
    }


def _bloch(rng, count):
    e_rot = e_prod = 0.0
    sig = (X, Y, Z)
    for _ in range(count):
        t = rng.uniform(-np.pi, np.pi)
        x_m, z_m = rng.uniform(-1, 1, 2) / np.sqrt(2)
        rho = 0.5 * (I2 + x_m * X + z_m * Z)
        u = rotation_y(t)
        rho_f = u @ rho @ u.conj().T
        expected = 0.5 * (I2 + X * (x_m * np.cos(t) + z_m * np.sin(t)) + Z * (z_m * np.cos(t) - x_m * np.sin(t)))
        e_rot = max(e_rot, _err(rho_f, expected))

        r, n = rng.normal(size=3), rng.normal(size=3)
        lhs = sum(ri * s for ri, s in zip(r, sig)) @ sum(ni * s for ni, s in zip(n, sig))
        rhs = np.dot(r, n) * I2 + 1j * sum(ci * s for ci, s in zip(np.cross(r, n), sig))
        e_prod = max(e_prod, _err(lhs, rhs))
    e_yz = _err(Y @ Z, 1j * X)
    return {"single-qubit Bloch rotation": e_rot, "Pauli vector product": e_prod, "sigma_y sigma_z = i sigma_x": e_yz}


def run_battery(count: int = 100, seed: int = 0, tol: float = TOLERANCE) -> list[IdentityResult]:
    """Evaluate every identity over ``count`` random angles (or angle pairs)."""
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(-np.pi, np.pi, count)
    pairs = rng.uniform(-np.pi, np.pi, (count, 2))
    errors = {}
    errors.update(_one_body(thetas))
    errors.update(_two_body(pairs))
    errors.update(_global(thetas))
    errors.update(_bloch(rng, count))
    return [IdentityResult(name, err, err <= tol) for name, err in errors.items()]
