"""Two-qubit polarization tomography with wave-plate Pauli settings.

Projective measurements are realized per qubit by a half-wave plate, a
quarter-wave plate and a polarizing split.  The three labeled settings

    X: HWP 22.5, QWP 0      Y: HWP 45, QWP -45      Z: HWP 0, QWP 0

land on the +-1 eigenbases of the corresponding Pauli operators; the Jones
conventions below are fixed by that requirement and checked at import time.

Reconstruction is linear inversion of the Pauli moments followed by a
deterministic projection to the nearest trace-one positive-semidefinite
matrix (eigenvalue clipping and renormalization).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TomoError",
    "MeasurementSetting",
    "PAULI_SETTINGS",
    "PAULIS",
    "BELL_STATES",
    "setting_unitary",
    "setting_projectors",
    "simulate_counts",
    "reconstruct",
    "state_fidelity",
    "check_density_matrix",
    "project_to_physical",
    "bootstrap_fidelity",
]


class TomoError(ValueError):
    """Invalid tomography inputs."""


PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

#: wave-plate fast-axis angles (HWP, QWP) in degrees per Pauli basis
PAULI_SETTINGS = {
    "X": (22.5, 0.0),
    "Y": (45.0, -45.0),
    "Z": (0.0, 0.0),
}

SETTING_LABELS = [(a, b) for a in "XYZ" for b in "XYZ"]

_B = 1.0 / math.sqrt(2.0)
BELL_STATES = {
    "phi+": np.array([_B, 0, 0, _B], dtype=complex),
    "phi-": np.array([_B, 0, 0, -_B], dtype=complex),
    "psi+": np.array([0, _B, _B, 0], dtype=complex),
    "psi-": np.array([0, _B, -_B, 0], dtype=complex),
}


@dataclass(frozen=True)
class MeasurementSetting:
    """Pauli labels and wave-plate angles for one two-qubit setting."""

    label_a: str
    label_b: str

    def __post_init__(self):
        for lab in (self.label_a, self.label_b):
            if lab not in PAULI_SETTINGS:
                raise TomoError(f"unknown Pauli label {lab!r}")

    @property
    def angles_a(self) -> tuple[float, float]:
        return PAULI_SETTINGS[self.label_a]

    @property
    def angles_b(self) -> tuple[float, float]:
        return PAULI_SETTINGS[self.label_b]


def _rotation(angle_deg: float) -> np.ndarray:
    t = math.radians(angle_deg)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def _hwp(angle_deg: float) -> np.ndarray:
    t = math.radians(2.0 * angle_deg)
    return np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]],
                    dtype=complex)


def _qwp(angle_deg: float) -> np.ndarray:
    R = _rotation(angle_deg)
    return R @ np.diag([1.0, 1.0j]) @ R.T


def setting_unitary(hwp_deg: float, qwp_deg: float) -> np.ndarray:
    """Jones matrix of the analyzer: HWP first, then QWP, in beam order."""
    if not (math.isfinite(hwp_deg) and math.isfinite(qwp_deg)):
        raise TomoError("wave-plate angles must be finite")
    return _qwp(qwp_deg) @ _hwp(hwp_deg)


def setting_projectors(hwp_deg: float, qwp_deg: float):
    """(+1, -1) projectors of the polarizing split behind the wave plates."""
    J = setting_unitary(hwp_deg, qwp_deg)
    plus = J.conj().T @ np.array([1.0, 0.0], dtype=complex)
    minus = J.conj().T @ np.array([0.0, 1.0], dtype=complex)
    return np.outer(plus, plus.conj()), np.outer(minus, minus.conj())


def _verify_conventions():
    # each labeled setting must project onto the Pauli eigenbasis it names
    for label, (h, q) in PAULI_SETTINGS.items():
        p_plus, p_minus = setting_projectors(h, q)
        sigma = PAULIS[label]
        if not np.allclose(p_plus + p_minus, np.eye(2), atol=1e-12):
            raise AssertionError(f"projectors for {label} are not complete")
        if not np.allclose(p_plus - p_minus, sigma, atol=1e-10):
            raise AssertionError(
                f"wave-plate convention does not realize sigma_{label.lower()}"
            )


_verify_conventions()


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise TomoError(f"expected a 4x4 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise TomoError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol or abs(np.trace(rho).imag) > tol:
        raise TomoError("density matrix does not have unit trace")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tol:
        raise TomoError("density matrix has negative eigenvalues")
    return rho


def project_to_physical(rho: np.ndarray) -> np.ndarray:
    """Nearest Hermitian, trace-one, PSD matrix by eigenvalue clipping."""
    rho = np.asarray(rho, dtype=complex)
    herm = (rho + rho.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(herm)
    vals = np.clip(vals.real, 0.0, None)
    if vals.sum() <= 0.0:
        return np.eye(4, dtype=complex) / 4.0
    vals /= vals.sum()
    return (vecs * vals) @ vecs.conj().T


def _setting_probabilities(rho: np.ndarray, setting: MeasurementSetting):
    pa = setting_projectors(*setting.angles_a)
    pb = setting_projectors(*setting.angles_b)
    probs = np.empty((2, 2))
    for a in (0, 1):
        for b in (0, 1):
            probs[a, b] = float(np.real(np.trace(np.kron(pa[a], pb[b]) @ rho)))
    probs = np.clip(probs, 0.0, None)
    s = probs.sum()
    if s <= 0:
        raise TomoError("setting probabilities vanish")
    return probs / s


def simulate_counts(
    rho: np.ndarray,
    shots_per_setting: int = 1000,
    seed: int = 0,
    settings=None,
) -> dict[tuple[str, str], np.ndarray]:
    """Multinomial counts for each Pauli-pair setting.

    With ``shots_per_setting == 0`` the exact outcome probabilities are
    returned in place of counts.  Sampling is reproducible: each setting
    draws from a generator seeded by (seed, setting index).
    """
    rho = check_density_matrix(rho)
    if shots_per_setting < 0:
        raise TomoError("shots_per_setting must be >= 0")
    settings = settings or SETTING_LABELS
    counts = {}
    for idx, (la, lb) in enumerate(settings):
        probs = _setting_probabilities(rho, MeasurementSetting(la, lb))
        if shots_per_setting == 0:
            counts[(la, lb)] = probs
        else:
            rng = np.random.default_rng((seed, idx))
            flat = rng.multinomial(shots_per_setting, probs.ravel())
            counts[(la, lb)] = flat.reshape(2, 2).astype(float)
    return counts


def reconstruct(counts: dict[tuple[str, str], np.ndarray]) -> np.ndarray:
    """Density matrix from Pauli-moment linear inversion plus PSD projection.

    Works for arbitrary nonnegative counts (even inconsistent ones); the
    output always satisfies the density-matrix invariants.
    """
    for la, lb in SETTING_LABELS:
        if (la, lb) not in counts:
            raise TomoError(f"missing counts for setting {(la, lb)}")

    corr = {}
    marg_a = {lab: [] for lab in "XYZ"}
    marg_b = {lab: [] for lab in "XYZ"}
    for la, lb in SETTING_LABELS:
        c = np.asarray(counts[(la, lb)], dtype=float)
        if c.shape != (2, 2):
            raise TomoError(f"counts for {(la, lb)} must be 2x2, got {c.shape}")
        if np.any(c < 0):
            raise TomoError("counts must be nonnegative")
        n = c.sum()
        if n <= 0:
            raise TomoError(f"no counts for setting {(la, lb)}")
        f = c / n
        corr[(la, lb)] = f[0, 0] - f[0, 1] - f[1, 0] + f[1, 1]
        marg_a[la].append(f[0, 0] + f[0, 1] - f[1, 0] - f[1, 1])
        marg_b[lb].append(f[0, 0] - f[0, 1] + f[1, 0] - f[1, 1])

    rho = np.eye(4, dtype=complex)
    for lab in "XYZ":
        rho += np.mean(marg_a[lab]) * np.kron(PAULIS[lab], PAULIS["I"])
        rho += np.mean(marg_b[lab]) * np.kron(PAULIS["I"], PAULIS[lab])
    for la, lb in SETTING_LABELS:
        rho += corr[(la, lb)] * np.kron(PAULIS[la], PAULIS[lb])
    rho /= 4.0
    return project_to_physical(rho)


def state_fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """<psi| rho |psi> for a pure target state."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(target, dtype=complex).reshape(-1)
    if rho.shape != (4, 4) or psi.shape != (4,):
        raise TomoError("expected 4x4 rho and a two-qubit pure target")
    f = float(np.real(psi.conj() @ rho @ psi))
    return min(max(f, 0.0), 1.0)


def bootstrap_fidelity(
    counts: dict[tuple[str, str], np.ndarray],
    target: np.ndarray,
    n_resamples: int = 200,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Point fidelity plus a percentile bootstrap interval (2.5%, 97.5%)."""
    point = state_fidelity(reconstruct(counts), target)
    fids = np.empty(n_resamples)
    for r in range(n_resamples):
        resampled = {}
        for idx, key in enumerate(SETTING_LABELS):
            c = np.asarray(counts[key], dtype=float)
            n = int(round(c.sum()))
            p = c.ravel() / c.sum()
            rng = np.random.default_rng((seed, r, idx))
            resampled[key] = rng.multinomial(n, p).reshape(2, 2).astype(float)
        fids[r] = state_fidelity(reconstruct(resampled), target)
    lo, hi = np.percentile(fids, [2.5, 97.5])
    return point, float(lo), float(hi)
