"""Multi-photon Fock states with partial distinguishability.

Photons live on (computational mode, internal label) pairs.  The internal
label space has dimension 2: label 0 is the ideal mode, label 1 an orthogonal
one, matching a creation-operator model where a distinguishable admixture
uses a second operator on the same computational mode.  Unitaries act on
computational modes only (U tensor identity on labels), so label sectors
never interfere and classical distinguishability emerges automatically.

A configuration is a sorted tuple of ((extended mode, count), ...) with
extended mode = mode * num_labels + label.  Amplitudes of output
configurations are permanents of submatrices of the extended unitary with
the usual sqrt(prod n_i!) normalization.

Loss and threshold detection: uniform per-photon loss commutes with the
unitary, so it is applied to the output distribution as independent
per-photon survival; threshold clicks then ignore labels and photon number.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FockError",
    "Config",
    "PhotonEnsemble",
    "DetectorModel",
    "permanent",
    "evolve",
    "evolve_state",
    "hom_coincidence",
    "detect",
    "postselect",
]

MAX_PERMANENT_DIM = 8
DEFAULT_TRUNCATION = 4

#: sorted tuple of ((extended mode index, count), ...)
Config = tuple[tuple[int, int], ...]


class FockError(ValueError):
    """Invalid photon state or operation."""


def config_from_photons(photons) -> Config:
    """Build a configuration from an iterable of extended mode indices."""
    counts: dict[int, int] = {}
    for m in photons:
        counts[m] = counts.get(m, 0) + 1
    return tuple(sorted(counts.items()))


def config_photons(config: Config) -> list[int]:
    """Expand a configuration into a list of extended modes, one per photon."""
    out: list[int] = []
    for m, c in config:
        out.extend([m] * c)
    return out


def config_total(config: Config) -> int:
    return sum(c for _, c in config)


@dataclass
class PhotonEnsemble:
    """A pure superposition of photon configurations.

    ``terms`` maps configurations to complex amplitudes over extended modes
    (mode * num_labels + label).  Mixtures are represented outside this class
    as classically weighted lists of ensembles.
    """

    num_modes: int
    terms: dict[Config, complex] = field(default_factory=dict)
    num_labels: int = 2

    def __post_init__(self):
        d = self.num_modes * self.num_labels
        for config, _amp in self.terms.items():
            for m, c in config:
                if not 0 <= m < d:
                    raise FockError(f"extended mode {m} out of range (dim {d})")
                if c < 1:
                    raise FockError(f"count must be >= 1, got {c}")

    @classmethod
    def from_photons(cls, num_modes: int, photons, amplitude: complex = 1.0,
                     num_labels: int = 2) -> "PhotonEnsemble":
        """Single-term ensemble; ``photons`` is a list of (mode, label)."""
        ext = [m * num_labels + l for m, l in photons]
        return cls(num_modes=num_modes,
                   terms={config_from_photons(ext): complex(amplitude)},
                   num_labels=num_labels)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "PhotonEnsemble":
        n = math.sqrt(self.norm_squared())
        if n == 0.0:
            raise FockError("cannot normalize an empty ensemble")
        return PhotonEnsemble(
            num_modes=self.num_modes,
            terms={c: a / n for c, a in self.terms.items()},
            num_labels=self.num_labels,
        )

    def total_photons(self) -> set[int]:
        return {config_total(c) for c in self.terms}


@dataclass(frozen=True)
class DetectorModel:
    """Threshold detectors with efficiency and an asymmetric readout flip.

    ``readout_flip`` is the probability that a qubit read as logical 1 is
    reported as 0 (click migrates from the 1-mode to the 0-mode of its
    dual-rail group); the reverse direction never happens.
    """

    efficiency: float = 1.0
    readout_flip: float = 0.0
    threshold: bool = True

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise FockError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.readout_flip <= 1.0:
            raise FockError(
                f"readout_flip must be in [0, 1], got {self.readout_flip}"
            )


def permanent(matrix: np.ndarray) -> complex:
    """Permanent of a small square matrix, Ryser formula with Gray code.

    O(2^n n); intended for n <= 8.
    """
    M = np.asarray(matrix, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FockError(f"permanent requires a square matrix, got {M.shape}")
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > MAX_PERMANENT_DIM:
        raise FockError(f"permanent limited to n <= {MAX_PERMANENT_DIM}, got {n}")
    row_sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0j
    sign = 1
    gray = 0
    for k in range(1, 2**n):
        new_gray = k ^ (k >> 1)
        bit = new_gray ^ gray
        j = bit.bit_length() - 1
        if new_gray & bit:
            row_sums += M[:, j]
        else:
            row_sums -= M[:, j]
        gray = new_gray
        sign = -sign
        total += sign * np.prod(row_sums)
    if n % 2 == 0:
        total = -total
    return complex(total)


def _permanent_batch(mats: np.ndarray) -> np.ndarray:
    """Permanents of a stack of K square matrices (K, n, n), vectorized Ryser."""
    K, n, _ = mats.shape
    if n == 0:
        return np.ones(K, dtype=complex)
    row_sums = np.zeros((K, n), dtype=complex)
    total = np.zeros(K, dtype=complex)
    sign = 1
    gray = 0
    for k in range(1, 2**n):
        new_gray = k ^ (k >> 1)
        bit = new_gray ^ gray
        j = bit.bit_length() - 1
        if new_gray & bit:
            row_sums += mats[:, :, j]
        else:
            row_sums -= mats[:, :, j]
        gray = new_gray
        sign = -sign
        total += sign * np.prod(row_sums, axis=1)
    if n % 2 == 0:
        total = -total
    return total


def _extended_unitary(U: np.ndarray, num_labels: int) -> np.ndarray:
    return np.kron(np.asarray(U, dtype=complex), np.eye(num_labels))


def _factorial_norm(config: Config) -> float:
    out = 1.0
    for _, c in config:
        out *= math.factorial(c)
    return out


def evolve_state(U: np.ndarray, ensemble: PhotonEnsemble,
                 truncation: int = DEFAULT_TRUNCATION) -> PhotonEnsemble:
    """Propagate a pure multi-photon state through a mode unitary.

    U acts on computational modes; internal labels ride along untouched.
    Output amplitudes are computed per photon-number sector from permanents
    of the extended-unitary submatrices.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (ensemble.num_modes, ensemble.num_modes):
        raise FockError(
            f"unitary shape {U.shape} does not match {ensemble.num_modes} modes"
        )
    for n in ensemble.total_photons():
        if n > truncation:
            raise FockError(f"photon number {n} above truncation {truncation}")
    Ue = _extended_unitary(U, ensemble.num_labels)

    out_terms: dict[Config, complex] = {}
    by_n: dict[int, list[tuple[Config, complex]]] = {}
    for config, amp in ensemble.terms.items():
        by_n.setdefault(config_total(config), []).append((config, amp))

    for n, terms in by_n.items():
        if n == 0:
            for config, amp in terms:
                out_terms[config] = out_terms.get(config, 0.0) + amp
            continue
        # output configurations restricted to modes reachable from the inputs
        in_modes = sorted({m for config, _ in terms for m, _ in config})
        reachable = sorted(
            int(m) for m in np.nonzero(
                np.max(np.abs(Ue[:, in_modes]), axis=1) > 1e-14
            )[0]
        )
        out_configs = [
            config_from_photons(comb)
            for comb in itertools.combinations_with_replacement(reachable, n)
        ]
        cols_cache = {config: config_photons(config) for config, _ in terms}
        rows_all = [config_photons(c) for c in out_configs]
        out_norms = np.array([_factorial_norm(c) for c in out_configs])
        amps = np.zeros(len(out_configs), dtype=complex)
        for config, amp in terms:
            cols = cols_cache[config]
            sub = Ue[:, cols]
            mats = np.stack([sub[rows, :] for rows in rows_all])
            perms = _permanent_batch(mats)
            amps += amp * perms / np.sqrt(_factorial_norm(config) * out_norms)
        for config, a in zip(out_configs, amps):
            if abs(a) > 1e-14:
                out_terms[config] = out_terms.get(config, 0.0) + a

    return PhotonEnsemble(num_modes=ensemble.num_modes, terms=out_terms,
                          num_labels=ensemble.num_labels)


def evolve(U: np.ndarray, ensemble: PhotonEnsemble,
           truncation: int = DEFAULT_TRUNCATION) -> dict[Config, float]:
    """Outcome distribution over output configurations."""
    out = evolve_state(U, ensemble, truncation=truncation)
    return {c: abs(a) ** 2 for c, a in out.terms.items()}


def hom_coincidence(visibility: float) -> tuple[float, float]:
    """Two-photon interference on a 50:50 beamsplitter.

    One photon enters mode 0 with internal state (sqrt(V), sqrt(1-V)), the
    other enters mode 1 in the ideal internal state.  Returns (coincidence
    probability, visibility); the coincidence probability is (1 - V) / 2.
    """
    if not 0.0 <= visibility <= 1.0:
        raise FockError(f"visibility must be in [0, 1], got {visibility}")
    bs = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    v = math.sqrt(visibility)
    w = math.sqrt(1.0 - visibility)
    terms: dict[Config, complex] = {}
    # photon 1: (mode 0, label 0) * v + (mode 0, label 1) * w; photon 2: (1, 0)
    for amp, label in ((v, 0), (w, 1)):
        if amp == 0.0:
            continue
        cfg = config_from_photons([0 * 2 + label, 1 * 2 + 0])
        terms[cfg] = terms.get(cfg, 0.0) + amp
    ens = PhotonEnsemble(num_modes=2, terms=terms)
    dist = evolve(bs, ens)
    coincidence = 0.0
    for config, p in dist.items():
        modes = {m // 2 for m, _ in config}
        if modes == {0, 1}:
            coincidence += p
    # dip visibility against the distinguishable reference P = 1/2
    vis = 1.0 - 2.0 * coincidence
    return coincidence, vis


def detect(
    distribution: dict[Config, float],
    detector: DetectorModel,
    survival: float = 1.0,
    qubit_groups=None,
    num_labels: int = 2,
) -> dict[frozenset, float]:
    """Click-pattern distribution from threshold detectors with loss.

    Each photon independently survives with probability
    ``survival * detector.efficiency``; surviving photons produce one click
    per computational mode (labels traced out).  If ``qubit_groups`` is given
    as a list of (mode0, mode1) pairs, the readout flip moves a lone click on
    mode1 to mode0 with probability ``detector.readout_flip``.
    """
    if not 0.0 <= survival <= 1.0:
        raise FockError(f"survival must be in [0, 1], got {survival}")
    p = survival * detector.efficiency
    clicks: dict[frozenset, float] = {}
    for config, prob in distribution.items():
        mode_counts: dict[int, int] = {}
        for ext, c in config:
            m = ext // num_labels
            mode_counts[m] = mode_counts.get(m, 0) + c
        modes = sorted(mode_counts)
        # each occupied mode clicks independently: 1 - (1-p)^n
        for pattern_bits in itertools.product((False, True), repeat=len(modes)):
            w = prob
            for m, hit in zip(modes, pattern_bits):
                n = mode_counts[m]
                q_click = 1.0 - (1.0 - p) ** n
                w *= q_click if hit else (1.0 - q_click)
            if w == 0.0:
                continue
            pattern = frozenset(m for m, hit in zip(modes, pattern_bits) if hit)
            clicks[pattern] = clicks.get(pattern, 0.0) + w

    if qubit_groups and detector.readout_flip > 0.0:
        clicks = _apply_readout_flip(clicks, detector.readout_flip, qubit_groups)
    return clicks


def _apply_readout_flip(clicks, flip, qubit_groups):
    out: dict[frozenset, float] = {}
    for pattern, prob in clicks.items():
        flippable = [
            (m0, m1)
            for m0, m1 in qubit_groups
            if m1 in pattern and m0 not in pattern
        ]
        for choice in itertools.product((False, True), repeat=len(flippable)):
            w = prob
            moved = set(pattern)
            for (m0, m1), do_flip in zip(flippable, choice):
                if do_flip:
                    w *= flip
                    moved.discard(m1)
                    moved.add(m0)
                else:
                    w *= 1.0 - flip
            if w == 0.0:
                continue
            key = frozenset(moved)
            out[key] = out.get(key, 0.0) + w
    return out


def postselect(
    clicks: dict[frozenset, float],
    control_modes,
    target_modes,
    monitored_extra=(),
) -> tuple[float, dict[tuple[int, int], float]]:
    """Keep patterns with exactly one control click and one target click.

    Unmonitored modes are marginalized away before the test; clicks on any
    extra monitored modes veto the pattern.  Returns the success probability
    and the renormalized conditional distribution keyed by
    (control mode, target mode).
    """
    control_modes = list(control_modes)
    target_modes = list(target_modes)
    monitored = set(control_modes) | set(target_modes) | set(monitored_extra)
    accepted: dict[tuple[int, int], float] = {}
    success = 0.0
    for pattern, prob in clicks.items():
        visible = pattern & monitored
        c_hits = [m for m in control_modes if m in visible]
        t_hits = [m for m in target_modes if m in visible]
        extra = visible - set(control_modes) - set(target_modes)
        if len(c_hits) == 1 and len(t_hits) == 1 and not extra:
            key = (c_hits[0], t_hits[0])
            accepted[key] = accepted.get(key, 0.0) + prob
            success += prob
    if success <= 0.0:
        warnings.warn("post-selection has empty conditional support")
        return 0.0, {}
    return success, {k: v / success for k, v in accepted.items()}
