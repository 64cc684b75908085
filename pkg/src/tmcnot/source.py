"""Photon-pair source: two-mode squeezed vacuum with partial distinguishability.

The generated state is, up to normalization,

    sum_n lam^n (sqrt(V) a_c+ + sqrt(1-V) b_c+)^n (a_t+)^n |vac>

where a/b create photons with orthogonal internal labels on the control
mode and lam sets the pair-number weights.  Pair-number terms are truncated
(default two pairs, i.e. four photons), each term normalized, and the
truncated weights renormalized with the discarded tail reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .fock import FockError, PhotonEnsemble, config_from_photons

__all__ = [
    "SourceError",
    "TmsvModel",
    "SourceTerm",
    "TmsvExpansion",
    "tmsv_ensemble",
    "calibrate_lambda",
    "CalibrationResult",
]


class SourceError(ValueError):
    """Invalid source parameters."""


@dataclass(frozen=True)
class TmsvModel:
    """Source operating point.

    ``lam`` is the pair-amplitude weight (P(n pairs) proportional to
    lam^(2n)), ``visibility`` the control-photon indistinguishability V.
    """

    lam: float
    visibility: float = 0.98
    truncation: int = 2
    wavelength_nm: float = 1545.0

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise SourceError(f"lam must be in [0, 1), got {self.lam}")
        if not 0.0 <= self.visibility <= 1.0:
            raise SourceError(
                f"visibility must be in [0, 1], got {self.visibility}"
            )
        if self.truncation < 0:
            raise SourceError(f"truncation must be >= 0, got {self.truncation}")


@dataclass(frozen=True)
class SourceTerm:
    pairs: int            # pair number n (2n photons)
    weight: float         # probability of this term within the truncation
    ensemble: PhotonEnsemble


@dataclass(frozen=True)
class TmsvExpansion:
    terms: tuple[SourceTerm, ...]
    discarded_tail: float  # probability mass beyond the truncation

    def conditional_weights(self) -> dict[int, float]:
        """Pair-number weights conditioned on at least one pair."""
        total = sum(t.weight for t in self.terms if t.pairs >= 1)
        if total <= 0.0:
            raise SourceError("no pair-generation terms within truncation")
        return {t.pairs: t.weight / total for t in self.terms if t.pairs >= 1}


def tmsv_ensemble(
    model: TmsvModel,
    control_mode: int = 0,
    target_mode: int = 1,
    num_modes: int = 2,
) -> TmsvExpansion:
    """Expand the source state into normalized fixed-pair-number ensembles.

    The control photons carry the (sqrt(V), sqrt(1-V)) internal
    superposition; target photons are the ideal internal reference.  Each
    n-pair ensemble is exactly normalized; the binomial expansion gives
    amplitude sqrt(C(n,k) V^k (1-V)^(n-k)) to the term with k ideal-label
    control photons.
    """
    if control_mode == target_mode:
        raise SourceError("control and target modes must differ")
    lam2 = model.lam**2
    raw = [lam2**n for n in range(model.truncation + 1)]
    total = sum(raw)
    tail = 1.0 - (1.0 - lam2) * total  # = lam2 ** (truncation + 1)

    v = model.visibility
    terms = []
    for n in range(model.truncation + 1):
        ens_terms = {}
        for k in range(n + 1):
            amp2 = math.comb(n, k) * v**k * (1.0 - v) ** (n - k)
            if amp2 == 0.0:
                continue
            photons = (
                [control_mode * 2 + 0] * k
                + [control_mode * 2 + 1] * (n - k)
                + [target_mode * 2 + 0] * n
            )
            if photons:
                ens_terms[config_from_photons(photons)] = math.sqrt(amp2)
            else:
                ens_terms[()] = 1.0
        ensemble = PhotonEnsemble(num_modes=num_modes, terms=ens_terms)
        norm = ensemble.norm_squared()
        if abs(norm - 1.0) > 1e-10:
            raise SourceError(f"pair term n={n} not normalized: {norm}")
        terms.append(SourceTerm(pairs=n, weight=raw[n] / total, ensemble=ensemble))
    return TmsvExpansion(terms=tuple(terms), discarded_tail=tail)


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    mean_pairs: float      # lam^2 / (1 - lam^2)
    p4_conditional: float  # P(2 pairs | >=1 pair) within the truncation


def calibrate_lambda(target_p4: float) -> CalibrationResult:
    """Solve P(2 pairs | >= 1 pair) = target within the 2-pair truncation.

    The truncated conditional is lam^2 / (1 + lam^2), so
    lam = sqrt(target / (1 - target)).
    """
    if not 0.0 < target_p4 < 0.5:
        raise SourceError(f"target must be in (0, 0.5), got {target_p4}")
    lam2 = target_p4 / (1.0 - target_p4)
    lam = math.sqrt(lam2)
    return CalibrationResult(
        lam=lam,
        mean_pairs=lam2 / (1.0 - lam2),
        p4_conditional=lam2 / (1.0 + lam2),
    )
