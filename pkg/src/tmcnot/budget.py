"""Fidelity-bound analysis: success and error budgets per logical input.

For each computational input the pair source emits either one photon pair
(split into an indistinguishable part with weight V and a distinguishable
part with weight 1-V) or, with the calibrated four-photon probability, two
pairs (treated as indistinguishable; distinguishable four-photon events are
negligible).  Every contribution is evolved through the gate, thinned by the
per-photon survival, read by threshold detectors with the asymmetric readout
flip, post-selected on one control and one target click, and classified as
correct or erroneous against the ideal truth table.

P_CNOT per input is P(success) / (P(success) + P(error)); the fidelity upper
bound is the mean over the four inputs.

The published reference table rounds aggressively and its non-headline
entries do not all follow from one coherent model (its own text quotes a
distinguishable-pair probability that matches neither table column); the
comparison report therefore flags per-entry deviations beyond 30% instead
of failing outright.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import CONTROL_RAILS, TARGET_RAILS, ralph_cnot, synthesize
from .fock import DetectorModel, PhotonEnsemble, config_from_photons, detect, evolve
from .source import TmsvModel, tmsv_ensemble

__all__ = [
    "BudgetError",
    "EfficiencyModel",
    "BudgetRow",
    "budget_table",
    "p_cnot",
    "fidelity_bound",
    "compare_to_reference",
    "TABLE1_REFERENCE",
]

INPUT_LABELS = ("00", "01", "10", "11")

#: dual-rail readout groups: (|0> mode, |1> mode)
QUBIT_GROUPS = ((CONTROL_RAILS[0], CONTROL_RAILS[1]),
                (TARGET_RAILS[0], TARGET_RAILS[1]))


class BudgetError(ValueError):
    """Invalid budget inputs."""


@dataclass(frozen=True)
class EfficiencyModel:
    """Aggregate loss and readout parameters.

    Only the probability that a photon pair survives to detection is
    published; the per-photon survival is its square root, applied uniformly.
    """

    two_photon_detection_prob: float = 0.0033
    readout_flip: float = 0.01
    n_rounds: int = 6  # metadata: round trips the aggregate figure refers to

    def __post_init__(self):
        if not 0.0 <= self.two_photon_detection_prob <= 1.0:
            raise BudgetError("two_photon_detection_prob must be in [0, 1]")
        if not 0.0 <= self.readout_flip <= 1.0:
            raise BudgetError("readout_flip must be in [0, 1]")

    @property
    def per_photon_survival(self) -> float:
        return math.sqrt(self.two_photon_detection_prob)


@dataclass
class BudgetRow:
    """Per-input success/error budget, keyed by (photon count, distinguishable)."""

    input_label: str
    entries: dict[tuple[int, bool], tuple[float, float]] = field(default_factory=dict)

    @property
    def p_success(self) -> float:
        return sum(c for c, _ in self.entries.values())

    @property
    def p_error(self) -> float:
        return sum(e for _, e in self.entries.values())

    @property
    def p_cnot(self) -> float:
        return p_cnot(self.p_success, self.p_error)


def p_cnot(p_success: float, p_error: float) -> float:
    """Probability of the expected logical output given a valid pattern."""
    if p_success < 0 or p_error < 0:
        raise BudgetError("probabilities must be nonnegative")
    total = p_success + p_error
    if total <= 0.0:
        raise BudgetError("p_success + p_error must be positive")
    return p_success / total


def fidelity_bound(rows) -> float:
    """Mean of the four per-input P_CNOT values."""
    rows = list(rows)
    if len(rows) != 4:
        raise BudgetError(f"expected four budget rows, got {len(rows)}")
    return sum(r.p_cnot for r in rows) / 4.0


def correct_pattern(c: int, t: int) -> tuple[int, int]:
    """Click pattern (control mode, target mode) of the ideal C-NOT output."""
    return CONTROL_RAILS[c], TARGET_RAILS[t ^ c]


def _input_ensemble(c: int, t: int, pairs: int, control_label: int) -> PhotonEnsemble:
    photons = []
    for _ in range(pairs):
        photons.append(CONTROL_RAILS[c] * 2 + control_label)
        photons.append(TARGET_RAILS[t] * 2 + 0)
    return PhotonEnsemble(num_modes=6, terms={config_from_photons(photons): 1.0})


def classify_clicks(clicks, c: int, t: int, monitor_ancillas: bool = False):
    """Split click-pattern mass into (correct, error) after post-selection."""
    good = correct_pattern(c, t)
    monitored_extra = (0, 5) if monitor_ancillas else ()
    correct = 0.0
    error = 0.0
    control = set(CONTROL_RAILS)
    target = set(TARGET_RAILS)
    monitored = control | target | set(monitored_extra)
    for pattern, prob in clicks.items():
        visible = pattern & monitored
        c_hits = visible & control
        t_hits = visible & target
        extra = visible - control - target
        if len(c_hits) == 1 and len(t_hits) == 1 and not extra:
            if (next(iter(c_hits)), next(iter(t_hits))) == good:
                correct += prob
            else:
                error += prob
    return correct, error


@dataclass(frozen=True)
class Contribution:
    """One source term routed through the gate: weighted click distribution."""

    n_photons: int
    distinguishable: bool
    weight: float
    clicks: dict


def input_contributions(
    c: int,
    t: int,
    source: TmsvModel,
    eff: EfficiencyModel,
    n4_flips: bool = True,
    n4_weight_mode: str = "full",
) -> list[Contribution]:
    """Click distributions of every source contribution for one input.

    The pair term splits into an indistinguishable part (weight V) and a
    distinguishable one (weight 1-V); the two-pair term is treated as
    indistinguishable.  Clicks are already thinned by the per-photon
    survival and carry the readout flip.
    """
    if source.truncation < 2:
        raise BudgetError("budget needs the source truncated at >= 2 pairs")
    if n4_weight_mode not in ("full", "v2"):
        raise BudgetError(f"unknown n4_weight_mode {n4_weight_mode!r}")
    expansion = tmsv_ensemble(source)
    weights = expansion.conditional_weights()
    p2, p4 = weights.get(1, 0.0), weights.get(2, 0.0)
    v = source.visibility
    survival = eff.per_photon_survival
    U = synthesize(ralph_cnot())
    detector = DetectorModel(efficiency=1.0, readout_flip=eff.readout_flip)
    detector_n4 = detector if n4_flips else DetectorModel(efficiency=1.0)
    n4_weight = p4 if n4_weight_mode == "full" else p4 * v**2

    plan = (
        (2, False, p2 * v, 0, 1, detector),
        (2, True, p2 * (1.0 - v), 1, 1, detector),
        (4, False, n4_weight, 0, 2, detector_n4),
    )
    out = []
    for n_photons, dist, weight, ctrl_label, pairs, det in plan:
        ens = _input_ensemble(c, t, pairs, ctrl_label)
        clicks = detect(evolve(U, ens), det, survival=survival,
                        qubit_groups=QUBIT_GROUPS)
        out.append(Contribution(n_photons, dist, weight, clicks))
    return out


def budget_table(
    source: TmsvModel,
    eff: EfficiencyModel,
    monitor_ancillas: bool = False,
    n4_flips: bool = True,
    n4_weight_mode: str = "full",
) -> tuple[list[BudgetRow], dict]:
    """Success/error budget rows for the four computational inputs.

    ``n4_weight_mode``: "full" assigns the whole four-photon weight to the
    indistinguishable contribution (the distinguishable part is dropped as
    negligible); "v2" keeps only the V^2 sector of the expanded state.
    Returns the rows plus a report with the contribution breakdown and the
    reference comparison.
    """
    expansion = tmsv_ensemble(source)
    rows = []
    breakdown = {}
    for label in INPUT_LABELS:
        c, t = int(label[0]), int(label[1])
        row = BudgetRow(input_label=label)
        for contrib in input_contributions(c, t, source, eff,
                                           n4_flips=n4_flips,
                                           n4_weight_mode=n4_weight_mode):
            corr, err = classify_clicks(contrib.clicks, c, t,
                                        monitor_ancillas=monitor_ancillas)
            key = (contrib.n_photons, contrib.distinguishable)
            row.entries[key] = (contrib.weight * corr, contrib.weight * err)
            breakdown[(label,) + key] = {
                "weight": contrib.weight,
                "p_correct_given_term": corr,
                "p_error_given_term": err,
            }
        rows.append(row)

    report = {
        "breakdown": breakdown,
        "discarded_tail": expansion.discarded_tail,
        "conventions": {
            "monitor_ancillas": monitor_ancillas,
            "n4_flips": n4_flips,
            "n4_weight_mode": n4_weight_mode,
        },
        "reference_comparison": compare_to_reference(rows),
    }
    return rows, report


# Published supplementary reference values, all in percent.
TABLE1_REFERENCE = {
    "correct": {
        (2, False): (0.036, 0.036, 0.036, 0.036),
        (2, True): (0.0017, 0.0010, 0.00061, 0.0017),
        (4, False): (0.0019, 0.0019, 0.0015, 0.0015),
    },
    "error": {
        (2, False): (0.0, 0.00036, 0.00072, 0.0),
        (2, True): (0.0, 0.000010, 0.0012, 0.0011),
        (4, False): (0.00094, 0.00095, 0.0011, 0.0010),
    },
    "p_success": (0.039, 0.038, 0.037, 0.039),
    "p_error": (0.00094, 0.0013, 0.0029, 0.0021),
    "p_cnot": (98.0, 97.0, 93.0, 95.0),
}

#: relative tolerance for the per-entry comparison
REFERENCE_RTOL = 0.30
#: absolute floor (percent) below which an entry counts as the table's zero
REFERENCE_ZERO_ATOL = 1e-4


def compare_to_reference(rows) -> dict:
    """Per-entry comparison against the published table.

    Entries deviating more than 30% (or nonzero against a published zero)
    are listed under ``discrepancies`` with both values; headline agreement
    is reported separately.
    """
    rows = list(rows)
    matches = []
    discrepancies = []

    def check(name, computed_pct, reference_pct):
        if reference_pct <= 0.0:
            ok = abs(computed_pct) <= REFERENCE_ZERO_ATOL
            rel = None
        else:
            rel = (computed_pct - reference_pct) / reference_pct
            ok = abs(rel) <= REFERENCE_RTOL
        item = {
            "entry": name,
            "computed_pct": computed_pct,
            "reference_pct": reference_pct,
            "relative_deviation": rel,
        }
        (matches if ok else discrepancies).append(item)

    for i, row in enumerate(rows):
        for key, (corr, err) in sorted(row.entries.items()):
            n, dist = key
            tag = f"n={n},{'dist' if dist else 'indist'}"
            check(f"{row.input_label}:correct:{tag}", corr * 100.0,
                  TABLE1_REFERENCE["correct"][key][i])
            check(f"{row.input_label}:error:{tag}", err * 100.0,
                  TABLE1_REFERENCE["error"][key][i])
        check(f"{row.input_label}:p_success", row.p_success * 100.0,
              TABLE1_REFERENCE["p_success"][i])
        check(f"{row.input_label}:p_error", row.p_error * 100.0,
              TABLE1_REFERENCE["p_error"][i])

    return {"matches": matches, "discrepancies": discrepancies}
