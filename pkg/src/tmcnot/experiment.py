"""End-to-end pipelines: truth table, gate fidelity, Bell-state generation.

The ideal pipelines run the compiled loop schedule (or, equivalently, the
path-picture unitary) on exact two-photon amplitudes.  The imperfect truth
table composes the calibrated source terms with loss, threshold detection
and the readout flip, all at the path level.

State preparation is realized as schedule rounds, so the reflection phases
ride along exactly as in the loop; in particular the Bell variant's control
operation is the 1/2-beamsplitter setting whose move branch carries the
sigma_z sign, which is what maps |00> to the minus Bell state.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import budget as _budget
from .budget import EfficiencyModel, QUBIT_GROUPS, correct_pattern
from .circuit import CONTROL_RAILS, TARGET_RAILS, ralph_cnot, synthesize
from .fock import (
    PhotonEnsemble,
    config_from_photons,
    config_photons,
    evolve_state,
    postselect,
)
from .source import TmsvModel, calibrate_lambda
from .tmloop import CompileOptions, SwitchSchedule, compile_mesh, loop_unitary
from .tomo import BELL_STATES

__all__ = [
    "ExperimentError",
    "Imperfections",
    "TruthTable",
    "BellRun",
    "INPUT_LABELS",
    "BELL_MAPPING",
    "pipeline_schedule",
    "run_truth_table",
    "gate_fidelity",
    "run_bell",
    "pattern_fidelity",
]

INPUT_LABELS = ("00", "01", "10", "11")

#: input index -> index of the logically correct post-selected output
IDEAL_OUTPUT = {0: 0, 1: 1, 2: 3, 3: 2}

#: Bell state generated from each computational input by the Hadamard
#: variant (the reflective sigma_z phase flips the +- superpositions)
BELL_MAPPING = {"00": "phi-", "01": "psi-", "10": "phi+", "11": "psi+"}


class ExperimentError(ValueError):
    """Invalid pipeline configuration."""


@dataclass(frozen=True)
class Imperfections:
    """Operating point of the imperfect pipeline (paper defaults)."""

    visibility: float = 0.98
    p4_conditional: float = 0.02
    two_photon_detection_prob: float = 0.0033
    readout_flip: float = 0.01

    def source_model(self) -> TmsvModel:
        lam = calibrate_lambda(self.p4_conditional).lam
        return TmsvModel(lam=lam, visibility=self.visibility)

    def efficiency_model(self) -> EfficiencyModel:
        return EfficiencyModel(
            two_photon_detection_prob=self.two_photon_detection_prob,
            readout_flip=self.readout_flip,
        )


@dataclass
class TruthTable:
    """Conditional output probabilities per input, given post-selection."""

    probs: np.ndarray               # 4x4, rows = inputs 00..11
    success: np.ndarray             # absolute success probability per input
    route: str = "loop"
    ideal: bool = True

    def row_checksum(self) -> float:
        return float(np.max(np.abs(self.probs.sum(axis=1) - 1.0)))


@dataclass
class BellRun:
    input_label: str
    target_label: str
    pattern: np.ndarray             # computational-basis probabilities
    state: np.ndarray               # conditional 4x4 density matrix
    fidelity: float
    success: float


@lru_cache(maxsize=None)
def pipeline_schedule(input_label: str, bell: bool = False,
                      separation: bool = False) -> SwitchSchedule:
    return compile_mesh(
        ralph_cnot(),
        CompileOptions(prep_input=input_label, bell_variant=bell,
                       separation=separation),
    )


@lru_cache(maxsize=None)
def _gate_unitary_cached() -> tuple:
    U = synthesize(ralph_cnot())
    return tuple(map(tuple, U))


def gate_unitary() -> np.ndarray:
    return np.array(_gate_unitary_cached(), dtype=complex)


def _loop_two_photon_state(schedule: SwitchSchedule, visibility: float = 1.0,
                           block_overrides=None) -> PhotonEnsemble:
    """Evolve the two source photons through a compiled pipeline.

    The photon routed to the control input carries the (sqrt(V), sqrt(1-V))
    internal superposition.
    """
    U = loop_unitary(schedule, block_overrides=block_overrides)
    nb = schedule.num_bins
    mode_a = schedule.mode_index(schedule.input_map[0])
    mode_b = schedule.mode_index(schedule.input_map[1])
    terms = {}
    v = np.sqrt(visibility)
    w = np.sqrt(1.0 - visibility)
    for amp, label in ((v, 0), (w, 1)):
        if amp == 0.0:
            continue
        cfg = config_from_photons([mode_a * 2 + label, mode_b * 2 + 0])
        terms[cfg] = terms.get(cfg, 0.0) + amp
    ens = PhotonEnsemble(num_modes=2 * nb, terms=terms)
    return evolve_state(U, ens)


def _conditional_qubit_state(out_state: PhotonEnsemble, control_modes,
                             target_modes):
    """Post-select on one photon per qubit group; trace out labels.

    Returns (success probability, 4x4 density matrix in the |ct> basis).
    """
    amps: dict[tuple[int, int, int, int], complex] = {}
    for config, amp in out_state.terms.items():
        photons = config_photons(config)
        if len(photons) != 2:
            continue
        by_mode = [(m // 2, m % 2) for m in photons]
        cs = [(m, l) for m, l in by_mode if m in control_modes]
        ts = [(m, l) for m, l in by_mode if m in target_modes]
        if len(cs) != 1 or len(ts) != 1:
            continue
        (cm, cl), (tm, tl) = cs[0], ts[0]
        oc = control_modes.index(cm)
        ot = target_modes.index(tm)
        amps[(oc, ot, cl, tl)] = amps.get((oc, ot, cl, tl), 0.0) + amp
    success = sum(abs(a) ** 2 for a in amps.values())
    if success <= 0.0:
        return 0.0, np.eye(4, dtype=complex) / 4.0
    rho = np.zeros((4, 4), dtype=complex)
    for (oc, ot, cl, tl), a in amps.items():
        for (oc2, ot2, cl2, tl2), a2 in amps.items():
            if (cl, tl) == (cl2, tl2):
                rho[2 * oc + ot, 2 * oc2 + ot2] += a * np.conj(a2)
    return float(success), rho / success


def _pipeline_out_groups(schedule: SwitchSchedule):
    control = [schedule.mode_index(tuple(p)) for p in schedule.meta["control_out"]]
    target = [schedule.mode_index(tuple(p)) for p in schedule.meta["target_out"]]
    return control, target


def _ideal_truth_table_loop() -> TruthTable:
    probs = np.zeros((4, 4))
    success = np.zeros(4)
    for i, label in enumerate(INPUT_LABELS):
        schedule = pipeline_schedule(label)
        control, target = _pipeline_out_groups(schedule)
        out = _loop_two_photon_state(schedule)
        p, rho = _conditional_qubit_state(out, control, target)
        success[i] = p
        probs[i] = np.real(np.diag(rho))
    return TruthTable(probs=probs, success=success, route="loop", ideal=True)


def _path_input_ensemble(c: int, t: int, visibility: float = 1.0) -> PhotonEnsemble:
    terms = {}
    v = np.sqrt(visibility)
    w = np.sqrt(1.0 - visibility)
    for amp, label in ((v, 0), (w, 1)):
        if amp == 0.0:
            continue
        cfg = config_from_photons(
            [CONTROL_RAILS[c] * 2 + label, TARGET_RAILS[t] * 2 + 0]
        )
        terms[cfg] = terms.get(cfg, 0.0) + amp
    return PhotonEnsemble(num_modes=6, terms=terms)


def _ideal_truth_table_path() -> TruthTable:
    U = gate_unitary()
    probs = np.zeros((4, 4))
    success = np.zeros(4)
    for i, label in enumerate(INPUT_LABELS):
        c, t = int(label[0]), int(label[1])
        out = evolve_state(U, _path_input_ensemble(c, t))
        p, rho = _conditional_qubit_state(out, list(CONTROL_RAILS),
                                          list(TARGET_RAILS))
        success[i] = p
        probs[i] = np.real(np.diag(rho))
    return TruthTable(probs=probs, success=success, route="path", ideal=True)


def _imperfect_truth_table(imp: Imperfections) -> TruthTable:
    source = imp.source_model()
    eff = imp.efficiency_model()
    probs = np.zeros((4, 4))
    success = np.zeros(4)
    for i, label in enumerate(INPUT_LABELS):
        c, t = int(label[0]), int(label[1])
        mass = np.zeros(4)
        for contrib in _budget.input_contributions(c, t, source, eff):
            _, conditional = postselect(
                {k: v * contrib.weight for k, v in contrib.clicks.items()},
                CONTROL_RAILS,
                TARGET_RAILS,
            )
            total = sum(
                v * contrib.weight
                for k, v in contrib.clicks.items()
                if _valid_pattern(k)
            )
            for (cm, tm), frac in conditional.items():
                oc = CONTROL_RAILS.index(cm)
                ot = TARGET_RAILS.index(tm)
                mass[2 * oc + ot] += frac * total
        success[i] = mass.sum()
        probs[i] = mass / mass.sum()
    return TruthTable(probs=probs, success=success, route="path", ideal=False)


def _valid_pattern(pattern) -> bool:
    visible = pattern & (set(CONTROL_RAILS) | set(TARGET_RAILS))
    return (
        len(visible & set(CONTROL_RAILS)) == 1
        and len(visible & set(TARGET_RAILS)) == 1
    )


def run_truth_table(imperfections: Imperfections | None = None,
                    route: str = "loop") -> TruthTable:
    """Post-selected conditional output table for the four inputs.

    Ideal runs go through the compiled loop schedule by default (route
    "path" uses the 6-rail unitary; both agree to numerical precision).
    With imperfections the calibrated source, loss, threshold detection and
    readout flip are composed at the path level.
    """
    if route not in ("loop", "path"):
        raise ExperimentError(f"unknown route {route!r}")
    if imperfections is None:
        return _ideal_truth_table_loop() if route == "loop" else \
            _ideal_truth_table_path()
    return _imperfect_truth_table(imperfections)


def gate_fidelity(table: TruthTable) -> float:
    """Mean probability of the logically correct output over the inputs."""
    probs = np.asarray(table.probs, dtype=float)
    if probs.shape != (4, 4):
        raise ExperimentError(f"truth table must be 4x4, got {probs.shape}")
    return float(np.mean([probs[i, IDEAL_OUTPUT[i]] for i in range(4)]))


#: test hook: the hypothetical pure-Hadamard block (determinant -1, outside
#: the physical rotation family) used to demonstrate the sigma_z sign
_PURE_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def run_bell(input_label: str, visibility: float = 1.0,
             drop_sigma_z: bool = False) -> BellRun:
    """Generate a Bell state: Hadamard variant plus the separation round.

    ``drop_sigma_z`` replaces the control setting with a hypothetical
    sigma_z-free Hadamard (not realizable by the physical rotation), which
    swaps the plus/minus Bell states; it exists as a sign regression guard.
    """
    if input_label not in INPUT_LABELS:
        raise ExperimentError(f"unknown input label {input_label!r}")
    schedule = pipeline_schedule(input_label, bell=True, separation=True)
    overrides = None
    if drop_sigma_z:
        hv_round = next(
            i for i, r in enumerate(schedule.rounds) if r.tag == "hadamard-variant"
        )
        control_bin = schedule.meta["gate_input_map"][1][0]
        overrides = {(hv_round, control_bin): _PURE_HADAMARD}
    control, target = _pipeline_out_groups(schedule)
    out = _loop_two_photon_state(schedule, visibility=visibility,
                                 block_overrides=overrides)
    success, rho = _conditional_qubit_state(out, control, target)
    target_label = BELL_MAPPING[input_label]
    psi = BELL_STATES[target_label]
    fid = float(np.real(psi.conj() @ rho @ psi))
    return BellRun(
        input_label=input_label,
        target_label=target_label,
        pattern=np.real(np.diag(rho)).copy(),
        state=rho,
        fidelity=fid,
        success=success,
    )


def pattern_fidelity(measured, ideal) -> float:
    """Classical (Bhattacharyya) fidelity between two outcome distributions."""
    p = np.asarray(measured, dtype=float)
    q = np.asarray(ideal, dtype=float)
    if p.shape != q.shape:
        raise ExperimentError("patterns must have the same shape")
    if np.any(p < 0) or np.any(q < 0):
        raise ExperimentError("patterns must be nonnegative")
    for name, vec in (("measured", p), ("ideal", q)):
        s = vec.sum()
        if s <= 0:
            raise ExperimentError(f"{name} pattern has no mass")
        if abs(s - 1.0) > 1e-9:
            warnings.warn(f"{name} pattern renormalized (sum {s:.6g})")
    p = p / p.sum()
    q = q / q.sum()
    return float(np.sum(np.sqrt(p * q)) ** 2)
