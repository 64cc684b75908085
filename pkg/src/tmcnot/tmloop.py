"""Compile layered meshes into time-multiplexed fiber-loop switch schedules.

Loop model
----------
The loop state space is (time bin, polarization).  Polarization 0 ("stay")
takes the short fiber and keeps its bin; polarization 1 ("move") takes the
long fiber and advances one bin per round trip.  One round trip applies a
per-bin polarization rotation followed by the move-shift.

The per-bin switch with setting theta acts as the rotation
``[[cos t, sin t], [-sin t, cos t]]`` on (stay, move).  Written in the rail
basis of the equivalent beamsplitter cascade (a beamsplitter's top rail
arrives as the move component and leaves as the stay component) this is
exactly ``eom_unitary(theta) = [[sin t, cos t], [cos t, -sin t]]``, i.e. the
+-R beamsplitter family with sin(theta) = sign * sqrt(R).

Compilation strategies
----------------------
``direct``  places one mesh layer per round trip.  It works whenever each
rail alternates between top and bottom roles from one interaction to the
next (brick-wall meshes, including the C-NOT preset, which compiles to
exactly three gate rounds).  Bin positions are solved by constraint
propagation; conflicts raise and trigger the fallback.

``spaced``  handles arbitrary layered meshes by parking every rail as a
stay mode on its own bin and walking rails together one beamsplitter at a
time (launch, transit, interact, land), re-spreading afterwards.  It costs
more round trips but never fails.

Pass-through bins receive explicit settings: theta=0 holds a stay mode and
lets a move mode continue; theta=+-90 converts between the two (the sigma_z
reflection of the cascade picture).  Unoccupied bins default to the
reflective setting.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .circuit import Interferometer, ralph_cnot

__all__ = [
    "ScheduleError",
    "CompileError",
    "LoopConfig",
    "CompileOptions",
    "ScheduleRound",
    "SwitchSchedule",
    "eom_unitary",
    "theta_for_bs",
    "ThetaSetting",
    "compile_mesh",
    "loop_unitary",
    "equivalence_check",
]

STAY, MOVE = 0, 1

#: hardware switching range quoted for the modulator, degrees
HW_THETA_MIN = -35.0
HW_THETA_MAX = 90.0

DEFAULT_IDLE_THETA = 90.0  # reflective setting on unoccupied bins


class ScheduleError(ValueError):
    """Invalid switch schedule."""


class CompileError(ValueError):
    """Mesh cannot be compiled with the requested strategy/options."""


class _DirectUnsupported(Exception):
    """Internal: mesh shape outside the direct strategy; fall back."""


@dataclass(frozen=True)
class LoopConfig:
    """Physical loop parameters.

    ``move_pol`` records which physical polarization takes the long fiber
    (pure labeling; the math is identical either way).
    """

    delay_ns: float = 170.0
    num_rounds: int | None = None
    move_pol: str = "V"

    def __post_init__(self):
        if self.delay_ns <= 0:
            raise ScheduleError(f"delay_ns must be > 0, got {self.delay_ns}")
        if self.move_pol not in ("H", "V"):
            raise ScheduleError(f"move_pol must be 'H' or 'V', got {self.move_pol}")


@dataclass(frozen=True)
class CompileOptions:
    """What to compile around the bare mesh.

    ``prep_input`` ("00".."11") prepends the split and state-preparation
    rounds of the canonical C-NOT pipeline.  ``bell_variant`` swaps the
    control-bin setting of the first gate round for a 1/2 beamsplitter;
    ``separation`` appends the all-reflective round that moves each qubit
    into a single bin.  Both require ``prep_input``.
    """

    prep_input: str | None = None
    bell_variant: bool = False
    separation: bool = False
    strategy: str = "auto"  # auto | direct | spaced

    def __post_init__(self):
        if self.prep_input is not None and self.prep_input not in (
            "00", "01", "10", "11"
        ):
            raise CompileError(f"prep_input must be one of 00/01/10/11, "
                               f"got {self.prep_input!r}")
        if (self.bell_variant or self.separation) and self.prep_input is None:
            raise CompileError("bell_variant/separation require prep_input")
        if self.strategy not in ("auto", "direct", "spaced"):
            raise CompileError(f"unknown strategy {self.strategy!r}")


@dataclass
class ScheduleRound:
    tag: str
    entries: dict[int, float]  # bin -> theta, degrees


@dataclass
class SwitchSchedule:
    """Per-round, per-bin switch settings plus the rail/mode correspondence.

    ``input_map`` and ``output_map`` pair each mesh rail with its
    (bin, polarization) mode at the loop input and output; ``meta`` carries
    pipeline bookkeeping (photon injection modes, output qubit groups).
    """

    num_bins: int
    rounds: list[ScheduleRound]
    warnings: list[str] = field(default_factory=list)
    input_map: dict[int, tuple[int, int]] = field(default_factory=dict)
    output_map: dict[int, tuple[int, int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for rnd in self.rounds:
            for b, th in rnd.entries.items():
                if not 0 <= b < self.num_bins:
                    raise ScheduleError(f"entry bin {b} outside 0..{self.num_bins-1}")
                if not -90.0 <= th <= 90.0:
                    raise ScheduleError(f"theta {th} outside [-90, 90] degrees")

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def mode_index(self, bin_pol: tuple[int, int]) -> int:
        b, p = bin_pol
        return 2 * b + p

    def to_json(self) -> str:
        doc = {
            "num_bins": self.num_bins,
            "rounds": [
                {
                    "tag": rnd.tag,
                    "entries": [
                        {"bin": b, "theta_deg": round(th, 6)}
                        for b, th in sorted(rnd.entries.items())
                    ],
                }
                for rnd in self.rounds
            ],
            "warnings": list(self.warnings),
            "input_map": {str(k): list(v) for k, v in self.input_map.items()},
            "output_map": {str(k): list(v) for k, v in self.output_map.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SwitchSchedule":
        doc = json.loads(text)
        rounds = [
            ScheduleRound(
                tag=r.get("tag", "gate"),
                entries={int(e["bin"]): float(e["theta_deg"]) for e in r["entries"]},
            )
            for r in doc["rounds"]
        ]
        return cls(
            num_bins=int(doc["num_bins"]),
            rounds=rounds,
            warnings=list(doc.get("warnings", [])),
            input_map={int(k): tuple(v) for k, v in doc.get("input_map", {}).items()},
            output_map={int(k): tuple(v) for k, v in doc.get("output_map", {}).items()},
        )


class ThetaSetting(NamedTuple):
    theta_deg: float
    hwp_deg: float  # equivalent half-waveplate fast-axis angle


def eom_unitary(theta_deg: float) -> np.ndarray:
    """Rail-space switch unitary [[sin t, cos t], [cos t, -sin t]]."""
    if not math.isfinite(theta_deg):
        raise ScheduleError(f"theta must be finite, got {theta_deg}")
    t = math.radians(theta_deg)
    s, c = math.sin(t), math.cos(t)
    return np.array([[s, c], [c, -s]], dtype=complex)


def _phys_rotation(theta_deg: float) -> np.ndarray:
    # rotation on (stay, move) whose rail-basis form is eom_unitary(theta)
    t = math.radians(theta_deg)
    s, c = math.sin(t), math.cos(t)
    return np.array([[c, s], [-s, c]], dtype=complex)


def theta_for_bs(reflectivity: float, sign: int = 1) -> ThetaSetting:
    """Switch angle reproducing bs_unitary(R, sign, 0, 0).

    theta = arcsin(sign * sqrt(R)); the half-waveplate column documents the
    equivalent waveplate angle acos(sqrt(R)) / 2.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise ScheduleError(f"reflectivity must be in [0, 1], got {reflectivity}")
    if sign not in (1, -1):
        raise ScheduleError(f"sign must be +1 or -1, got {sign}")
    r = math.sqrt(reflectivity)
    theta = math.degrees(math.asin(sign * r))
    hwp = math.degrees(math.acos(r)) / 2.0
    return ThetaSetting(theta_deg=theta, hwp_deg=hwp)


# ---------------------------------------------------------------------------
# single-photon bookkeeping used by the compilers


def _apply_op(pos: tuple[int, int], theta: float) -> tuple[tuple[int, int], float]:
    """Deterministic routing ops: move a single occupied mode through one
    round.  Only theta in {0, +90, -90} routes without splitting."""
    b, p = pos
    if theta == 0.0:
        return ((b, STAY), 1.0) if p == STAY else ((b + 1, MOVE), 1.0)
    if theta == 90.0:
        return ((b + 1, MOVE), -1.0) if p == STAY else ((b, STAY), 1.0)
    if theta == -90.0:
        return ((b + 1, MOVE), 1.0) if p == STAY else ((b, STAY), -1.0)
    raise CompileError(f"theta {theta} is not a routing setting")


def _range_warnings(rounds: list[ScheduleRound]) -> list[str]:
    out = []
    for i, rnd in enumerate(rounds):
        for b, th in sorted(rnd.entries.items()):
            if not HW_THETA_MIN <= th <= HW_THETA_MAX:
                out.append(
                    f"round {i} bin {b}: theta {th:.3f} outside hardware range "
                    f"[{HW_THETA_MIN:g}, {HW_THETA_MAX:g}]"
                )
    return out


def _fill_idle(rounds: list[ScheduleRound], num_bins: int) -> None:
    for rnd in rounds:
        for b in range(num_bins):
            rnd.entries.setdefault(b, DEFAULT_IDLE_THETA)


_TOP, _BOTTOM = 0, 1


def _rail_roles(mesh: Interferometer):
    """Per rail, the ordered list of (layer, role, element)."""
    seq: dict[int, list] = {i: [] for i in range(mesh.num_rails)}
    for el in sorted(mesh.elements, key=lambda e: (e.layer, e.top_rail)):
        seq[el.top_rail].append((el.layer, _TOP, el))
        seq[el.top_rail + 1].append((el.layer, _BOTTOM, el))
    return seq


def _direct_compile(mesh: Interferometer, seeds=None):
    """One round per layer.  Raises _DirectUnsupported on shape mismatch,
    CompileError on bin conflicts."""
    seeds = seeds or {}
    roles = _rail_roles(mesh)
    # a rail must alternate: exit of TOP is a stay mode, which can only enter
    # a later beamsplitter as the BOTTOM rail, and vice versa
    for rail, seq in roles.items():
        for (l1, r1, _), (l2, r2, _) in zip(seq, seq[1:]):
            if r1 == r2:
                raise _DirectUnsupported(
                    f"rail {rail} repeats the same role in layers {l1} and {l2}"
                )

    num_layers = mesh.num_layers
    bs_bin: dict[tuple[int, int], int] = {}
    # last exit per rail: (layer, bin, pol at exit)
    last_exit: dict[int, tuple[int, int, int]] = {}
    max_bin = -2
    for layer in range(num_layers):
        for el in sorted(mesh.layer_elements(layer), key=lambda e: e.top_rail):
            t = el.top_rail
            want = []
            if t in last_exit:
                l0, b0, p0 = last_exit[t]
                if p0 != MOVE:
                    raise _DirectUnsupported(f"rail {t} arrives with wrong role")
                want.append(b0 + (layer - l0))
            if t + 1 in last_exit:
                l0, b0, p0 = last_exit[t + 1]
                if p0 != STAY:
                    raise _DirectUnsupported(f"rail {t + 1} arrives with wrong role")
                want.append(b0)
            if want and len(set(want)) > 1:
                raise CompileError(
                    f"bin conflict for beamsplitter ({layer}, {t}): {want}"
                )
            if want:
                b = want[0]
            else:
                b = seeds.get((layer, t), max_bin + 2)
            bs_bin[(layer, t)] = b
            max_bin = max(max_bin, b)
            last_exit[t] = (layer, b, STAY)
            last_exit[t + 1] = (layer, b, MOVE)

    # input positions
    inputs: dict[int, tuple[int, int]] = {}
    spare = max_bin + 1
    for rail in range(mesh.num_rails):
        seq = roles[rail]
        if not seq:
            inputs[rail] = (spare, STAY)
            spare += 1
            continue
        layer, role, el = seq[0]
        b = bs_bin[(layer, el.top_rail)]
        inputs[rail] = (b - layer, MOVE) if role == _TOP else (b, STAY)

    shift = max(0, -min(b for b, _ in inputs.values()))
    if shift:
        inputs = {r: (b + shift, p) for r, (b, p) in inputs.items()}
        bs_bin = {k: b + shift for k, b in bs_bin.items()}

    # simulate round by round, collecting entries and checking conflicts
    pos = dict(inputs)
    rounds: list[ScheduleRound] = []
    for layer in range(num_layers):
        entries: dict[int, float] = {}
        active: dict[int, tuple] = {}
        for el in mesh.layer_elements(layer):
            if el.reflect_phase or el.transmit_phase:
                raise CompileError("loop switches realize only zero-phase "
                                   "beamsplitters")
            b = bs_bin[(layer, el.top_rail)]
            entries[b] = theta_for_bs(el.reflectivity, el.reflection_sign).theta_deg
            active[el.top_rail] = (b, _TOP)
            active[el.top_rail + 1] = (b, _BOTTOM)
        for rail, (b, role) in active.items():
            expect = (b, MOVE) if role == _TOP else (b, STAY)
            if pos[rail] != expect:
                raise CompileError(
                    f"rail {rail} at {pos[rail]} but layer {layer} needs {expect}"
                )
        new_pos = {}
        for rail, (b, p) in pos.items():
            if rail in active:
                bb, role = active[rail]
                new_pos[rail] = (bb, STAY) if role == _TOP else (bb + 1, MOVE)
                continue
            # pass-through: hold course with theta = 0
            if b in entries and entries[b] != 0.0:
                raise CompileError(
                    f"rail {rail} transits bin {b} during an interaction in "
                    f"layer {layer}"
                )
            entries[b] = 0.0
            new_pos[rail] = (b, STAY) if p == STAY else (b + 1, MOVE)
        if len(set(new_pos.values())) != len(new_pos):
            raise CompileError(f"rail collision after layer {layer}")
        pos = new_pos
        rounds.append(ScheduleRound(tag="gate", entries=entries))

    all_bins = [b for b, _ in inputs.values()] + [b for b, _ in pos.values()]
    num_bins = max(all_bins) + 1
    return rounds, num_bins, inputs, pos


def _spaced_compile(mesh: Interferometer):
    """Strategy that works for every layered mesh: rails parked as stay
    modes on separated bins, walked pairwise through each beamsplitter."""
    n = mesh.num_rails
    bins = [2 * i for i in range(n)]
    rounds: list[ScheduleRound] = []

    def emit(specials: dict[int, float]):
        entries = dict(specials)
        for b in occupied():
            entries.setdefault(b, 0.0)
        rounds.append(ScheduleRound(tag="gate", entries=entries))

    transit: dict[int, int] = {}  # rail -> current bin while climbing

    def occupied():
        out = {b for i, b in enumerate(bins) if i not in transit}
        out.update(transit.values())
        return out

    def walk(rail: int, distance: int, launch_theta: float, land_theta: float):
        # launch, climb, land: moves `rail` up by `distance` bins, sign-free
        transit[rail] = bins[rail]
        emit({bins[rail]: launch_theta})
        transit[rail] += 1
        for _ in range(distance - 1):
            emit({})
            transit[rail] += 1
        emit({transit[rail]: land_theta})
        bins[rail] = transit.pop(rail)

    def respread():
        target = list(bins)
        for i in range(1, n):
            target[i] = max(target[i], target[i - 1] + 2)
        for i in range(n - 1, -1, -1):
            d = target[i] - bins[i]
            if d > 0:
                walk(i, d, launch_theta=-90.0, land_theta=90.0)

    num_layers = mesh.num_layers
    if num_layers == 0:
        emit({})
    for layer in range(num_layers):
        elements = sorted(mesh.layer_elements(layer), key=lambda e: e.top_rail)
        if not elements:
            emit({})
        for el in elements:
            if el.reflect_phase or el.transmit_phase:
                raise CompileError("loop switches realize only zero-phase "
                                   "beamsplitters")
            t = el.top_rail
            d = bins[t + 1] - bins[t]
            theta = theta_for_bs(el.reflectivity, el.reflection_sign).theta_deg
            # launch the top rail, let it climb onto the bottom rail's bin
            transit[t] = bins[t]
            emit({bins[t]: -90.0})
            transit[t] += 1
            for _ in range(d - 1):
                emit({})
                transit[t] += 1
            # interaction: top arrives as the move input on the bottom's bin
            emit({bins[t + 1]: theta})
            bins[t] = bins[t + 1]
            del transit[t]
            # the bottom rail left as a move mode; land it one bin up
            transit[t + 1] = bins[t + 1] + 1
            emit({transit[t + 1]: 90.0})
            bins[t + 1] = transit.pop(t + 1)
            respread()

    inputs = {i: (2 * i, STAY) for i in range(n)}
    outputs = {i: (bins[i], STAY) for i in range(n)}
    num_bins = max(bins) + 2  # headroom for the last shifts
    return rounds, num_bins, inputs, outputs


def _is_canonical_mesh(mesh: Interferometer) -> bool:
    ref = ralph_cnot()
    if mesh.num_rails != ref.num_rails or len(mesh.elements) != len(ref.elements):
        return False
    key = lambda e: (e.layer, e.top_rail)
    for a, b in zip(sorted(mesh.elements, key=key), sorted(ref.elements, key=key)):
        if (a.layer, a.top_rail, a.reflection_sign) != (b.layer, b.top_rail,
                                                        b.reflection_sign):
            return False
        if abs(a.reflectivity - b.reflectivity) > 1e-12:
            return False
        if a.reflect_phase or a.transmit_phase:
            return False
    return True


#: pinned bin choices for the canonical preset; chosen so that the two
#: source photons can reach every gate input within the two prep rounds
_CANONICAL_SEEDS = {(0, 3): 2, (1, 0): 1}

_ROUTING_THETAS = (0.0, 90.0, -90.0)


def _search_prep(start_a, start_b, target_a, target_b, num_rounds=2):
    """Find per-round routing settings taking photon A and photon B from
    their post-split modes to the requested gate inputs.

    Exhaustive over {transmit, reflect+, reflect-} per occupied bin per
    round; prefers an overall +1 amplitude, then the lexicographically
    smallest schedule.  Returns (rounds, joint phase).
    """
    candidates = []

    def recurse(pos_a, pos_b, phase, acc):
        if len(acc) == num_rounds:
            if pos_a == target_a and pos_b == target_b:
                candidates.append(([dict(r) for r in acc], phase))
            return
        bins = sorted({pos_a[0], pos_b[0]})
        import itertools as _it

        for ops in _it.product(_ROUTING_THETAS, repeat=len(bins)):
            entries = dict(zip(bins, ops))
            na, fa = _apply_op(pos_a, entries[pos_a[0]])
            nb, fb = _apply_op(pos_b, entries[pos_b[0]])
            if na == nb:  # photons may not merge onto one mode during prep
                continue
            recurse(na, nb, phase * fa * fb, acc + [entries])

    recurse(start_a, start_b, 1.0, [])
    if not candidates:
        raise CompileError(
            f"no preparation route from {start_a},{start_b} to "
            f"{target_a},{target_b} in {num_rounds} rounds"
        )

    def rank(cand):
        rounds, phase = cand
        flat = tuple(sorted((i, b, th) for i, r in enumerate(rounds)
                            for b, th in r.items()))
        return (0 if phase > 0 else 1, flat)

    rounds, phase = min(candidates, key=rank)
    return [ScheduleRound(tag="prep", entries=r) for r in rounds], phase


def _canonical_pipeline(mesh: Interferometer, options: CompileOptions):
    if not _is_canonical_mesh(mesh):
        raise CompileError(
            "state-preparation options are supported for the canonical "
            "C-NOT preset only"
        )
    gate_rounds, _, gate_in, gate_out = _direct_compile(mesh, _CANONICAL_SEEDS)

    c, t = int(options.prep_input[0]), int(options.prep_input[1])
    # the two photons enter in one pulse with orthogonal polarizations; the
    # split round separates them into adjacent bins
    photon_a, photon_b = (0, STAY), (0, MOVE)
    split = ScheduleRound(tag="split", entries={0: 0.0})
    a_after, _ = _apply_op(photon_a, 0.0)
    b_after, _ = _apply_op(photon_b, 0.0)
    target_a = gate_in[1 + c]  # control rails are 1 (C0) and 2 (C1)
    target_b = gate_in[3 + t]  # target rails are 3 (T0) and 4 (T1)
    prep_rounds, prep_phase = _search_prep(a_after, b_after, target_a, target_b)

    rounds = [split] + prep_rounds + [
        ScheduleRound(tag=r.tag, entries=dict(r.entries)) for r in gate_rounds
    ]
    if options.bell_variant:
        first_gate = rounds[3]
        control_bin = target_a[0] if c == 0 else gate_in[1][0]
        # both control modes share one bin in this embedding
        assert gate_in[1][0] == gate_in[2][0] == control_bin
        first_gate.entries[control_bin] = 45.0
        first_gate.tag = "hadamard-variant"

    out_map = dict(gate_out)
    if options.separation:
        comp_bins = sorted({out_map[r][0] for r in (1, 2, 3, 4)})
        anc_bins = sorted({out_map[r][0] for r in (0, 5)} - set(comp_bins))
        entries = {b: 90.0 for b in comp_bins}
        entries.update({b: 0.0 for b in anc_bins})
        rounds.append(ScheduleRound(tag="separation", entries=entries))
        new_out = {}
        for rail, p in out_map.items():
            new_out[rail], _ = _apply_op(p, entries[p[0]])
        out_map = new_out

    all_bins = [p[0] for p in out_map.values()] + [p[0] for p in gate_in.values()]
    num_bins = max(all_bins) + 1
    _fill_idle(rounds, num_bins)
    schedule = SwitchSchedule(
        num_bins=num_bins,
        rounds=rounds,
        input_map={0: photon_a, 1: photon_b},
        output_map=out_map,
        meta={
            "input_label": options.prep_input,
            "prep_phase": prep_phase,
            "gate_input_map": gate_in,
            "control_out": [out_map[1], out_map[2]],
            "target_out": [out_map[3], out_map[4]],
            "strategy": "direct",
        },
    )
    schedule.warnings = _range_warnings(schedule.rounds)
    return schedule


def compile_mesh(mesh: Interferometer,
                 options: CompileOptions | None = None) -> SwitchSchedule:
    """Translate a layered mesh into a switch schedule.

    Without options this compiles the bare mesh and records the rail to
    (bin, polarization) correspondence in ``input_map``/``output_map``.
    With ``prep_input`` it assembles the full canonical C-NOT pipeline
    (split, prep, gate rounds, optional Hadamard variant and separation).
    """
    options = options or CompileOptions()
    if options.prep_input is not None:
        return _canonical_pipeline(mesh, options)

    strategy = options.strategy
    result = None
    if strategy in ("auto", "direct"):
        try:
            result = _direct_compile(
                mesh, _CANONICAL_SEEDS if _is_canonical_mesh(mesh) else None
            )
            used = "direct"
        except _DirectUnsupported:
            if strategy == "direct":
                raise CompileError("mesh is not compatible with the direct "
                                   "strategy")
        except CompileError:
            if strategy == "direct":
                raise
    if result is None:
        result = _spaced_compile(mesh)
        used = "spaced"

    rounds, num_bins, inputs, outputs = result
    _fill_idle(rounds, num_bins)
    schedule = SwitchSchedule(
        num_bins=num_bins,
        rounds=rounds,
        input_map=inputs,
        output_map=outputs,
        meta={"strategy": used},
    )
    schedule.warnings = _range_warnings(schedule.rounds)
    return schedule


def loop_unitary(schedule: SwitchSchedule,
                 config: LoopConfig | None = None,
                 block_overrides: dict | None = None) -> np.ndarray:
    """Unitary of the whole schedule on (bin, polarization) modes.

    Mode index = 2 * bin + pol with pol 0 = stay, 1 = move.  Each round is
    (shift of the move polarization) o (per-bin rotations).  The shift is
    represented cyclically; schedules are padded so no amplitude ever wraps.
    ``block_overrides`` maps (round index, bin) to an explicit 2x2 block,
    for fault-injection tests.
    """
    config = config or LoopConfig()
    if config.num_rounds is not None and config.num_rounds != schedule.num_rounds:
        raise ScheduleError(
            f"config expects {config.num_rounds} rounds, schedule has "
            f"{schedule.num_rounds}"
        )
    nb = schedule.num_bins
    d = 2 * nb
    shift = np.zeros((d, d), dtype=complex)
    for b in range(nb):
        shift[2 * b, 2 * b] = 1.0
        shift[2 * ((b + 1) % nb) + 1, 2 * b + 1] = 1.0

    total = np.eye(d, dtype=complex)
    for i, rnd in enumerate(schedule.rounds):
        E = np.eye(d, dtype=complex)
        for b, th in rnd.entries.items():
            block = _phys_rotation(th)
            if block_overrides and (i, b) in block_overrides:
                block = np.asarray(block_overrides[(i, b)], dtype=complex)
            E[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = block
        total = shift @ E @ total
    return total


def equivalence_check(
    U_path: np.ndarray,
    schedule: SwitchSchedule,
    config: LoopConfig | None = None,
    mapping: tuple[dict, dict] | None = None,
) -> float:
    """Max entrywise distance between a path unitary and the compiled loop.

    The loop unitary is restricted through the rail/mode mapping (the
    schedule's own maps by default), aligned over a global phase, and
    compared entrywise; leakage out of the mapped mode subspace is folded
    into the returned value.
    """
    U_path = np.asarray(U_path, dtype=complex)
    n = U_path.shape[0]
    in_map, out_map = mapping if mapping is not None else (
        schedule.input_map, schedule.output_map
    )
    if (
        sorted(in_map) != list(range(n))
        or sorted(out_map) != list(range(n))
        or len({tuple(v) for v in in_map.values()}) != n
        or len({tuple(v) for v in out_map.values()}) != n
    ):
        raise ScheduleError("mapping must pair every rail with a distinct mode")

    U_loop = loop_unitary(schedule, config)
    idx_in = [schedule.mode_index(in_map[i]) for i in range(n)]
    idx_out = [schedule.mode_index(out_map[i]) for i in range(n)]
    V = U_loop[np.ix_(idx_out, idx_in)]

    k = np.unravel_index(np.argmax(np.abs(U_path)), U_path.shape)
    ratio = V[k] / U_path[k]
    phase = ratio / abs(ratio) if abs(ratio) > 0 else 1.0
    # compare whole loop columns against the embedded path unitary so that
    # amplitude leaking outside the mapped modes is measured directly
    embedded = np.zeros((2 * schedule.num_bins, n), dtype=complex)
    embedded[idx_out, :] = U_path * phase
    return float(np.max(np.abs(U_loop[:, idx_in] - embedded)))
