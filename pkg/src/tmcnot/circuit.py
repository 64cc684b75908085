"""Layered beamsplitter interferometers on spatial rails.

An interferometer is described as an ordered set of two-mode beamsplitters,
each sitting in a layer and coupling a pair of adjacent rails.  Layers are
traversed in order (layer 0 first), so the synthesized matrix is the product
of layer unitaries with later layers multiplying on the left.

The module also ships the canonical 6-rail post-selected C-NOT preset
(two 1/2 beamsplitters on the target rails sandwiching a row of three +-1/3
beamsplitters).  Its correctness is operational: the two-photon coincidence
map on the dual-rail computational basis equals U_CNOT / 3.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CircuitError",
    "BeamsplitterSpec",
    "Interferometer",
    "U_CNOT",
    "CONTROL_RAILS",
    "TARGET_RAILS",
    "bs_unitary",
    "synthesize",
    "ralph_cnot",
    "postselected_submatrix",
    "dual_rail_map",
]

UNITARITY_TOL = 1e-10

#: Ideal two-qubit C-NOT in the joint control-target basis {00, 01, 10, 11}.
U_CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

#: Rail indices of the dual-rail control and target qubits in the preset.
CONTROL_RAILS = (1, 2)
TARGET_RAILS = (3, 4)


class CircuitError(ValueError):
    """Invalid interferometer description or rail addressing."""


@dataclass(frozen=True)
class BeamsplitterSpec:
    """One beamsplitter: couples rails (top_rail, top_rail + 1) in a layer.

    ``reflection_sign`` selects the +-R branch: the 2x2 block is
    ``bs_unitary(reflectivity, reflection_sign, reflect_phase, transmit_phase)``.
    """

    layer: int
    top_rail: int
    reflectivity: float
    reflection_sign: int = 1
    reflect_phase: float = 0.0
    transmit_phase: float = 0.0

    def __post_init__(self):
        if self.layer < 0:
            raise CircuitError(f"layer must be >= 0, got {self.layer}")
        if self.top_rail < 0:
            raise CircuitError(f"top_rail must be >= 0, got {self.top_rail}")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise CircuitError(
                f"reflectivity must be in [0, 1], got {self.reflectivity}"
            )
        if self.reflection_sign not in (1, -1):
            raise CircuitError(
                f"reflection_sign must be +1 or -1, got {self.reflection_sign}"
            )


@dataclass(frozen=True)
class Interferometer:
    """A layered mesh of beamsplitters on ``num_rails`` rails."""

    num_rails: int
    elements: tuple[BeamsplitterSpec, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.num_rails < 1:
            raise CircuitError("num_rails must be positive")
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.num_rails:
                raise CircuitError("labels must have one entry per rail")
        used: dict[int, set[int]] = {}
        for el in self.elements:
            if el.top_rail + 1 >= self.num_rails:
                raise CircuitError(
                    f"beamsplitter at top_rail {el.top_rail} does not fit in "
                    f"{self.num_rails} rails"
                )
            rails = used.setdefault(el.layer, set())
            if el.top_rail in rails or el.top_rail + 1 in rails:
                raise CircuitError(
                    f"overlapping beamsplitters in layer {el.layer} at rail "
                    f"{el.top_rail}"
                )
            rails.update((el.top_rail, el.top_rail + 1))

    @property
    def num_layers(self) -> int:
        if not self.elements:
            return 0
        return max(el.layer for el in self.elements) + 1

    def layer_elements(self, layer: int) -> tuple[BeamsplitterSpec, ...]:
        return tuple(el for el in self.elements if el.layer == layer)

    def to_json(self) -> str:
        doc = {
            "num_rails": self.num_rails,
            "elements": [
                {
                    "layer": el.layer,
                    "top_rail": el.top_rail,
                    "reflectivity": el.reflectivity,
                    "sign": el.reflection_sign,
                    "reflect_phase": el.reflect_phase,
                    "transmit_phase": el.transmit_phase,
                }
                for el in self.elements
            ],
        }
        if self.labels is not None:
            doc["labels"] = list(self.labels)
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Interferometer":
        doc = json.loads(text)
        try:
            elements = tuple(
                BeamsplitterSpec(
                    layer=int(e["layer"]),
                    top_rail=int(e["top_rail"]),
                    reflectivity=float(e["reflectivity"]),
                    reflection_sign=int(e.get("sign", 1)),
                    reflect_phase=float(e.get("reflect_phase", 0.0)),
                    transmit_phase=float(e.get("transmit_phase", 0.0)),
                )
                for e in doc["elements"]
            )
            labels = tuple(doc["labels"]) if "labels" in doc else None
            return cls(num_rails=int(doc["num_rails"]), elements=elements,
                       labels=labels)
        except (KeyError, TypeError) as exc:
            raise CircuitError(f"malformed interferometer document: {exc}") from exc


def bs_unitary(
    reflectivity: float,
    sign: int = 1,
    reflect_phase: float = 0.0,
    transmit_phase: float = 0.0,
) -> np.ndarray:
    """2x2 beamsplitter unitary with reflectivity R and the +-R sign branch.

    General form (phases in radians)::

        [[ +-sqrt(R) e^{i phi_R},   sqrt(1-R) e^{-i phi_T} ],
         [  sqrt(1-R) e^{i phi_T}, -+sqrt(R) e^{-i phi_R}  ]]

    With both phases zero this reduces to the real +-R matrix used throughout
    the C-NOT mesh.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise CircuitError(f"reflectivity must be in [0, 1], got {reflectivity}")
    if sign not in (1, -1):
        raise CircuitError(f"sign must be +1 or -1, got {sign}")
    r = np.sqrt(reflectivity)
    t = np.sqrt(1.0 - reflectivity)
    er = np.exp(1j * reflect_phase)
    et = np.exp(1j * transmit_phase)
    return np.array(
        [
            [sign * r * er, t / et],
            [t * et, -sign * r / er],
        ],
        dtype=complex,
    )


def synthesize(interferometer: Interferometer) -> np.ndarray:
    """Multiply out the layer unitaries into one N x N complex matrix.

    Photons traverse layer 0 first, so later layers multiply on the left.
    """
    n = interferometer.num_rails
    total = np.eye(n, dtype=complex)
    for layer in range(interferometer.num_layers):
        mat = np.eye(n, dtype=complex)
        for el in interferometer.layer_elements(layer):
            block = bs_unitary(
                el.reflectivity, el.reflection_sign, el.reflect_phase,
                el.transmit_phase,
            )
            mat[el.top_rail : el.top_rail + 2, el.top_rail : el.top_rail + 2] = block
        total = mat @ total
    dev = np.max(np.abs(total @ total.conj().T - np.eye(n)))
    if dev > UNITARITY_TOL:
        raise CircuitError(f"synthesized matrix deviates from unitarity by {dev}")
    return total


def ralph_cnot() -> Interferometer:
    """The 6-rail post-selected C-NOT preset.

    Rails top to bottom: ancilla, C0, C1, T0, T1, ancilla.  Two 1/2
    beamsplitters on the target rails sandwich a layer of three 1/3
    beamsplitters (ancilla-C0 and C1-T0 carry the -1/3 branch, T1-ancilla
    the +1/3 branch).  This sign assignment makes the post-selected
    coincidence map equal +U_CNOT / 3; see ``dual_rail_map``.
    """
    third = 1.0 / 3.0
    return Interferometer(
        num_rails=6,
        elements=(
            BeamsplitterSpec(layer=0, top_rail=3, reflectivity=0.5),
            BeamsplitterSpec(layer=1, top_rail=0, reflectivity=third,
                             reflection_sign=-1),
            BeamsplitterSpec(layer=1, top_rail=2, reflectivity=third,
                             reflection_sign=-1),
            BeamsplitterSpec(layer=1, top_rail=4, reflectivity=third,
                             reflection_sign=1),
            BeamsplitterSpec(layer=2, top_rail=3, reflectivity=0.5),
        ),
        labels=("anc_top", "C0", "C1", "T0", "T1", "anc_bottom"),
    )


def _check_rails(rails, n, what):
    rails = list(rails)
    if len(set(rails)) != len(rails):
        raise CircuitError(f"duplicate {what} rail indices: {rails}")
    for r in rails:
        if not 0 <= r < n:
            raise CircuitError(f"{what} rail {r} out of range for {n} rails")
    return rails


def postselected_submatrix(U: np.ndarray, in_rails, out_rails) -> np.ndarray:
    """Restrict the single-photon transfer matrix to selected rails.

    Returns ``U[out_rails, in_rails]`` with no renormalization.
    """
    U = np.asarray(U)
    in_rails = _check_rails(in_rails, U.shape[1], "input")
    out_rails = _check_rails(out_rails, U.shape[0], "output")
    return U[np.ix_(out_rails, in_rails)]


def dual_rail_map(
    U: np.ndarray,
    control_rails=CONTROL_RAILS,
    target_rails=TARGET_RAILS,
) -> np.ndarray:
    """Two-photon coincidence map on the dual-rail computational basis.

    Entry [(oc, ot), (ic, it)] is the amplitude for a photon pair injected on
    rails (control_rails[ic], target_rails[it]) to exit on rails
    (control_rails[oc], target_rails[ot]), i.e. the permanent of the 2x2
    submatrix.  For the C-NOT preset this equals U_CNOT / 3.
    """
    U = np.asarray(U)
    control_rails = _check_rails(control_rails, U.shape[0], "control")
    target_rails = _check_rails(target_rails, U.shape[0], "target")
    M = np.zeros((4, 4), dtype=complex)
    for ic in range(2):
        for it in range(2):
            ri_c, ri_t = control_rails[ic], target_rails[it]
            for oc in range(2):
                for ot in range(2):
                    ro_c, ro_t = control_rails[oc], target_rails[ot]
                    M[2 * oc + ot, 2 * ic + it] = (
                        U[ro_c, ri_c] * U[ro_t, ri_t]
                        + U[ro_t, ri_c] * U[ro_c, ri_t]
                    )
    return M
