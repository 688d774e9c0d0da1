"""The teleportation bench: source, preparer, analyzer, decoder, corrections.

Photon 1 carries the message polarization through two beams; photon 2 is
the distant half of a direction-entangled pair. The analyzer maps photon 1
onto four detector beams; each click leaves photon 2 in one of four states
related to the message by fixed single-qubit corrections.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .elements import (
    OnePhotonMap,
    SIGN_FLIP_H,
    SWAP_H_V,
    jones_rotation,
    pbs,
    pbs_merge,
    pockels_c1,
    pockels_c2,
    pol_rotate_h_to_v,
    pol_rotate_to_h,
    symmetric_bs,
)
from .errors import GuardViolation, SimulationError
from .states import (
    CONSERVATION_EPS,
    H,
    V,
    JointState,
    JonesVector,
    PhotonState,
    make_pair_state,
)

#: Canonical mode names for the bench.
SOURCE_MODES_1 = ("a", "b")
SOURCE_MODES_2 = ("a'", "b'")
DETECTOR_MODES = ("1'", "2'", "3'", "4'")
MERGED_MODE = "o"


class OutcomeId(enum.Enum):
    """The four analyzer detectors, one per output beam."""

    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"

    @property
    def index(self) -> int:
        """Zero-based position: D1 -> 0, ..., D4 -> 3."""
        return int(self.value[1]) - 1

    @property
    def detector_mode(self) -> str:
        return DETECTOR_MODES[self.index]

    def __str__(self) -> str:
        return self.value


OUTCOMES: tuple[OutcomeId, ...] = tuple(OutcomeId)


@dataclass(frozen=True)
class CorrectionPlan:
    """Which correction cells fire for a given detector click."""

    fire_c1: bool
    fire_c2: bool


#: Click -> corrections, stated for the decoded (merged-beam) state. The
#: sign cell fires before the exchange cell when both are on. Tests pin
#: every entry by checking the corrected state reproduces the message.
CORRECTION_TABLE: Mapping[OutcomeId, CorrectionPlan] = MappingProxyType(
    {
        OutcomeId.D1: CorrectionPlan(fire_c1=False, fire_c2=False),
        OutcomeId.D2: CorrectionPlan(fire_c1=False, fire_c2=True),
        OutcomeId.D3: CorrectionPlan(fire_c1=True, fire_c2=True),
        OutcomeId.D4: CorrectionPlan(fire_c1=True, fire_c2=False),
    }
)


def correction_plan(outcome: OutcomeId) -> CorrectionPlan:
    return CORRECTION_TABLE[outcome]


@dataclass(frozen=True)
class BranchTable:
    """Detection outcomes with probabilities and conditional partner states.

    A branch whose probability vanishes keeps its label but carries None;
    probabilities always sum to the total weight of the analyzed state.
    """

    labels: tuple[str, ...]
    probabilities: tuple[float, ...]
    conditionals: tuple[PhotonState | None, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise SimulationError(f"duplicate branch labels in {self.labels!r}")
        if not (len(self.labels) == len(self.probabilities) == len(self.conditionals)):
            raise SimulationError("branch table columns must have equal length")
        for p in self.probabilities:
            if p < -CONSERVATION_EPS:
                raise SimulationError(f"negative branch probability {p!r}")

    def probability(self, label: str) -> float:
        return self.probabilities[self.labels.index(label)]

    def conditional(self, label: str) -> PhotonState | None:
        return self.conditionals[self.labels.index(label)]

    @property
    def total(self) -> float:
        return float(sum(self.probabilities))


def source_state() -> JointState:
    """Fresh direction-entangled pair on the canonical modes, both H."""
    return make_pair_state(
        SOURCE_MODES_1[0], SOURCE_MODES_1[1], SOURCE_MODES_2[0], SOURCE_MODES_2[1]
    )


def preparer_encode(state: JointState, psi: JonesVector) -> JointState:
    """Rotate photon 1 from H into psi on every beam it occupies."""
    for ket, _ in state.items():
        if ket.pol1 is not H:
            raise GuardViolation(
                "preparer expects photon 1 all-H; found amplitude on "
                f"{ket.mode1!r}/{ket.pol1}"
            )
    modes = tuple(sorted(state.registry.photon1))
    return state.apply_one_photon_map(1, jones_rotation(psi, modes))


def alice_analyzer() -> tuple[OnePhotonMap, ...]:
    """Analyzer elements for photon 1, in physical order: split each source
    beam by polarization, erase the which-polarization mark, then mix the
    four beams pairwise on two symmetric splitters."""
    return (
        pbs(SOURCE_MODES_1[0], "1", "2"),
        pbs(SOURCE_MODES_1[1], "3", "4"),
        pol_rotate_to_h("1"),
        pol_rotate_to_h("3"),
        symmetric_bs("1", "4", DETECTOR_MODES[0], DETECTOR_MODES[3]),
        symmetric_bs("2", "3", DETECTOR_MODES[1], DETECTOR_MODES[2]),
    )


def alice_transform(state: JointState) -> JointState:
    for element in alice_analyzer():
        state = state.apply_one_photon_map(1, element)
    return state


def branch_table(state: JointState, photon: int = 1,
                 bindings: Mapping[str, str] | None = None) -> BranchTable:
    """Collapse `photon` mode-by-mode into labeled branches.

    `bindings` maps each detected mode to its label; default labels D1..D4
    on the canonical detector beams. Each bound mode must hold a single
    polarization, mirroring a detector that cannot resolve polarization yet
    must not erase one.
    """
    if bindings is None:
        bindings = {mode: out.value for mode, out in zip(DETECTOR_MODES, OUTCOMES)}
    if photon == 1:
        def mode_of(ket):
            return ket.mode1

        def partner(ket):
            return (ket.mode2, ket.pol2)

        def pol_of(ket):
            return ket.pol1

        partner_modes = state.registry.photon2
    elif photon == 2:
        def mode_of(ket):
            return ket.mode2

        def partner(ket):
            return (ket.mode1, ket.pol1)

        def pol_of(ket):
            return ket.pol2

        partner_modes = state.registry.photon1
    else:
        raise ValueError(f"photon must be 1 or 2, got {photon!r}")

    for ket, _ in state.items():
        if mode_of(ket) not in bindings:
            raise GuardViolation(
                f"mode {mode_of(ket)!r} holds amplitude but has no detector"
            )

    labels = []
    probabilities = []
    conditionals: list[PhotonState | None] = []
    for mode, label in bindings.items():
        pols = {pol_of(ket) for ket, _ in state.items() if mode_of(ket) == mode}
        if len(pols) > 1:
            raise GuardViolation(
                f"detector on {mode!r} would trace over polarization; "
                "split or rotate it away first"
            )
        amps = {
            partner(ket): amp for ket, amp in state.items() if mode_of(ket) == mode
        }
        weight = sum(v.real * v.real + v.imag * v.imag for v in amps.values())
        labels.append(label)
        probabilities.append(float(weight))
        if weight <= CONSERVATION_EPS:
            conditionals.append(None)
        else:
            scale = 1.0 / math.sqrt(weight)
            conditionals.append(
                PhotonState({k: v * scale for k, v in amps.items()}, partner_modes)
            )
    return BranchTable(tuple(labels), tuple(probabilities), tuple(conditionals))


def bob_decoder() -> tuple[OnePhotonMap, ...]:
    """Decoder for photon 2: mark one beam V, then merge the two beams into
    a single output whose polarization carries the direction amplitudes."""
    return (
        pol_rotate_h_to_v(SOURCE_MODES_2[0]),
        pbs_merge(SOURCE_MODES_2[0], SOURCE_MODES_2[1], MERGED_MODE),
    )


def bob_decode(conditional: PhotonState) -> JonesVector:
    """Run the decoder and read the polarization off the merged beam."""
    for element in bob_decoder():
        conditional = conditional.apply_map(element)
    return conditional.to_jones(MERGED_MODE)


def apply_correction(jones: JonesVector, plan: CorrectionPlan) -> JonesVector:
    vec = jones.as_array()
    if plan.fire_c1:
        vec = SIGN_FLIP_H @ vec
    if plan.fire_c2:
        vec = SWAP_H_V @ vec
    return JonesVector(complex(vec[0]), complex(vec[1]))


def branch_states_dual_rail(psi: JonesVector) -> tuple:
    """Photon-2 direction amplitudes (on a', b') behind each detector click,
    for the message alpha|H> + beta|V>. Closed form of the full pipeline."""
    a, b = psi.alpha, psi.beta
    return (
        np.array([b, a], dtype=complex),
        np.array([a, b], dtype=complex),
        np.array([a, -b], dtype=complex),
        np.array([b, -a], dtype=complex),
    )


def branch_states_polarization(psi: JonesVector) -> tuple[JonesVector, ...]:
    """Decoded (merged-beam) polarization behind each click, before any
    correction fires. D1 already matches the message up to an exchange."""
    a, b = psi.alpha, psi.beta
    return (
        JonesVector(a, b),
        JonesVector(b, a),
        JonesVector(-b, a),
        JonesVector(-a, b),
    )


@dataclass(frozen=True)
class TeleportOutcome:
    """One analyzer branch: its probability, the corrected output state,
    and that state's fidelity with the message."""

    probability: float
    final: JonesVector
    fidelity: float


def teleport_exact(psi: JonesVector) -> dict[OutcomeId, TeleportOutcome]:
    """Full exact run: encode, analyze, branch, decode, correct.

    Every branch has probability 1/4 and corrected fidelity 1; tests assert
    both to machine precision rather than trusting this docstring.
    """
    state = alice_transform(preparer_encode(source_state(), psi))
    table = branch_table(state, photon=1)
    results: dict[OutcomeId, TeleportOutcome] = {}
    for outcome in OUTCOMES:
        p = table.probability(outcome.value)
        conditional = table.conditional(outcome.value)
        if conditional is None:
            raise SimulationError(f"branch {outcome} unexpectedly empty")
        final = apply_correction(bob_decode(conditional), correction_plan(outcome))
        results[outcome] = TeleportOutcome(p, final, final.fidelity(psi))
    return results
