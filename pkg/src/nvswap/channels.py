"""Elementary channels of the per-round photon-recycling cycle.

Every map here is trace preserving on (matrix, weight) pairs: channels keep
the branch weight and return a unit-trace matrix, while the herald POVM splits
one branch into two whose weights sum to the input weight.  All operators are
either basis-aligned projections or signed basis permutations, so no channel
introduces rounding beyond scalar multiplication.

The signed Bell mappings below follow from the sign conventions fixed in
`states` (see that module's docstring) and are pinned by unit tests:

    phase flip        (photon sigma_z): phi+ <-> phi- (+), psi+ <-> psi- (-)
    polarisation flip (photon sigma_x): phi+ <-> psi+ (+), phi- <-> psi- (+)
    both = phase after polarisation:    phi+ -> -psi-, phi- -> -psi+,
                                        psi+ ->  phi-, psi- ->  phi+

Spin-exchange operators used by the dephasing channel (|+1> <-> |-1> on one
spin) map, on the Bell pair containing that spin:

    first qubit:  phi+ <-> psi+ (+), phi- <-> psi- (-)
    second qubit: phi+ <-> psi+ (+), phi- <-> psi- (+)
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .states import (
    DIM_2P,
    DIM_PAIR13,
    DIM_TOTAL,
    PHOTON_PRESENT_SLOTS,
    SLOT_A1,
    SLOT_A2,
    SLOT_SPIN_DOWN,
    SLOT_SPIN_UP,
    JointState,
    check_probability,
)


class FlipKind(Enum):
    """Photon operations available at the end of a round."""

    NONE = "none"
    PHASE = "phase"
    POLARISATION = "polarisation"
    BOTH = "both"


class SpinSite(Enum):
    """The three spins subject to dephasing."""

    NV1 = "nv1"
    NV2 = "nv2"
    NV3 = "nv3"


ALL_SPINS = (SpinSite.NV1, SpinSite.NV2, SpinSite.NV3)


def _lift_2p(perm8: np.ndarray, sign8: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extend a signed permutation of node2p slots to the full 32-dim basis."""
    offsets = np.arange(DIM_PAIR13) * DIM_2P
    perm = (offsets[:, None] + perm8[None, :]).reshape(-1)
    sign = np.tile(sign8, DIM_PAIR13)
    return perm, sign


def _lift_pair13(perm4: np.ndarray, sign4: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extend a signed permutation of pair-13 labels to the full 32-dim basis."""
    perm = (perm4[:, None] * DIM_2P + np.arange(DIM_2P)[None, :]).reshape(-1)
    sign = np.repeat(sign4, DIM_2P)
    return perm, sign


def _flip_tables() -> dict[FlipKind, tuple[np.ndarray, np.ndarray]]:
    phase8 = np.array([1, 0, 3, 2, 4, 5, 6, 7])
    phase_sign8 = np.array([1.0, 1.0, -1.0, -1.0, 1, 1, 1, 1])
    pol8 = np.array([2, 3, 0, 1, 4, 5, 6, 7])
    pol_sign8 = np.ones(DIM_2P)
    both8 = np.array([3, 2, 1, 0, 4, 5, 6, 7])
    both_sign8 = np.array([-1.0, -1.0, 1.0, 1.0, 1, 1, 1, 1])
    return {
        FlipKind.PHASE: _lift_2p(phase8, phase_sign8),
        FlipKind.POLARISATION: _lift_2p(pol8, pol_sign8),
        FlipKind.BOTH: _lift_2p(both8, both_sign8),
    }


def _dephasing_tables() -> dict[SpinSite, tuple[np.ndarray, np.ndarray]]:
    # spin exchange on the first / second qubit of a Bell pair
    first4 = np.array([2, 3, 0, 1])
    first_sign4 = np.array([1.0, -1.0, 1.0, -1.0])
    second_sign4 = np.ones(4)
    # spin 2 is the first qubit of node2p Bell slots; on the photon-gone
    # sector it swaps the bare spin slots and leaves A2/A1 untouched
    nv2_8 = np.array([2, 3, 0, 1, SLOT_A2, SLOT_A1, SLOT_SPIN_DOWN, SLOT_SPIN_UP])
    nv2_sign8 = np.array([1.0, -1.0, 1.0, -1.0, 1, 1, 1, 1])
    return {
        SpinSite.NV1: _lift_pair13(first4, first_sign4),
        SpinSite.NV3: _lift_pair13(first4.copy(), second_sign4),
        SpinSite.NV2: _lift_2p(nv2_8, nv2_sign8),
    }


FLIP_TABLES = _flip_tables()
DEPHASING_TABLES = _dephasing_tables()


def _loss_kraus() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kraus operators of the photon-trace map: detect sigma+/sigma- in the
    environment (photon-present slots land on bare spin slots) or pass the
    photon-gone sector through unchanged."""
    s = 1.0 / np.sqrt(2.0)
    k_plus8 = np.zeros((DIM_2P, DIM_2P))
    k_plus8[SLOT_SPIN_UP, 0:4] = (s, s, 0.0, 0.0)
    k_plus8[SLOT_SPIN_DOWN, 0:4] = (0.0, 0.0, s, -s)
    k_minus8 = np.zeros((DIM_2P, DIM_2P))
    k_minus8[SLOT_SPIN_UP, 0:4] = (0.0, 0.0, s, s)
    k_minus8[SLOT_SPIN_DOWN, 0:4] = (s, -s, 0.0, 0.0)
    gone8 = np.zeros((DIM_2P, DIM_2P))
    for j in (SLOT_A2, SLOT_A1, SLOT_SPIN_UP, SLOT_SPIN_DOWN):
        gone8[j, j] = 1.0
    eye4 = np.eye(DIM_PAIR13)
    return np.kron(eye4, k_plus8), np.kron(eye4, k_minus8), np.kron(eye4, gone8)


LOSS_KRAUS = _loss_kraus()


def apply_signed_permutation(matrix: np.ndarray, perm: np.ndarray, sign: np.ndarray) -> np.ndarray:
    """Conjugate by the unitary U|k> = sign[k] |perm[k]>."""
    phased = matrix * np.outer(sign, sign)
    out = np.empty_like(matrix)
    out[np.ix_(perm, perm)] = phased
    return out


def _slot_indices(slot: int) -> np.ndarray:
    return np.arange(DIM_PAIR13) * DIM_2P + slot


def _incoherent_transfer(matrix: np.ndarray, source: int, dest: int, p: float) -> np.ndarray:
    """With probability p, move the source-slot block to the dest slot and cut
    its coherences with everything else; with probability 1-p do nothing."""
    src = _slot_indices(source)
    dst = _slot_indices(dest)
    kept = matrix.copy()
    kept[src, :] = 0.0
    kept[:, src] = 0.0
    moved = np.zeros_like(matrix)
    moved[np.ix_(dst, dst)] = matrix[np.ix_(src, src)]
    return p * (moved + kept) + (1.0 - p) * matrix


def absorption_channel(state: JointState, p_abs: float, r_a1: float) -> JointState:
    """Per-pass photon absorption at node 2.

    The psi- photon-spin component drives the transition to A2 with
    probability p_abs; the psi+ component leaks to A1 with probability
    p_abs * r_a1.  Both transfers are incoherent jumps that carry the pair-13
    block along, so heralded entanglement survives absorption.
    """
    p_abs = check_probability("p_abs", p_abs)
    r_a1 = check_probability("r_A1", r_a1)
    if state.is_empty:
        return state
    matrix = _incoherent_transfer(state.matrix, 3, SLOT_A2, p_abs)
    matrix = _incoherent_transfer(matrix, 2, SLOT_A1, p_abs * r_a1)
    return JointState(matrix, state.weight)


def qnd_povm(
    state: JointState, p_qnd: float, p_dark: float
) -> tuple[float, JointState, JointState]:
    """Non-demolition herald measurement of the A2 population.

    Returns (p_click, post_click, post_noclick).  A click fires with
    probability p_qnd on the A2 component and p_dark on everything else;
    the two output branch weights sum to the input weight.  An impossible
    branch comes back empty rather than normalized.
    """
    p_qnd = check_probability("p_qnd", p_qnd)
    p_dark = check_probability("p_dark", p_dark)
    if state.is_empty:
        return 0.0, JointState.empty(), JointState.empty()
    a2 = _slot_indices(SLOT_A2)
    projected = np.zeros_like(state.matrix)
    projected[np.ix_(a2, a2)] = state.matrix[np.ix_(a2, a2)]
    complement = state.matrix.copy()
    complement[a2, :] = 0.0
    complement[:, a2] = 0.0
    p_a2 = float(projected.trace().real)
    p_click = p_qnd * p_a2 + p_dark * (1.0 - p_a2)
    click = JointState.from_unnormalized(
        p_qnd * projected + p_dark * complement, state.weight
    )
    noclick = JointState.from_unnormalized(
        (1.0 - p_qnd) * projected + (1.0 - p_dark) * complement, state.weight
    )
    return float(p_click), click, noclick


def photon_loss_channel(state: JointState, p_loss: float) -> JointState:
    """Loss of the recycled photon with probability p_loss per cycle.

    The lost branch traces out the photon: spin 2 lands maximally mixed on
    the bare spin slots and photon-carried coherence disappears.  The
    photon-gone sector rides through unchanged.
    """
    p_loss = check_probability("p_loss", p_loss)
    if state.is_empty:
        return state
    k_plus, k_minus, k_gone = LOSS_KRAUS
    matrix = state.matrix
    lost = (
        k_plus @ matrix @ k_plus.T
        + k_minus @ matrix @ k_minus.T
        + k_gone @ matrix @ k_gone.T
    )
    return JointState((1.0 - p_loss) * matrix + p_loss * lost, state.weight)


def dephasing_channel(
    state: JointState, eta: float, targets: tuple[SpinSite, ...] = ALL_SPINS
) -> JointState:
    """Spin dephasing in the (|+1> ± |-1>)/sqrt(2) basis.

    Per target spin the channel is the mixture {(1+eta)/2: identity,
    (1-eta)/2: spin exchange |+1> <-> |-1>}; eta=1 retains full coherence.
    A2/A1 populations carry no spin-qubit coherence and pass through.
    """
    eta = check_probability("eta", eta)
    if state.is_empty:
        return state
    matrix = state.matrix
    keep = (1.0 + eta) / 2.0
    swap = (1.0 - eta) / 2.0
    for site in targets:
        perm, sign = DEPHASING_TABLES[site]
        matrix = keep * matrix + swap * apply_signed_permutation(matrix, perm, sign)
    return JointState(matrix, state.weight)


def flip_channel(state: JointState, kind: FlipKind) -> JointState:
    """Unitary photon flip on the photon-present sector; identity elsewhere."""
    if not isinstance(kind, FlipKind):
        raise TypeError(f"kind must be a FlipKind, got {kind!r}")
    if kind is FlipKind.NONE or state.is_empty:
        return state
    perm, sign = FLIP_TABLES[kind]
    return JointState(apply_signed_permutation(state.matrix, perm, sign), state.weight)


def photon_present_indices() -> np.ndarray:
    """Flat basis indices of the photon-present sector."""
    offsets = np.arange(DIM_PAIR13) * DIM_2P
    return (offsets[:, None] + np.array(PHOTON_PRESENT_SLOTS)[None, :]).reshape(-1)
