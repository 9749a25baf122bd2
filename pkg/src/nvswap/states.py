"""State representation for the photon-recycling entanglement-swap simulator.

The simulator tracks two remote spin qubits (labelled 1 and 3) that start out
entangled with the two halves of a photon-spin Bell pair at the middle node
(spin 2 plus photon p).  The effective joint space is 32-dimensional:

    pair13 (4-dim Bell basis)  x  node2p (8-dim)

where node2p splits into two orthogonal sectors:

    photon present: Bell basis of (spin 2, photon)   -> slots 0..3
    photon gone:    {A2, A1, |+1>, |-1>} of spin 2   -> slots 4..7

A2 and A1 are the two optically excited levels reachable by absorbing the
photon; |+1> and |-1> are the bare spin states left behind when the photon is
lost.  The canonical basis ordering is fixed once here and every other module
depends on the labels, never on raw indices:

    index = 8 * i + j

with i running over the pair-13 Bell labels (phi+, phi-, psi+, psi-) and j
over the node2p slots (phi+, phi-, psi+, psi-, A2, A1, +1, -1).

Sign conventions.  Bell vectors are phi± = (|00> ± |11>)/sqrt(2) and
psi± = (|01> ± |10>)/sqrt(2), with |+1> -> 0, |-1> -> 1 for spins and
sigma+ -> 0, sigma- -> 1 for photon polarisation.  Qubit order inside node2p
is (spin 2, photon).  All signed Bell mappings used by the channels are
derived from these definitions and pinned by unit tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

DIM_PAIR13 = 4
DIM_2P = 8
DIM_TOTAL = DIM_PAIR13 * DIM_2P

# node2p slot indices beyond the four Bell slots
SLOT_A2 = 4
SLOT_A1 = 5
SLOT_SPIN_UP = 6
SLOT_SPIN_DOWN = 7

PHOTON_PRESENT_SLOTS = (0, 1, 2, 3)
PHOTON_GONE_SLOTS = (SLOT_A2, SLOT_A1, SLOT_SPIN_UP, SLOT_SPIN_DOWN)

# density-matrix validation tolerances
HERMITICITY_ATOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
TRACE_ATOL = 1e-10
WEIGHT_ATOL = 1e-12

# branch weights at or below this floor are treated as impossible outcomes
BRANCH_WEIGHT_FLOOR = 1e-13


class StateValidationError(Exception):
    """A density matrix breached a numerical invariant (shape, Hermiticity, positivity or trace)."""


class ParameterError(ValueError):
    """An input parameter lies outside its allowed range."""


class BellLabel(IntEnum):
    """Labels of the four two-qubit Bell states; the value is the canonical basis index.

    The bit layout is (family, sign): bit 1 distinguishes phi (0) from psi (1),
    bit 0 distinguishes + (0) from - (1).  Under qubit-wise Pauli bookkeeping
    the labels form a Klein four-group with PHI_PLUS as identity, which is
    what `compose` implements.
    """

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    def toggle_sign(self) -> "BellLabel":
        """phi+ <-> phi-, psi+ <-> psi-."""
        return BellLabel(self.value ^ 1)

    def toggle_family(self) -> "BellLabel":
        """phi <-> psi at fixed sign."""
        return BellLabel(self.value ^ 2)

    def compose(self, other: "BellLabel") -> "BellLabel":
        """Group composition of the underlying Pauli error labels."""
        return BellLabel(self.value ^ other.value)


class Sector2p(Enum):
    """The two orthogonal sectors of the 8-dim node2p factor."""

    PHOTON_PRESENT = "photon_present"
    PHOTON_GONE = "photon_gone"

    @property
    def slots(self) -> tuple[int, ...]:
        if self is Sector2p.PHOTON_PRESENT:
            return PHOTON_PRESENT_SLOTS
        return PHOTON_GONE_SLOTS


def basis_index(i13: int, j2p: int) -> int:
    """Canonical flat index of |i13> x |j2p>."""
    if not 0 <= int(i13) < DIM_PAIR13 or not 0 <= int(j2p) < DIM_2P:
        raise ParameterError(f"basis index out of range: ({i13}, {j2p})")
    return DIM_2P * int(i13) + int(j2p)


def check_probability(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must be a probability in [0, 1], got {value!r}")
    return value


def _validate_matrix(matrix: np.ndarray, weight: float) -> None:
    if matrix.shape != (DIM_TOTAL, DIM_TOTAL):
        raise StateValidationError(
            f"state matrix must be {DIM_TOTAL}x{DIM_TOTAL}, got shape {matrix.shape}"
        )
    if not np.isfinite(weight) or weight < 0.0:
        raise StateValidationError(f"branch weight must be finite and >= 0, got {weight!r}")
    if weight > 1.0 + 1e-9:
        raise StateValidationError(f"branch weight exceeds 1: {weight!r}")
    if weight == 0.0:
        if matrix.any():
            raise StateValidationError("an empty branch must carry an all-zero matrix")
        return
    if not np.all(np.isfinite(matrix)):
        raise StateValidationError("state matrix contains non-finite entries")
    asymmetry = np.abs(matrix - matrix.conj().T).max()
    if asymmetry > HERMITICITY_ATOL:
        raise StateValidationError(f"state matrix is not Hermitian (max asymmetry {asymmetry:.3e})")
    trace = float(matrix.trace().real)
    if abs(trace - 1.0) > TRACE_ATOL:
        raise StateValidationError(f"state matrix trace is {trace!r}, expected 1")
    smallest = float(np.linalg.eigvalsh(matrix)[0])
    if smallest < EIGENVALUE_FLOOR:
        raise StateValidationError(f"state matrix has negative eigenvalue {smallest:.3e}")


@dataclass(frozen=True, eq=False)
class JointState:
    """One sub-normalized branch of the joint density operator.

    `matrix` is kept at unit trace and `weight` carries the branch probability
    separately, so conditional quantities read off the matrix directly.  An
    empty branch (weight exactly 0, zero matrix) stands for an impossible
    outcome.  Instances are immutable; channels return new states.
    """

    matrix: np.ndarray
    weight: float

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        weight = float(self.weight)
        _validate_matrix(matrix, weight)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "weight", weight)

    @classmethod
    def empty(cls) -> "JointState":
        return cls(np.zeros((DIM_TOTAL, DIM_TOTAL)), 0.0)

    @classmethod
    def from_unnormalized(cls, matrix: np.ndarray, weight_scale: float = 1.0) -> "JointState":
        """Build a branch from an unnormalized matrix, folding its trace into the weight."""
        trace = float(np.asarray(matrix).trace().real)
        weight = weight_scale * trace
        if weight <= BRANCH_WEIGHT_FLOOR:
            return cls.empty()
        return cls(np.asarray(matrix) / trace, weight)

    @property
    def is_empty(self) -> bool:
        return self.weight == 0.0

    def slot_populations(self) -> np.ndarray:
        """Population of each node2p slot, summed over the pair-13 index."""
        diag = np.real(np.diagonal(self.matrix))
        return diag.reshape(DIM_PAIR13, DIM_2P).sum(axis=0)

    def a2_population(self) -> float:
        return float(self.slot_populations()[SLOT_A2])

    def a1_population(self) -> float:
        return float(self.slot_populations()[SLOT_A1])

    def sector_population(self, sector: Sector2p) -> float:
        pops = self.slot_populations()
        return float(sum(pops[j] for j in sector.slots))

    def reduced_pair13(self) -> np.ndarray:
        """Partial trace over node2p; unit trace for non-empty states, zeros otherwise."""
        tensor = self.matrix.reshape(DIM_PAIR13, DIM_2P, DIM_PAIR13, DIM_2P)
        return np.einsum("ikjk->ij", tensor)


def make_initial_state() -> JointState:
    """Shared resource at the start of a run: an equal superposition pairing
    each pair-13 Bell state with its opposite-family partner on node2p."""
    amplitudes = np.zeros(DIM_TOTAL, dtype=np.complex128)
    for label in BellLabel:
        amplitudes[basis_index(label, label.toggle_family())] = 0.5
    return JointState(np.outer(amplitudes, amplitudes.conj()), 1.0)


def pair13_fidelity(state: JointState, target: BellLabel) -> float | None:
    """Overlap of the reduced pair-13 state with the target Bell state.

    Returns None for an empty branch, where the conditional state is undefined.
    """
    if state.is_empty:
        return None
    reduced = state.reduced_pair13()
    return float(np.real(reduced[target.value, target.value]))
