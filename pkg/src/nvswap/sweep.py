"""Two-dimensional parameter scans and serial relay-chain composition.

Grid cells are fully independent protocol runs (pure, no shared state), so a
sweep's output does not depend on evaluation order.  Chain fidelities use an
artifact composition rule: each hop's heralded ensemble is flattened to its
Bell-diagonal weights in the target frame and hops are combined by the
XOR convolution that entanglement swapping induces on Bell labels.  That rule
is a modeling choice for end-to-end estimates, not a claim about the full
joint state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .analytics import OBJECTIVE_CONSTRAINED, optimize_rounds
from .protocol import ProtocolParams, ProtocolResult, run_protocol
from .states import BellLabel, ParameterError


@dataclass(frozen=True)
class SweepCell:
    p_abs: float
    p_loss: float
    rounds_used: int
    l_z: int | None
    l_x: int | None
    total_success: float
    pooled_fidelity: float | None
    fidelity_per_target: dict[BellLabel, float | None]


@dataclass(frozen=True)
class SweepGrid:
    approach: str
    p_abs_axis: tuple[float, ...]
    p_loss_axis: tuple[float, ...]
    cells: tuple[tuple[SweepCell, ...], ...]

    def cell(self, i_abs: int, j_loss: int) -> SweepCell:
        return self.cells[i_abs][j_loss]

    def success_cross_section(self, j_loss: int) -> tuple[float, ...]:
        return tuple(row[j_loss].total_success for row in self.cells)

    def rounds_cross_section(self, j_loss: int) -> tuple[int, ...]:
        return tuple(row[j_loss].rounds_used for row in self.cells)

    def iter_cells(self) -> Iterator[SweepCell]:
        for row in self.cells:
            yield from row


def _validate_axis(name: str, axis: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(v) for v in axis)
    if not values:
        raise ParameterError(f"{name} must not be empty")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ParameterError(f"{name} values must lie in [0, 1], got {v!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ParameterError(f"{name} must be strictly increasing")
    return values


def sweep(
    p_abs_axis: Sequence[float],
    p_loss_axis: Sequence[float],
    approach: str,
    *,
    rounds: int | None = None,
    optimize_l: bool = False,
    objective: str = OBJECTIVE_CONSTRAINED,
    min_fidelity: float | None = None,
    **protocol_kwargs,
) -> SweepGrid:
    """Run the protocol over the outer product of the two axes.

    With optimize_l the round count is re-optimized per cell (rounds must
    then be omitted); otherwise every cell runs the fixed `rounds`.
    """
    abs_axis = _validate_axis("p_abs_axis", p_abs_axis)
    loss_axis = _validate_axis("p_loss_axis", p_loss_axis)
    if optimize_l:
        if rounds is not None:
            raise ParameterError("rounds must be omitted when optimize_l is set")
    elif rounds is None:
        raise ParameterError("rounds is required when optimize_l is not set")

    rows = []
    for p_abs in abs_axis:
        row = []
        for p_loss in loss_axis:
            if optimize_l:
                outcome = optimize_rounds(
                    approach,
                    p_abs,
                    objective=objective,
                    min_fidelity=min_fidelity,
                    p_loss=p_loss,
                    **protocol_kwargs,
                )
                params = outcome.result.params
                result = outcome.result
            else:
                params = ProtocolParams(
                    approach, p_abs=p_abs, rounds=rounds, p_loss=p_loss, **protocol_kwargs
                )
                result = run_protocol(params)
            row.append(
                SweepCell(
                    p_abs=p_abs,
                    p_loss=p_loss,
                    rounds_used=params.rounds,
                    l_z=params.l_z,
                    l_x=params.l_x,
                    total_success=result.total_success,
                    pooled_fidelity=result.pooled_fidelity(),
                    fidelity_per_target=dict(result.fidelity_per_target),
                )
            )
        rows.append(tuple(row))
    return SweepGrid(
        approach=approach,
        p_abs_axis=abs_axis,
        p_loss_axis=loss_axis,
        cells=tuple(rows),
    )


@dataclass(frozen=True)
class RelayChainSpec:
    """Ordered list of hop parameters for a serial relay."""

    hops: tuple[ProtocolParams, ...]

    def __post_init__(self) -> None:
        if len(self.hops) < 1:
            raise ParameterError("a relay chain needs at least one hop")
        if not all(isinstance(h, ProtocolParams) for h in self.hops):
            raise ParameterError("hops must be ProtocolParams instances")
        object.__setattr__(self, "hops", tuple(self.hops))

    @classmethod
    def uniform(cls, params: ProtocolParams, n_hops: int) -> "RelayChainSpec":
        if n_hops < 1:
            raise ParameterError(f"n_hops must be at least 1, got {n_hops!r}")
        return cls(hops=(params,) * n_hops)


@dataclass(frozen=True)
class RelayResult:
    chain_success: float
    chain_fidelity_estimate: float | None
    chain_diagonal: np.ndarray | None
    hop_results: tuple[ProtocolResult, ...]


def compose_bell_diagonals(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Bell-diagonal weights of the swapped pair, in the corrected frame.

    Swapping two Bell-diagonal pairs with labels drawn from `first` and
    `second` leaves the outer pair Bell-diagonal with label i XOR j (after
    the heralded Pauli correction), so the composed weights are the XOR
    convolution of the inputs.
    """
    a = np.asarray(first, dtype=float)
    b = np.asarray(second, dtype=float)
    if a.shape != (4,) or b.shape != (4,):
        raise ParameterError("bell diagonals must be length-4 vectors")
    out = np.zeros(4)
    for i in range(4):
        for j in range(4):
            out[i ^ j] += a[i] * b[j]
    return out


def relay_chain(spec: RelayChainSpec) -> RelayResult:
    """Compose a serial chain: multiply successes, convolve Bell diagonals."""
    cache: dict[ProtocolParams, ProtocolResult] = {}
    results = []
    for hop in spec.hops:
        if hop not in cache:
            cache[hop] = run_protocol(hop)
        results.append(cache[hop])

    chain_success = 1.0
    for result in results:
        chain_success *= result.total_success

    diagonal: np.ndarray | None = None
    if all(result.bell_diagonal is not None for result in results):
        diagonal = results[0].bell_diagonal.copy()
        for result in results[1:]:
            diagonal = compose_bell_diagonals(diagonal, result.bell_diagonal)
    return RelayResult(
        chain_success=chain_success,
        chain_fidelity_estimate=None if diagonal is None else float(diagonal[0]),
        chain_diagonal=diagonal,
        hop_results=tuple(results),
    )
