"""Command-line front end.

Every command reads a flat key=value config, computes its full output table
in memory, and only then writes it (one file write, so a failed run never
leaves a partial file).  Exit codes: 0 success, 2 bad configuration or
parameters, 3 numerical invariant violation inside the engine.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analytics import (
    NoFeasibleRoundsError,
    false_negative_ratio,
    false_positive_ratio,
    optimize_rounds,
)
from .config import (
    ConfigError,
    build_protocol_params,
    check_keys,
    get_bool,
    get_float,
    get_float_list,
    get_int,
    get_pairs,
    load_config,
    protocol_kwargs,
    resolve_approach,
    resolve_loss,
)
from .protocol import DEFAULT_P_DARK, DEFAULT_P_QND, HeraldType, run_protocol
from .states import BellLabel, ParameterError, StateValidationError
from .sweep import RelayChainSpec, compose_bell_diagonals, relay_chain, sweep
from .trajectories import run_trajectories

FIDELITY_COLUMNS = (
    "fidelity_phi_plus",
    "fidelity_phi_minus",
    "fidelity_psi_plus",
    "fidelity_psi_minus",
)


def _fmt(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{value:.6g}"


def _csv(header: tuple[str, ...], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _running_fidelities(result) -> list[dict[BellLabel, float | None]]:
    """Weighted average click fidelity per target, cumulative by round."""
    totals = {label: 0.0 for label in BellLabel}
    weighted = {label: 0.0 for label in BellLabel}
    clicks = [
        record for record in result.herald_log if record.herald_type is HeraldType.QND_CLICK
    ]
    per_round: list[dict[BellLabel, float | None]] = []
    index = 0
    for r in range(1, result.params.rounds + 1):
        while index < len(clicks) and clicks[index].round <= r:
            record = clicks[index]
            totals[record.target] += record.weight
            weighted[record.target] += record.weight * record.fidelity
            index += 1
        per_round.append(
            {
                label: (weighted[label] / totals[label] if totals[label] > 0 else None)
                for label in BellLabel
            }
        )
    return per_round


def cmd_run(options: dict[str, str], args: argparse.Namespace) -> str:
    params = build_protocol_params(options, args.approach)
    trajectories = args.trajectories
    if trajectories is None and "trajectories" in options:
        trajectories = get_int(options, "trajectories")
    seed = args.seed
    if seed is None and "seed" in options:
        seed = get_int(options, "seed")

    result = run_protocol(params)
    sampled = (
        run_trajectories(params, trajectories, seed) if trajectories else None
    )

    header = ("round", "cumulative_success") + FIDELITY_COLUMNS
    if sampled is not None:
        header += ("mc_cumulative_success",)
    rows: list[tuple] = []
    running = _running_fidelities(result)
    for r in range(1, params.rounds + 1):
        row: tuple = (r, result.cumulative_success[r - 1])
        row += tuple(running[r - 1][label] for label in BellLabel)
        if sampled is not None:
            row += (sampled.cumulative_success[r - 1],)
        rows.append(row)
    summary: tuple = ("total", result.total_success)
    summary += tuple(result.fidelity_per_target[label] for label in BellLabel)
    if sampled is not None:
        summary += (sampled.total_success,)
    rows.append(summary)
    return _csv(header, rows)


def cmd_bounds(options: dict[str, str], args: argparse.Namespace) -> str:
    if "bounds_pairs" not in options:
        raise ConfigError("key 'bounds_pairs' is required (format 'p_abs:rounds, ...')")
    pairs = get_pairs(options, "bounds_pairs")
    p_qnd = get_float(options, "p_qnd") if "p_qnd" in options else DEFAULT_P_QND
    p_dark = get_float(options, "p_dark") if "p_dark" in options else DEFAULT_P_DARK
    rows = [
        (
            p_abs,
            rounds,
            false_negative_ratio(p_abs, p_qnd, rounds),
            false_positive_ratio(p_abs, p_dark, rounds),
        )
        for p_abs, rounds in pairs
    ]
    return _csv(("p_abs", "rounds", "fn_over_q_qnd", "fp_over_p_dark"), rows)


def cmd_sweep(options: dict[str, str], args: argparse.Namespace) -> str:
    approach = resolve_approach(options, args.approach)
    for key in ("p_abs_axis", "p_loss_axis"):
        if key not in options:
            raise ConfigError(f"key {key!r} is required")
    optimize_l = get_bool(options, "optimize_l") if "optimize_l" in options else False
    kwargs = protocol_kwargs(options)
    sweep_kwargs: dict = {}
    if "objective" in options:
        sweep_kwargs["objective"] = options["objective"]
    if "min_fidelity" in options:
        sweep_kwargs["min_fidelity"] = get_float(options, "min_fidelity")
    if optimize_l:
        if "rounds" in options:
            raise ConfigError("key 'rounds' must be omitted when optimize_l is set")
    else:
        if "rounds" not in options:
            raise ConfigError("key 'rounds' is required when optimize_l is not set")
        sweep_kwargs["rounds"] = get_int(options, "rounds")
    grid = sweep(
        get_float_list(options, "p_abs_axis"),
        get_float_list(options, "p_loss_axis"),
        approach,
        optimize_l=optimize_l,
        **sweep_kwargs,
        **kwargs,
    )
    header = ("p_abs", "p_loss", "approach", "rounds_used", "total_success") + FIDELITY_COLUMNS
    rows = [
        (
            cell.p_abs,
            cell.p_loss,
            approach,
            cell.rounds_used,
            cell.total_success,
        )
        + tuple(cell.fidelity_per_target[label] for label in BellLabel)
        for cell in grid.iter_cells()
    ]
    return _csv(header, rows)


def cmd_chain(options: dict[str, str], args: argparse.Namespace) -> str:
    if "hops" not in options:
        raise ConfigError("key 'hops' is required")
    hops = get_int(options, "hops")
    if hops < 1:
        raise ConfigError(f"key 'hops' must be at least 1, got {hops}")
    params = build_protocol_params(options, args.approach)
    chain = relay_chain(RelayChainSpec.uniform(params, hops))

    rows: list[tuple] = []
    success = 1.0
    diagonal = None
    heraldless = False
    for n, hop in enumerate(chain.hop_results, start=1):
        success *= hop.total_success
        heraldless = heraldless or hop.bell_diagonal is None
        if not heraldless:
            diagonal = (
                hop.bell_diagonal.copy()
                if diagonal is None
                else compose_bell_diagonals(diagonal, hop.bell_diagonal)
            )
        fidelity = None if heraldless else float(diagonal[0])
        rows.append((n, success, fidelity))
    return _csv(("hops", "chain_success", "chain_fidelity"), rows)


def cmd_optimize(options: dict[str, str], args: argparse.Namespace) -> str:
    approach = resolve_approach(options, args.approach)
    if "p_abs" not in options:
        raise ConfigError("key 'p_abs' is required")
    kwargs = protocol_kwargs(options)
    opt_kwargs: dict = {}
    if "objective" in options:
        opt_kwargs["objective"] = options["objective"]
    if "min_fidelity" in options:
        opt_kwargs["min_fidelity"] = get_float(options, "min_fidelity")
    outcome = optimize_rounds(
        approach,
        get_float(options, "p_abs"),
        p_loss=resolve_loss(options),
        **opt_kwargs,
        **kwargs,
    )
    header = ("rounds", "l_z", "l_x", "total_success") + FIDELITY_COLUMNS
    row = (
        outcome.rounds,
        outcome.l_z,
        outcome.l_x,
        outcome.result.total_success,
    ) + tuple(outcome.result.fidelity_per_target[label] for label in BellLabel)
    return _csv(header, [row])


_COMMANDS = {
    "run": cmd_run,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "chain": cmd_chain,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvswap",
        description="Simulate the photon-recycling entanglement-swap protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "run": "one protocol run, per-round success and fidelity table",
        "bounds": "closed-form false-negative/false-positive bound table",
        "sweep": "protocol outputs over a p_abs x p_loss grid",
        "chain": "serial relay-chain success and fidelity per hop count",
        "optimize": "search the round count for the best protocol outcome",
    }
    for name, description in descriptions.items():
        cmd = sub.add_parser(name, help=description)
        cmd.add_argument("--config", required=True, help="path to key=value config")
        cmd.add_argument("--out", help="output CSV path (default: stdout)")
        cmd.add_argument("--seed", type=int, help="Monte-Carlo seed")
        cmd.add_argument(
            "--trajectories",
            type=int,
            help="sample count enabling the Monte-Carlo cross-check column",
        )
        cmd.add_argument("--approach", choices=("A", "B"), help="override config approach")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        options = load_config(args.config)
        check_keys(options, args.command)
        text = _COMMANDS[args.command](options, args)
    except (ConfigError, ParameterError, NoFeasibleRoundsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StateValidationError as exc:
        print(f"numerical invariant violation: {exc}", file=sys.stderr)
        return 3
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
