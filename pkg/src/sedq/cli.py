"""Command-line front end.

Subcommands::

    solve     solve the model and export state probabilities
    heatmap   export a P(q1, q2) grid for plotting
    nindex    tabulate the convergence index N over parameter lists
    validate  diff the solver against the truncated-chain oracle (and,
              optionally, the seeded simulator)
    lmap      export the per-state pass-count grid

Exit codes: 0 success, 1 numerical failure, 2 invalid input.  Data goes to
``--out`` (default stdout); human-readable diagnostics go to stderr with 6
significant digits, file payloads carry 17.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import InvalidParam, SedqError
from .model import ModelParams, QueueState, to_internal, validate_params
from .oracle import TruncationBox, compare, oracle_solve, simulate, SimConfig
from .solver import (
    SolverConfig,
    accuracy_passes,
    heatmap as solver_heatmap,
    solution_records,
    solve,
    triangle_states,
)

FILE_FMT = "{:.17g}"
CONSOLE_FMT = "{:.6g}"


@dataclass(frozen=True)
class RunConfig:
    """Flat bag of every knob a command accepts; JSON round-trips losslessly."""

    s: int
    rho: float
    q: float
    eps: float = 1e-4
    lmax: int = 16
    m: int | None = None
    k: int | None = None
    format: str = "csv"
    out: str = "-"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))

    def model(self) -> ModelParams:
        return validate_params(self.s, self.rho, self.q)

    def solver(self) -> SolverConfig:
        return SolverConfig(eps=self.eps, L_max=self.lmax, M=self.m, K=self.k)


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--s", type=int, help="fast-server rate (positive integer)")
    sub.add_argument("--rho", type=float, help="utilization in (0, 1)")
    sub.add_argument("--q", type=float, help="tie-break probability in [0, 1]")
    sub.add_argument("--eps", type=float, help="series accuracy target")
    sub.add_argument("--lmax", type=int, help="cap on repair passes")
    sub.add_argument("--m", type=int, help="inner-triangle size (default N + 2)")
    sub.add_argument("--k", type=int, help="outer-triangle size (default >= 40)")
    sub.add_argument("--format", choices=("csv", "json"), help="output format")
    sub.add_argument("--out", help="output path, '-' for stdout")
    sub.add_argument("--config", help="JSON file with the same keys as the flags")


def _merge_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    for key in ("s", "rho", "q", "eps", "lmax", "m", "k", "format", "out"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    for key in ("s", "rho", "q"):
        if key not in base:
            raise InvalidParam(f"missing required parameter --{key}")
    return RunConfig(**base)


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _write_rows(cfg: RunConfig, header: Sequence[str], rows, meta: dict) -> None:
    """Emit rows as CSV (with '#' metadata lines) or a JSON document."""
    fh, close = _open_out(cfg.out)
    try:
        if cfg.format == "json":
            doc = {
                "meta": meta,
                "records": [dict(zip(header, row)) for row in rows],
            }
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        else:
            for key in sorted(meta):
                fh.write(f"# {key}: {meta[key]}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(
                    ",".join(
                        FILE_FMT.format(x) if isinstance(x, float) else str(x)
                        for x in row
                    )
                    + "\n"
                )
    finally:
        if close:
            fh.close()


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    p = cfg.model()
    t0 = time.perf_counter()
    sol = solve(p, cfg.solver())
    wall = time.perf_counter() - t0
    rows = solution_records(sol)
    meta = {
        "s": p.s,
        "rho": FILE_FMT.format(p.rho),
        "q": FILE_FMT.format(p.q),
        "N": sol.N,
        "M": sol.M,
        "K": sol.K,
    }
    if getattr(args, "dump_tree", None):
        from .compensation import serialize_tree

        with open(args.dump_tree, "w") as fh:
            fh.write(serialize_tree(sol.tree))
    _write_rows(cfg, ("m", "n", "r", "q1", "q2", "probability"), rows, meta)
    tail = sol.diagnostics["tail_mass_estimate"]
    _info(
        f"N={sol.N} M={sol.M} K={sol.K} states={len(rows)} "
        f"truncation_mass={CONSOLE_FMT.format(tail)} "
        f"wall={CONSOLE_FMT.format(wall)}s"
    )
    return 0


def cmd_heatmap(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    if args.q1max is None or args.q2max is None:
        raise InvalidParam("heatmap requires --q1max and --q2max")
    if args.q1max < 0 or args.q2max < 0:
        raise InvalidParam("grid extents must be nonnegative")
    p = cfg.model()
    sol = solve(p, cfg.solver())
    grid = solver_heatmap(sol, args.q1max, args.q2max)
    rows = [
        (q1, q2, float(grid[q1, q2]))
        for q1 in range(args.q1max + 1)
        for q2 in range(args.q2max + 1)
    ]
    meta = {
        "s": p.s,
        "rho": FILE_FMT.format(p.rho),
        "q": FILE_FMT.format(p.q),
        "equal_delay_line": "q1 + 1 = (q2 + 1)/s",
        "equal_work_line": "q1 = q2/s",
    }
    _write_rows(cfg, ("q1", "q2", "probability"), rows, meta)
    _info(f"grid {args.q1max + 1}x{args.q2max + 1}, mass={grid.sum():.6g}")
    return 0


def cmd_nindex(args: argparse.Namespace) -> int:
    from .convergence import compute_N

    if args.q is None:
        raise InvalidParam("nindex requires --q")
    s_list = [int(x) for x in args.s_list.split(",")]
    rho_list = [float(x) for x in args.rho_list.split(",")]
    cells = []
    for s in s_list:
        for rho in rho_list:
            p = validate_params(s, rho, args.q)
            cells.append((s, rho, compute_N(p)))
    print("s,rho,N")
    for s, rho, N in cells:
        print(f"{s},{FILE_FMT.format(rho)},{N}")
    return 0


def _default_box(p: ModelParams, target: float = 1e-9) -> TruncationBox:
    """Box sized so the edge mass sits well below ``target``."""
    decay = p.rho ** (1 + p.s)
    depth = math.ceil(math.log(target) / math.log(decay)) + 8
    depth = max(depth, 4 * p.s + 2)
    return TruncationBox(q1max=depth, q2max=p.s * depth + p.s)


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    p = cfg.model()
    if args.box:
        q1max, q2max = (int(x) for x in args.box.lower().split("x"))
        box = TruncationBox(q1max, q2max)
    else:
        box = _default_box(p)
    sol = solve(p, cfg.solver())
    oracle = oracle_solve(p, box)
    window = TruncationBox(
        min(args.window, box.q1max - 2), min(args.window, box.q2max - 2)
    )
    sol_map = {}
    for q1 in range(window.q1max + 1):
        for q2 in range(window.q2max + 1):
            m, n, r = to_internal(QueueState(q1, q2), p.s)
            sol_map[(q1, q2)] = float(sol.probs[(m, n)][r])
    rep = compare(sol_map, oracle.probs, window)
    _info(
        f"solver vs oracle: max_rel_err={CONSOLE_FMT.format(rep.max_rel_err)} "
        f"max_abs_err={CONSOLE_FMT.format(rep.max_abs_err)} "
        f"worst_state={rep.worst_state} "
        f"oracle_boundary_mass={CONSOLE_FMT.format(oracle.boundary_mass)}"
    )
    failed = rep.max_rel_err > args.tol
    if args.simulate:
        sim = simulate(p, SimConfig(events=args.events, seed=args.seed))
        simrep = compare(sim.freq, oracle.probs, window)
        _info(
            f"simulation vs oracle: max_rel_err={CONSOLE_FMT.format(simrep.max_rel_err)} "
            f"max_abs_err={CONSOLE_FMT.format(simrep.max_abs_err)} "
            f"worst_state={simrep.worst_state}"
        )
    if failed:
        _info(
            f"FAIL: max_rel_err {CONSOLE_FMT.format(rep.max_rel_err)} exceeds "
            f"tol {CONSOLE_FMT.format(args.tol)} at state {rep.worst_state}"
        )
        return 1
    _info("PASS")
    return 0


def cmd_lmap(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    p = cfg.model()
    from .compensation import TermTree

    tree = TermTree(p)
    rows = []
    for m, n in triangle_states(args.span):
        L = accuracy_passes(tree, m, n, cfg.eps, cfg.lmax)
        rows.append((m, n, L))
    meta = {
        "s": p.s,
        "rho": FILE_FMT.format(p.rho),
        "q": FILE_FMT.format(p.q),
        "eps": FILE_FMT.format(cfg.eps),
        "L": "minimal passes within eps of the converged series value",
    }
    _write_rows(cfg, ("m", "n", "L"), rows, meta)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sedq",
        description="Stationary analysis of the two-server shortest-expected-delay queue",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve and export state probabilities")
    _add_model_flags(sp)
    sp.add_argument("--dump-tree", help="also write the term tree to this path")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("heatmap", help="export a P(q1, q2) grid")
    _add_model_flags(sp)
    sp.add_argument("--q1max", type=int)
    sp.add_argument("--q2max", type=int)
    sp.set_defaults(func=cmd_heatmap)

    sp = sub.add_parser("nindex", help="tabulate the convergence index N")
    sp.add_argument("--q", type=float)
    sp.add_argument("--s-list", default="2,5")
    sp.add_argument("--rho-list", default="0.1,0.3,0.5,0.7,0.9")
    sp.set_defaults(func=cmd_nindex)

    sp = sub.add_parser("validate", help="diff solver against the oracle")
    _add_model_flags(sp)
    sp.add_argument("--box", help="oracle box as Q1xQ2, e.g. 40x80")
    sp.add_argument("--window", type=int, default=15, help="comparison window")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--simulate", action="store_true")
    sp.add_argument(
        "--events", type=lambda x: int(float(x)), default=1_000_000,
        help="event count, scientific notation accepted",
    )
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("lmap", help="export the per-state pass-count grid")
    _add_model_flags(sp)
    sp.add_argument("--span", type=int, default=12, help="largest m + |n| in the grid")
    sp.set_defaults(func=cmd_lmap)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParam as exc:
        _info(f"invalid input: {exc}")
        return 2
    except SedqError as exc:
        _info(f"numerical failure: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
