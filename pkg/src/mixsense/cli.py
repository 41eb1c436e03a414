"""Command-line interface.

Subcommands:
  construct-affinity   build a screened random affinity matrix and save it
  gen-alphabet         build a random mixture alphabet and save it
  simulate             one end-to-end snapshot with recovery and detection
  sweep                run a sweep config file, emit CSV (and optional plot)
  fixtures             write the bundled reference affinity matrix
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .affinity import construct_affinity, fixture_affinity_matrix, save_affinity
from .channel import simulate_snapshot
from .config import RngStream, SystemConfig, load_system_config, validate_config
from .detection import peak_detect, run_trials
from .errors import MixSenseError
from .mixtures import build_mixture_matrix, save_mixture_matrix
from .recovery import SolveStatus, recover_op2
from .sweep import (
    GeneratedAlphabet,
    emit_csv,
    emit_plot,
    load_sweep_file,
    plot_curves,
    resolve_affinity,
    resolve_alphabet,
    sweep as run_sweep,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixsense",
        description="Molecule-mixture communication simulator with sparse recovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct-affinity", help="generate a coherence-screened affinity matrix")
    p.add_argument("--receptors", type=int, default=10)
    p.add_argument("--molecules", type=int, default=20)
    p.add_argument("--r-act", type=int, default=5)
    p.add_argument("--a-inh", type=float, default=0.3)
    p.add_argument("--mu-thr", type=float, default=0.5)
    p.add_argument("--max-attempts", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-alphabet", help="generate a random mixture alphabet")
    p.add_argument("--molecules", type=int, default=20)
    p.add_argument("--mixtures", type=int, default=16)
    p.add_argument("--n-mix", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="simulate one snapshot and recover the mixture")
    p.add_argument("--config", help="system config file (defaults used when omitted)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--mixture", type=int, default=0, help="transmitted mixture index (0-based)")
    p.add_argument("--affinity", default="fixture", help="'fixture' or a matrix file")
    p.add_argument("--alphabet", default="generated", help="'generated' or a matrix file")
    p.add_argument("--n-mix", type=int, default=4)
    p.add_argument("--trace", help="optional CSV trace output path")

    p = sub.add_parser("sweep", help="run a sweep config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--trials", type=int, help="override trials per point")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output path (curves get a label suffix)")
    p.add_argument("--plot", help="optional SVG plot path")

    p = sub.add_parser("fixtures", help="write the bundled reference affinity matrix")
    p.add_argument("--out", required=True)
    return parser


def _cmd_construct_affinity(args) -> int:
    rng = RngStream(args.seed, 0).generator()
    matrix = construct_affinity(
        args.receptors, args.molecules, args.r_act, args.a_inh, args.mu_thr,
        rng, max_attempts=args.max_attempts,
    )
    save_affinity(args.out, matrix)
    print(f"wrote {args.receptors}x{args.molecules} affinity matrix to {args.out}")
    return 0


def _cmd_gen_alphabet(args) -> int:
    rng = RngStream(args.seed, 0).generator()
    matrix = build_mixture_matrix(args.molecules, args.mixtures, args.n_mix, rng)
    save_mixture_matrix(args.out, matrix)
    print(f"wrote {args.molecules}x{args.mixtures} alphabet to {args.out}")
    return 0


def _fmt(vec) -> str:
    return "[" + " ".join(f"{v:.4g}" for v in vec) + "]"


def _cmd_simulate(args) -> int:
    cfg = load_system_config(args.config) if args.config else validate_config(SystemConfig())
    if args.seed is not None:
        cfg = validate_config(cfg.override(master_seed=args.seed))
    affinity = resolve_affinity(args.affinity)
    if args.alphabet == "generated":
        alphabet = resolve_alphabet(GeneratedAlphabet(args.n_mix, cfg.master_seed), cfg)
    else:
        alphabet = resolve_alphabet(args.alphabet, cfg)

    gen = RngStream(cfg.master_seed, 0).generator()
    obs = simulate_snapshot(cfg, affinity, alphabet, args.mixture, gen)
    sol = recover_op2(obs, affinity, alphabet, cfg)

    print(f"transmitted mixture: {args.mixture}")
    print(f"y: {_fmt(obs.y)}")
    print(f"activated receptors: {obs.activated.tolist()}")
    print(f"solver status: {sol.status.value} (objective {sol.objective_value:.6g}, "
          f"max residual {sol.max_residual:.2e}, {sol.solve_time_ms:.1f} ms)")
    if sol.status == SolveStatus.OPTIMAL:
        det = peak_detect(sol.w_hat, ground_truth=args.mixture)
        print(f"w_hat: {_fmt(sol.w_hat)}")
        verdict = "correct" if det.correct else "wrong"
        print(f"detected mixture: {det.detected_index} ({verdict})")
    else:
        print("detection skipped: recovery did not certify a solution")
    if args.trace:
        run_trials(cfg, affinity, alphabet, 1, RngStream(cfg.master_seed, 0), trace_path=args.trace)
        print(f"trace written to {args.trace}")
    return 0


def _cmd_sweep(args) -> int:
    jobs = load_sweep_file(args.config)
    out = Path(args.out)
    results = {}
    for label, spec in jobs:
        if args.seed is not None:
            spec = replace(spec, base_config=spec.base_config.override(master_seed=args.seed))
        if args.trials is not None:
            spec = replace(spec, trials_per_point=args.trials)
        result = run_sweep(spec, threads=args.threads)
        results[label] = (spec, result)
        if len(jobs) == 1:
            csv_path = out
        else:
            csv_path = out.with_name(f"{out.stem}_{label}{out.suffix}")
        emit_csv(result, csv_path)
        print(f"wrote {csv_path}")

    if args.plot:
        xlabel = jobs[0][1].variable
        if len(results) == 1:
            (spec, result), = results.values()
            emit_plot(result, args.plot, xlabel=xlabel)
        else:
            plot_curves({lbl: res for lbl, (spec, res) in results.items()}, args.plot, xlabel=xlabel)
        print(f"wrote {args.plot}")
    return 0


def _cmd_fixtures(args) -> int:
    save_affinity(args.out, fixture_affinity_matrix())
    print(f"wrote bundled affinity matrix to {args.out}")
    return 0


_COMMANDS = {
    "construct-affinity": _cmd_construct_affinity,
    "gen-alphabet": _cmd_gen_alphabet,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "fixtures": _cmd_fixtures,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except MixSenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
