"""Command-line front end: run, sweep, compare, verify-sequences.

Exit codes: 0 success, 1 usage error, 2 validation error (bad file or
configuration), 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .ampmod import AmpModError
from .channel import ChannelError, add_awgn, draw_channel
from .geometry import ScenarioError, load_scenario_file
from .harness import (RUNNERS, SweepError, SweepRow, compare_csv, compare_schemes,
                      estimate_point, load_sweep_spec_file, run_sweep, sweep_csv,
                      write_text_atomic)
from .sequences import (SequenceError, correlation_histogram, gold_family,
                        three_valued_set)
from .spectral import SpectralError
from .streams import trial_rng
from .watermark import WatermarkError
from .waveform import WaveformError

_VALIDATION_ERRORS = (ScenarioError, SweepError, SequenceError, WatermarkError,
                      AmpModError, SpectralError, WaveformError, ChannelError,
                      FileNotFoundError, IsADirectoryError, PermissionError)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed_value(text: str) -> int:
    value = int(text)
    if not 0 <= value < (1 << 64):
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="risid",
                     description="Monte-Carlo simulator for RIS identification schemes")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="estimate one configured scenario",
                         description="Run the scenario's active scheme at one point.")
    run.add_argument("--scenario", required=True, help="scenario TOML file")
    run.add_argument("--seed", required=True, type=_seed_value,
                     help="master seed (runs are reproducible; no wall-clock seeding)")
    run.add_argument("--trials", type=int, default=1000, help="Monte-Carlo trials")
    run.add_argument("--out", help="optional CSV output path")
    run.add_argument("--detail-out",
                     help="write one trial's detector diagnostics CSV (figure input)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter sweep to CSV",
                           description="Evaluate a sweep spec over a scenario.")
    sweep.add_argument("--scenario", required=True, help="scenario TOML file")
    sweep.add_argument("--spec", required=True, help="sweep spec TOML file")
    sweep.add_argument("--seed", type=_seed_value,
                       help="master seed (overrides the spec file's seed)")
    sweep.add_argument("--trials", type=int, help="override trials per point")
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sweep.set_defaults(func=_cmd_sweep)

    comp = sub.add_parser("compare", help="compare the three schemes at matched airtime",
                          description="Misidentification and detector-cost comparison.")
    comp.add_argument("--scenario", required=True, help="scenario TOML file")
    comp.add_argument("--seed", required=True, type=_seed_value, help="master seed")
    comp.add_argument("--budget", type=int, default=4800,
                      help="identification airtime budget in samples")
    comp.add_argument("--trials", type=int, default=10000, help="trials per scheme")
    comp.add_argument("--out", help="optional CSV output path")
    comp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    comp.set_defaults(func=_cmd_compare)

    verify = sub.add_parser("verify-sequences",
                            help="exhaustive Gold-family correlation self-test",
                            description="Print correlation histograms and check the "
                                        "three-valued property.")
    verify.add_argument("--m", type=int, action="append", dest="degrees",
                        help="family degree (repeatable; default 5 6 7)")
    verify.set_defaults(func=_cmd_verify)
    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario_file(args.scenario)
    RUNNERS[scenario.scheme](scenario)  # validates the configuration up front
    estimate = estimate_point(scenario, scenario.scheme, args.seed, 0,
                              args.trials, args.jobs)
    print(f"scheme {scenario.scheme}: {estimate}")
    if args.out:
        row = SweepRow(point_index=0, params={}, estimate=estimate)
        write_text_atomic(sweep_csv([row], scenario.scheme, args.seed, []), args.out)
        print(f"wrote {args.out}")
    if args.detail_out:
        _write_detail(scenario, args.seed, args.detail_out)
        print(f"wrote {args.detail_out}")
    return 0


def _write_detail(scenario, seed: int, path: str) -> None:
    """One trial's detector-facing diagnostics (bar/slot figure input)."""
    runner = RUNNERS[scenario.scheme](scenario)
    rng = trial_rng(seed, 0, 0)
    serving = scenario.serving_ris_id
    lines = []
    if scenario.scheme == "ampmod":
        realization = draw_channel(runner.scenario, rng)
        from .ampmod import ampmod_encode
        signal, reference = ampmod_encode(serving, runner.codebook, realization,
                                          runner.scenario, rng)
        noisy = add_awgn(signal.samples, runner.scenario.snr_db, reference, rng)
        book = runner.codebook
        power = (np.abs(noisy[: book.num_slots * book.slot_length]) ** 2
                 ).reshape(book.num_slots, book.slot_length).mean(axis=1)
        kinds = ["pilot_on", "pilot_off"] + [f"bit{b}" for b in
                                             book.codewords[serving].tolist()]
        lines.append("slot,kind,power")
        for i, (kind, p) in enumerate(zip(kinds, power)):
            lines.append(f"{i},{kind},{p:.17g}")
    elif scenario.scheme == "spectral":
        result = runner.run_trial(rng)
        lines.append("group,ris_id,serving,power")
        gs = runner.assignment.group_size
        for rid, p in sorted(result.scores.items()):
            group = runner.assignment.groups[rid][0] // gs
            lines.append(f"{group},{rid},{int(rid == serving)},{p:.17g}")
    else:
        result = runner.run_trial(rng)
        lines.append("ris_id,serving,score")
        for rid, z in sorted(result.scores.items()):
            lines.append(f"{rid},{int(rid == serving)},{z:.17g}")
    write_text_atomic("\n".join(lines) + "\n", path)


def _cmd_sweep(args) -> int:
    scenario = load_scenario_file(args.scenario)
    spec = load_sweep_spec_file(args.spec)
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    if spec.master_seed is None:
        raise SweepError("no seed: pass --seed or put `seed = ...` in the spec file")
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    rows = run_sweep(spec, scenario, jobs=args.jobs)
    write_text_atomic(sweep_csv(rows, spec.scheme, spec.master_seed, spec.axis_names),
                      args.out)
    print(f"wrote {args.out} ({len(rows)} points, {spec.trials} trials each)")
    return 0


def _cmd_compare(args) -> int:
    scenario = load_scenario_file(args.scenario)
    rows = compare_schemes(scenario, args.budget, args.trials, args.seed, args.jobs)
    widths = (10, 9, 13, 12, 12, 12)
    header = ("scheme", "airtime", "detector_ops", "rate", "ci_low", "ci_high")
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        lo, hi = row.estimate.ci95
        cells = (row.scheme, str(row.airtime), str(row.detector_ops),
                 f"{row.estimate.rate:.6g}", f"{lo:.6g}", f"{hi:.6g}")
        print("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    if args.out:
        write_text_atomic(compare_csv(rows, args.seed), args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_verify(args) -> int:
    degrees = args.degrees or [5, 6, 7]
    all_ok = True
    for m in degrees:
        family = gold_family(m)
        hist = correlation_histogram(family)
        length = family.length
        allowed = set(three_valued_set(m)) | {length}
        print(f"m={m}: {family.size} codes of length {length}; "
              f"correlation histogram (value: count):")
        for value in sorted(hist):
            print(f"  {value:6d}: {hist[value]}")
        ok = set(hist) <= allowed and hist.get(length, 0) == family.size
        print(f"  three-valued set {sorted(three_valued_set(m))} "
              f"+ peak {length}: {'PASS' if ok else 'FAIL'}")
        all_ok &= ok
    return 0 if all_ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - invariant violations exit 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
