"""Command-line front end.

Exit codes: 0 success/Accept, 1 usage or configuration error, 2 protocol
Abort, 3 robustness VIOLATION.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis
from .adversary import ATTACK_NAMES, make_attack
from .errors import SQKDError
from .protocol import TRANSCRIPT_FIELDS, Mode, ProtocolParams, run_session, transcript_rows
from .quantum import ProductBasis

EXIT_OK, EXIT_ERROR, EXIT_ABORT, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(fields, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def read_config(path: str) -> list[str]:
    """Turn a ``key = value`` file into argv tokens.

    Blank lines and ``#`` comments are ignored; ``key`` is a long flag name
    without dashes. Multi-valued flags take whitespace-separated values.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    tokens = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("config", ""):
            raise UsageError(f"{path}:{lineno}: invalid key {key!r}")
        tokens.append("--" + key.replace("_", "-"))
        tokens.extend(value.split())
    return tokens


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--config", default=None, help="key = value file; explicit flags override it")
    p.add_argument("--out-dir", default="sqkd-out", help="directory for all output files")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed")


def _add_attack(p: argparse.ArgumentParser) -> None:
    p.add_argument("--attack", default="none",
                   help=f"one of {', '.join(ATTACK_NAMES)} or file:PATH (JSON unitaries)")
    p.add_argument("--theta-p", type=float, default=0.0, help="rotation attack polarization angle (rad)")
    p.add_argument("--theta-s", type=float, default=0.0, help="rotation attack spatial angle (rad)")
    p.add_argument("--intercept-basis", default="ZZ", choices=[b.name for b in ProductBasis],
                   help="basis for intercept-resend")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="sqkd", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sim = sub.add_parser("simulate", help="run one protocol session", formatter_class=fmt)
    sim.add_argument("--n", type=int, default=128, help="key length in bits (even)")
    sim.add_argument("--delta", type=float, default=0.1, help="batch padding parameter")
    sim.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXACT.value,
                     help="exact: Bob SIFTs exactly half of each basis group; montecarlo: independent coins")
    sim.add_argument("--thresholds", type=float, nargs=3, default=[0.0, 0.0, 0.0],
                     metavar=("CTRL", "NONZZ", "ZZ"), help="abort thresholds per check group")
    sim.add_argument("--backend", choices=("auto", "cython", "python"), default="auto",
                     help="round kernel implementation")
    _add_attack(sim)
    _add_common(sim)

    ver = sub.add_parser("verify", help="check an attack against the robustness claim",
                         formatter_class=fmt)
    _add_attack(ver)
    ver.add_argument("--tol-detect", type=float, default=analysis.DEFAULT_TOL_DETECT)
    ver.add_argument("--tol-info", type=float, default=analysis.DEFAULT_TOL_INFO)
    ver.add_argument("--sweep-random", type=int, default=0, metavar="N",
                     help="also verify N seeded random attack pairs")
    _add_common(ver)

    sw = sub.add_parser("sweep", help="detection vs information over an attack family",
                        formatter_class=fmt)
    sw.add_argument("--family", choices=sorted(analysis.FAMILIES), default="rotation-p")
    sw.add_argument("--start", type=float, default=0.0)
    sw.add_argument("--stop", type=float, default=math.pi / 2)
    sw.add_argument("--points", type=int, default=17)
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_common(sw, seed=False)

    eff = sub.add_parser("efficiency", help="print the efficiency comparison table",
                         formatter_class=fmt)
    _add_common(eff, seed=False)
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    first = parser.parse_args(argv)
    if first.config:
        # Config tokens go first so that explicit flags win.
        argv = [argv[0]] + read_config(first.config) + argv[1:]
        return parser.parse_args(argv)
    return first


def _attack_from(args):
    return make_attack(args.attack, args.theta_p, args.theta_s, ProductBasis[args.intercept_basis])


def cmd_simulate(args) -> int:
    params = ProtocolParams(args.n, args.delta, tuple(args.thresholds), args.seed, Mode(args.mode))
    attack = _attack_from(args)
    backend = None if args.backend == "auto" else args.backend
    report = run_session(params, attack, backend=backend)
    out = Path(args.out_dir)
    _write_atomic(out / "session.json", _dump_json(report.to_dict()))
    _write_atomic(out / "transcript.csv", _csv_text(TRANSCRIPT_FIELDS, transcript_rows(report.transcript)))
    print(report.summary_line())
    return EXIT_OK if report.errors.accepted else EXIT_ABORT


def cmd_verify(args) -> int:
    attack = _attack_from(args)
    report = analysis.theorem1_verify(attack, args.tol_detect, args.tol_info)
    doc = {"schema_version": 1, "kind": "robustness", "attack": attack.describe(),
           "report": report.to_dict()}
    violations = report.verdict == analysis.VIOLATION
    line = f"{report.verdict} detection={report.max_detection:.3g} " \
           f"trace_distance={report.max_pairwise_probe_trace_distance:.3g} holevo={report.holevo_bits:.3g}"
    if args.sweep_random:
        suite = analysis.random_attack_suite(args.sweep_random, args.seed, args.tol_detect, args.tol_info)
        tally = {}
        for _, r in suite:
            tally[r.verdict] = tally.get(r.verdict, 0) + 1
        bad = [{"sample": i, "kind": k, **r.to_dict()} for i, (k, r) in enumerate(suite)
               if r.verdict == analysis.VIOLATION]
        doc["random_suite"] = {"samples": args.sweep_random, "seed": args.seed,
                               "verdicts": tally, "violations": bad}
        violations = violations or bool(bad)
        line += f" random={args.sweep_random} violations={len(bad)}"
    _write_atomic(Path(args.out_dir) / "robustness.json", _dump_json(doc))
    print(line)
    return EXIT_VIOLATION if violations else EXIT_OK


SWEEP_FIELDS = ("param", "detection", "holevo_bits", "trace_distance")


def cmd_sweep(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    grid = np.linspace(args.start, args.stop, args.points)
    points = analysis.tradeoff_sweep(args.family, grid, jobs=max(1, args.jobs))
    rows = [{"param": repr(p.param), "detection": repr(p.detection),
             "holevo_bits": repr(p.holevo_bits), "trace_distance": repr(p.trace_distance)}
            for p in points]
    _write_atomic(Path(args.out_dir) / "sweep.csv", _csv_text(SWEEP_FIELDS, rows))
    print(f"{args.family}: {len(points)} points -> {Path(args.out_dir) / 'sweep.csv'}")
    return EXIT_OK


def cmd_efficiency(args) -> int:
    rows = analysis.efficiency_table()
    _write_atomic(Path(args.out_dir) / "efficiency.json", _dump_json(analysis.efficiency_document()))
    print(analysis.format_efficiency_table(rows))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep,
            "efficiency": cmd_efficiency}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
    except SQKDError as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
