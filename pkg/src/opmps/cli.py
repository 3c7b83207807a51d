"""Command-line front end.

Ports are 1-based on the command line and converted once at the boundary.
Exit codes: 0 success, 2 parse error, 3 validation error, 4 size/cutoff
guard, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import basis, imperfections, lines, oracles
from .errors import OpMPSError, ParseError, PatternMismatch, ValidationError
from .linalg import OccupationPattern, as_complex_matrix, haar_random_unitary, load_matrix, matrix_to_json, submatrix, validate_unitary

EXIT_IO = 5


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}") from exc


def parse_pattern(in_spec: str, out_spec: str | None, out_occ: str | None, n_modes: int) -> OccupationPattern:
    """Build a 0-based pattern from ``--in``/``--out``/``--out-occ`` strings."""
    ports = [p - 1 for p in _int_list(in_spec)]
    if any(not 0 <= p < n_modes for p in ports):
        raise PatternMismatch(f"input ports must lie in 1..{n_modes}")
    if (out_spec is None) == (out_occ is None):
        raise ParseError("give exactly one of --out or --out-occ")
    if out_occ is not None:
        occ = _int_list(out_occ)
    else:
        occ = [0] * n_modes
        for item in out_spec.split(","):
            if not item.strip():
                continue
            try:
                port, count = item.split(":")
                k, c = int(port) - 1, int(count)
            except ValueError as exc:
                raise ParseError(f"bad port:count pair {item!r}") from exc
            if not 0 <= k < n_modes:
                raise PatternMismatch(f"output port {k + 1} outside 1..{n_modes}")
            occ[k] += c
    return OccupationPattern(tuple(ports), tuple(occ))


def digest(mat: np.ndarray, *parts) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mat, dtype=np.complex128).tobytes())
    h.update(json.dumps([str(p) for p in parts]).encode())
    return h.hexdigest()[:16]


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _stats_dict(stats: lines.MergeStats, n: int, n_lost: int | None = None) -> dict:
    out = {
        "pair_combinations": stats.pair_combinations,
        "scalar_multiplications": stats.scalar_multiplications,
        "predicted_pairs": lines.pair_count(n),
        "predicted_c": lines.predicted_cost(n) if n >= 1 else 0,
    }
    if n_lost is not None:
        out["predicted_c_L"] = imperfections.lossy_cost(n, n_lost)
    return out


def _emit(report: dict, args) -> None:
    if getattr(args, "format", "json") == "text":
        for key, value in report.items():
            print(f"{key}: {value}")
    else:
        print(json.dumps(report))


def _load_unitary(path: str):
    return validate_unitary(load_matrix(path), tol=1e-8).mat


# -- subcommands ---------------------------------------------------------------


def cmd_amplitude(args, probability: bool = False) -> dict:
    u = _load_unitary(args.matrix)
    pattern = parse_pattern(args.inp, args.out, args.out_occ, u.shape[0])
    stats = lines.MergeStats()
    t0 = time.perf_counter()
    amp = lines.fock_amplitude(u, pattern, stats, strategy=args.strategy)
    wall = time.perf_counter() - t0
    report = {"command": "probability" if probability else "amplitude", "algorithm": f"lines/{args.strategy}"}
    if probability:
        report["probability"] = abs(amp) ** 2
    else:
        report["amplitude"] = _complex_pair(amp)
    report["stats"] = _stats_dict(stats, pattern.n)
    report["wall_time_s"] = wall
    report["digest"] = digest(u, args.inp, args.out, args.out_occ)
    if args.oracle:
        sub = submatrix(u, pattern)
        report["oracle"] = {"ryser_permanent": _complex_pair(oracles.ryser_permanent(sub))}
        if pattern.n <= oracles.DENSE_MAX_N:
            state = oracles.dense_fock_evolution(u, pattern.input_ports, pattern.n + 1)
            report["oracle"]["dense_amplitude"] = _complex_pair(state.amplitude(pattern.output_occupations))
    return report


def cmd_permanent(args) -> dict:
    a = as_complex_matrix(load_matrix(args.matrix))
    n = a.shape[0]
    stats = lines.MergeStats()
    t0 = time.perf_counter()
    if args.algo == "naive":
        value = oracles.naive_permanent(a)
    elif args.algo == "ryser":
        value = oracles.ryser_permanent(a)
    else:
        value = lines.permanent_via_lines(a, stats)
    wall = time.perf_counter() - t0
    report = {"command": "permanent", "algorithm": args.algo, "n": n, "permanent": _complex_pair(value)}
    if args.algo == "lines":
        report["stats"] = _stats_dict(stats, n)
    if args.compare:
        ref = oracles.ryser_permanent(a)
        report["ryser"] = _complex_pair(ref)
        report["rel_diff"] = abs(value - ref) / max(abs(ref), 1e-300)
    report["wall_time_s"] = wall
    report["digest"] = digest(a, args.algo)
    return report


def _load_weights(spec: str, m: int):
    try:
        return float(spec)
    except ValueError:
        pass
    w = load_matrix(spec)
    if w.shape != (m, m):
        raise ValidationError(f"loss weight matrix must be {m}x{m}")
    return w.real


def cmd_lossy(args) -> dict:
    u = _load_unitary(args.matrix)
    lm = imperfections.extend_with_loss(u, _load_weights(args.lam, u.shape[0]))
    pattern = parse_pattern(args.inp, args.out, args.out_occ, u.shape[0])
    stats = lines.MergeStats()
    t0 = time.perf_counter()
    amp = imperfections.lossy_amplitude(lm, pattern, args.lost, stats)
    prob = imperfections.lossy_probability(lm, pattern, args.lost)
    wall = time.perf_counter() - t0
    return {
        "command": "lossy",
        "algorithm": "lines",
        "amplitude": _complex_pair(amp),
        "probability": prob,
        "n_lost": args.lost,
        "stats": _stats_dict(stats, pattern.n, args.lost),
        "wall_time_s": wall,
        "digest": digest(lm.matrix, args.inp, args.out, args.out_occ, args.lost),
    }


def cmd_distinguish(args) -> dict:
    u = _load_unitary(args.matrix)
    pattern = parse_pattern(args.inp, args.out, args.out_occ, u.shape[0])
    eta = _float_list(args.eta)
    stats = lines.MergeStats()
    t0 = time.perf_counter()
    prob = imperfections.distinguishable_probability(u, pattern, eta, stats)
    wall = time.perf_counter() - t0
    return {
        "command": "distinguish",
        "algorithm": "lines/sectors",
        "probability": prob,
        "stats": _stats_dict(stats, pattern.n),
        "wall_time_s": wall,
        "digest": digest(u, args.inp, args.out, args.out_occ, args.eta),
    }


def cmd_dephase(args) -> dict:
    u = _load_unitary(args.matrix)
    v = _load_unitary(args.second) if args.second else None
    pattern = parse_pattern(args.inp, args.out, args.out_occ, u.shape[0])
    t0 = time.perf_counter()
    res = imperfections.dephase_probability(
        u,
        pattern,
        args.sigma,
        uniform=args.uniform,
        samples=args.samples,
        seed=args.seed,
        placement=args.placement,
        v=v,
        threads=args.threads,
    )
    wall = time.perf_counter() - t0
    return {
        "command": "dephase",
        "algorithm": "monte-carlo",
        "probability": res.mean,
        "stderr": res.stderr,
        "samples": res.samples,
        "wall_time_s": wall,
        "digest": digest(u, args.inp, args.out, args.out_occ, args.sigma, args.uniform, args.samples, args.seed, args.placement),
    }


def cmd_gen_unitary(args) -> dict:
    u = haar_random_unitary(args.m, args.seed)
    validate_unitary(u.mat)
    text = matrix_to_json(u.mat)
    Path(args.out).write_text(text + "\n")
    return {"command": "gen-unitary", "m": args.m, "seed": args.seed, "residual": u.unitarity_residual, "path": args.out}


BENCH_COLUMNS = ["n", "measured_pairs", "pair_formula", "c", "wall_ns"]


def bench_rows(n_min: int, n_max: int, seed: int) -> list[dict]:
    if n_max > 24:
        raise imperfections.TooLarge("bench limited to n <= 24")
    if n_min < 1 or n_min > n_max:
        raise ValidationError("need 1 <= n-min <= n-max")
    rows = []
    for n in range(n_min, n_max + 1):
        rng = np.random.default_rng([seed, n])
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        stats = lines.MergeStats()
        t0 = time.perf_counter_ns()
        lines.permanent_via_lines(a, stats)
        wall = time.perf_counter_ns() - t0
        rows.append(
            {
                "n": n,
                "measured_pairs": stats.pair_combinations,
                "pair_formula": lines.pair_count(n),
                "c": lines.predicted_cost(n),
                "wall_ns": wall,
            }
        )
    return rows


def _write_csv(rows: list[dict], columns: list[str], out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_bench(args) -> None:
    _write_csv(bench_rows(args.n_min, args.n_max, args.seed), BENCH_COLUMNS, args.output)


def cmd_loss_curve(args) -> None:
    rows = [{"fraction_lost": f, "ratio": r} for f, r in imperfections.loss_ratio_curve(args.n)]
    _write_csv(rows, ["fraction_lost", "ratio"], args.output)


def cmd_export_mpo(args) -> None:
    u = _load_unitary(args.matrix)
    ports = [p - 1 for p in _int_list(args.inp)]
    modes = range(u.shape[1]) if args.mode is None else [args.mode - 1]
    docs = [
        basis.mpo_json(basis.assemble_operator_tensor(u, ports, m, args.power), args.cutoff) for m in modes
    ]
    text = json.dumps(docs[0] if args.mode is not None else docs)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)


# -- argument parsing ----------------------------------------------------------


def _add_pattern(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", required=True, help="unitary in JSON or text format")
    p.add_argument("--in", dest="inp", required=True, help="input ports, e.g. 1,2,3,4")
    p.add_argument("--out", default=None, help="port:count pairs, e.g. 1:1,3:1")
    p.add_argument("--out-occ", default=None, help="full occupation list, e.g. 1,0,1,0")
    p.add_argument("--format", choices=["json", "text"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opmps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("amplitude", "probability"):
        p = sub.add_parser(name)
        _add_pattern(p)
        p.add_argument("--strategy", choices=["sequential", "tree"], default="sequential")
        p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("permanent")
    p.add_argument("--matrix", required=True)
    p.add_argument("--algo", choices=["naive", "ryser", "lines"], default="lines")
    p.add_argument("--compare", action="store_true", help="also run Ryser and report the relative difference")
    p.add_argument("--format", choices=["json", "text"], default="json")

    p = sub.add_parser("lossy")
    _add_pattern(p)
    p.add_argument("--lambda", dest="lam", required=True, help="scalar weight or weight-matrix file")
    p.add_argument("--lost", type=int, required=True)

    p = sub.add_parser("distinguish")
    _add_pattern(p)
    p.add_argument("--eta", required=True, help="per-photon eta values, e.g. 1,0.5")

    p = sub.add_parser("dephase")
    _add_pattern(p)
    p.add_argument("--second", default=None, help="second channel for --placement between")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--uniform", action="store_true", help="uniform phases instead of Gaussian")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--placement", choices=["after", "before", "between"], default="after")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("gen-unitary")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)

    p = sub.add_parser("loss-curve")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", default=None)

    p = sub.add_parser("export-mpo")
    p.add_argument("--matrix", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--mode", type=int, default=None, help="1-based mode; all modes when omitted")
    p.add_argument("--cutoff", type=int, required=True)
    p.add_argument("--power", type=int, default=None, help="only blocks with this power of a^dag")
    p.add_argument("--output", default=None)
    return parser


HANDLERS = {
    "amplitude": cmd_amplitude,
    "probability": lambda a: cmd_amplitude(a, probability=True),
    "permanent": cmd_permanent,
    "lossy": cmd_lossy,
    "distinguish": cmd_distinguish,
    "dephase": cmd_dephase,
    "gen-unitary": cmd_gen_unitary,
    "bench": cmd_bench,
    "loss-curve": cmd_loss_curve,
    "export-mpo": cmd_export_mpo,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = HANDLERS[args.command](args)
    except OpMPSError as exc:
        print(f"opmps {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"opmps {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    if report is not None:
        _emit(report, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
