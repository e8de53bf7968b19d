"""Command-line front end.

Run a sweep::

    psk-precode --precoder gpm-rpc --bits 2 --snr -10:2:20 --out results/

Compare two result files (exit code 3 on failure)::

    psk-precode compare baseline.csv candidate.csv --ber-rtol 0.3
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .harness import PRECODERS, BerRecord, ExperimentConfig, run_experiment, snr_at_ber

__all__ = [
    "CSV_COLUMNS",
    "RunManifest",
    "parse_args",
    "config_to_argv",
    "parse_snr_grid",
    "emit_results",
    "read_records",
    "reference_csv_path",
    "compare_command",
    "main",
]

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_COMPARE = 0, 1, 2, 3

CSV_COLUMNS = (
    "precoder",
    "bits",
    "snr_db",
    "ber",
    "bit_errors",
    "bits_total",
    "avg_iterations",
    "avg_halvings",
    "capped_fraction",
)

FULL_SCALE = {"channels": 500, "symbols": 10_000}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_bits(text):
    if str(text).strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        bits = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer 2-8 or 'inf', got {text!r}") from None
    if not 2 <= bits <= 8:
        raise argparse.ArgumentTypeError(f"bits must be in 2..8 or 'inf', got {bits}")
    return bits


def parse_snr_grid(text):
    """``min:step:max`` (inclusive) or a comma-separated list of dB values."""
    text = text.strip()
    if ":" in text:
        try:
            lo, step, hi = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected min:step:max, got {text!r}") from None
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"empty SNR range {text!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [float(lo + i * step) for i in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _run_parser():
    p = _Parser(prog="psk-precode", description="Monte-Carlo BER sweep of CE/PSK downlink precoders.")
    p.add_argument("--precoder", choices=sorted(PRECODERS), default="gdm-cec")
    p.add_argument("--bits", type=parse_bits, default=math.inf, help="transmit PSK resolution 2..8 or 'inf'")
    p.add_argument("--antennas", type=_positive_int, default=32)
    p.add_argument("--users", type=_positive_int, default=4)
    p.add_argument("--snr", type=parse_snr_grid, default="-10:2:20", help="min:step:max in dB, or a list")
    p.add_argument("--channels", type=_positive_int, default=None)
    p.add_argument("--symbols", type=_positive_int, default=None, help="symbol vectors per channel")
    p.add_argument("--full-scale", action="store_true", help="500 channels x 10^4 symbols")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu0", type=_positive_float, default=None)
    p.add_argument("--epsilon", type=_positive_float, default=1e-2)
    p.add_argument("--alpha", type=_positive_float, default=None, help="override the desired-signal scaling")
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--out", default=None, help="output directory")
    return p


def _glue_negative_values(argv):
    # argparse takes "-10:2:20" for a flag; bind it to --snr explicitly
    argv = list(argv)
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--snr" and i + 1 < len(argv):
            out.append("--snr=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def parse_args(argv):
    """Resolve run flags into an :class:`ExperimentConfig`.

    Raises :class:`UsageError` on unknown flags, bad values or inconsistent
    combinations.
    """
    ns = _run_parser().parse_args(_glue_negative_values(argv))
    channels = ns.channels or (FULL_SCALE["channels"] if ns.full_scale else 100)
    symbols = ns.symbols or (FULL_SCALE["symbols"] if ns.full_scale else 1000)
    try:
        return ExperimentConfig(
            precoder=ns.precoder,
            bits=ns.bits,
            n=ns.antennas,
            m=ns.users,
            snr_grid_db=ns.snr,
            channels=channels,
            symbols_per_channel=symbols,
            master_seed=ns.seed,
            mu0=ns.mu0,
            epsilon=ns.epsilon,
            alpha=ns.alpha,
            max_iterations=ns.max_iter,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt_bits(bits):
    return "inf" if bits == math.inf else str(int(bits))


def config_to_argv(cfg):
    """Flags that :func:`parse_args` turns back into ``cfg``."""
    argv = [
        "--precoder", cfg.precoder,
        "--bits", _fmt_bits(cfg.bits),
        "--antennas", str(cfg.n),
        "--users", str(cfg.m),
        "--snr", ",".join(repr(v) for v in cfg.snr_grid_db),
        "--channels", str(cfg.channels),
        "--symbols", str(cfg.symbols_per_channel),
        "--seed", str(cfg.master_seed),
        "--epsilon", repr(cfg.epsilon),
        "--max-iter", str(cfg.max_iterations),
    ]
    if cfg.mu0 is not None:
        argv += ["--mu0", repr(cfg.mu0)]
    if cfg.alpha is not None:
        argv += ["--alpha", repr(cfg.alpha)]
    return argv


@dataclass
class RunManifest:
    config: dict
    argv: list
    version: str = __version__
    master_seed: int = 0
    outputs: dict = field(default_factory=dict)
    started_at: str = ""
    elapsed_s: float = 0.0


def _csv_value(v):
    if isinstance(v, float):
        if v == math.inf:
            return "inf"
        return repr(v)
    return str(v)


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = asdict(r)
        row["bits"] = _fmt_bits(r.bits)
        w.writerow([_csv_value(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _summary(records, target=1e-3):
    groups = defaultdict(list)
    for r in records:
        groups[r.precoder, _fmt_bits(r.bits)].append(r)
    out = []
    for (precoder, bits), recs in groups.items():
        hit = snr_at_ber(recs, target)
        out.append({
            "precoder": precoder,
            "bits": bits,
            "avg_iterations": recs[0].avg_iterations,
            "avg_halvings": recs[0].avg_halvings,
            "capped_fraction": recs[0].capped_fraction,
            "snr_at_ber_1e-3": hit.snr_db,
            "snr_at_ber_note": hit.reason,
            "records": [{k: (_fmt_bits(v) if k == "bits" else v) for k, v in asdict(r).items()} for r in recs],
        })
    return {"groups": out}


def emit_results(records, manifest, out_dir):
    """Write ``ber.csv``, ``summary.json`` and ``manifest.json`` into ``out_dir``."""
    paths = {name: os.path.join(out_dir, name) for name in ("ber.csv", "summary.json", "manifest.json")}
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(paths["ber.csv"], "w", encoding="utf-8", newline="") as fh:
            fh.write(records_to_csv(records))
        with open(paths["summary.json"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_summary(records), fh, indent=2)
            fh.write("\n")
        manifest.outputs = {k: os.path.basename(v) for k, v in paths.items()}
        with open(paths["manifest.json"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(manifest), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"writing results to {out_dir!r} failed: {exc}") from exc
    return paths


def _opt_float(text):
    text = text.strip()
    return float(text) if text else None


def read_records(path):
    """Load a results CSV into a list of dicts (empty cells become ``None``)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: header {reader.fieldnames} does not match {list(CSV_COLUMNS)}")
        rows = []
        for row in reader:
            rows.append({
                "precoder": row["precoder"],
                "bits": row["bits"],
                "snr_db": float(row["snr_db"]),
                "ber": float(row["ber"]),
                "avg_iterations": _opt_float(row["avg_iterations"]),
                "avg_halvings": _opt_float(row["avg_halvings"]),
            })
    return rows


def reference_csv_path():
    """Path of the bundled BER curves and solver statistics of the original study."""
    return str(resources.files("pskprecoding") / "data" / "reference_ber.csv")


def _rel(a, b):
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return abs(a - b) / abs(b)


def compare_command(baseline_csv, candidate_csv, ber_rtol=0.3, snr_atol_db=0.5, iter_rtol=0.5, min_ber=1e-4):
    """Compare a candidate results file against a baseline.

    BER points are compared where both files have the same (precoder, bits,
    SNR) and the baseline BER is at least ``min_ber``. Per curve, the SNR at
    BER 1e-3 and the mean iteration/halving counts are compared as well; pass
    ``iter_rtol=None`` to skip the latter.

    Returns ``(passed, report_lines, max_ber_deviation)``.
    """
    base = read_records(baseline_csv)
    cand = read_records(candidate_csv)
    base_idx = {(r["precoder"], r["bits"], r["snr_db"]): r for r in base}
    lines = []
    passed = True
    max_dev = 0.0
    curves = defaultdict(lambda: ([], []))

    for r in cand:
        key = (r["precoder"], r["bits"], r["snr_db"])
        if key not in base_idx:
            continue
        b = base_idx[key]
        curves[key[:2]][0].append(b)
        curves[key[:2]][1].append(r)
        if b["ber"] < min_ber:
            continue
        dev = _rel(r["ber"], b["ber"])
        max_dev = max(max_dev, dev)
        ok = dev <= ber_rtol
        passed &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} ber {key[0]} B={key[1]} {key[2]:g} dB: "
                     f"{r['ber']:.4g} vs {b['ber']:.4g} (rel {dev:.3f}, tol {ber_rtol})")

    if not curves:
        raise ValueError("no common (precoder, bits, snr_db) points between the two files")

    for (precoder, bits), (brows, crows) in curves.items():
        as_rec = lambda rows: [BerRecord(precoder, 0, r["snr_db"], r["ber"], 0, 0) for r in rows]  # noqa: E731
        sb = snr_at_ber(as_rec(brows)).snr_db
        sc = snr_at_ber(as_rec(crows)).snr_db
        if sb is not None:
            ok = sc is not None and abs(sc - sb) <= snr_atol_db
            passed &= ok
            shown = "absent" if sc is None else f"{sc:.2f}"
            lines.append(f"{'PASS' if ok else 'FAIL'} snr@1e-3 {precoder} B={bits}: {shown} vs {sb:.2f} dB (tol {snr_atol_db})")
        for stat in ("avg_iterations", "avg_halvings") if iter_rtol is not None else ():
            bv, cv = brows[0][stat], crows[0][stat]
            if bv is None or cv is None or bv == 0:
                continue
            dev = _rel(cv, bv)
            ok = dev <= iter_rtol
            passed &= ok
            lines.append(f"{'PASS' if ok else 'FAIL'} {stat} {precoder} B={bits}: {cv:.1f} vs {bv:g} (rel {dev:.3f}, tol {iter_rtol})")

    lines.append(f"{'PASS' if passed else 'FAIL'} overall, max BER deviation {max_dev:.3f}")
    return passed, lines, max_dev


def _compare_main(argv):
    p = _Parser(prog="psk-precode compare", description="Compare two ber.csv files.")
    p.add_argument("baseline", help="baseline CSV, or 'reference' for the bundled curves")
    p.add_argument("candidate")
    p.add_argument("--ber-rtol", type=_positive_float, default=0.3)
    p.add_argument("--snr-atol", type=_positive_float, default=0.5)
    p.add_argument("--iter-rtol", type=_positive_float, default=0.5)
    p.add_argument("--min-ber", type=float, default=1e-4)
    p.add_argument("--skip-stats", action="store_true", help="ignore iteration/halving columns")
    ns = p.parse_args(argv)
    baseline = reference_csv_path() if ns.baseline == "reference" else ns.baseline
    passed, lines, _ = compare_command(baseline, ns.candidate, ns.ber_rtol, ns.snr_atol,
                                     None if ns.skip_stats else ns.iter_rtol, ns.min_ber)
    print("\n".join(lines))
    return EXIT_OK if passed else EXIT_COMPARE


def _run_main(argv):
    cfg = parse_args(argv)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    t0 = time.perf_counter()
    records = run_experiment(cfg)
    manifest = RunManifest(
        config=cfg.to_dict(),
        argv=config_to_argv(cfg),
        master_seed=cfg.master_seed,
        started_at=started,
        elapsed_s=time.perf_counter() - t0,
    )
    out_dir = _run_parser().parse_args(_glue_negative_values(argv)).out
    if out_dir:
        emit_results(records, manifest, out_dir)
        print(f"wrote {len(records)} rows to {os.path.join(out_dir, 'ber.csv')}")
    else:
        sys.stdout.write(records_to_csv(records))
    return EXIT_OK


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "compare":
            return _compare_main(argv[1:])
        if argv and argv[0] == "run":
            argv = argv[1:]
        return _run_main(argv)
    except UsageError as exc:
        print(f"psk-precode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"psk-precode: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
