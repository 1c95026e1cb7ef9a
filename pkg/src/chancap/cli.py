"""Command-line front end: ``chancap {capcurve,scan,verify,info,eve-bound}``.

Exit codes: 0 success, 1 a property check reported failures, 2 bad
arguments or channel spec, 3 an optimisation found no feasible state.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from math import log2
from pathlib import Path

import numpy as np

from .capacity import (
    ENCODINGS,
    BellDiagonalFamily,
    Clause,
    ConstraintSpec,
    bin_maxima,
    depolarizing_closed_forms,
    eve_bound,
    mc_scan,
    optimize_constrained,
    qec_chi_integrand,
    qec_closed_forms,
)
from .channels import (
    BUILTINS,
    KrausChannel,
    builtin,
    channel_from_dict,
    channel_to_dict,
    check_generalized_covariance,
    identity,
    weyl_group,
)
from .densemath import ValidationError
from .states import DensityMatrix
from . import verify

EXIT_FAILED_CHECK = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


class UsageError(Exception):
    pass


# -- parsing ------------------------------------------------------------------------


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"parameter value {text!r} is not a number") from None


def parse_named(text: str) -> tuple[str, dict]:
    """Split ``name:k=v,k=v`` into the name and a parameter dict."""
    name, _, rest = text.partition(":")
    name = name.strip()
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"malformed channel parameter {item!r}; expected key=value")
        params[key.strip()] = _number(val.strip())
    return name, params


def parse_channel_spec(text: str) -> KrausChannel:
    """A named builtin (``depolarizing:lam=0.2``), JSON text, or a path to a JSON file."""
    text = text.strip()
    try:
        if text.startswith("{"):
            return _channel_from_json(text)
        if os.path.isfile(text):
            return _channel_from_json(Path(text).read_text())
        name, params = parse_named(text)
        if name not in BUILTINS:
            raise UsageError(f"unknown channel {name!r}; known: {', '.join(sorted(BUILTINS))}")
        return builtin(name, **params)
    except (ValidationError, ValueError) as exc:
        raise UsageError(f"invalid channel spec: {exc}") from None


def _channel_from_json(text: str) -> KrausChannel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed channel JSON: {exc}") from None
    return channel_from_dict(doc)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step``, including ``stop`` when it lies within half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid {text!r} must look like start:stop:step")
    start, stop, step = (float(_number(p)) for p in parts)
    if step <= 0 or stop < start:
        raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 0.5)) + 1
    return [start + k * step for k in range(count)]


def parse_witness(text: str) -> DensityMatrix:
    """Comma-separated diagonal (``0.5,0.5``) or a JSON matrix of reals or [re, im] pairs."""
    text = text.strip()
    try:
        if text.startswith("["):
            a = np.array(json.loads(text), dtype=float)
            m = a[..., 0] + 1j * a[..., 1] if a.ndim == 3 else a.astype(np.complex128)
        else:
            m = np.diag([float(_number(v)) for v in text.split(",")]).astype(np.complex128)
        return DensityMatrix(m)
    except (ValueError, ValidationError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid witness marginal {text!r}: {exc}") from None


# -- output -------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    if v is None:
        return ""
    return str(v)


def render_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_output(text: str, path: str | None):
    """Write atomically to ``path`` (temp file + rename), or to stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(args, header, rows, extra: dict | None = None) -> str:
    if args.format == "json":
        doc = {"rows": [dict(zip(header, r)) for r in rows]}
        doc.update(extra or {})
        return render_json(doc)
    return render_csv(header, rows)


def sidecar_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(f"{p.stem}.bins{p.suffix or '.csv'}"))


# -- commands -------------------------------------------------------------------------

CAPCURVE_HEADER = ["y", "chi_L_I_closed", "chi_L_I_optimized", "C1", "C_E"]
SCAN_HEADER = ["q", "F"]
BINS_HEADER = ["q_bin", "count", "q_at_max", "F_max", "chi_star", "deviation"]
VERIFY_HEADER = ["name", "instances", "min_slack", "failures", "seed"]
EVE_HEADER = ["value", "feasible", "nearest_miss", "samples_evaluated", "seed", "argmax_params", "constraint_slacks"]


def cmd_capcurve(args) -> int:
    name, params = parse_named(args.channel)
    if name != "erasure":
        raise UsageError("capcurve needs an erasure channel, e.g. erasure:d=2,eps=0.25")
    parse_channel_spec(args.channel)
    d, eps = int(params.get("d", 2)), float(params.get("eps", 0.0))
    if d != 2:
        raise UsageError("capcurve optimises over two-qubit Bell-diagonal states, so d must be 2")
    ys = parse_grid(args.grid)
    top = 2 * log2(d)
    if ys[-1] > top + 1e-9:
        raise UsageError(f"grid exceeds the maximum mutual information {top:g}")
    ys = [min(y, top) for y in ys]
    eps_op = identity(d)
    rows, missing = [], []
    for y in ys:
        forms = qec_closed_forms(eps, d, y)
        res = optimize_constrained(
            lambda st: qec_chi_integrand(eps, d, eps_op, st),
            BellDiagonalFamily(),
            ConstraintSpec((Clause(y, "=", args.tolerance),)),
            args.budget,
            args.seed,
        )
        if not res.feasible:
            missing.append((y, res.nearest_miss))
        rows.append((y, forms.chi_L_I, res.value, forms.C1, forms.C_E))
    write_output(_table(args, CAPCURVE_HEADER, rows), args.out)
    if missing:
        for y, miss in missing:
            print(f"capcurve: no feasible state at y={y:g} (nearest miss {_miss(miss)})", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


def cmd_scan(args) -> int:
    ch = parse_channel_spec(args.channel)
    name, params = parse_named(args.channel) if not args.channel.lstrip().startswith("{") else ("", {})
    eps_op = None
    if args.encoding is not None:
        eps_op = _single_encoding(args.encoding, ch.din)
    records = mc_scan(ch, "ten_param", args.n, args.seed, eps_op=eps_op)
    reference = None
    if name == "depolarizing" and ch.din == 2:
        reference = depolarizing_closed_forms(float(params.get("lam", 0.0))).chi_star
    bins = bin_maxima(records, args.bin_width, reference)
    bin_rows = [(b.q_bin, b.count, b.q_at_max, b.F_max, b.reference, b.deviation) for b in bins]
    if args.format == "json":
        write_output(
            render_json({
                "rows": [dict(zip(SCAN_HEADER, r)) for r in records],
                "bins": [dict(zip(BINS_HEADER, r)) for r in bin_rows],
            }),
            args.out,
        )
        return 0
    write_output(render_csv(SCAN_HEADER, records), args.out)
    bins_out = args.bins or (sidecar_path(args.out) if args.out not in (None, "-") else None)
    if bins_out is not None:
        write_output(render_csv(BINS_HEADER, bin_rows), bins_out)
    return 0


def _single_encoding(name: str, d: int) -> KrausChannel:
    if name == "identity":
        return identity(d)
    if name == "reset":
        return ENCODINGS["reset"](d).entries[0][1]
    raise UsageError(f"scan encoding must be identity or reset, got {name!r}")


def _miss(value) -> str:
    return "none, no samples evaluated" if value is None else f"{value:.6g}"


def cmd_verify(args) -> int:
    lemma_ch = parse_channel_spec(args.channel)
    group = weyl_group(lemma_ch.din)
    checks = {
        "dpi": lambda: verify.check_dpi(args.n, args.seed),
        "superadditivity_I": lambda: verify.check_superadditivity_I(args.n, args.seed),
        "superadditivity_II": lambda: verify.check_superadditivity_II(args.n, args.seed),
        "lemma1": lambda: verify.check_lemma1(lemma_ch, group, args.n, args.seed),
        "subadditivity": lambda: verify.check_subadditivity(args.n, args.seed),
    }
    names = list(checks) if args.all or not args.check else args.check
    for n in names:
        if n not in checks:
            raise UsageError(f"unknown check {n!r}; known: {', '.join(checks)}")
    try:
        reports = [checks[n]() for n in names]
    except verify.HypothesisError as exc:
        raise UsageError(f"lemma1: {exc}") from None
    rows = [(r.name, r.instances, r.min_slack, r.failures, r.seed) for r in reports]
    write_output(_table(args, VERIFY_HEADER, rows), args.out)
    return 0 if all(r.passed for r in reports) else EXIT_FAILED_CHECK


def cmd_info(args) -> int:
    ch = parse_channel_spec(args.channel)
    verdict = check_generalized_covariance(ch, weyl_group(ch.din))
    info = {
        "din": ch.din,
        "dout": ch.dout,
        "kraus_count": len(ch),
        "weyl_covariant": bool(verdict.covariant),
        "covariance_residual": float(verdict.residual),
    }
    if args.format == "json":
        info["channel"] = channel_to_dict(ch)
        write_output(render_json(info), args.out)
    else:
        write_output(render_csv(["key", "value"], info.items()), args.out)
    return 0


def cmd_eve_bound(args) -> int:
    ch = parse_channel_spec(args.channel)
    if args.encoding not in ENCODINGS:
        raise UsageError(f"unknown encoding {args.encoding!r}; known: {', '.join(ENCODINGS)}")
    enc = ENCODINGS[args.encoding](ch.din)
    cons = ConstraintSpec((Clause(args.y, "=", args.tolerance),), parse_witness(args.witness))
    try:
        res = eve_bound(ch, enc, cons, args.budget, args.seed)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    row = (res.value, res.feasible, res.nearest_miss, res.samples_evaluated, res.seed,
           res.argmax_params, res.constraint_slacks)
    if args.format == "json":
        write_output(render_json(res.to_dict()), args.out)
    else:
        write_output(render_csv(EVE_HEADER, [row]), args.out)
    if not res.feasible:
        print(f"eve-bound: no feasible state (nearest miss {_miss(res.nearest_miss)})", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


# -- argument parser ------------------------------------------------------------------


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0.0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def _pos_float(text: str) -> float:
    v = float(text)
    if v <= 0.0:
        raise argparse.ArgumentTypeError(f"{text} must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chancap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=_nonneg_int, required=True)
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("capcurve", help="erasure-channel lines vs I(S:W)")
    sp.add_argument("--channel", required=True)
    sp.add_argument("--grid", default="0:2:0.25")
    sp.add_argument("--budget", type=_nonneg_int, default=5000)
    sp.add_argument("--tolerance", type=_nonneg_float, default=0.02)
    common(sp)
    sp.set_defaults(func=cmd_capcurve)

    sp = sub.add_parser("scan", help="Monte Carlo (q, F) scatter over two-qubit states")
    sp.add_argument("--channel", required=True)
    sp.add_argument("--n", type=_pos_int, default=10_000)
    sp.add_argument("--encoding", default=None, help="identity (default) or reset")
    sp.add_argument("--bin-width", type=_pos_float, default=0.1)
    sp.add_argument("--bins", default=None, help="bin-maxima file (default: <out>.bins.csv)")
    common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="entropy-inequality property checks")
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--check", action="append", default=[])
    sp.add_argument("--n", type=_pos_int, default=200)
    sp.add_argument("--channel", default="depolarizing:lam=0.3", help="channel for lemma1")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("info", help="channel dimensions and covariance verdict")
    sp.add_argument("--channel", required=True)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("eve-bound", help="eavesdropper information bound")
    sp.add_argument("--channel", required=True)
    sp.add_argument("--encoding", default="identity")
    sp.add_argument("--y", type=_nonneg_float, required=True, help="target I(S:W) in bits")
    sp.add_argument("--tolerance", type=_nonneg_float, default=0.02)
    sp.add_argument("--witness", default="0.5,0.5", help="fixed witness marginal")
    sp.add_argument("--budget", type=_nonneg_int, default=2000)
    common(sp)
    sp.set_defaults(func=cmd_eve_bound)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"chancap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"chancap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
