"""Command-line front end.

Exit codes: 0 success, 1 an inequality failed, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import any_failed, verify_all
from .corpus import corpus_specs
from .density import RelativeDensity, from_spec, spec_hash
from .errors import (LSDeficitError, PreconditionError, SpecError, ToleranceExceededError,
                     UnsupportedFamilyError)
from .functionals import deficit, deficit_integrand, deficit_via_mmse, fisher_at, rho
from .numerics import QuadratureConfig
from .stein import (d_lower_bound, dtilde_lower_bound, stein_discrepancy,
                    stein_discrepancy_available)
from .transport import w2, w2_available, w2_flow

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_TIMES = (0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    return json.dumps(str(obj))


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; non-finite floats become null."""
    return _encode(obj, indent, 0) + "\n"


def _config(args) -> QuadratureConfig:
    return QuadratureConfig(gh_order=args.gh_order, gh_order_2d=args.gh_order_2d, tol=args.tol,
                            mc_samples=args.mc_samples, seed=args.seed,
                            time_split=args.time_split, time_max=args.time_max)


def _config_echo(cfg: QuadratureConfig, threads) -> dict:
    return {"gh_order": cfg.gh_order, "gh_order_2d": cfg.gh_order_2d, "tol": cfg.tol,
            "mc_samples": cfg.mc_samples, "seed": cfg.seed, "time_split": cfg.time_split,
            "time_max": cfg.time_max, "threads": threads}


def _load(path) -> tuple[dict, RelativeDensity]:
    try:
        spec = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from exc
    return spec, from_spec(spec)


def _header(spec, cfg, args) -> dict:
    return {"tool": "lsdeficit", "version": __version__, "spec_hash": spec_hash(spec),
            "config": _config_echo(cfg, args.threads)}


def _optional(fn):
    try:
        return fn(), None
    except (UnsupportedFamilyError, PreconditionError) as exc:
        return None, str(exc)


def analyze(d: RelativeDensity, cfg: QuadratureConfig) -> dict:
    rep = deficit(d, cfg)
    notes = {}
    mmse, why = _optional(lambda: deficit_via_mmse(d, cfg=cfg))
    if why:
        notes["deficit_via_mmse"] = why
    s = None
    if stein_discrepancy_available(d):
        s = stein_discrepancy(d, cfg)
    else:
        notes["stein_discrepancy"] = "needs a centered 1-D law or a centered Gaussian"
    w = w2(d, cfg) if w2_available(d) else None
    if w is None:
        notes["w2"] = "available in dimension one and for Gaussians"
    dest = d_lower_bound(d, cfg=cfg)
    dtil, why = _optional(lambda: dtilde_lower_bound(d, cfg=cfg))
    if why:
        notes["dtilde_est"] = why
    return {
        "functionals": {"H": rep.H, "I": rep.I, "deficit": rep.deficit,
                        "deficit_via_mmse": None if mmse is None else mmse.value,
                        "error_budget": {**rep.error_budget,
                                         "deficit_via_mmse": None if mmse is None else mmse.error}},
        "stein_discrepancy": None if s is None else {"value": s.value, "error": s.error},
        "w2": None if w is None else {"value": w.value, "method": w.method, "error": w.error},
        "d_est": dest.to_json(),
        "dtilde_est": None if dtil is None else dtil.to_json(),
        "notes": notes,
    }


def cmd_analyze(args) -> int:
    cfg = _config(args)
    spec, d = _load(args.spec)
    report = {**_header(spec, cfg, args), **analyze(d, cfg)}
    _emit(dumps(report), args.out)
    return EXIT_OK


def _verify_one(path, cfg, args) -> tuple[dict, bool]:
    spec, d = _load(path)
    reports = verify_all(d, cfg, threads=args.threads)
    failed = any_failed(reports)
    return {**_header(spec, cfg, args), "reports": [r.to_json() for r in reports],
            "failed": failed}, failed


def cmd_verify(args) -> int:
    cfg = _config(args)
    src = Path(args.spec)
    if src.is_dir():
        if not args.out:
            raise SpecError("--out DIR is required when verifying a directory")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        failed = False
        for path in sorted(src.glob("*.json")):
            report, bad = _verify_one(path, cfg, args)
            (out / f"{path.stem}.report.json").write_text(dumps(report))
            failed |= bad
        return EXIT_FAIL if failed else EXIT_OK
    report, failed = _verify_one(src, cfg, args)
    _emit(dumps(report), args.out)
    return EXIT_FAIL if failed else EXIT_OK


def flow_rows(d: RelativeDensity, times, cfg: QuadratureConfig):
    """Rows of ``t, I(P_t f), e^{2t} I(P_t f), rho(t), w(t), deficit integrand``; None marks n/a."""
    centered = d.is_centered()
    one_d = d.dim == 1 and d.is_mixture
    ws = dict(w2_flow(d, times, cfg)) if one_d else {}
    rows = []
    for t in times:
        it = fisher_at(d, t, cfg).value
        if centered:
            r = (float(np.linalg.eigvalsh(d.covariance)[-1]) if t == 0.0
                 else rho(d, t, cfg).value)
        rows.append([t, it, math.exp(2.0 * t) * it if centered else None,
                     r if centered else None, ws.get(float(t)),
                     deficit_integrand(d, t, cfg)])
    return rows


def cmd_flow(args) -> int:
    cfg = _config(args)
    spec, d = _load(args.spec)
    if not d.is_mixture:
        raise SpecError("flow diagnostics need a Gaussian-mixture spec")
    times = DEFAULT_TIMES if args.times is None else args.times
    if any(t < 0 or not math.isfinite(t) for t in times):
        raise SpecError("times must be finite and nonnegative")
    rows = flow_rows(d, times, cfg)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(stream)
        writer.writerow(["t", "fisher", "scaled_fisher", "rho", "w", "deficit_integrand"])
        for row in rows:
            writer.writerow(["" if v is None else format(float(v), ".12g") for v in row])
    finally:
        if args.out:
            stream.close()
    return EXIT_OK


def cmd_corpus(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in corpus_specs().items():
        (out / f"{name}.json").write_text(dumps(spec))
    return EXIT_OK


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _times(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="adaptive quadrature tolerance")
    common.add_argument("--gh-order", type=int, default=128, help="Gauss-Hermite order in 1-D")
    common.add_argument("--gh-order-2d", type=int, default=64,
                        help="Gauss-Hermite order per axis in 2-D")
    common.add_argument("--time-split", type=float, default=0.05)
    common.add_argument("--time-max", type=float, default=12.0)
    common.add_argument("--mc-samples", type=int, default=1_000_000,
                        help="Monte Carlo samples in dimension >= 3")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap for the check suite")
    common.add_argument("--out", default=None, help="output file (directory for batch verify)")

    parser = argparse.ArgumentParser(
        prog="lsdeficit",
        description="Gaussian log-Sobolev deficit, Stein functionals and inequality checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="H, I, deficit, S, W2, D and D~ estimates")
    p.add_argument("spec")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", parents=[common], help="run the inequality catalog")
    p.add_argument("spec", help="density spec JSON or a directory of specs")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("flow", parents=[common], help="CSV of diagnostics along the OU flow")
    p.add_argument("spec")
    p.add_argument("--times", type=_times, default=None, help="comma-separated times")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("corpus", help="write the reference density specs")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "tol"):
            _config(args)
        return args.func(args)
    except (SpecError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ToleranceExceededError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LSDeficitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
