"""Command-line front end.

    secrecykit metric    --config scenario.json
    secrecykit mc        --config scenario.json [--draws N]
    secrecykit sweep     --config sweep.json --out curve.csv [--verify mc:SEED:N]
    secrecykit fit-mog   --samples snr.txt --components 6
    secrecykit mg-build  --config channel.json --components 20
    secrecykit foxh-eval --config foxh.json

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .backends import evaluate_point, make_fitter
from .config import ChannelConfig, FoxHEvalConfig, ScenarioConfig, SweepConfig
from .errors import SecrecyError, SpecError
from .foxh import ContourPlan, fox_h, foxh_cdf, foxh_pdf, foxh_sf
from .mixtures import ecdf_mse, fit_mog, mg_from_channel, select_mog_components

log = logging.getLogger("secrecykit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    pass


# ------------------------------------------------------------------ config I/O


def _read_json(path):
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _format_validation(path, exc: ValidationError):
    lines = [f"{path}: {exc.error_count()} invalid field(s)"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        lines.append(f"  {loc}: {msg}")
    return "\n".join(lines)


def _load(model, path):
    data = _read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(path, exc)) from None


def _with_overrides(cfg, args):
    update = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.tol is not None:
        update["quadrature"] = cfg.quadrature.model_copy(update={"rel_tol": args.tol})
    return cfg.model_copy(update=update) if update else cfg


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json_line(obj):
    return json.dumps(obj) + "\n"


# ------------------------------------------------------------------ commands


def cmd_metric(args):
    cfg = _with_overrides(_load(ScenarioConfig, args.config), args)
    backend = args.backend or cfg.backend
    res = evaluate_point(cfg, backend=backend)
    record = {"metric": cfg.metric, "value": res.value, "backend": backend,
              "rate_threshold": cfg.rate_threshold}
    if res.std_error is not None:
        record["std_error"] = res.std_error
        record["draws"] = cfg.mc.draws
        record["seed"] = cfg.seed
    if res.error_estimate is not None:
        record["error_estimate"] = res.error_estimate
    if res.clamp_defect:
        record["clamp_defect"] = res.clamp_defect
    _emit(_json_line(record), args.out)
    return EXIT_OK


def cmd_mc(args):
    cfg = _with_overrides(_load(ScenarioConfig, args.config), args)
    draws = args.draws or cfg.mc.draws
    if draws < 1000:
        raise ConfigError("--draws must be at least 1000")
    res = evaluate_point(cfg, backend="mc", draws=draws)
    _emit(_json_line({"metric": cfg.metric, "value": res.value, "std_error": res.std_error,
                      "draws": draws, "seed": cfg.seed, "backend": "mc",
                      "rate_threshold": cfg.rate_threshold}), args.out)
    return EXIT_OK


def _parse_verify(text):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "mc":
        raise ConfigError(f"--verify expects mc:SEED:N, got {text!r}")
    try:
        seed, draws = int(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--verify expects integer SEED and N, got {text!r}") from None
    if seed < 0 or draws < 1000:
        raise ConfigError("--verify needs SEED >= 0 and N >= 1000")
    return seed, draws


def _fmt(x):
    return "" if x is None else repr(float(x))


def run_sweep(cfg: SweepConfig, verify=None, workers=1):
    """Rows (ratio_db, PointResult or exception, oracle or None) in grid order."""
    grid = cfg.sweep.grid()
    fitter = make_fitter(cfg) if cfg.backend == "mog" else None

    def point(main_db):
        try:
            res = evaluate_point(cfg, main_db=main_db, fitter=fitter)
        except SecrecyError as exc:
            res = exc
        oracle = None
        if verify is not None:
            seed, draws = verify
            oracle = evaluate_point(cfg, main_db=main_db, backend="mc", draws=draws, seed=seed)
        return res, oracle

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, grid))
    else:
        results = [point(x) for x in grid]
    wiretap_db = cfg.wiretap.mean_snr_db
    return [(round(db - wiretap_db, 10), res, oracle) for db, (res, oracle) in zip(grid, results)]


def sweep_csv(cfg: SweepConfig, rows, verify=None) -> tuple[str, list[str]]:
    with_se = cfg.backend == "mc"
    header = ["ratio_db", "value"] + (["std_error"] if with_se else [])
    if verify is not None:
        header += ["mc_value", "mc_std_error", "verify_pass"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    failures = []
    for ratio, res, oracle in rows:
        row = [_fmt(ratio)]
        if isinstance(res, Exception):
            failures.append(f"ratio_db={ratio!r}: {res}")
            row += [""] + ([""] if with_se else [])
            value = None
        else:
            row.append(_fmt(res.value))
            if with_se:
                row.append(_fmt(res.std_error))
            value = res.value
        if verify is not None:
            ok = value is not None and abs(value - oracle.value) <= 3.0 * oracle.std_error
            row += [_fmt(oracle.value), _fmt(oracle.std_error), "pass" if ok else "fail"]
        writer.writerow(row)
    return buf.getvalue(), failures


def cmd_sweep(args):
    cfg = _with_overrides(_load(SweepConfig, args.config), args)
    verify = _parse_verify(args.verify) if args.verify else None
    rows = run_sweep(cfg, verify, args.workers)
    text, failures = sweep_csv(cfg, rows, verify)
    _emit(text, args.out)
    if failures:
        raise NumericFailure(f"{len(failures)} of {len(rows)} sweep points failed:\n  "
                             + "\n  ".join(failures))
    if verify is not None:
        bad = sum(1 for line in text.splitlines()[1:] if line.endswith(",fail"))
        if bad:
            log.warning("%d of %d points outside 3 standard errors of the Monte Carlo oracle",
                        bad, len(rows))
    return EXIT_OK


def _read_samples(path):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read samples {path}: {exc.strerror or exc}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: not a number: {line!r}") from None
    samples = np.array(values)
    if samples.size == 0 or np.any(samples < 0) or not np.all(np.isfinite(samples)):
        raise ConfigError(f"{path}: samples must be non-empty finite non-negative SNRs")
    return samples


def cmd_fit_mog(args):
    opts = {}
    if args.config is not None:
        opts = _read_json(args.config)
        allowed = {"components", "max_iter", "tol", "seed"}
        extra = sorted(set(opts) - allowed)
        if extra:
            raise ConfigError(f"{args.config}: unknown field(s) {extra}; allowed {sorted(allowed)}")
    samples = _read_samples(args.samples)
    seed = args.seed if args.seed is not None else int(opts.get("seed", 0))
    tol = args.tol if args.tol is not None else float(opts.get("tol", 1e-6))
    max_iter = args.max_iter or int(opts.get("max_iter", 500))
    components = args.components or opts.get("components")
    try:
        if components in (None, "auto"):
            model = select_mog_components(samples, seed=seed, max_iter=max_iter, tol=tol)
        else:
            model = fit_mog(samples, int(components), seed=seed, max_iter=max_iter, tol=tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    obj = model.to_json()
    obj["metadata"].pop("log_likelihood_trace", None)
    obj["metadata"]["cdf_mse"] = ecdf_mse(model, samples)
    _emit(json.dumps(obj, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_mg_build(args):
    spec = _load(ChannelConfig, args.config).to_spec()
    model = mg_from_channel(spec, args.components)
    _emit(json.dumps(model.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_foxh_eval(args):
    cfg = _load(FoxHEvalConfig, args.config)
    params = cfg.fox_h_params()
    plan = ContourPlan(rtol=args.tol) if args.tol is not None else None
    x = np.array(cfg.x)
    record = {"kind": cfg.kind, "x": cfg.x, "params": params.to_json()}
    if cfg.kind == "h":
        values, errors = fox_h(params, x, plan, full_output=True)
        record["value"] = np.atleast_1d(values).tolist()
        record["error_estimate"] = np.atleast_1d(errors).tolist()
    else:
        fn = {"pdf": foxh_pdf, "cdf": foxh_cdf, "sf": foxh_sf}[cfg.kind]
        record["value"] = np.atleast_1d(fn(params, x, plan)).tolist()
    _emit(_json_line(record), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file ('-' for stdin)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--tol", type=float,
                        help="relative tolerance (quadrature, EM or contour, per command)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="secrecykit",
                                     description="Physical-layer secrecy metrics over fading channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", parents=[common], help="evaluate one metric, print JSON")
    p.add_argument("--backend", choices=["analytic", "mg", "mog", "foxh", "mc"],
                   help="override the configured backend")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate with standard error")
    p.add_argument("--draws", type=int, help="number of (main, wiretap) pairs")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("sweep", parents=[common], help="metric versus main/wiretap SNR ratio as CSV")
    p.add_argument("--verify", metavar="mc:SEED:N",
                   help="append Monte Carlo oracle columns and a 3-sigma pass flag")
    p.add_argument("--workers", type=int, default=1, help="grid points evaluated concurrently")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit-mog", parents=[common], help="fit a MoG model to SNR samples")
    p.add_argument("--samples", required=True, help="newline-delimited SNR samples ('-' for stdin)")
    p.add_argument("--components", help="component count, or 'auto' to grow until CDF-MSE < 1e-4")
    p.add_argument("--max-iter", type=int, help="EM iteration cap")
    p.set_defaults(func=cmd_fit_mog)

    p = sub.add_parser("mg-build", parents=[common], help="Mixture Gamma model of a channel")
    p.add_argument("--components", type=int, default=20, help="component budget L")
    p.set_defaults(func=cmd_mg_build)

    p = sub.add_parser("foxh-eval", parents=[common], help="evaluate a Fox H function or density")
    p.set_defaults(func=cmd_foxh_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SecrecyError as exc:
        detail = ""
        if getattr(exc, "estimate", None) is not None:
            detail = f" (estimate {exc.estimate!r}, error bound {exc.bound!r})"
        print(f"numeric error: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
