"""Command-line front end.

Subcommands::

    synth   --scene s.json --out DIR [--seed S]
    process --bundle DIR [--bundle DIR ...] --out params.csv [--pdp-csv F] [--aps-csv F]
    fit     --params params.csv --out model.json [--n-bins 5] [--method ols|weighted]
    sample  --model model.json --distances 20:5:85 --n 1000 --seed S --out links.csv
    report  --params params.csv --model model.json --out DIR

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bundle import BundleError, load_bundle, write_bundle
from .campaign import (LINKS_COLUMNS, atomic_write_text, csv_text, fit_model, read_params_csv, write_params_csv,
                       write_report)
from .condensed import CondenseOptions, condense_location
from .directional import marginal_aps
from .pdp import NoSignalError, PdpOptions
from .statmodel import CONDITIONS, MODES, VIEWS, load_model, sample_links
from .synth import SceneSpec, synthesize_bundle

log = logging.getLogger("canyon_sounder")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
THREADS_ENV = "CANYON_SOUNDER_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_distances(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--distances: cannot parse {text!r}; use start:step:stop or a comma list") from None


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None


def _pdp_options(args, base: PdpOptions) -> PdpOptions:
    kw = {}
    if args.tau_gate_ns is not None:
        kw["tau_gate_s"] = args.tau_gate_ns * 1e-9
    if args.noise_margin_db is not None:
        kw["noise_margin_db"] = args.noise_margin_db
    if args.dynamic_range_db is not None:
        kw["dynamic_range_db"] = args.dynamic_range_db
    return PdpOptions(**{**base.__dict__, **kw})


def cmd_synth(args) -> int:
    raw = json.loads(Path(args.scene).read_text())
    if args.seed is None and "seed" not in raw:
        raise UsageError("synth: seed required (scene 'seed' field or --seed)")
    if args.seed is not None:
        raw["seed"] = args.seed
    scene = SceneSpec.from_dict(raw)
    write_bundle(synthesize_bundle(scene), args.out)
    log.info("wrote bundle %s", args.out)
    return EXIT_OK


def cmd_process(args) -> int:
    if Path(args.out).resolve() in {Path(b).resolve() for b in args.bundle}:
        raise UsageError("process: --out must differ from the bundle paths")
    base = CondenseOptions()
    opts = CondenseOptions(pl=_pdp_options(args, base.pl), shape=_pdp_options(args, base.shape),
                           omni_per_bin=not args.omni_whole_pdp)

    def one(path):
        bundle = load_bundle(path)
        return condense_location(bundle, opts, location_id=bundle.label or Path(path).name)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(args.bundle))) as pool:
        results = list(pool.map(one, args.bundle))
    params = [p for r in results for p in (r.omni, r.max_dir)]
    write_params_csv(args.out, params)
    if args.pdp_csv:
        rows = []
        for r in results:
            for name, pdp in r.pdps.items():
                profile, view = name.split("_", 1)
                rows += [[r.omni.location_id, view, profile, float(t * 1e9), float(p)]
                         for t, p in zip(pdp.delay_axis_s, pdp.power_lin)]
        atomic_write_text(args.pdp_csv, csv_text(["location_id", "view", "profile", "delay_ns", "power_lin"], rows))
    if args.aps_csv:
        rows = []
        for r in results:
            dd = r.ddaps
            for i, a_tx in enumerate(dd.tx_az_deg):
                for j, a_rx in enumerate(dd.rx_az_deg):
                    rows.append([r.omni.location_id, "ddaps", float(a_tx), float(a_rx), float(dd.power_lin[i, j])])
            for end in ("Tx", "Rx"):
                aps = marginal_aps(dd, end)
                for a, p in zip(aps.az_deg, aps.power_lin):
                    rows.append([r.omni.location_id, f"aps_{end.lower()}", float(a) if end == "Tx" else "",
                                 float(a) if end == "Rx" else "", float(p)])
        atomic_write_text(args.aps_csv, csv_text(["location_id", "kind", "tx_az_deg", "rx_az_deg", "power_lin"], rows))
    log.info("processed %d bundle(s) -> %s", len(results), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.n_bins < 1:
        raise UsageError("--n-bins: must be >= 1")
    params = read_params_csv(args.params)
    model = fit_model(params, n_bins=args.n_bins, method=args.method, provenance=f"fitted from {Path(args.params).name}")
    atomic_write_text(args.out, json.dumps(model, indent=2) + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n: must be >= 1")
    if args.mode not in MODES:
        raise UsageError(f"--mode: expected one of {MODES}")
    distances = parse_distances(args.distances)
    if not distances or any(d <= 0 for d in distances):
        raise UsageError("--distances: all distances must be positive")
    model = load_model(args.model)
    conds = [args.condition] if args.condition else list(CONDITIONS)
    views = [args.view] if args.view else list(VIEWS)
    per_link = [d for d in distances for _ in range(args.n)]
    rows = []
    stream = 0
    for cond in conds:
        for view in views:
            batch = sample_links(model, per_link, cond, view, args.mode, args.seed, stream=stream)
            if batch.n_clamped:
                log.warning("%s/%s: %d angular-spread draws clamped below sqrt(2)", cond, view, batch.n_clamped)
            rows += [[lk.d_m, cond, view, lk.pl_db, lk.shadow_db, lk.ds_s * 1e9, lk.as_tx, lk.as_rx, lk.k1_db,
                      ":".join(map(str, lk.seed_record))] for lk in batch]
            stream += 1
    atomic_write_text(args.out, csv_text(LINKS_COLUMNS, rows))
    return EXIT_OK


def cmd_report(args) -> int:
    params = read_params_csv(args.params)
    model = load_model(args.model)
    written = write_report(params, model, args.out)
    log.info("wrote %d report files to %s", len(written), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="canyon-sounder", description="THz double-directional channel processing and modeling")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("synth", help="render a scene JSON into a bundle directory")
    s.add_argument("--scene", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("process", help="condense bundles into a parameter table")
    s.add_argument("--bundle", required=True, action="append")
    s.add_argument("--out", required=True)
    s.add_argument("--pdp-csv")
    s.add_argument("--aps-csv")
    s.add_argument("--tau-gate-ns", type=float)
    s.add_argument("--noise-margin-db", type=float)
    s.add_argument("--dynamic-range-db", type=float)
    s.add_argument("--omni-whole-pdp", action="store_true", help="pick one azimuth pair instead of per-bin maxima")
    s.set_defaults(func=cmd_process)

    s = sub.add_parser("fit", help="fit a channel model from a parameter table")
    s.add_argument("--params", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--n-bins", type=int, default=5)
    s.add_argument("--method", choices=("weighted", "ols"), default="weighted")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("sample", help="draw synthetic links from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--distances", required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", default="static")
    s.add_argument("--condition", choices=CONDITIONS)
    s.add_argument("--view", choices=VIEWS)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("report", help="emit ECDF and regression CSVs")
    s.add_argument("--params", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BundleError, NoSignalError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
