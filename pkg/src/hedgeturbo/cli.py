"""Command-line Monte Carlo driver.

Examples::

    hedgeturbo --scenario single:1.4 --gsnr-db 8,9,10 --blocks 10000 --out runs/a14
    hedgeturbo --scenario mixture:1.4,1.6 --method proposed,mixture-oracle --out runs/mix
    hedgeturbo --scenario single:1.5 --tau 500,1000,1500 --blocks 20000 --out runs/tab
    hedgeturbo --manifest runs/a14/manifest.txt --out runs/a14-replay
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .expert_bank import DEFAULT_ALPHAS
from .harness import (
    ChannelScenario,
    derived_seed,
    emit_reports,
    make_pool,
    run_baseline,
    run_beta_sweep,
    run_early_stop_table,
    run_proposed,
)
from .stable_noise import sas_density
from .turbo_codec import PUNCTURE_PATTERNS, RSC_PRESETS, TurboCodeConfig

logger = logging.getLogger("hedgeturbo")

METHODS = ("proposed", "gaussian", "cauchy", "mebcgm", "mixture-oracle")

# options echoed into (and restorable from) the manifest, by dest name
_MANIFEST_KEYS = (
    "scenario", "gsnr_db", "blocks", "seed", "beta", "init_weight", "tau", "iters", "rate", "k",
    "rsc", "pool", "pool_scale", "loss", "method", "strength", "interleaver_seed", "target_errors",
    "max_blocks", "chunk",
)


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hedgeturbo",
        description="Turbo decoding over SaS noise with a Hedge-combined bank of decoder pairs.",
    )
    p.add_argument("--scenario", default="single:1.4", help="single:ALPHA | mixture:A1,A2[,W1,W2]")
    p.add_argument("--gsnr-db", default="8,9,10,11,12", help="comma-separated GSNR points in dB")
    p.add_argument("--blocks", type=int, default=10000,
                   help="blocks per run (minimum block count for baselines)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", default="0.9", help="Hedge beta; several values run a paired sweep")
    p.add_argument("--init-weight", type=float, default=1.0)
    p.add_argument("--tau", default="", help="freeze step(s); several values build an early-stop table")
    p.add_argument("--iters", type=int, default=8)
    p.add_argument("--rate", default="4/5", choices=sorted(PUNCTURE_PATTERNS))
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--rsc", default="m2", choices=sorted(RSC_PRESETS),
                   help="constituent code: m2 (1+D+D^2 / 1+D^2) or m3 (constraint length 4)")
    p.add_argument("--pool", default="default", help="'default' or a comma-separated alpha list")
    p.add_argument("--pool-scale", default="true", choices=("true", "gsnr"),
                   help="experts share the channel dispersion, or derive it from the GSNR")
    p.add_argument("--loss", default="genie", choices=("genie", "crc"))
    p.add_argument("--method", default="proposed", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--strength", default="geometric-power", choices=("geometric-power", "dispersion"),
                   help="how mixture components are scaled at a GSNR")
    p.add_argument("--interleaver-seed", type=int, default=None,
                   help="defaults to a value derived from --seed")
    p.add_argument("--target-errors", type=int, default=50, help="baseline block-error target")
    p.add_argument("--max-blocks", type=int, default=None, help="baseline block cap")
    p.add_argument("--chunk", type=int, default=200, help="blocks decoded per batch")
    p.add_argument("--out", default="hedgeturbo-out")
    p.add_argument("--manifest", default=None, help="re-run the configuration stored in a manifest")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def read_manifest(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, _, value = line.partition("=")
                if key in _MANIFEST_KEYS:
                    values[key] = value
    except OSError as exc:
        raise SystemExit(f"cannot read manifest {path}: {exc}")
    if values.get("max_blocks") in ("", "None"):
        values["max_blocks"] = None
    for key in ("blocks", "seed", "iters", "k", "interleaver_seed", "target_errors", "chunk", "max_blocks"):
        if values.get(key) not in (None, ""):
            values[key] = int(values[key])
    if "init_weight" in values:
        values["init_weight"] = float(values["init_weight"])
    return values


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.manifest:
        parser.set_defaults(**read_manifest(args.manifest))
        args = parser.parse_args(argv)
    return args


def _pool_alphas(text: str):
    return DEFAULT_ALPHAS if text == "default" else tuple(_floats(text))


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s")
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise SystemExit(f"unknown method(s) {bad}; choose from {METHODS}")
    betas = _floats(args.beta)
    taus = _ints(args.tau)
    gsnrs = _floats(args.gsnr_db)
    alphas = _pool_alphas(args.pool)
    if args.interleaver_seed is None:
        args.interleaver_seed = derived_seed(args.seed, "interleaver")
    try:
        base = ChannelScenario.parse(args.scenario, seed=args.seed, strength=args.strength)
        cfg = TurboCodeConfig.from_rate(args.rate, args.rsc, k=args.k,
                                        interleaver_seed=args.interleaver_seed)
        if any(not 0 < b <= 1 for b in betas) or not betas:
            raise ValueError("--beta values must lie in (0, 1]")
        if any(t < 1 or t > args.blocks for t in taus):
            raise ValueError("--tau values must lie in [1, --blocks]")
        if "mixture-oracle" in methods and base.kind != "mixture":
            raise ValueError("mixture-oracle needs a mixture scenario")
        if "mebcgm" in methods and base.kind == "mixture":
            raise ValueError("use mixture-oracle for the known-channel baseline on a mixture")
        if args.blocks < 1:
            raise ValueError("--blocks must be >= 1")
    except ValueError as exc:
        raise SystemExit(f"configuration error: {exc}")

    t0 = time.perf_counter()
    reports, table = [], []
    for g in gsnrs:
        sc = base.with_gsnr(g)
        pool = make_pool(sc, alphas, args.iters, args.pool_scale)
        if "proposed" in methods:
            if len(taus) > 1:
                table += run_early_stop_table([sc], cfg, lambda s: pool, taus, args.blocks, betas[0],
                                              args.init_weight, args.loss, args.chunk)
            elif len(betas) > 1:
                reports += run_beta_sweep(sc, cfg, pool, betas, args.blocks, args.init_weight,
                                          args.loss, args.chunk)
            else:
                reports.append(run_proposed(sc, cfg, pool, betas[0], args.init_weight,
                                            taus[0] if taus else None, args.blocks, args.loss,
                                            args.chunk))
        gamma = float(np.dot(sc.weights, sc.dispersions()))
        fixed = {
            "gaussian": lambda: sas_density(2.0, gamma),
            "cauchy": lambda: sas_density(1.0, gamma),
            "mebcgm": sc.oracle_density,
            "mixture-oracle": sc.oracle_density,
        }
        for m in methods:
            if m == "proposed":
                continue
            reports.append(run_baseline(sc, cfg, fixed[m](), m, args.blocks, args.target_errors,
                                        args.max_blocks, args.iters, args.chunk))
        for r in reports:
            if r.scenario.gsnr_db == g:
                for name, st in r.stats.items():
                    if not name.startswith("expert:"):
                        logger.info("gsnr=%g dB %-24s blocks=%d bler=%.4g ber=%.4g",
                                    g, name, st.blocks, st.bler, st.ber)

    manifest = {key: getattr(args, key) for key in _MANIFEST_KEYS}
    manifest["max_blocks"] = "" if args.max_blocks is None else args.max_blocks
    manifest["version"] = __version__
    manifest["n"] = cfg.n
    manifest["wall_clock_s"] = f"{time.perf_counter() - t0:.1f}"
    paths = emit_reports(reports, args.out, manifest, table or None)
    for name, path in paths.items():
        logger.info("wrote %s: %s", name, path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
