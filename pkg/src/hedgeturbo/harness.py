"""Monte Carlo link simulation: proposed Hedge decoder, fixed-density
baselines, beta sweeps and early-stopping tables.

Every block draws its data bits and noise from its own stream, seeded by
``(master seed, role, block index)``. Two runs with the same seed therefore
see identical realizations whatever method, chunk size or block count they
use, which makes all method comparisons paired.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .expert_bank import DEFAULT_ALPHAS, Expert, ExpertPool, decode_all, default_pool, pool_for_gsnr
from .online_combiner import HedgePolicy, init_state
from .stable_noise import (
    AlphaStableParams,
    GsnrSpec,
    MixtureDensity,
    _standard_sas,
    gsnr_to_dispersion,
    sas_density,
)
from .turbo_codec import TurboCodeConfig, turbo_encode_batch

__all__ = [
    "ChannelScenario",
    "MethodStats",
    "RunReport",
    "block_rng",
    "run_proposed",
    "run_baseline",
    "run_beta_sweep",
    "run_early_stop_table",
    "simulate",
    "make_pool",
    "dual_stopping_rule",
    "emit_reports",
    "BLER_HEADER",
]

logger = logging.getLogger(__name__)

BLER_HEADER = ["method", "alpha_true", "gsnr_db", "blocks", "block_errors", "bler", "bit_errors", "ber"]

def block_rng(seed: int, role: str, index: int = 0) -> np.random.Generator:
    """Independent stream for ``role`` (``"data"``, ``"noise"``) of block ``index``."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(role.encode()), index]))


def derived_seed(seed: int, role: str) -> int:
    """Integer seed for a per-run role such as ``"interleaver"``."""
    return int(np.random.SeedSequence([seed, zlib.crc32(role.encode())]).generate_state(1)[0])


@dataclass(frozen=True)
class ChannelScenario:
    """SaS channel, single exponent or a mixture of exponents.

    ``strength`` fixes how mixture components are scaled at a GSNR:
    ``"geometric-power"`` gives each component the dispersion its own
    exponent implies at ``gsnr_db``; ``"dispersion"`` gives all components
    the dispersion implied at the weight-averaged exponent.
    """

    alphas: tuple = (1.4,)
    weights: tuple = (1.0,)
    gsnr_db: float = 10.0
    amplitude: float = 1.0
    seed: int = 0
    strength: str = "geometric-power"

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        weights = tuple(float(w) for w in self.weights)
        if len(alphas) != len(weights) or not alphas:
            raise ValueError("need one weight per exponent")
        if any(not 0.0 < a <= 2.0 for a in alphas):
            raise ValueError(f"alphas must lie in (0, 2], got {alphas}")
        if any(w <= 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be positive and sum to 1")
        if self.strength not in ("geometric-power", "dispersion"):
            raise ValueError(f"unknown mixture strength convention {self.strength!r}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def parse(cls, text: str, **kwargs) -> "ChannelScenario":
        """``single:ALPHA`` or ``mixture:A1,A2[,W1,W2]`` (equal weights by default)."""
        kind, _, rest = text.partition(":")
        values = [float(v) for v in rest.split(",") if v.strip()]
        if kind == "single" and len(values) == 1:
            return cls((values[0],), (1.0,), **kwargs)
        if kind == "mixture" and len(values) in (2, 4):
            alphas = values[:2]
            w = values[2:] or [1.0, 1.0]
            total = sum(w)
            return cls(tuple(alphas), tuple(x / total for x in w), **kwargs)
        raise ValueError(f"cannot parse scenario {text!r}")

    @property
    def kind(self) -> str:
        return "single" if len(self.alphas) == 1 else "mixture"

    @property
    def label(self) -> str:
        if self.kind == "single":
            return f"{self.alphas[0]:g}"
        return "mix(" + "+".join(f"{a:g}@{w:g}" for a, w in zip(self.alphas, self.weights)) + ")"

    def spec_text(self) -> str:
        if self.kind == "single":
            return f"single:{self.alphas[0]:g}"
        return "mixture:" + ",".join(f"{v:g}" for v in self.alphas + self.weights)

    @property
    def gsnr(self) -> GsnrSpec:
        return GsnrSpec(self.gsnr_db, self.amplitude)

    def dispersions(self) -> tuple:
        if self.strength == "dispersion":
            mean_alpha = float(np.dot(self.alphas, self.weights))
            g = gsnr_to_dispersion(self.gsnr, mean_alpha)
            return tuple(g for _ in self.alphas)
        return tuple(gsnr_to_dispersion(self.gsnr, a) for a in self.alphas)

    def with_gsnr(self, gsnr_db: float) -> "ChannelScenario":
        return ChannelScenario(self.alphas, self.weights, gsnr_db, self.amplitude, self.seed, self.strength)

    def noise(self, index: int, n: int) -> np.ndarray:
        """Noise samples of block ``index``; identical across GSNR points up to scale."""
        rng = block_rng(self.seed, "noise", index)
        if self.kind == "single":
            a, g = self.alphas[0], self.dispersions()[0]
            return AlphaStableParams(a, g).scale * _standard_sas(a, n, rng)
        pick = rng.random(n)
        comp = np.searchsorted(np.cumsum(self.weights)[:-1], pick, side="right")
        z = np.empty(n)
        for i, (a, g) in enumerate(zip(self.alphas, self.dispersions())):
            draw = AlphaStableParams(a, g).scale * _standard_sas(a, n, rng)
            z[comp == i] = draw[comp == i]
        return z

    def oracle_density(self, rule: str = "mebcgm"):
        """Decoding density that knows the channel: ME-BCGM at the true exponent,
        or the matching mixture of ME-BCGM densities."""
        dens = [sas_density(a, g, rule) for a, g in zip(self.alphas, self.dispersions())]
        if self.kind == "single":
            return dens[0]
        return MixtureDensity(tuple(zip(self.weights, dens)))


@dataclass
class MethodStats:
    method: str
    blocks: int = 0
    block_errors: int = 0
    bit_errors: int = 0
    bits: int = 0

    def add(self, errors: int, k: int):
        self.blocks += 1
        self.bits += k
        self.bit_errors += int(errors)
        self.block_errors += int(errors > 0)

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else math.nan

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else math.nan


@dataclass
class RunReport:
    scenario: ChannelScenario
    stats: dict
    expert_labels: list = field(default_factory=list)
    weight_trace: Optional[np.ndarray] = None
    early_stop: Optional[dict] = None
    config: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def __post_init__(self):
        for s in self.stats.values():
            if s.blocks and s.bler < s.ber:
                raise AssertionError(f"{s.method}: BLER {s.bler} < BER {s.ber}")

    @property
    def bler(self) -> float:
        """BLER of the report's primary method (the first entry of ``stats``)."""
        return next(iter(self.stats.values())).bler

    def rows(self) -> list[list]:
        return [
            [name, self.scenario.label, f"{self.scenario.gsnr_db:g}", s.blocks, s.block_errors,
             f"{s.bler:.6g}", s.bit_errors, f"{s.ber:.6g}"]
            for name, s in self.stats.items()
        ]


def _data_and_frames(scenario: ChannelScenario, cfg: TurboCodeConfig, start: int, stop: int):
    data = np.stack([block_rng(scenario.seed, "data", i).integers(0, 2, cfg.k) for i in range(start, stop)])
    noise = np.stack([scenario.noise(i, cfg.n) for i in range(start, stop)])
    return data, turbo_encode_batch(cfg, data) + noise


def simulate(
    scenario: ChannelScenario,
    cfg: TurboCodeConfig,
    pool: Optional[ExpertPool],
    n_blocks: int,
    policies: Sequence[HedgePolicy] = (),
    baselines: Optional[dict] = None,
    loss: str = "genie",
    chunk: int = 200,
    stop_rule=None,
    iters: Optional[int] = None,
):
    """Core block loop shared by every run mode.

    All ``policies`` and ``baselines`` (name -> density) see the same blocks.
    Experts are decoded only while some policy still needs them; with a
    pool but no policies every expert is decoded. ``stop_rule``
    is called with the baseline stats after each block and may end the run
    early. ``iters`` defaults to the pool's. Returns ``(policy_stats, expert_stats, baseline_stats, n_run)``.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if loss not in ("genie", "crc"):
        raise ValueError(f"unknown loss mode {loss!r}")
    if policies and pool is None:
        raise ValueError("policies need an expert pool")
    baselines = dict(baselines or {})
    M = len(pool) if pool is not None else 0
    policy_stats = [MethodStats("proposed") for _ in policies]
    expert_stats = [MethodStats(label) for label in (pool.labels if pool else [])]
    base_stats = {name: MethodStats(name) for name in baselines}
    base_pool = None
    if baselines:
        iters = iters or (pool.iters if pool else 8)
        base_pool = ExpertPool(tuple(Expert(n, 0.0, d) for n, d in baselines.items()), iters)

    done = 0
    while done < n_blocks:
        stop = min(n_blocks, done + chunk)
        data, frames = _data_and_frames(scenario, cfg, done, stop)
        n = stop - done

        needed: set = set() if policies else set(range(M))
        for pol in policies:
            cur = pol.current_experts()
            needed.update(range(M) if cur is None else cur)
        needed_idx = sorted(needed)
        post = np.full((M, n, cfg.k), 0.5)
        if needed_idx:
            sub, _ = decode_all(pool.subset(needed_idx), cfg, frames)
            post[needed_idx] = sub
        errs = (post >= 0.5) != data[None]  # (M, n, k)
        nerr = errs.sum(axis=2)
        losses = nerr / cfg.k if loss == "genie" else (nerr > 0).astype(float)
        if base_pool is not None:
            bpost, _ = decode_all(base_pool, cfg, frames)
            berr = ((bpost >= 0.5) != data[None]).sum(axis=2)

        for j in range(n):
            # expert tallies cover the blocks on which the whole pool is in use
            if pool is not None and (not policies or any(p.current_experts() is None for p in policies)):
                for m in range(M):
                    expert_stats[m].add(nerr[m, j], cfg.k)
            for pol, st in zip(policies, policy_stats):
                p = pol.step_block(post[:, j], losses[:, j])
                st.add(np.count_nonzero((p >= 0.5) != data[j]), cfg.k)
            if base_pool is not None:
                for b, name in enumerate(baselines):
                    base_stats[name].add(berr[b, j], cfg.k)
            done += 1
            if stop_rule is not None and stop_rule(base_stats, done):
                return policy_stats, expert_stats, base_stats, done
        logger.debug("%s: %d/%d blocks", scenario.label, done, n_blocks)
    return policy_stats, expert_stats, base_stats, done


def make_pool(scenario: ChannelScenario, alphas=DEFAULT_ALPHAS, iters: int = 8, scale: str = "true",
              rule: str = "mebcgm") -> ExpertPool:
    """Expert pool for ``scenario``.

    ``scale="true"``: experts share the channel's dispersion (weight-averaged
    over mixture components).
    ``scale="gsnr"``: experts know the GSNR, each derives its own dispersion.
    """
    if scale == "gsnr":
        return pool_for_gsnr(scenario.gsnr, alphas, iters, rule)
    if scale == "true":
        return default_pool(float(np.dot(scenario.weights, scenario.dispersions())), alphas, iters, rule)
    raise ValueError(f"unknown pool scale {scale!r}")


def _config_echo(scenario, cfg, pool, **extra) -> dict:
    echo = {
        "scenario": scenario.spec_text(),
        "gsnr_db": scenario.gsnr_db,
        "amplitude": scenario.amplitude,
        "seed": scenario.seed,
        "strength": scenario.strength,
        "k": cfg.k,
        "n": cfg.n,
        "rsc": f"{cfg.rsc.feedback_poly:#o}/{cfg.rsc.forward_poly:#o}/m{cfg.rsc.memory}",
        "tail_mode": cfg.tail_mode,
        "interleaver_seed": cfg.interleaver_seed,
        "dispersions": ",".join(f"{g:.12g}" for g in scenario.dispersions()),
    }
    if pool is not None:
        echo["pool"] = ",".join(pool.labels)
        echo["iters"] = pool.iters
    echo.update(extra)
    return echo


def run_proposed(scenario, cfg, pool, beta=0.9, init_weight=1.0, tau=None, n_blocks=10000,
                 loss="genie", chunk=200) -> RunReport:
    """Online Hedge decoding over ``n_blocks`` blocks."""
    t0 = time.perf_counter()
    pol = HedgePolicy(init_state(len(pool), beta, init_weight, tau))
    ps, es, _, _ = simulate(scenario, cfg, pool, n_blocks, [pol], loss=loss, chunk=chunk)
    return _policy_report(scenario, cfg, pool, pol, ps[0], es, beta, init_weight, tau, loss,
                          time.perf_counter() - t0)


def _policy_report(scenario, cfg, pool, pol, stats, expert_stats, beta, init_weight, tau, loss, wall):
    s = pol.state
    early = None
    if tau is not None:
        early = {"tau": tau, "chosen": s.frozen_choice,
                 "chosen_label": None if s.frozen_choice is None else pool.labels[s.frozen_choice]}
    all_stats = {stats.method: stats}
    for e in expert_stats:
        all_stats[f"expert:{e.method}"] = e
    return RunReport(
        scenario, all_stats, pool.labels, np.array(pol.trace), early,
        _config_echo(scenario, cfg, pool, beta=beta, init_weight=init_weight, tau=tau, loss=loss),
        wall,
    )


def dual_stopping_rule(name: str, min_blocks: int = 10000, target_errors: int = 50,
                       max_blocks: Optional[int] = None):
    """Stop once both ``min_blocks`` blocks and ``target_errors`` block errors
    are reached, whichever comes last (or at ``max_blocks``)."""

    def rule(stats, done):
        st = stats[name]
        if max_blocks is not None and done >= max_blocks:
            return True
        return st.blocks >= min_blocks and st.block_errors >= target_errors

    return rule


def run_baseline(scenario, cfg, density, name="baseline", min_blocks=10000, target_errors=50,
                 max_blocks=None, iters=8, chunk=200) -> RunReport:
    """Single decoder pair under a fixed density, with the dual stopping rule."""
    t0 = time.perf_counter()
    rule = dual_stopping_rule(name, min_blocks, target_errors, max_blocks)
    cap = max_blocks if max_blocks is not None else 10**9
    _, _, bs, _ = simulate(scenario, cfg, None, cap, baselines={name: density}, chunk=chunk,
                           stop_rule=rule, iters=iters)
    return RunReport(scenario, {name: bs[name]}, config=_config_echo(
        scenario, cfg, None, method=name, min_blocks=min_blocks, target_errors=target_errors,
        max_blocks=max_blocks), wall_clock=time.perf_counter() - t0)


def run_beta_sweep(scenario, cfg, pool, betas, n_blocks=10000, init_weight=1.0, loss="genie",
                   chunk=200) -> list[RunReport]:
    """One proposed run per beta, all on the same blocks."""
    t0 = time.perf_counter()
    if any(not 0 < b <= 1 for b in betas):
        raise ValueError("betas must lie in (0, 1]")
    pols = [HedgePolicy(init_state(len(pool), b, init_weight)) for b in betas]
    ps, es, _, _ = simulate(scenario, cfg, pool, n_blocks, pols, loss=loss, chunk=chunk)
    wall = time.perf_counter() - t0
    if len(betas) > 1:
        for st, b in zip(ps, betas):
            st.method = f"proposed[beta={b:g}]"
    return [_policy_report(scenario, cfg, pool, pol, st, es, b, init_weight, None, loss, wall)
            for pol, st, b in zip(pols, ps, betas)]


def run_early_stop_table(scenarios, cfg, pool_factory, taus, n_blocks=100000, beta=0.9,
                         init_weight=1.0, loss="genie", chunk=200) -> list[dict]:
    """BLER for every (tau, scenario) cell; each scenario is simulated once
    and shared by all taus. ``pool_factory(scenario)`` builds the pool."""
    if any(not 1 <= t <= n_blocks for t in taus):
        raise ValueError("taus must lie in [1, n_blocks]")
    rows = []
    for sc in scenarios:
        pool = pool_factory(sc)
        pols = [HedgePolicy(init_state(len(pool), beta, init_weight, tau)) for tau in taus]
        ps, _, _, _ = simulate(sc, cfg, pool, n_blocks, pols, loss=loss, chunk=chunk)
        for tau, pol, st in zip(taus, pols, ps):
            rows.append({
                "tau": tau, "gsnr_db": sc.gsnr_db, "alpha_true": sc.label, "blocks": st.blocks,
                "block_errors": st.block_errors, "bler": st.bler,
                "chosen_expert": pool.labels[pol.state.frozen_choice],
            })
    return rows


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


def emit_reports(reports: Sequence[RunReport], out_dir: str, manifest: Optional[dict] = None,
                 early_stop_rows: Optional[list] = None) -> dict:
    """Write ``bler.csv``, one ``weights_*.csv`` per proposed run, optional
    ``early_stop.csv`` and ``manifest.txt`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"bler": os.path.join(out_dir, "bler.csv")}
    with _open_for_write(paths["bler"]) as fh:
        w = csv.writer(fh)
        w.writerow(BLER_HEADER)
        seen = set()
        for r in reports:
            for row in r.rows():
                # paired runs share their expert rows
                if tuple(map(str, row)) not in seen:
                    seen.add(tuple(map(str, row)))
                    w.writerow(row)
    for r in reports:
        if r.weight_trace is None or not len(r.weight_trace):
            continue
        tag = f"gsnr{r.scenario.gsnr_db:g}"
        if r.config.get("beta") is not None:
            tag += f"_beta{r.config['beta']:g}"
        if r.config.get("tau") is not None:
            tag += f"_tau{r.config['tau']}"
        path = os.path.join(out_dir, f"weights_{tag}.csv")
        paths[f"weights_{tag}"] = path
        with _open_for_write(path) as fh:
            w = csv.writer(fh)
            w.writerow(["block"] + [f"zeta_{m + 1}" for m in range(r.weight_trace.shape[1])])
            for t, row in enumerate(r.weight_trace, start=1):
                w.writerow([t] + [repr(float(z)) for z in row])
    if early_stop_rows:
        paths["early_stop"] = os.path.join(out_dir, "early_stop.csv")
        with _open_for_write(paths["early_stop"]) as fh:
            cols = ["tau", "gsnr_db", "alpha_true", "blocks", "block_errors", "bler", "chosen_expert"]
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for row in early_stop_rows:
                w.writerow({**row, "bler": f"{row['bler']:.6g}"})
    if manifest is not None:
        paths["manifest"] = os.path.join(out_dir, "manifest.txt")
        with _open_for_write(paths["manifest"]) as fh:
            for key, value in manifest.items():
                fh.write(f"{key}={value}\n")
    return paths
