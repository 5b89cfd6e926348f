"""Turbo decoding over symmetric alpha-stable noise with a Hedge-combined
bank of decoder pairs."""

__version__ = "0.1.0"

from .estimators import HedgeTurboDecoder, TurboDecoder
from .expert_bank import DEFAULT_ALPHAS, Expert, ExpertPool, decode_all, default_pool, pool_for_gsnr
from .harness import ChannelScenario, RunReport, run_baseline, run_proposed, simulate
from .online_combiner import HedgePolicy, HedgeState, combine, init_state, update_weights
from .stable_noise import (
    AlphaStableParams,
    BCGMDensity,
    CauchyDensity,
    GaussianDensity,
    GsnrSpec,
    MixtureDensity,
    gsnr_to_dispersion,
    sas_density,
    sas_sample,
)
from .turbo_codec import TurboCodeConfig, turbo_decode_pair, turbo_encode

__all__ = [
    "__version__",
    "AlphaStableParams", "BCGMDensity", "CauchyDensity", "GaussianDensity", "GsnrSpec",
    "MixtureDensity", "gsnr_to_dispersion", "sas_density", "sas_sample",
    "TurboCodeConfig", "turbo_encode", "turbo_decode_pair",
    "DEFAULT_ALPHAS", "Expert", "ExpertPool", "decode_all", "default_pool", "pool_for_gsnr",
    "HedgePolicy", "HedgeState", "combine", "init_state", "update_weights",
    "ChannelScenario", "RunReport", "run_baseline", "run_proposed", "simulate",
    "TurboDecoder", "HedgeTurboDecoder",
]
