"""Hedge combining of expert bit posteriors, with optional early stopping.

Weights are kept as logarithms so that long runs with small ``beta`` never
underflow; the update ``w <- w * beta**loss`` is exact in that domain. The
accumulated decay ``sum(loss) * ln(beta)`` is stored apart from ``ln W`` so
that normalized weights and the frozen choice cannot depend on ``W``, not even
through rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "HedgeState",
    "CombinedPosteriors",
    "FrozenError",
    "init_state",
    "normalized_weights",
    "combine",
    "block_loss",
    "crc_loss",
    "update_weights",
    "freeze_and_select",
    "hedge_bound",
    "HedgePolicy",
]


class FrozenError(RuntimeError):
    """Raised when an operation needs the Hedge state to be (or not be) frozen."""


@dataclass(frozen=True)
class HedgeState:
    log_decay: np.ndarray  # sum_t l_m(t) * ln(beta), per expert
    beta: float = 0.9
    init_weight: float = 1.0
    step: int = 0
    tau: Optional[int] = None
    frozen_choice: Optional[int] = None
    events: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.init_weight > 0.0:
            raise ValueError("init_weight must be positive")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")

    @property
    def n_experts(self) -> int:
        return len(self.log_decay)

    @property
    def log_weights(self) -> np.ndarray:
        return math.log(self.init_weight) + self.log_decay

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def frozen(self) -> bool:
        return self.frozen_choice is not None

    @property
    def due_to_freeze(self) -> bool:
        return self.tau is not None and not self.frozen and self.step >= self.tau


@dataclass(frozen=True)
class CombinedPosteriors:
    p_hat: np.ndarray
    zeta: np.ndarray


def init_state(n_experts: int, beta: float = 0.9, init_weight: float = 1.0, tau: Optional[int] = None) -> HedgeState:
    if n_experts < 1:
        raise ValueError("need at least one expert")
    return HedgeState(np.zeros(n_experts), beta, init_weight, 0, tau)


def normalized_weights(s: HedgeState) -> np.ndarray:
    ld = s.log_decay
    return np.exp(ld - logsumexp(ld))


def combine(posteriors, zeta) -> CombinedPosteriors:
    """Convex combination ``sum_m zeta_m * P_m`` of expert posteriors ``(M, ..., k)``."""
    P = np.asarray(posteriors, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if P.shape[0] != zeta.shape[0]:
        raise ValueError(f"{P.shape[0]} posteriors but {zeta.shape[0]} weights")
    p_hat = np.tensordot(zeta, P, axes=1)
    return CombinedPosteriors(np.clip(p_hat, 0.0, 1.0), zeta)


def block_loss(decoded, reference) -> float:
    """Fraction of bits in which ``decoded`` differs from ``reference``."""
    decoded = np.asarray(decoded)
    reference = np.asarray(reference)
    if decoded.shape != reference.shape:
        raise ValueError(f"length mismatch {decoded.shape} vs {reference.shape}")
    return float(np.count_nonzero(decoded != reference)) / decoded.size


def crc_loss(posteriors, crc_check: Callable[[np.ndarray], bool]) -> float:
    """1.0 if the hard-decision block fails ``crc_check``, else 0.0."""
    bits = (np.asarray(posteriors) >= 0.5).astype(np.int64)
    return 0.0 if crc_check(bits) else 1.0


def update_weights(s: HedgeState, losses) -> HedgeState:
    """One Hedge step ``w_m <- w_m * beta**l_m``; a no-op (recorded) once frozen."""
    losses = np.asarray(losses, dtype=float)
    if losses.shape != s.log_decay.shape:
        raise ValueError(f"expected {s.n_experts} losses, got shape {losses.shape}")
    if np.any(losses < 0.0) or np.any(losses > 1.0) or not np.all(np.isfinite(losses)):
        raise ValueError("losses must lie in [0, 1]")
    if s.frozen or s.due_to_freeze:
        return replace(s, events=s.events + (("ignored-update", s.step),))
    return replace(s, log_decay=s.log_decay + losses * math.log(s.beta), step=s.step + 1)


def freeze_and_select(s: HedgeState) -> tuple[int, HedgeState]:
    """Pick the expert with the highest normalized weight (lowest index on ties)
    and freeze the state on it."""
    if s.frozen:
        return s.frozen_choice, s
    if s.tau is None or s.step < s.tau:
        raise FrozenError(f"cannot freeze at step {s.step} before tau={s.tau}")
    # argmax over the decay equals argmax over zeta and keeps exact ties
    choice = int(np.argmax(s.log_decay))
    return choice, replace(s, frozen_choice=choice, events=s.events + (("frozen", s.step, choice),))


def hedge_bound(cumulative_losses, n_experts: int, beta: float) -> float:
    """Classical upper bound on Hedge's cumulative mixture loss for ``beta < 1``."""
    best = float(np.min(cumulative_losses))
    return (math.log(n_experts) + math.log(1.0 / beta) * best) / (1.0 - beta)


@dataclass
class HedgePolicy:
    """Sequential driver of one Hedge run over a stream of blocks.

    ``step_block`` takes the expert posteriors of one block and that block's
    per-expert losses, returns the posterior the policy decodes with, and
    advances the weights.
    """

    state: HedgeState
    trace: list = field(default_factory=list)

    def current_experts(self):
        """Experts this policy still needs decoded; ``None`` means all."""
        return None if not self.state.frozen else [self.state.frozen_choice]

    def step_block(self, posteriors, losses=None) -> np.ndarray:
        """``losses`` may be omitted once the policy is frozen."""
        s = self.state
        if s.due_to_freeze:
            _, s = freeze_and_select(s)
        zeta = normalized_weights(s)
        if s.frozen:
            p = np.asarray(posteriors[s.frozen_choice], dtype=float)
        else:
            p = combine(posteriors, zeta).p_hat
            s = update_weights(s, losses)
            if s.due_to_freeze:
                _, s = freeze_and_select(s)
        self.trace.append(zeta)
        self.state = s
        return p
