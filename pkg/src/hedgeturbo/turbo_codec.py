"""Punctured parallel-concatenated turbo code with a batched MAP (BCJR) decoder.

Bits map to symbols as ``0 -> -A`` and ``1 -> +A``; every LLR in this module
is ``ln P(bit = 1) / P(bit = 0)``.

The decoder works on batches: received frames of shape ``(n, N)`` decode to
posteriors of shape ``(n, k)``; leading axes are flattened into one batch so
that many blocks and many candidate densities decode in a single call. The
inner recursion is compiled with numba.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit
from scipy.special import expit

__all__ = [
    "LLR_MAX",
    "EXT_MAX",
    "RscSpec",
    "Trellis",
    "TurboCodeConfig",
    "CodedFrame",
    "PUNCTURE_PATTERNS",
    "RSC_PRESETS",
    "rsc_encode",
    "turbo_encode",
    "turbo_encode_batch",
    "channel_llr",
    "bcjr_decode",
    "depuncture",
    "turbo_decode_pair",
    "turbo_decode_llrs",
    "hard_decision",
]

LLR_MAX = 50.0
EXT_MAX = 700.0


def _poly_bits(poly: int, memory: int) -> np.ndarray:
    return np.array([(poly >> i) & 1 for i in range(memory + 1)], dtype=np.int64)


@dataclass(frozen=True)
class RscSpec:
    """Recursive systematic convolutional code.

    Polynomials are integers whose bit ``i`` is the coefficient of ``D**i``,
    so ``1 + D + D^2`` is ``0b111``.
    """

    feedback_poly: int = 0b111
    forward_poly: int = 0b101
    memory: int = 2

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        for poly in (self.feedback_poly, self.forward_poly):
            if poly <= 0 or poly.bit_length() > self.memory + 1:
                raise ValueError(f"polynomial {poly:#b} has degree > memory={self.memory}")
        if not self.feedback_poly & 1:
            raise ValueError("feedback polynomial must have constant term 1")

    @cached_property
    def trellis(self) -> "Trellis":
        return Trellis.from_spec(self)


RSC_PRESETS = {
    # 1 + D + D^2 feedback, 1 + D^2 forward
    "m2": RscSpec(0b111, 0b101, 2),
    # constraint length 4 (1 + D^2 + D^3 feedback, 1 + D + D^3 forward)
    "m3": RscSpec(0b1101, 0b1011, 3),
}


@dataclass(frozen=True, eq=False)
class Trellis:
    n_states: int
    next_state: np.ndarray  # (S, 2)
    parity: np.ndarray  # (S, 2)
    term_input: np.ndarray  # (S,) input that feeds a zero into the register

    @classmethod
    def from_spec(cls, spec: RscSpec) -> "Trellis":
        m = spec.memory
        fb = _poly_bits(spec.feedback_poly, m)
        fw = _poly_bits(spec.forward_poly, m)
        n_states = 1 << m
        next_state = np.zeros((n_states, 2), dtype=np.int64)
        parity = np.zeros((n_states, 2), dtype=np.int64)
        term_input = np.zeros(n_states, dtype=np.int64)
        for s in range(n_states):
            # bit i-1 of s holds a[t-i]
            past = np.array([(s >> (i - 1)) & 1 for i in range(1, m + 1)], dtype=np.int64)
            fb_sum = int(fb[1:] @ past) & 1
            term_input[s] = fb_sum
            for u in (0, 1):
                a = u ^ fb_sum
                parity[s, u] = (fw[0] * a + int(fw[1:] @ past)) & 1
                next_state[s, u] = ((s << 1) | a) & (n_states - 1)
        return cls(n_states, next_state, parity, term_input)


def rsc_encode(spec: RscSpec, bits, terminate: bool = True):
    """Encode ``bits`` (shape ``(..., L)``) from the zero state.

    Returns ``(systematic, parity, tail)`` where ``tail`` has shape
    ``(..., memory, 2)`` holding (systematic, parity) pairs of the
    termination steps, or ``(..., 0, 2)`` if ``terminate`` is false.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] < 1:
        raise ValueError("need at least one input bit")
    tr = spec.trellis
    state = np.zeros(bits.shape[:-1], dtype=np.int64)
    parity = np.empty_like(bits)
    for t in range(bits.shape[-1]):
        u = bits[..., t]
        parity[..., t] = tr.parity[state, u]
        state = tr.next_state[state, u]
    n_tail = spec.memory if terminate else 0
    tail = np.empty(bits.shape[:-1] + (n_tail, 2), dtype=np.int64)
    for j in range(n_tail):
        u = tr.term_input[state]
        tail[..., j, 0] = u
        tail[..., j, 1] = tr.parity[state, u]
        state = tr.next_state[state, u]
    return bits.copy(), parity, tail


PUNCTURE_PATTERNS = {
    "1/3": np.ones((3, 1), dtype=bool),
    "1/2": np.array([[1, 1], [1, 0], [0, 1]], dtype=bool),
    "4/5": np.array(
        [
            [1, 1, 1, 1, 1, 1, 1, 1],
            [1, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 0, 0],
        ],
        dtype=bool,
    ),
}


@dataclass(frozen=True, eq=False)
class TurboCodeConfig:
    """Turbo code parameters.

    ``puncture`` is a ``(3, period)`` keep-mask over the (systematic, parity1,
    parity2) streams, applied periodically along the info block. The
    interleaver is drawn from ``interleaver_seed`` unless given explicitly.
    ``tail_mode`` is ``"terminate-both"``, ``"terminate-first"`` or ``"none"``;
    tail symbols are never punctured.
    """

    k: int = 128
    rsc: RscSpec = field(default_factory=RscSpec)
    puncture: np.ndarray = field(default_factory=lambda: PUNCTURE_PATTERNS["4/5"])
    tail_mode: str = "terminate-both"
    amplitude: float = 1.0
    interleaver_seed: int = 1
    interleaver: np.ndarray = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tail_mode not in ("terminate-both", "terminate-first", "none"):
            raise ValueError(f"unknown tail_mode {self.tail_mode!r}")
        mask = np.asarray(self.puncture, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != 3:
            raise ValueError("puncture mask must have shape (3, period)")
        if not mask.any(axis=0).all():
            raise ValueError("puncture mask removes every stream at some position")
        object.__setattr__(self, "puncture", mask)
        if self.interleaver is None:
            perm = np.random.default_rng(self.interleaver_seed).permutation(self.k)
        else:
            perm = np.asarray(self.interleaver, dtype=np.int64)
            if sorted(perm.tolist()) != list(range(self.k)):
                raise ValueError("interleaver must be a permutation of range(k)")
        object.__setattr__(self, "interleaver", perm)
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @classmethod
    def from_rate(cls, rate: str = "4/5", rsc="m2", **kwargs) -> "TurboCodeConfig":
        if isinstance(rsc, str):
            rsc = RSC_PRESETS[rsc]
        if rate not in PUNCTURE_PATTERNS:
            raise ValueError(f"unsupported rate {rate!r}; choose from {sorted(PUNCTURE_PATTERNS)}")
        return cls(rsc=rsc, puncture=PUNCTURE_PATTERNS[rate], **kwargs)

    @cached_property
    def deinterleaver(self) -> np.ndarray:
        return np.argsort(self.interleaver)

    @property
    def tails(self) -> tuple[bool, bool]:
        return (self.tail_mode != "none", self.tail_mode == "terminate-both")

    @cached_property
    def layout(self) -> dict:
        """Transmitted positions of every coded bit.

        ``"info"``: ``(3, k)`` array, position of (sys, par1, par2) at each
        info step or -1 where punctured. ``"tail1"``/``"tail2"``: ``(m, 2)``
        positions of each encoder's (sys, par) tail pairs.
        """
        keep = np.tile(self.puncture, (1, -(-self.k // self.puncture.shape[1])))[:, : self.k]
        order = keep.T.ravel()  # step-major: sys, par1, par2 of step 0, then step 1, ...
        info = np.where(order, np.cumsum(order) - 1, -1).reshape(self.k, 3).T.copy()
        n = int(order.sum())
        m = self.rsc.memory
        tails = {}
        for name, on in zip(("tail1", "tail2"), self.tails):
            if on:
                tails[name] = n + np.arange(2 * m, dtype=np.int64).reshape(m, 2)
                n += 2 * m
            else:
                tails[name] = np.empty((0, 2), dtype=np.int64)
        return {"info": info, **tails, "n": n}

    @property
    def n(self) -> int:
        """Transmitted symbols per block."""
        return self.layout["n"]

    @property
    def payload_rate(self) -> float:
        return self.k / int(np.count_nonzero(self.layout["info"] >= 0))


@dataclass(frozen=True)
class CodedFrame:
    symbols: np.ndarray
    layout: dict


def turbo_encode_batch(cfg: TurboCodeConfig, data) -> np.ndarray:
    """Encode ``data`` of shape ``(..., k)`` into bipolar symbols ``(..., N)``."""
    data = np.asarray(data, dtype=np.int64)
    if data.shape[-1] != cfg.k:
        raise ValueError(f"data length {data.shape[-1]} != k={cfg.k}")
    t1, t2 = cfg.tails
    sys, par1, tail1 = rsc_encode(cfg.rsc, data, terminate=t1)
    _, par2, tail2 = rsc_encode(cfg.rsc, data[..., cfg.interleaver], terminate=t2)
    lay = cfg.layout
    bits = np.zeros(data.shape[:-1] + (lay["n"],), dtype=np.int64)
    info = lay["info"]
    for stream, values in enumerate((sys, par1, par2)):
        kept = info[stream] >= 0
        bits[..., info[stream][kept]] = values[..., kept]
    for name, tail in (("tail1", tail1), ("tail2", tail2)):
        if tail.shape[-2]:
            bits[..., lay[name].ravel()] = tail.reshape(tail.shape[:-2] + (-1,))
    return cfg.amplitude * (2.0 * bits - 1.0)


def turbo_encode(cfg: TurboCodeConfig, data) -> CodedFrame:
    data = np.asarray(data)
    if data.ndim != 1:
        raise ValueError("turbo_encode takes a single block; use turbo_encode_batch")
    return CodedFrame(turbo_encode_batch(cfg, data), cfg.layout)


def channel_llr(density, y, amplitude: float = 1.0):
    """Channel LLR ``ln f(y - A) - ln f(y + A)``, clipped to ``[-LLR_MAX, LLR_MAX]``."""
    y = np.asarray(y, dtype=float)
    return np.clip(density.logpdf(y - amplitude) - density.logpdf(y + amplitude), -LLR_MAX, LLR_MAX)


@njit(cache=True)
def _bcjr_kernel(ch, la, next_state, parity, terminated, ext):
    # Scaled probability-domain forward/backward recursion (exact MAP).
    B, T = la.shape
    S = next_state.shape[0]
    alpha = np.empty((T + 1, S))
    beta = np.empty(S)
    nbeta = np.empty(S)
    g = np.empty((T, 2, 2))  # [t, input bit, parity bit]
    for b in range(B):
        for t in range(T):
            gi = 0.5 * (la[b, t] + ch[b, t, 0])
            gp = 0.5 * ch[b, t, 1]
            shift = abs(gi) + abs(gp)
            g[t, 1, 1] = math.exp(gi + gp - shift)
            g[t, 1, 0] = math.exp(gi - gp - shift)
            g[t, 0, 1] = math.exp(-gi + gp - shift)
            g[t, 0, 0] = math.exp(-gi - gp - shift)

        for s in range(S):
            alpha[0, s] = 0.0
        alpha[0, 0] = 1.0
        for t in range(T):
            for s in range(S):
                alpha[t + 1, s] = 0.0
            for s in range(S):
                a = alpha[t, s]
                if a == 0.0:
                    continue
                for u in range(2):
                    alpha[t + 1, next_state[s, u]] += a * g[t, u, parity[s, u]]
            tot = 0.0
            for s in range(S):
                tot += alpha[t + 1, s]
            for s in range(S):
                alpha[t + 1, s] /= tot

        for s in range(S):
            beta[s] = 0.0 if terminated else 1.0
        beta[0] = 1.0
        for t in range(T - 1, -1, -1):
            # extrinsic marginal uses the parity metric alone
            gp = 0.5 * ch[b, t, 1]
            ep = math.exp(gp - abs(gp))
            en = math.exp(-gp - abs(gp))
            l0 = 0.0
            l1 = 0.0
            tot = 0.0
            for s in range(S):
                b0 = beta[next_state[s, 0]]
                b1 = beta[next_state[s, 1]]
                acc = g[t, 0, parity[s, 0]] * b0 + g[t, 1, parity[s, 1]] * b1
                nbeta[s] = acc
                tot += acc
                a = alpha[t, s]
                l0 += a * b0 * (ep if parity[s, 0] else en)
                l1 += a * b1 * (ep if parity[s, 1] else en)
            if l0 == 0.0 and l1 == 0.0:
                ext[b, t] = 0.0
            elif l0 == 0.0:
                ext[b, t] = EXT_MAX
            elif l1 == 0.0:
                ext[b, t] = -EXT_MAX
            else:
                ext[b, t] = min(EXT_MAX, max(-EXT_MAX, math.log(l1) - math.log(l0)))
            for s in range(S):
                beta[s] = nbeta[s] / tot


def bcjr_decode(trellis, channel_llrs, prior_llrs, terminated: bool = True):
    """Exact MAP (BCJR) decoding of one RSC constituent code.

    Parameters
    ----------
    trellis : Trellis or RscSpec
    channel_llrs : array (..., T, 2)
        Systematic and parity channel LLRs per trellis step; 0 where punctured.
    prior_llrs : array (..., T)
        A-priori LLRs of the input bits.
    terminated : bool
        Whether the trellis ends in the zero state.

    Returns
    -------
    posterior, extrinsic : arrays (..., T)
        ``posterior == prior + systematic + extrinsic``. Extrinsic values
        saturate at ``+-EXT_MAX`` where a marginal underflows.
    """
    if isinstance(trellis, RscSpec):
        trellis = trellis.trellis
    ch = np.asarray(channel_llrs, dtype=float)
    la = np.asarray(prior_llrs, dtype=float)
    if ch.shape[-1] != 2 or ch.shape[:-1] != la.shape:
        raise ValueError(f"inconsistent shapes {ch.shape} and {la.shape}")
    batch, T = la.shape[:-1], la.shape[-1]
    ch2 = np.ascontiguousarray(ch.reshape((-1, T, 2)))
    la2 = np.ascontiguousarray(la.reshape((-1, T)))
    ext = np.empty_like(la2)
    _bcjr_kernel(ch2, la2, trellis.next_state, trellis.parity, terminated, ext)
    extrinsic = ext.reshape(batch + (T,))
    return la + ch[..., 0] + extrinsic, extrinsic


def depuncture(cfg: TurboCodeConfig, llrs):
    """Scatter per-symbol channel LLRs ``(..., N)`` back onto trellis streams.

    Returns ``(ch1, ch2)`` with shapes ``(..., T1, 2)`` and ``(..., T2, 2)``
    where T includes the tail steps; punctured positions hold exactly 0.
    Encoder 2's systematic info stream is the interleaved systematic stream.
    """
    llrs = np.asarray(llrs, dtype=float)
    lay = cfg.layout
    if llrs.shape[-1] != lay["n"]:
        raise ValueError(f"frame length {llrs.shape[-1]} != {lay['n']}")
    padded = np.concatenate([llrs, np.zeros(llrs.shape[:-1] + (1,))], axis=-1)
    info = lay["info"]  # -1 indexes the zero pad
    streams = padded[..., info]  # (..., 3, k)
    sys, par1, par2 = streams[..., 0, :], streams[..., 1, :], streams[..., 2, :]
    tail1 = padded[..., lay["tail1"]]  # (..., m1, 2)
    tail2 = padded[..., lay["tail2"]]
    ch1 = np.concatenate([np.stack([sys, par1], axis=-1), tail1], axis=-2)
    ch2 = np.concatenate([np.stack([sys[..., cfg.interleaver], par2], axis=-1), tail2], axis=-2)
    return ch1, ch2


def turbo_decode_llrs(cfg: TurboCodeConfig, llrs, iters: int = 8) -> np.ndarray:
    """Iterative decoding from channel LLRs ``(..., N)``; returns posterior LLRs ``(..., k)``."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    ch1, ch2 = depuncture(cfg, llrs)
    k = cfg.k
    t1, t2 = cfg.tails
    tr = cfg.rsc.trellis
    pad1 = np.zeros(ch1.shape[:-2] + (ch1.shape[-2] - k,))
    pad2 = np.zeros(ch2.shape[:-2] + (ch2.shape[-2] - k,))
    la1 = np.zeros(ch1.shape[:-2] + (k,))
    for _ in range(iters):
        _, e1 = bcjr_decode(tr, ch1, np.concatenate([la1, pad1], axis=-1), terminated=t1)
        la2 = np.clip(e1[..., :k][..., cfg.interleaver], -LLR_MAX, LLR_MAX)
        post2, e2 = bcjr_decode(tr, ch2, np.concatenate([la2, pad2], axis=-1), terminated=t2)
        la1 = np.clip(e2[..., :k][..., cfg.deinterleaver], -LLR_MAX, LLR_MAX)
    return np.clip(post2[..., :k][..., cfg.deinterleaver], -LLR_MAX, LLR_MAX)


def turbo_decode_pair(cfg: TurboCodeConfig, density, frame, iters: int = 8) -> np.ndarray:
    """Decode received frame(s) under ``density``; returns P(bit = 1), shape ``(..., k)``."""
    frame = np.asarray(frame, dtype=float)
    if frame.shape[-1] != cfg.n:
        raise ValueError(f"frame length {frame.shape[-1]} != {cfg.n}")
    llr = turbo_decode_llrs(cfg, channel_llr(density, frame, cfg.amplitude), iters)
    return expit(llr)


def hard_decision(p_one) -> np.ndarray:
    return (np.asarray(p_one) >= 0.5).astype(np.int64)
