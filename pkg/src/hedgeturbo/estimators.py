"""scikit-learn style front ends.

``X`` is always a 2-D array of received frames, one row per block with
``code.n`` columns; ``y`` (where used) holds the transmitted info bits,
shape ``(n_blocks, code.k)``. ``predict_proba`` returns P(bit = 1) per info
bit rather than a per-class matrix, since every output is a bit.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .expert_bank import ExpertPool, decode_all, default_pool
from .online_combiner import HedgePolicy, crc_loss, init_state, normalized_weights
from .stable_noise import GaussianDensity
from .turbo_codec import TurboCodeConfig, channel_llr, turbo_decode_llrs

__all__ = ["TurboDecoder", "HedgeTurboDecoder"]


def _check_frames(X, code: TurboCodeConfig):
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != code.n:
        raise ValueError(f"X has {X.shape[1]} columns, the code transmits {code.n} symbols per block")
    return X


def _check_bits(y, n_rows: int, code: TurboCodeConfig):
    y = check_array(y, dtype=np.int64)
    if y.shape != (n_rows, code.k):
        raise ValueError(f"y must have shape ({n_rows}, {code.k}), got {y.shape}")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("y must be binary")
    return y


class TurboDecoder(BaseEstimator):
    """One turbo decoder pair under a fixed noise density.

    Stateless: ``fit`` only validates parameters.
    """

    def __init__(self, code=None, density=None, iters=8):
        self.code = code
        self.density = density
        self.iters = iters

    def fit(self, X=None, y=None):
        self.code_ = self.code if self.code is not None else TurboCodeConfig()
        self.density_ = self.density if self.density is not None else GaussianDensity(1.0)
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        self.n_features_in_ = self.code_.n
        return self

    def decision_function(self, X):
        """Posterior LLRs ``ln P(1)/P(0)`` of the info bits."""
        check_is_fitted(self, "code_")
        X = _check_frames(X, self.code_)
        llr = channel_llr(self.density_, X, self.code_.amplitude)
        return turbo_decode_llrs(self.code_, llr, self.iters)

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


class HedgeTurboDecoder(BaseEstimator):
    """Multi-pair turbo decoder whose expert outputs are combined by Hedge.

    Parameters
    ----------
    code : TurboCodeConfig, optional
    pool : ExpertPool, optional
        Defaults to the six-expert pool at unit dispersion.
    beta : float
        Hedge learning parameter in (0, 1].
    init_weight : float
        Initial weight of every expert.
    tau : int, optional
        Freeze the weights after ``tau`` updates and decode with the best
        expert only from then on.
    loss : {"genie", "crc"}
        ``"genie"`` scores each expert by its bit-error fraction against
        ``y``; ``"crc"`` scores pass/fail with ``crc_check``.
    crc_check : callable, optional
        ``crc_check(bits) -> bool`` block detector, used when ``loss="crc"``.

    Attributes
    ----------
    state_ : HedgeState
    weight_trace_ : ndarray (n_blocks_seen, M)
        Normalized weights used on each block.
    online_proba_ : ndarray
        Posteriors produced by the last ``partial_fit`` call, each computed
        before that block's weight update.
    """

    def __init__(self, code=None, pool=None, beta=0.9, init_weight=1.0, tau=None, loss="genie",
                 crc_check=None):
        self.code = code
        self.pool = pool
        self.beta = beta
        self.init_weight = init_weight
        self.tau = tau
        self.loss = loss
        self.crc_check = crc_check

    def _init(self):
        self.code_ = self.code if self.code is not None else TurboCodeConfig()
        self.pool_ = self.pool if self.pool is not None else default_pool(1.0)
        if not isinstance(self.pool_, ExpertPool):
            raise TypeError("pool must be an ExpertPool")
        if self.loss not in ("genie", "crc"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "crc" and self.crc_check is None:
            raise ValueError("loss='crc' needs a crc_check callable")
        self._policy = HedgePolicy(init_state(len(self.pool_), self.beta, self.init_weight, self.tau))
        self.n_features_in_ = self.code_.n

    def fit(self, X, y=None):
        """Reset the weights and learn online over the blocks of ``X`` in order."""
        self._init()
        return self.partial_fit(X, y)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "_policy"):
            self._init()
        X = _check_frames(X, self.code_)
        if self.loss == "genie":
            if y is None:
                raise ValueError("genie loss needs the transmitted bits y")
            y = _check_bits(y, X.shape[0], self.code_)
        post, _ = decode_all(self.pool_, self.code_, X)  # (M, n, k)
        out = np.empty((X.shape[0], self.code_.k))
        for j in range(X.shape[0]):
            if self.loss == "genie":
                losses = np.mean((post[:, j] >= 0.5) != y[j], axis=1)
            else:
                losses = np.array([crc_loss(p, self.crc_check) for p in post[:, j]])
            out[j] = self._policy.step_block(post[:, j], losses)
        self.online_proba_ = out
        return self

    @property
    def state_(self):
        check_is_fitted(self, "_policy")
        return self._policy.state

    @property
    def weight_trace_(self):
        check_is_fitted(self, "_policy")
        return np.array(self._policy.trace).reshape(-1, len(self.pool_))

    @property
    def zeta_(self):
        return normalized_weights(self.state_)

    def predict_proba(self, X):
        """Combined posteriors under the current weights; does not learn."""
        s = self.state_
        X = _check_frames(X, self.code_)
        if s.frozen or s.due_to_freeze:
            if s.frozen:
                choice = s.frozen_choice
            else:
                choice = int(np.argmax(s.log_decay))
            post, _ = decode_all(self.pool_.subset([choice]), self.code_, X)
            return post[0]
        post, _ = decode_all(self.pool_, self.code_, X)
        return np.tensordot(self.zeta_, post, axes=1)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)
