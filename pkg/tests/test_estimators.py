import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hedgeturbo.estimators import HedgeTurboDecoder, TurboDecoder
from hedgeturbo.expert_bank import decode_all
from hedgeturbo.harness import ChannelScenario, block_rng, make_pool, run_proposed
from hedgeturbo.turbo_codec import TurboCodeConfig, turbo_decode_pair, turbo_encode_batch


@pytest.fixture(scope="module")
def setup():
    cfg = TurboCodeConfig()
    sc = ChannelScenario((1.4,), (1.0,), 10.0, seed=5)
    idx = range(40)
    data = np.stack([block_rng(sc.seed, "data", i).integers(0, 2, cfg.k) for i in idx])
    X = turbo_encode_batch(cfg, data) + np.stack([sc.noise(i, cfg.n) for i in idx])
    return cfg, sc, X, data


def test_turbo_decoder_matches_function(setup):
    cfg, sc, X, _ = setup
    dens = sc.oracle_density()
    est = TurboDecoder(code=cfg, density=dens).fit()
    np.testing.assert_array_equal(est.predict_proba(X), turbo_decode_pair(cfg, dens, X))
    assert est.predict(X).dtype == np.int64
    assert est.get_params()["iters"] == 8


def test_not_fitted(setup):
    cfg, _, X, _ = setup
    with pytest.raises(NotFittedError):
        TurboDecoder(code=cfg).predict(X)
    with pytest.raises(NotFittedError):
        HedgeTurboDecoder(code=cfg).predict(X)


def test_input_validation(setup):
    cfg, sc, X, data = setup
    est = TurboDecoder(code=cfg).fit()
    with pytest.raises(ValueError):
        est.predict(X[:, :-1])
    with pytest.raises(ValueError):
        est.predict(np.full_like(X, np.nan))
    h = HedgeTurboDecoder(code=cfg, pool=make_pool(sc))
    with pytest.raises(ValueError):
        h.fit(X)  # genie loss needs y
    with pytest.raises(ValueError):
        h.fit(X, data[:, :5])
    with pytest.raises(ValueError):
        h.fit(X, data * 2)
    with pytest.raises(ValueError):
        HedgeTurboDecoder(code=cfg, loss="crc").fit(X)


def test_hedge_matches_harness(setup):
    cfg, sc, X, data = setup
    pool = make_pool(sc)
    h = HedgeTurboDecoder(code=cfg, pool=pool, beta=0.9).fit(X, data)
    rep = run_proposed(sc, cfg, pool, n_blocks=40)
    np.testing.assert_array_equal(h.weight_trace_, rep.weight_trace)
    errs = np.count_nonzero(((h.online_proba_ >= 0.5) != data).any(axis=1))
    assert errs == rep.stats["proposed"].block_errors


def test_partial_fit_is_incremental(setup):
    cfg, sc, X, data = setup
    pool = make_pool(sc)
    whole = HedgeTurboDecoder(code=cfg, pool=pool).fit(X, data)
    parts = HedgeTurboDecoder(code=cfg, pool=pool)
    for lo in range(0, 40, 13):
        parts.partial_fit(X[lo:lo + 13], data[lo:lo + 13])
    np.testing.assert_array_equal(whole.zeta_, parts.zeta_)
    assert whole.state_.step == 40


def test_predict_uses_current_weights(setup):
    cfg, sc, X, data = setup
    pool = make_pool(sc)
    h = HedgeTurboDecoder(code=cfg, pool=pool).fit(X, data)
    post, _ = decode_all(pool, cfg, X[:5])
    np.testing.assert_allclose(h.predict_proba(X[:5]), np.tensordot(h.zeta_, post, axes=1))
    frozen = HedgeTurboDecoder(code=cfg, pool=pool, tau=10).fit(X, data)
    c = frozen.state_.frozen_choice
    np.testing.assert_array_equal(frozen.predict_proba(X[:5]), post[c])


def test_crc_mode(setup):
    cfg, sc, X, data = setup
    truth = {d.tobytes() for d in data}
    h = HedgeTurboDecoder(code=cfg, pool=make_pool(sc), loss="crc",
                          crc_check=lambda bits: bits.tobytes() in truth).fit(X)
    assert h.weight_trace_.shape == (40, 6)


def test_clone(setup):
    cfg, sc, _, _ = setup
    h = HedgeTurboDecoder(code=cfg, beta=0.95, tau=7)
    c = clone(h)
    assert c.get_params()["beta"] == 0.95 and c.get_params()["tau"] == 7
