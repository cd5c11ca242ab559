import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa_rsma.channel import ChannelRealization
from fa_rsma.rates import (
    AuxVariables,
    BeamformerSet,
    DomainError,
    RsmaConfig,
    common_rate,
    eve_rates,
    neg_log2_lower_bound,
    optimal_aux,
    private_rate,
    secrecy_sum_rate,
    secure_rate_objective,
    sensing_energy,
    surrogate_objective,
)
from fa_rsma.robust.objective import update_robust_aux

from conftest import random_covariances


def random_channels(rng, K=3, N=4, eve_scale=0.5):
    h = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
    he = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) * eve_scale
    return ChannelRealization(h=h, h_e=he, noise_user=np.ones(K), noise_eve=1.0, h_hat=h, eps=np.zeros(K))


def test_common_rate_single_stream():
    h = np.array([1.0, 0.0])
    W = np.zeros((2, 2, 2), dtype=complex)
    W[1] = np.diag([3.0, 0.0])
    assert common_rate(h, W, 1.0) == pytest.approx(2.0)


def test_private_rate_ignores_common_stream():
    h = np.array([1.0, 1.0j])
    W = np.zeros((3, 2, 2), dtype=complex)
    W[0] = np.outer(h, h.conj())
    W[2] = 5 * np.eye(2)
    assert private_rate(h, W, 1.0, 0) == pytest.approx(math.log2(5.0))


def test_eve_counts_common_as_interference():
    he = np.array([1.0, 0.0])
    W = np.zeros((3, 2, 2), dtype=complex)
    W[0, 0, 0] = 1.0
    W[1, 0, 0] = 2.0
    W[2, 0, 0] = 4.0
    ec, ep = eve_rates(he, W, 1.0)
    assert ec == pytest.approx(math.log2(1 + 4 / 4))
    np.testing.assert_allclose(ep, [math.log2(1 + 1 / 7), math.log2(1 + 2 / 6)])


def test_nonpositive_noise_rejected():
    with pytest.raises(DomainError):
        common_rate(np.ones(2), np.zeros((2, 2, 2)), 0.0)


def test_config_invariants():
    with pytest.raises(ValueError):
        RsmaConfig(1.0, [0.6, 0.6], 0.0, 1.0)
    with pytest.raises(ValueError):
        RsmaConfig(1.0, [0.5, 0.5], 0.0, 0.0)
    with pytest.raises(ValueError):
        RsmaConfig(1.0, [0.5, 0.5], 0.0, 1.0, sdma=True)
    assert RsmaConfig.uniform(2, 1.5, 0.0, 1.0, sdma=True).rc == 0.0


def test_aux_must_be_positive():
    with pytest.raises(DomainError):
        AuxVariables(m=np.array([1.0, 0.0]), l=1.0)
    with pytest.raises(DomainError):
        AuxVariables(m=np.ones(2), l=-1.0)


def test_sdma_reduction(rng):
    ch = random_channels(rng)
    cov = random_covariances(rng, 3, 4)
    cov[-1] = 0
    cfg = RsmaConfig.uniform(3, 0.0, 0.0, 1.0, sdma=True)
    _, ep = eve_rates(ch.h_e, cov, 1.0)
    rp = np.array([private_rate(ch.h[k], cov, 1.0, k) for k in range(3)])
    assert secrecy_sum_rate(ch, cov, cfg) == np.maximum(rp - ep, 0).sum()


def test_objective_matches_rate_differences(rng):
    """At a common rate within the cap the log objective equals the unclamped secrecy terms."""
    ch = random_channels(rng)
    cov = random_covariances(rng, 3, 4)
    cfg = RsmaConfig.uniform(3, 0.7, 0.0, 1.0)
    ec, ep = eve_rates(ch.h_e, cov, 1.0)
    rp = np.array([private_rate(ch.h[k], cov, 1.0, k) for k in range(3)])
    expect = cfg.alpha * (cfg.rc - ec) + rp - ep
    np.testing.assert_allclose(secure_rate_objective(ch, cov, cfg), expect, rtol=1e-12, atol=1e-12)


def test_sensing_energy_is_total_eve_power(rng):
    ch = random_channels(rng)
    cov = random_covariances(rng, 3, 4)
    expect = sum(np.real(ch.h_e.conj() @ W @ ch.h_e) for W in cov)
    assert sensing_energy(ch.h_e, cov) == pytest.approx(expect)


def test_beamformer_set_checks(rng):
    w = rng.standard_normal((3, 2)) + 0j
    b = BeamformerSet.from_vectors(w)
    assert b.check() == []
    assert b.total_power() == pytest.approx(np.sum(np.abs(w) ** 2))
    bad = BeamformerSet(-b.covariances)
    assert any("PSD" in p for p in bad.check())
    assert "power budget exceeded" in b.check(power_budget=0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_neg_log2_lower_bound_is_below_log_and_tight(m, n):
    assert neg_log2_lower_bound(m, n) <= -math.log2(n) + 1e-12 * max(1.0, abs(math.log2(n)))
    assert neg_log2_lower_bound(1.0 / n, n) == pytest.approx(-math.log2(n), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_surrogate_objective_is_tight_at_optimal_aux(seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng)
    cov = random_covariances(rng, 3, 4)
    cfg = RsmaConfig.uniform(3, 1.0, 0.0, 1.0)
    _, total = surrogate_objective(ch, cov, optimal_aux(ch, cov), cfg)
    assert total == pytest.approx(secure_rate_objective(ch, cov, cfg).sum(), abs=1e-9)
    other = AuxVariables(m=optimal_aux(ch, cov).m * rng.uniform(0.2, 5, 3), l=optimal_aux(ch, cov).l * rng.uniform(0.2, 5))
    assert surrogate_objective(ch, cov, other, cfg)[1] <= total + 1e-12


def test_update_robust_aux_inverts_bounds():
    aux = update_robust_aux([2.0, 4.0], 8.0)
    np.testing.assert_allclose(aux.m, [0.5, 0.25])
    assert aux.l == 0.125
    with pytest.raises(DomainError):
        update_robust_aux([0.0, 1.0], 2.0)
