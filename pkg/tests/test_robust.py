import math

import numpy as np
import pytest

from fa_rsma.channel import FaPlacement, sample_error_sphere
from fa_rsma.perfect.ao import AoConfig
from fa_rsma.perfect.beam import build_beam_problem
from fa_rsma.perfect.surrogates import hessian_fd, user_targets
from fa_rsma.rates import secure_rate_objective
from fa_rsma.robust.ao import evaluate, initial_robust_state, robust_certificates, run_algorithm2
from fa_rsma.robust.audit import robust_feasibility_audit
from fa_rsma.robust.beam import build_robust_beam_problem
from fa_rsma.robust.objective import robust_aux, robust_objective, robust_terms
from fa_rsma.robust.surrogates import (
    cross_term_bound,
    pairing_curvature,
    robust_gamma_surrogates,
    robust_position_surrogates,
    robust_ru_surrogate,
    robust_u_surrogates,
)

from conftest import make_scenario
from surrogate_checks import bound_slacks, gradient_errors, random_beams


@pytest.fixture(scope="module")
def scenario():
    return make_scenario(5, rel_err=0.01)


@pytest.fixture(scope="module")
def solved():
    sc = make_scenario(3)
    return sc, run_algorithm2(sc, AoConfig(n3_max=3))


# ------------------------------------------------------------- surrogates


def test_robust_bounds_hold(scenario):
    rng = np.random.default_rng(0)
    res = bound_slacks(scenario, random_beams(rng, 4, 4), rng, n_samples=400)
    for fam in ("Gamma", "U", "A"):
        assert res[fam][0] >= -1e-9 and res[fam][1] <= 1e-9, fam


def test_robust_gradients(scenario):
    rng = np.random.default_rng(1)
    errs = gradient_errors(scenario, random_beams(rng, 4, 4), rng, n_points=12)
    assert max(errs.values()) < 1e-5, errs


def test_pairing_curvature_formula(rng):
    X = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    expect = 16 * math.pi**2 / 0.01 * 0.2 * np.linalg.norm(X, axis=1).sum()
    assert pairing_curvature(X, 0.2, 0.1) == pytest.approx(expect)


def test_cross_term_curvature_dominates_hessian(rng):
    ang = rng.uniform(0, math.pi, (6, 2))
    X = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    eps = 0.3
    cr = cross_term_bound(X, ang, 0.1, np.zeros(2), eps)
    for d in sample_error_sphere(50, 4, eps, rng):
        p = rng.uniform(-0.15, 0.15, 2)
        H = hessian_fd(lambda x: cr.exact(x, d), p)
        assert np.linalg.norm(H, 2) <= cr.delta * 1.01


def test_zero_radius_reduces_to_perfect_surrogates(scenario, rng):
    cov = random_beams(rng, 4, 4)
    p_t = np.array([0.03, -0.02])
    g = scenario.geometry
    tg = user_targets(g, 2, cov, 1.0, scenario.config.rc)
    parts = (robust_gamma_surrogates(g, 2, cov, p_t, 0.0), robust_u_surrogates(g, 2, cov, p_t, 0.0), robust_ru_surrogate(g, 2, cov, scenario.config.rc, p_t, 0.0))
    zero = np.zeros(4)
    for part, target in zip(parts, (tg.neg_signal, tg.interference, tg.decodability)):
        assert part.cross.delta == 0
        sur = target.upper_surrogate(p_t)
        for p in rng.uniform(-0.1, 0.1, (10, 2)):
            assert part.bound(p, zero) == pytest.approx(sur(p), abs=1e-10)


def test_single_user_interference_is_noise_only(rng):
    sc = make_scenario(0, users=1)
    cov = random_beams(rng, 1, 4)
    part = robust_u_surrogates(sc.geometry, 0, cov, np.zeros(2), 0.5)
    assert np.abs(part.matrix).max() == 0 and part.curvature == 0
    d = sample_error_sphere(1, 4, 0.5, rng)[0]
    assert part.bound(np.array([0.05, 0.05]), d) == pytest.approx(1.0)


def test_no_common_stream_degenerates_decodability(scenario, rng):
    cov = random_beams(rng, 4, 4)
    cov[-1] = 0
    sur = robust_position_surrogates(scenario.geometry, cov, np.zeros((4, 2)), 0.0, scenario.eps)
    for s in sur:
        assert np.abs(s.decodability.matrix).max() == 0
        assert s.decodability.bound(np.array([0.01, 0.0]), np.ones(4) * 0.1) == pytest.approx(0.0, abs=1e-12)


# ------------------------------------------------------------ beam program


def test_zero_radius_beam_program_matches_perfect():
    sc = make_scenario(2).with_eps(0.0).singleton_grid()
    st = initial_robust_state(sc)
    ch = sc.channels(st.placement)
    aux = robust_aux(sc, st.beams, st.placement)
    rob = build_robust_beam_problem(ch.h, sc.eps, sc.eve_grid_channels(), aux, sc.config)
    per = build_beam_problem(ch, aux, sc.config)
    _, b_rob = rob.solve()
    _, b_per = per.solve()
    v_rob = secure_rate_objective(ch, b_rob, sc.config).sum()
    v_per = secure_rate_objective(ch, b_per, sc.config).sum()
    assert v_rob == pytest.approx(v_per, rel=1e-4)


def test_grid_constraints_are_replicated(scenario):
    st = initial_robust_state(scenario)
    ch = scenario.channels(st.placement)
    aux = robust_aux(scenario, st.beams, st.placement)
    grid = scenario.eve_grid_channels()
    assert len(grid) == 4
    one = build_robust_beam_problem(ch.h, scenario.eps, grid[:1], aux, scenario.config)
    four = build_robust_beam_problem(ch.h, scenario.eps, grid, aux, scenario.config)
    for fam in ("sensing", "eve common cap", "eve grid bounds"):
        assert len(four.program.families[fam]) == 4 * len(one.program.families[fam])


def test_beam_step_certificates_and_multipliers(scenario):
    st = initial_robust_state(scenario)
    ch = scenario.channels(st.placement)
    prob = build_robust_beam_problem(ch.h, scenario.eps, scenario.eve_grid_channels(), st.aux, scenario.config)
    rep, beams = prob.solve()
    assert rep.ok
    for name in ("o1", "o2", "o3"):
        assert np.all(rep.values[name] >= -1e-9)
    T = robust_terms(scenario, beams, st.placement)
    # the program's bounds are valid worst cases
    assert np.all(rep.values["xi"] <= T.signal + 1.0 + 1e-6 * (1 + T.signal))
    assert np.all(rep.values["tau4"] >= T.interference + 1.0 - 1e-6 * (1 + T.interference))
    assert np.max(T.decodability) <= 1e-6


# ----------------------------------------------------- AO, certificates, audit


def test_robust_trace_is_monotone(solved):
    _, res = solved
    acc = [t.objective for t in res.trace if t.accepted]
    assert all(b >= a - 1e-6 for a, b in zip(acc, acc[1:]))
    assert res.violation <= 1e-6


def test_certified_bound_does_not_exceed_sampled_worst_case(solved):
    sc, res = solved
    cert = res.certificates
    assert cert.worst_margin >= -1e-6
    rng = np.random.default_rng(0)
    beams, place = res.state.beams, res.placement
    h = sc.channels(place).h
    worst = np.inf
    # sampled worst case of the log objective: independent draws per user, every grid angle
    for _ in range(200):
        d = np.array([sample_error_sphere(1, sc.n_antennas, float(e), rng)[0] for e in sc.eps])
        ch = sc.channels(place)
        ch = type(ch)(h=h + d, h_e=ch.h_e, noise_user=ch.noise_user, noise_eve=ch.noise_eve, h_hat=h, eps=sc.eps)
        for g in sc.eve_grid_channels():
            ch_g = type(ch)(h=ch.h, h_e=g, noise_user=ch.noise_user, noise_eve=1.0, h_hat=h, eps=sc.eps)
            worst = min(worst, float(secure_rate_objective(ch_g, beams, sc.config).sum()))
    assert float(np.sum(cert.rate_bounds)) <= worst + 1e-4
    assert float(np.sum(cert.rate_bounds)) == pytest.approx(res.objective, abs=1e-9)


def test_audit_passes_and_negative_control_fails(solved):
    sc, res = solved
    rep = robust_feasibility_audit(sc, res.state.beams, res.placement, res.certificates, n_samples=2000)
    assert rep.passes, rep.margins
    cert = res.certificates
    shrunk = type(cert)({k: v * 0.5 for k, v in cert.multipliers.items()}, cert.margins, cert.signal_bound, cert.interference_bound, cert.beta, cert.psi, cert.rate_bounds)
    bad = robust_feasibility_audit(sc, res.state.beams, res.placement, shrunk, n_samples=2000)
    assert not bad.passes and "certificates" in bad.violations()


def test_audit_detects_overclaimed_bound(solved):
    sc, res = solved
    cert = res.certificates
    greedy = type(cert)(cert.multipliers, cert.margins, cert.signal_bound * 1.01, cert.interference_bound, cert.beta, cert.psi, cert.rate_bounds)
    rep = robust_feasibility_audit(sc, res.state.beams, res.placement, greedy, n_samples=2000)
    assert "certificates" in rep.violations()
    # far enough above the exact worst case that sampling sees it too
    much = type(cert)(cert.multipliers, cert.margins, cert.signal_bound * 1.5, cert.interference_bound, cert.beta, cert.psi, cert.rate_bounds)
    assert "signal" in robust_feasibility_audit(sc, res.state.beams, res.placement, much, n_samples=2000).violations()


def test_evaluate_matches_objective(solved):
    sc, res = solved
    val, terms = evaluate(sc, res.state.beams, res.placement)
    assert val == pytest.approx(robust_objective(sc, res.state.beams, res.placement).sum())
    assert val == pytest.approx(res.objective)


def test_certificates_with_zero_radius(solved):
    sc, res = solved
    sc0 = sc.with_eps(0.0)
    cert = robust_certificates(sc0, res.state.beams, FaPlacement(res.placement.positions))
    for fam, o in cert.multipliers.items():
        assert np.all(o == 0), fam
