import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa_rsma import conic
from fa_rsma.channel import sample_error_sphere
from fa_rsma.conic import (
    ConeProgram,
    ConstructionError,
    ContractViolation,
    extract_rank_one,
    hermitian_embed,
    hermitian_unembed,
    lmi_block,
    re_inner,
    trace,
)
from fa_rsma.robust.sprocedure import ball_certificate, best_multiplier, certificate_margin, s_procedure_certificate
from fa_rsma.robust.worstcase import ball_extreme

from golden_sdp import golden_set


def herm(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_embedding_duplicates_spectrum(n, seed):
    H = herm(np.random.default_rng(seed), n)
    lam = np.linalg.eigvalsh(H)
    emb = np.linalg.eigvalsh(hermitian_embed(H))
    np.testing.assert_allclose(emb, np.sort(np.repeat(lam, 2)), atol=1e-10)


def test_embed_round_trip_and_products(rng):
    A, B = herm(rng, 3), herm(rng, 3)
    np.testing.assert_allclose(hermitian_unembed(hermitian_embed(A)), A, atol=1e-14)
    np.testing.assert_allclose(conic.real_embed(A @ B), conic.real_embed(A) @ conic.real_embed(B), atol=1e-12)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        hermitian_embed(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ContractViolation):
        hermitian_embed(np.ones((2, 3)))


def test_golden_sdp_set_matches_closed_forms():
    for name, prog, ref in golden_set(seed=7):
        rep = conic.solve(prog)
        assert rep.ok, name
        assert abs(rep.objective - ref) <= 1e-6 * max(1.0, abs(ref)), (name, rep.objective, ref)


def test_infeasible_program_reported():
    prog = ConeProgram()
    X = prog.hermitian_psd("X", 2).affine
    prog.add("trace", trace(X) == -1)
    prog.set_objective(trace(X))
    assert conic.solve(prog).status == "infeasible"


def test_unbounded_program_reported():
    prog = ConeProgram()
    X = prog.hermitian_psd("X", 2).affine
    prog.set_objective(trace(X))
    assert conic.solve(prog).status == "unbounded"


def test_solution_is_hermitian_psd(rng):
    C = herm(rng, 3)
    prog = ConeProgram()
    Xv = prog.hermitian_psd("X", 3)
    prog.add("trace", trace(Xv.affine) == 1)
    prog.set_objective(re_inner(C, Xv.affine), "min")
    rep = conic.solve(prog)
    X = rep.values["X"]
    np.testing.assert_allclose(X, X.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(X)[0] > -1e-7
    assert rep.psd_residual <= 1e-6 and rep.primal_residual <= 1e-6


def test_construction_errors():
    prog = ConeProgram()
    prog.scalar("t")
    with pytest.raises(ConstructionError):
        prog.scalar("t")
    with pytest.raises(ConstructionError):
        prog.problem()
    with pytest.raises(ConstructionError):
        prog.hermitian_psd("Z", 0)
    with pytest.raises(ConstructionError):
        lmi_block(np.eye(2), np.ones(3), 1.0)


def test_tolerance_override(monkeypatch):
    monkeypatch.setenv(conic.TOL_ENV, "1e-5")
    assert conic.default_tolerance() == 1e-5
    monkeypatch.setenv(conic.TOL_ENV, "-1")
    with pytest.raises(ContractViolation):
        conic.default_tolerance()
    monkeypatch.delenv(conic.TOL_ENV)
    assert conic.default_tolerance() == conic.DEFAULT_TOL


def test_dump_writes_triplets(tmp_path):
    _, prog, _ = golden_set()[0]
    conic.dump_path = tmp_path / "p.txt"
    prog.dump(conic.dump_path)
    text = conic.dump_path.read_text()
    assert "# cones" in text and "\nA " in text


def test_rank_one_extraction(rng):
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    r = extract_rank_one(np.outer(w, w.conj()))
    assert r.residual < 1e-12 and not r.degenerate
    np.testing.assert_allclose(np.outer(r.vector, r.vector.conj()), np.outer(w, w.conj()), atol=1e-10)
    j = np.argmax(np.abs(r.vector))
    assert abs(r.vector[j].imag) < 1e-12 and r.vector[j].real > 0
    assert extract_rank_one(np.zeros((3, 3))).degenerate
    assert extract_rank_one(np.diag([1.0, 0.5, 0.0])).residual == pytest.approx(0.5)
    with pytest.raises(ContractViolation):
        extract_rank_one(np.diag([1.0, -1.0]))


# ------------------------------------------------------------ S-procedure


def quad_value(A, b, c, x):
    return np.real(np.einsum("sn,nm,sm->s", x.conj(), A, x)) + 2 * np.real(x.conj() @ b) + c


def test_s_procedure_feasible_example():
    """||x|| <= 1 implies ||x||^2 - 2 <= 0; certified with multiplier 1."""
    n = 2
    assert certificate_margin(np.eye(n), np.zeros(n), -2.0, 1.0, 1.0) >= 0
    prog = ConeProgram()
    o = prog.scalar("o", nonneg=True)
    prog.add("cert", ball_certificate(np.eye(n), np.zeros(n), -2.0, 1.0, o))
    prog.set_objective(o, "min")
    assert conic.solve(prog).ok


def test_s_procedure_infeasible_example():
    """||x|| <= 1 does not imply ||x||^2 - 0.5 <= 0."""
    prog = ConeProgram()
    o = prog.scalar("o", nonneg=True)
    prog.add("cert", ball_certificate(np.eye(2), np.zeros(2), -0.5, 1.0, o))
    prog.set_objective(o, "min")
    assert conic.solve(prog).status == "infeasible"
    assert best_multiplier(np.eye(2), np.zeros(2), -0.5, 1.0)[1] < 0


def test_general_s_procedure_matches_ball_form(rng):
    A, b = herm(rng, 3), rng.standard_normal(3) + 1j * rng.standard_normal(3)
    eps = 0.7
    out = []
    for builder in ("ball", "general"):
        prog = ConeProgram()
        o = prog.scalar("o", nonneg=True)
        g = prog.scalar("g")
        if builder == "ball":
            prog.add("cert", ball_certificate(A, b, -g, eps, o))
        else:
            prog.add("cert", s_procedure_certificate(np.eye(3), np.zeros(3), -eps**2, A, b, -g, o))
        prog.set_objective(g, "min")
        out.append(conic.solve(prog).objective)
    assert out[0] == pytest.approx(out[1], rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_certified_level_is_sound_and_tight(seed):
    """The smallest level g with a ball certificate bounds every sampled point and equals the true maximum."""
    rng = np.random.default_rng(seed)
    n = 4
    A = herm(rng, n)
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    eps = rng.uniform(0.1, 1.0)
    prog = ConeProgram()
    o = prog.scalar("o", nonneg=True)
    g = prog.scalar("g")
    # (h + d)^H A (h + d) - g <= 0 for ||d|| <= eps
    prog.add("cert", ball_certificate(A, A @ h, float(np.real(h.conj() @ A @ h)) - g, eps, o))
    prog.set_objective(g, "min")
    rep = conic.solve(prog)
    level = rep.objective
    exact = ball_extreme(A, h, eps, "max").value
    assert level == pytest.approx(exact, rel=1e-6, abs=1e-7)
    d = np.concatenate([sample_error_sphere(2000, n, eps, rng), sample_error_sphere(2000, n, eps, rng) * rng.uniform(0, 1, (2000, 1))])
    vals = quad_value(A, A @ h, float(np.real(h.conj() @ A @ h)), d)
    assert np.all(vals <= level + 1e-7 * max(1.0, abs(level)))


def test_best_multiplier_certificate_sound_by_sampling(rng):
    n, violations, certified = 3, 0, 0
    for _ in range(40):
        A = herm(rng, n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        eps = rng.uniform(0.1, 1.0)
        c = -rng.uniform(0.0, 3.0) * (np.linalg.norm(A, 2) + np.linalg.norm(b))
        o, margin = best_multiplier(A, b, c, eps)
        if margin < 0:
            continue
        certified += 1
        d = sample_error_sphere(5000, n, eps, rng) * rng.uniform(0, 1, (5000, 1)) ** (1 / (2 * n))
        violations += int(np.sum(quad_value(A, b, c, d) > 0))
    assert certified >= 5 and violations == 0


def test_ball_extreme_against_sampling(rng):
    for _ in range(10):
        A = herm(rng, 3)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        eps = rng.uniform(0.05, 2.0)
        lo = ball_extreme(A, h, eps, "min")
        hi = ball_extreme(A, h, eps, "max")
        assert np.linalg.norm(lo.error) <= eps * (1 + 1e-9)
        x = h + sample_error_sphere(20000, 3, eps, rng) * rng.uniform(0, 1, (20000, 1)) ** (1 / 6)
        vals = np.real(np.einsum("sn,nm,sm->s", x.conj(), A, x))
        assert vals.min() >= lo.value - 1e-9 and vals.max() <= hi.value + 1e-9
        x_lo = h + lo.error
        assert np.real(x_lo.conj() @ A @ x_lo) == pytest.approx(lo.value, rel=1e-9, abs=1e-12)


def test_ball_extreme_hard_case():
    A = np.diag([-1.0, 2.0]).astype(complex)
    h = np.array([0.0, 0.1], dtype=complex)
    res = ball_extreme(A, h, 1.0, "min")
    # on the boundary d1^2 = 1 - d2^2; minimizing -1 + d2^2 + 2 (0.1 + d2)^2 gives d2 = -1/15
    d2 = -1 / 15
    assert res.value == pytest.approx(-1 + d2**2 + 2 * (0.1 + d2) ** 2, abs=1e-12)
    # pure hard case: no linear term along the negative eigenvector
    assert ball_extreme(A, np.zeros(2, dtype=complex), 1.0, "min").value == pytest.approx(-1.0, abs=1e-12)


def test_ball_extreme_zero_radius(rng):
    A = herm(rng, 3)
    h = rng.standard_normal(3) + 0j
    assert ball_extreme(A, h, 0.0).value == pytest.approx(np.real(h @ A @ h))
