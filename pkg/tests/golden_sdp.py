"""Ten small SDPs with closed-form optimal values, built through the conic layer."""

import cvxpy as cp
import numpy as np

from fa_rsma import conic
from fa_rsma.conic import ComplexAffine, ConeProgram, lmi_block, re_inner, trace


def _herm(rng, n, psd=False):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T if psd else 0.5 * (A + A.conj().T)


def _psd_le(X: ComplexAffine, B):
    """B - X >= 0 through the real embedding."""
    D = ComplexAffine.const(B) - X
    M = conic.embed_expr(D)
    return 0.5 * (M + M.T) >> 0


def min_eig(rng):
    C = _herm(rng, 4)
    prog = ConeProgram("min eig")
    X = prog.hermitian_psd("X", 4).affine
    prog.add("trace", trace(X) == 1)
    prog.set_objective(re_inner(C, X), "min")
    return prog, float(np.linalg.eigvalsh(C)[0])


def max_eig_budget(rng):
    C = _herm(rng, 3)
    prog = ConeProgram("max eig")
    X = prog.hermitian_psd("X", 3).affine
    prog.add("budget", trace(X) <= 2.5)
    prog.set_objective(re_inner(C, X))
    return prog, 2.5 * max(float(np.linalg.eigvalsh(C)[-1]), 0.0)


def psd_cover(rng):
    A = _herm(rng, 4)
    prog = ConeProgram("cover")
    X = prog.hermitian_psd("X", 4).affine
    D = X - ComplexAffine.const(A)
    M = conic.embed_expr(D)
    prog.add("cover", 0.5 * (M + M.T) >> 0)
    prog.set_objective(trace(X), "min")
    lam = np.linalg.eigvalsh(A)
    return prog, float(lam[lam > 0].sum())


def beam_gain(rng):
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    prog = ConeProgram("gain")
    X = prog.hermitian_psd("X", 4).affine
    prog.add("budget", trace(X) <= 1)
    prog.set_objective(conic.quad(h, X))
    return prog, float(np.linalg.norm(h) ** 2)


def spectral_norm(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    prog = ConeProgram("norm")
    t = prog.scalar("t")
    n = 3
    eye = np.eye(n)
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, n:] = A
    big[n:, :n] = A.conj().T
    Z = ComplexAffine(t * np.eye(2 * n) - big.real, -big.imag)
    M = conic.embed_expr(Z)
    prog.add("norm", 0.5 * (M + M.T) >> 0)
    prog.set_objective(t, "min")
    return prog, float(np.linalg.norm(A, 2))


def schur(rng):
    A = _herm(rng, 3, psd=True) + np.eye(3)
    b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    prog = ConeProgram("schur")
    c = prog.scalar("c")
    prog.add("bordered", lmi_block(A, b, c))
    prog.set_objective(c, "min")
    return prog, float(np.real(b.conj() @ np.linalg.solve(A, b)))


def ky_fan(rng):
    C = _herm(rng, 5)
    prog = ConeProgram("ky fan")
    X = prog.hermitian_psd("X", 5).affine
    prog.add("trace", trace(X) == 2)
    prog.add("upper", _psd_le(X, np.eye(5)))
    prog.set_objective(re_inner(C, X))
    return prog, float(np.sort(np.linalg.eigvalsh(C))[-2:].sum())


def unit_diagonal(rng):
    C = _herm(rng, 2)
    prog = ConeProgram("unit diagonal")
    X = prog.hermitian_psd("X", 2).affine
    prog.add("diagonal", [X.re[0, 0] == 1, X.re[1, 1] == 1])
    prog.set_objective(re_inner(C, X), "min")
    return prog, float(np.real(C[0, 0] + C[1, 1]) - 2 * abs(C[0, 1]))


def interior_trust_region(rng):
    """min x^H A x + 2 Re{b^H x} + c over ||x|| <= eps with an interior minimizer, as an S-procedure SDP."""
    A = _herm(rng, 3, psd=True) + np.eye(3)
    x0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    x0 *= 0.5 / np.linalg.norm(x0)
    b = -A @ x0
    c = 0.3
    eps = 1.0
    prog = ConeProgram("trust region")
    gam = prog.scalar("gamma")
    o = prog.scalar("o", nonneg=True)
    Ab = ComplexAffine(A.real + o * np.eye(3), cp.Constant(A.imag))
    prog.add("certificate", lmi_block(Ab, b, c - gam - o * eps**2))
    prog.set_objective(gam)
    return prog, float(c - np.real(x0.conj() @ A @ x0))


def max_trace_two_budgets(rng):
    """max Re<C, X> with Tr X <= 1 and X_11 <= 0.2 for diagonal C: a small LP in disguise."""
    d = np.array([3.0, 2.0, 1.0])
    prog = ConeProgram("two budgets")
    X = prog.hermitian_psd("X", 3).affine
    prog.add("budget", [trace(X) <= 1, X.re[0, 0] <= 0.2])
    prog.set_objective(re_inner(np.diag(d), X))
    return prog, 0.2 * 3.0 + 0.8 * 2.0


GOLDEN = (min_eig, max_eig_budget, psd_cover, beam_gain, spectral_norm, schur, ky_fan, unit_diagonal, interior_trust_region, max_trace_two_budgets)


def golden_set(seed=0):
    rng = np.random.default_rng(seed)
    return [(f.__name__, *f(rng)) for f in GOLDEN]
