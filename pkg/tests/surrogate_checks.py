"""Sampled bound, tightness and finite-difference checks shared by the unit and acceptance suites."""

import numpy as np

from fa_rsma.channel import sample_error_sphere
from fa_rsma.perfect.surrogates import linear_phase_gradient, linear_phase_value, user_targets
from fa_rsma.robust.surrogates import robust_gamma_surrogates, robust_ru_surrogate, robust_u_surrogates

PERFECT = ("J", "T", "D")
ROBUST = ("Gamma", "U", "A")


def random_beams(rng, users, antennas):
    """Random covariances (K+1 of them, ranks 1 to N) with unit total power."""
    cov = []
    for _ in range(users + 1):
        r = int(rng.integers(1, antennas + 1))
        w = rng.standard_normal((antennas, r)) + 1j * rng.standard_normal((antennas, r))
        cov.append(w @ w.conj().T)
    cov = np.array(cov)
    return cov / np.real(np.einsum("inn->", cov))


def region_points(rng, half, n):
    return rng.uniform(-half, half, (n, 2))


def perfect_parts(scenario, cov, k, p_t):
    tg = user_targets(scenario.geometry, k, cov, 1.0, scenario.config.rc)
    return {"J": tg.neg_signal, "T": tg.interference, "D": tg.decodability}


def robust_parts(scenario, cov, k, p_t, eps):
    g = scenario.geometry
    return {
        "Gamma": robust_gamma_surrogates(g, k, cov, p_t, eps),
        "U": robust_u_surrogates(g, k, cov, p_t, eps),
        "A": robust_ru_surrogate(g, k, cov, scenario.config.rc, p_t, eps),
    }


def bound_slacks(scenario, cov, rng, n_samples=1000):
    """Per surrogate family: (min of bound - target over samples, max |bound - target| at the expansion)."""
    half = scenario.geometry.half_side
    N = scenario.n_antennas
    out = {f: [np.inf, 0.0] for f in PERFECT + ROBUST}
    for k in range(scenario.n_users):
        p_t = region_points(rng, half, 1)[0]
        ps = region_points(rng, half, n_samples)
        for name, target in perfect_parts(scenario, cov, k, p_t).items():
            sur = target.upper_surrogate(p_t)
            slack = min(sur(p) - target(p) for p in ps)
            out[name][0] = min(out[name][0], slack)
            out[name][1] = max(out[name][1], abs(sur(p_t) - target(p_t)))
        eps = float(scenario.eps[k])
        d = sample_error_sphere(n_samples, N, eps, rng) * rng.uniform(0, 1, (n_samples, 1)) ** (1 / (2 * N))
        d[: n_samples // 2] = sample_error_sphere(n_samples // 2, N, eps, rng)
        for name, part in robust_parts(scenario, cov, k, p_t, eps).items():
            slack = min(part.bound(p, dd) - part.exact(p, dd) for p, dd in zip(ps, d))
            tight = max(abs(part.bound(p_t, dd) - part.exact(p_t, dd)) for dd in d[:50])
            out[name][0] = min(out[name][0], slack)
            out[name][1] = max(out[name][1], tight)
    return {f: tuple(v) for f, v in out.items()}


def _fd(fun, p, h):
    e = np.eye(2) * h
    return np.array([(fun(p + e[i]) - fun(p - e[i])) / (2 * h) for i in range(2)])


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def gradient_errors(scenario, cov, rng, n_points=50, h=1e-6):
    """Worst relative error of each analytic gradient against central differences with step h (meters).

    J, T, D, C (signal estimate), U2 (interference estimate), D-robust: gradient
    of the majorizer's linear phase term at the expansion point. Gamma1, z2, A:
    Jacobian of the error pairing vector. cross: gradient of the exact cross term
    at a fixed error.
    """
    half = scenario.geometry.half_side
    N = scenario.n_antennas
    worst = {}

    def note(name, err):
        worst[name] = max(worst.get(name, 0.0), err)

    for i in range(n_points):
        k = i % scenario.n_users
        p = region_points(rng, half, 1)[0]
        for name, target in perfect_parts(scenario, cov, k, p).items():
            q, kappa = target.linear_term(p)
            note(name, _rel(linear_phase_gradient(q, kappa, p), _fd(lambda x: linear_phase_value(q, kappa, x), p, h)))
            note(name + " exact", _rel(target.gradient(p), _fd(target, p, h)))
        eps = max(float(scenario.eps[k]), 1e-3)
        d = sample_error_sphere(1, N, eps, rng)[0]
        for name, part in robust_parts(scenario, cov, k, p, eps).items():
            q, kappa = part.estimate_target.linear_term(p)
            note(name + " estimate", _rel(part.estimate.gradient, _fd(lambda x: linear_phase_value(q, kappa, x), p, h)))
            cr = part.cross
            pair = lambda x: cr.mixing.conj().T @ np.exp(1j * (cr.kappa @ x))  # noqa: E731
            fd_jac = np.stack([(pair(p + h * e) - pair(p - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
            note(name + " pairing", _rel(cr.jacobian, fd_jac))
            note(name + " cross", _rel(cr.gradient(p, d), _fd(lambda x: cr.exact(x, d), p, h)))
    return worst
