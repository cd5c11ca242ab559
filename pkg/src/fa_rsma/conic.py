"""Conic-program plumbing on top of cvxpy.

Complex Hermitian quantities are carried as (real, imaginary) pairs of cvxpy
expressions and reach the solver only through the real embedding
[[Re, -Im], [Im, Re]], so every PSD cone is real symmetric.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import cvxpy as cp
import numpy as np

TOL_ENV = "FA_RSMA_SOLVER_TOL"
DEFAULT_TOL = 1e-8
AUDIT_TOL = 1e-6
STATUSES = ("optimal", "infeasible", "unbounded", "max_iter", "numerical")


class ContractViolation(ValueError):
    pass


class ConstructionError(ValueError):
    pass


def default_tolerance() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    tol = float(raw)
    if not tol > 0:
        raise ContractViolation(f"{TOL_ENV} must be positive, got {raw!r}")
    return tol


def hermitian_embed(H: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractViolation("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * scale:
        raise ContractViolation("matrix is not Hermitian")
    return real_embed(H)


def real_embed(A: np.ndarray) -> np.ndarray:
    """Embedding of any complex matrix; a *-homomorphism, so products are preserved."""
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def hermitian_unembed(Z: np.ndarray) -> np.ndarray:
    n = Z.shape[0] // 2
    re = 0.5 * (Z[:n, :n] + Z[n:, n:])
    im = 0.5 * (Z[n:, :n] - Z[:n, n:])
    H = re + 1j * im
    return 0.5 * (H + H.conj().T)


# ------------------------------------------------------------ affine wrappers


def _expr(x):
    return x if isinstance(x, cp.Expression) else cp.Constant(np.asarray(x, dtype=float))


@dataclass
class ComplexAffine:
    """Complex affine expression stored as real and imaginary cvxpy parts."""

    re: object
    im: object

    @classmethod
    def const(cls, a) -> "ComplexAffine":
        a = np.asarray(a, dtype=complex)
        return cls(cp.Constant(a.real), cp.Constant(a.imag))

    def __add__(self, other: "ComplexAffine") -> "ComplexAffine":
        other = other if isinstance(other, ComplexAffine) else ComplexAffine.const(other)
        return ComplexAffine(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexAffine") -> "ComplexAffine":
        other = other if isinstance(other, ComplexAffine) else ComplexAffine.const(other)
        return ComplexAffine(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "ComplexAffine":
        return ComplexAffine(-self.re, -self.im)

    def scale(self, c) -> "ComplexAffine":
        """Multiply by a real scalar (constant or affine scalar times a constant part)."""
        return ComplexAffine(c * self.re, c * self.im)

    def lmul(self, A: np.ndarray) -> "ComplexAffine":
        """Constant complex matrix times this expression."""
        A = np.asarray(A, dtype=complex)
        return ComplexAffine(A.real @ self.re - A.imag @ self.im, A.real @ self.im + A.imag @ self.re)

    def rmul(self, A: np.ndarray) -> "ComplexAffine":
        """This (matrix) expression times a constant complex matrix or vector."""
        A = np.asarray(A, dtype=complex)
        return ComplexAffine(self.re @ A.real - self.im @ A.imag, self.re @ A.imag + self.im @ A.real)

    def is_affine(self) -> bool:
        return _expr(self.re).is_affine() and _expr(self.im).is_affine()

    @property
    def shape(self):
        return _expr(self.re).shape


def hermitian_sum(terms) -> ComplexAffine:
    terms = list(terms)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def re_inner(H, W: ComplexAffine):
    """Re Tr(H W) for a Hermitian H and Hermitian affine W.

    ``H`` is a complex array or a (real part, imaginary part) pair of parameters.
    """
    if isinstance(H, tuple):
        H_re, H_im = H
    else:
        H = np.asarray(H, dtype=complex)
        H_re, H_im = H.real, H.imag
    return cp.sum(cp.multiply(H_re, W.re)) + cp.sum(cp.multiply(H_im, W.im))


def quad(h: np.ndarray, W: ComplexAffine):
    """h^H W h as a real affine expression."""
    h = np.asarray(h, dtype=complex)
    return re_inner(np.outer(h, h.conj()), W)


def trace(W: ComplexAffine):
    return cp.trace(W.re)


def embed_expr(A: ComplexAffine):
    return cp.bmat([[A.re, -A.im], [A.im, A.re]])


def lmi_block(A, b, c):
    """PSD constraint on the Hermitian bordered matrix [[A, b], [b^H, c]].

    ``A`` is (n, n), ``b`` is a length-n vector, ``c`` a real scalar; each may be a
    constant or a :class:`ComplexAffine` (``c`` a real cvxpy expression).
    """
    A = A if isinstance(A, ComplexAffine) else ComplexAffine.const(A)
    b = b if isinstance(b, ComplexAffine) else ComplexAffine.const(b)
    c = _expr(c)
    if not (A.is_affine() and b.is_affine() and c.is_affine()):
        raise ConstructionError("bordered LMI entries must be affine in the decision variables")
    n = A.shape[0] if A.shape else 1
    if A.shape != (n, n) or b.shape not in ((n,), (n, 1)) or c.size != 1:
        raise ConstructionError(f"inconsistent bordered-LMI shapes {A.shape}, {b.shape}, {c.shape}")
    br = cp.reshape(b.re, (n, 1), order="F")
    bi = cp.reshape(b.im, (n, 1), order="F")
    cc = cp.reshape(c, (1, 1), order="F")
    zero = cp.Constant(np.zeros((1, 1)))
    re = cp.bmat([[A.re, br], [br.T, cc]])
    im = cp.bmat([[A.im, bi], [-bi.T, zero]])
    M = cp.bmat([[re, -im], [im, re]])
    return 0.5 * (M + M.T) >> 0


# ------------------------------------------------------------------- programs


@dataclass
class HermitianVariable:
    """An n x n Hermitian PSD decision matrix held as its 2n x 2n real embedding."""

    name: str
    n: int
    Z: cp.Variable = field(init=False)

    def __post_init__(self):
        self.Z = cp.Variable((2 * self.n, 2 * self.n), PSD=True, name=self.name)

    @property
    def affine(self) -> ComplexAffine:
        n = self.n
        return ComplexAffine(self.Z[:n, :n], self.Z[n:, :n])

    def structure_constraints(self) -> list:
        n = self.n
        return [self.Z[:n, :n] == self.Z[n:, n:], self.Z[n:, :n] + self.Z[:n, n:] == 0]

    def value(self) -> np.ndarray:
        return hermitian_unembed(np.asarray(self.Z.value))


class ConeProgram:
    """Named variables, named constraint families and a linear-or-concave objective."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.variables: dict[str, object] = {}
        self.parameters: dict[str, cp.Parameter] = {}
        self.families: dict[str, list] = {}
        self.objective = None
        self.sense = "max"
        self._problem: cp.Problem | None = None

    def scalar(self, name: str, shape=(), nonneg: bool = False) -> cp.Variable:
        self._fresh(name)
        v = cp.Variable(shape, name=name, nonneg=nonneg)
        self.variables[name] = v
        return v

    def parameter(self, name: str, shape=(), **attrs) -> cp.Parameter:
        """A named constant whose value may change between solves without rebuilding."""
        if name in self.parameters:
            raise ConstructionError(f"duplicate parameter {name!r}")
        p = cp.Parameter(shape, name=name, **attrs)
        self.parameters[name] = p
        return p

    def set(self, name: str, value) -> None:
        self.parameters[name].value = value

    def hermitian_psd(self, name: str, n: int) -> HermitianVariable:
        if n < 1:
            raise ConstructionError("PSD block order must be >= 1")
        self._fresh(name)
        v = HermitianVariable(name, n)
        self.variables[name] = v
        self.add("hermitian structure", v.structure_constraints())
        return v

    def _fresh(self, name: str):
        if name in self.variables:
            raise ConstructionError(f"duplicate variable {name!r}")

    def add(self, family: str, constraints) -> None:
        if not isinstance(constraints, (list, tuple)):
            constraints = [constraints]
        self.families.setdefault(family, []).extend(constraints)
        self._problem = None

    def set_objective(self, expr, sense: str = "max") -> None:
        if sense not in ("max", "min"):
            raise ConstructionError("sense must be 'max' or 'min'")
        self.objective, self.sense = expr, sense
        self._problem = None

    def problem(self) -> cp.Problem:
        if self._problem is None:
            if self.objective is None:
                raise ConstructionError("objective not set")
            obj = cp.Maximize(self.objective) if self.sense == "max" else cp.Minimize(self.objective)
            cons = [c for fam in self.families.values() for c in fam]
            declared = {id(v.Z if isinstance(v, HermitianVariable) else v) for v in self.variables.values()}
            prob = cp.Problem(obj, cons)
            stray = [v.name() for v in prob.variables() if id(v) not in declared]
            if stray:
                raise ConstructionError(f"constraints reference undeclared variables {stray}")
            self._problem = prob
        return self._problem

    def dump(self, path: str | Path, solver: str = "CLARABEL") -> None:
        """Write the standard-form data (min c'x s.t. b - A x in K) as text sparse triplets.

        Layout: ``# cones`` line with the cone dimensions, then ``c i value``,
        ``b i value`` and ``A row col value`` lines.
        """
        data, _, _ = self.problem().get_problem_data(solver)
        A = data["A"].tocoo()
        lines = [f"# program {self.name}", f"# cones {data['dims']}", f"# shape {A.shape[0]} {A.shape[1]}"]
        lines += [f"c {i} {v:.17g}" for i, v in enumerate(data["c"]) if v != 0]
        lines += [f"b {i} {v:.17g}" for i, v in enumerate(data["b"]) if v != 0]
        lines += [f"A {r} {c} {v:.17g}" for r, c, v in zip(A.row, A.col, A.data)]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class SolveReport:
    status: str
    objective: float | None
    values: dict
    primal_residual: float
    psd_residual: float
    family_residuals: dict
    solver_status: str
    solve_time: float

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _clarabel_options(tol: float) -> dict:
    return dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, tol_infeas_abs=tol, tol_infeas_rel=tol, max_iter=400)


def _constraint_residual(c) -> float:
    try:
        v = c.violation()
    except (ValueError, TypeError):
        return float("inf")
    v = np.asarray(v, dtype=float)
    return float(np.max(v)) if v.size else 0.0


def solve(program: ConeProgram, tol: float | None = None, residual_tol: float = AUDIT_TOL, solver: str = "CLARABEL") -> SolveReport:
    """Solve and audit a program.

    ``optimal`` is only reported when the solver converged and every constraint
    residual (PSD residuals as negative-eigenvalue magnitudes) is within
    ``residual_tol``.
    """
    tol = default_tolerance() if tol is None else tol
    prob = program.problem()
    opts = _clarabel_options(tol) if solver == "CLARABEL" else {}
    t0 = time.perf_counter()
    try:
        # a fresh solver each time: in-place data updates make results depend on solve history
        prob.solve(solver=solver, warm_start=False, **opts)
        raw = prob.status
    except cp.error.SolverError as exc:
        raw = f"solver_error: {exc}"
    elapsed = time.perf_counter() - t0

    if raw in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        status = "infeasible"
    elif raw in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        status = "unbounded"
    elif raw == cp.USER_LIMIT:
        status = "max_iter"
    elif raw in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        status = "optimal"
    else:
        status = "numerical"

    values = {}
    fam_res = {}
    primal = psd = float("nan")
    if status == "optimal":
        for name, v in program.variables.items():
            values[name] = v.value() if isinstance(v, HermitianVariable) else np.asarray(v.value, dtype=float)
        primal = psd = 0.0
        for fam, cons in program.families.items():
            worst = 0.0
            for c in cons:
                r = _constraint_residual(c)
                worst = max(worst, r)
                if isinstance(c, cp.constraints.PSD):
                    psd = max(psd, r)
                else:
                    primal = max(primal, r)
            fam_res[fam] = worst
        for v in program.variables.values():
            if isinstance(v, HermitianVariable):
                psd = max(psd, max(0.0, -float(np.linalg.eigvalsh(v.Z.value)[0])))
        if not (max(primal, psd) <= residual_tol) or prob.value is None or not np.isfinite(prob.value):
            status = "numerical"
    return SolveReport(
        status=status,
        objective=float(prob.value) if status == "optimal" else None,
        values=values,
        primal_residual=primal,
        psd_residual=psd,
        family_residuals=fam_res,
        solver_status=str(raw),
        solve_time=elapsed,
    )


# ------------------------------------------------------------------ rank one


@dataclass(frozen=True)
class RankOneResult:
    vector: np.ndarray
    residual: float
    degenerate: bool


def extract_rank_one(W: np.ndarray, tol: float = 1e-9) -> RankOneResult:
    """Dominant eigenpair sqrt(l1) u1, canonicalized so its largest-modulus entry is real >= 0.

    The residual is l2 / l1; a zero (l1 <= tol) beam is flagged degenerate with residual 0.
    """
    W = np.asarray(W, dtype=complex)
    W = 0.5 * (W + W.conj().T)
    lam, U = np.linalg.eigh(W)
    if lam[0] < -max(tol, 1e-8 * abs(lam[-1])):
        raise ContractViolation(f"matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    l1 = lam[-1]
    if l1 <= tol:
        return RankOneResult(np.zeros(W.shape[0], dtype=complex), 0.0, True)
    u = U[:, -1]
    j = int(np.argmax(np.abs(u)))
    u = u * np.exp(-1j * np.angle(u[j]))
    l2 = max(lam[-2], 0.0) if len(lam) > 1 else 0.0
    return RankOneResult(np.sqrt(l1) * u, float(l2 / l1), False)
