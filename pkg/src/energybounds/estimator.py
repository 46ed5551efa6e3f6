"""Tight interval for a moment of the target observable over the full feasible set.

The feasible set combines the box a <= p <= b, normalization and the
collective quadratic constraints. The optimization runs in q = sqrt(p), where
the box becomes simple variable bounds, normalization the unit sphere, and
every collective constraint a smooth quadratic. Each side (min and max) is
solved from the analytic extremal distribution plus randomized starts inside
the linear feasible set.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .bounds import (ProbabilityBounds, QuadraticConstraint, analytic_distributions, analytic_interval,
                     check_feasible, fill, moment_values)
from .numeric import POLICY, InfeasibleBoundsError

METHODS = ("cobyla", "slsqp")


@dataclass(frozen=True)
class OptimizerSettings:
    constraint_tol: float = 1e-6
    objective_tol: float = 1e-8
    max_iter: int = 4000
    restarts: int = 8
    include_quadratic: bool = True
    method: str = "cobyla"
    polish: bool = True
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.constraint_tol <= 0 or self.objective_tol <= 0:
            raise ValueError("optimizer tolerances must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown optimizer method {self.method!r}; expected one of {METHODS}")
        if self.restarts < 0 or self.max_iter < 1:
            raise ValueError("restarts must be >= 0 and max_iter >= 1")


@dataclass(frozen=True)
class FeasibleSet:
    a: np.ndarray
    b: np.ndarray
    quads: tuple[QuadraticConstraint, ...] = ()

    def __post_init__(self):
        check_feasible(self.a, self.b)
        for q in self.quads:
            if q.p_min > q.p_max + POLICY.feasibility:
                raise InfeasibleBoundsError(f"constraint {q.tag}: p_min {q.p_min} exceeds p_max {q.p_max}")

    @classmethod
    def from_bounds(cls, pb: ProbabilityBounds, quads=()) -> FeasibleSet:
        return cls(a=pb.a_max, b=pb.b_min, quads=tuple(quads))

    @property
    def dim(self) -> int:
        return int(self.a.size)

    def residual(self, p: np.ndarray) -> float:
        """Largest violation of any constraint at the distribution ``p``."""
        p = np.asarray(p, dtype=float)
        viol = [abs(p.sum() - 1.0), float(np.max(self.a - p, initial=0.0)), float(np.max(p - self.b, initial=0.0))]
        s = np.sqrt(np.clip(p, 0.0, None))
        for q in self.quads:
            viol.append(q.lower_form(s) - q.p_min)
            viol.append(q.p_max - q.upper_form(s))
        return max(0.0, max(viol))


@dataclass
class EstimateResult:
    lo: float
    hi: float
    lo_lin: float
    hi_lin: float
    degraded: bool = False
    p_lo: np.ndarray | None = field(default=None, repr=False)
    p_hi: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)


class _Problem:
    """Objective and constraints restricted to the non-fixed coordinates of q."""

    def __init__(self, S: FeasibleSet, v: np.ndarray):
        a = np.clip(S.a, 0.0, 1.0)
        b = np.clip(S.b, 0.0, 1.0)
        self.free = np.flatnonzero(b - a > 1e-14)
        fixed = np.setdiff1d(np.arange(S.dim), self.free)
        self.n = S.dim
        self.q_fixed = np.zeros(S.dim)
        self.q_fixed[fixed] = np.sqrt(a[fixed])
        self.lower = np.sqrt(a[self.free])
        self.upper = np.sqrt(b[self.free])
        self.v = v
        if S.quads:
            B = np.array([q.B for q in S.quads])
            diag = np.einsum("mll->ml", B)
            A = -B.copy()
            idx = np.arange(S.dim)
            A[:, idx, idx] = diag
            self.forms = np.concatenate([A, B])  # (2m, N, N)
            self.sign = np.concatenate([-np.ones(len(S.quads)), np.ones(len(S.quads))])
            self.offset = np.concatenate([[q.p_min for q in S.quads], [-q.p_max for q in S.quads]])
        else:
            self.forms = np.zeros((0, S.dim, S.dim))
            self.sign = np.zeros(0)
            self.offset = np.zeros(0)

    def full(self, x: np.ndarray) -> np.ndarray:
        q = self.q_fixed.copy()
        q[self.free] = x
        return q

    def objective(self, x, sense):
        q = self.full(x)
        return sense * float(self.v @ (q * q))

    def objective_grad(self, x, sense):
        return sense * 2.0 * self.v[self.free] * x

    def quad_values(self, x):
        # >= 0 when satisfied: p_min - q^T A q and q^T B q - p_max
        q = self.full(x)
        return self.sign * np.einsum("i,mij,j->m", q, self.forms, q) + self.offset

    def quad_jac(self, x):
        q = self.full(x)
        return (2.0 * self.sign[:, None] * np.einsum("mij,j->mi", self.forms, q))[:, self.free]

    def sphere(self, x):
        q = self.full(x)
        return float(q @ q) - 1.0

    def sphere_grad(self, x):
        return 2.0 * x

    def to_p(self, x) -> np.ndarray:
        q = np.clip(self.full(x), 0.0, None)
        return q * q / float(q @ q)


def _run(problem: _Problem, x0: np.ndarray, sense: float, settings: OptimizerSettings):
    bounds = list(zip(problem.lower, problem.upper))
    x = np.clip(x0, problem.lower, problem.upper)
    iterations = 0
    if settings.method == "cobyla":
        cons = [{"type": "ineq", "fun": lambda y: np.atleast_1d(-problem.sphere(y))},
                {"type": "ineq", "fun": lambda y: np.atleast_1d(problem.sphere(y))}]
        if problem.forms.shape[0]:
            cons.append({"type": "ineq", "fun": problem.quad_values})
        res = minimize(problem.objective, x, args=(sense,), method="COBYLA", bounds=bounds, constraints=cons,
                       options={"rhobeg": 0.1, "tol": settings.objective_tol, "maxiter": settings.max_iter,
                                "catol": settings.constraint_tol * 1e-2})
        x = np.clip(res.x, problem.lower, problem.upper)
        iterations += int(res.nfev)
    if settings.method == "slsqp" or settings.polish:
        cons = [{"type": "eq", "fun": problem.sphere, "jac": lambda y: problem.sphere_grad(y)[None, :]}]
        if problem.forms.shape[0]:
            cons.append({"type": "ineq", "fun": problem.quad_values, "jac": problem.quad_jac})
        with warnings.catch_warnings():
            # SLSQP clips its own line-search steps to the bounds and says so every time
            warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
            res = minimize(problem.objective, x, args=(sense,), jac=problem.objective_grad, method="SLSQP",
                           bounds=bounds, constraints=cons,
                           options={"ftol": settings.objective_tol * 1e-4, "maxiter": settings.max_iter})
        x_pol = np.clip(res.x, problem.lower, problem.upper)
        iterations += int(res.nit)
        if np.all(np.isfinite(x_pol)):
            x = x_pol
    return x, iterations


def _starts(S: FeasibleSet, v: np.ndarray, warm: np.ndarray, settings: OptimizerSettings, side: int):
    starts = [warm]
    rng = np.random.Generator(np.random.PCG64([settings.seed, side]))
    for _ in range(settings.restarts):
        first = fill(S.a, S.b, rng.permutation(S.dim))
        second = fill(S.a, S.b, rng.permutation(S.dim))
        lam = rng.uniform()
        starts.append(lam * first + (1.0 - lam) * second)
    return starts


def _side(S: FeasibleSet, problem: _Problem, v: np.ndarray, warm: np.ndarray, sense: float,
          settings: OptimizerSettings, side: int):
    starts = _starts(S, v, warm, settings, side)

    def solve(p0):
        x, its = _run(problem, np.sqrt(np.clip(p0, 0.0, None))[problem.free], sense, settings)
        p = problem.to_p(x)
        return float(v @ p), S.residual(p), p, its

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            runs = list(pool.map(solve, starts))
    else:
        runs = [solve(p0) for p0 in starts]
    feasible = [(sense * val, i) for i, (val, res, _, _) in enumerate(runs) if res < settings.constraint_tol]
    diag = {"iterations": int(sum(r[3] for r in runs)), "restarts": len(starts),
            "feasible_starts": len(feasible)}
    if not feasible:
        diag["worst_residual"] = float(min(r[1] for r in runs))
        return None, None, diag
    _, best = min(feasible)  # ties go to the lowest start index
    val, res, p, _ = runs[best]
    diag["worst_residual"] = float(res)
    diag["best_start"] = best
    return val, p, diag


def constrained_interval(S: FeasibleSet, values: np.ndarray, moment: int = 1,
                         settings: OptimizerSettings | None = None) -> EstimateResult:
    """Minimize and maximize sum_l E_l^k p_l over the feasible set.

    The result always lies inside the analytic interval; a side on which no
    start reaches a feasible point falls back to the analytic value and the
    result is flagged ``degraded``.
    """
    settings = settings or OptimizerSettings()
    v = moment_values(values, moment)
    if v.size != S.dim:
        raise ValueError(f"{v.size} eigenvalues for a feasible set of dimension {S.dim}")
    lo_lin, hi_lin = analytic_interval((S.a, S.b), values, moment)
    u, w = analytic_distributions(S.a, S.b, values, moment)
    if not S.quads or not settings.include_quadratic:
        return EstimateResult(lo=lo_lin, hi=hi_lin, lo_lin=lo_lin, hi_lin=hi_lin, p_lo=u, p_hi=w,
                              diagnostics={"quadratic": False})
    problem = _Problem(S, v)
    diagnostics: dict = {"quadratic": True, "constraints": len(S.quads), "free": int(problem.free.size)}
    if problem.free.size == 0:
        p = problem.to_p(np.zeros(0))
        val = float(v @ p)
        lo_opt = hi_opt = val
        p_lo = p_hi = p
        diagnostics.update(lo={"restarts": 0}, hi={"restarts": 0})
    else:
        lo_opt, p_lo, diagnostics["lo"] = _side(S, problem, v, u, 1.0, settings, 0)
        hi_opt, p_hi, diagnostics["hi"] = _side(S, problem, v, w, -1.0, settings, 1)
    degraded = False
    if lo_opt is None:
        lo_opt, p_lo, degraded = lo_lin, u, True
    if hi_opt is None:
        hi_opt, p_hi, degraded = hi_lin, w, True
    clamped = []
    if lo_opt < lo_lin:
        clamped.append(("lo", lo_lin - lo_opt))
        lo_opt = lo_lin
    if hi_opt > hi_lin:
        clamped.append(("hi", hi_opt - hi_lin))
        hi_opt = hi_lin
    if lo_opt > hi_opt:
        # both sides converged to the same point up to solver noise
        mid = 0.5 * (lo_opt + hi_opt)
        lo_opt = hi_opt = mid
    if clamped:
        diagnostics["clamped"] = clamped
    return EstimateResult(lo=float(lo_opt), hi=float(hi_opt), lo_lin=lo_lin, hi_lin=hi_lin, degraded=degraded,
                          p_lo=p_lo, p_hi=p_hi, diagnostics=diagnostics)


def lp_oracle(a: np.ndarray, b: np.ndarray, values: np.ndarray, moment: int = 1) -> tuple[float, float]:
    """Extremes of sum_l E_l^k p_l over the box and simplex, solved as linear programs (HiGHS simplex)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    check_feasible(a, b)
    v = moment_values(values, moment)
    out = []
    for sense in (1.0, -1.0):
        res = linprog(sense * v, A_eq=np.ones((1, v.size)), b_eq=[1.0], bounds=list(zip(a, b)),
                      method="highs-ds", options={"primal_feasibility_tolerance": 1e-10,
                                                  "dual_feasibility_tolerance": 1e-10})
        if res.status != 0:
            raise InfeasibleBoundsError(f"linear program failed: {res.message}")
        out.append(float(v @ res.x))
    return out[0], out[1]
