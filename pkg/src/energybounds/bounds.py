"""Bounds on energy probabilities from the statistics of another measurement.

Notation: ``p`` are outcome probabilities of the performed measurement,
``p_E`` the (unknown) energy probabilities, ``a`` / ``b`` lower / upper
bounds on ``p_E``. All per-energy arrays are indexed by eigenvector index l,
so degenerate levels keep separate entries.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measurements import Measurement, Povm, ProjectiveBasis, outcome_probabilities
from .numeric import POLICY, InfeasibleBoundsError
from .spectral import Spectrum, evolve


@dataclass(frozen=True)
class Overlaps:
    """Measurement data expressed in the energy eigenbasis.

    For a projective basis ``amplitudes[i, l] = <i|E_l>``. For a POVM,
    ``sandwich[i] = <E|Pi_i|E'>`` and ``x``, ``y``, ``gamma``, ``volume``
    are the per-element scalars entering the generalized bounds.
    """

    projective: bool
    amplitudes: np.ndarray | None = None
    sandwich: np.ndarray | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    gamma: np.ndarray | None = None
    volume: np.ndarray | None = None

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def diagonal(self) -> np.ndarray:
        """<E|Pi_i|E> with shape (outcomes, N)."""
        if self.projective:
            return self.magnitudes**2
        return np.real(np.einsum("ill->il", self.sandwich))

    def forms(self) -> np.ndarray:
        """|<E|Pi_i|E'>| stacked over outcomes: the B matrices."""
        if self.projective:
            mag = self.magnitudes
            return mag[:, :, None] * mag[:, None, :]
        return np.abs(self.sandwich)


def overlap_data(m: Measurement, spec: Spectrum) -> Overlaps:
    if m.dim != spec.dim:
        raise ValueError(f"measurement dimension {m.dim} does not match spectrum dimension {spec.dim}")
    if isinstance(m, ProjectiveBasis):
        return Overlaps(projective=True, amplitudes=m.vectors @ spec.vectors)
    v = spec.vectors
    sandwich = np.array([v.conj().T @ el @ v for el in m.elements])
    n = m.n_outcomes
    x = np.zeros((n, spec.dim))
    y = np.zeros((n, spec.dim))
    gamma = np.ones(n)
    for i, (g, vecs) in enumerate(m.spectral):
        if g.size == 0:
            continue
        ov = np.abs(vecs.conj().T @ v) ** 2
        x[i] = np.min(g[:, None] * ov, axis=0)
        y[i] = np.max(ov, axis=0)
        gamma[i] = g.min()
    return Overlaps(projective=False, sandwich=sandwich, x=x, y=y, gamma=gamma, volume=m.volumes.copy())


def _finish(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = np.clip(b, 0.0, 1.0)
    a = np.clip(a, 0.0, None)
    return np.minimum(a, b), b


def pointwise_bounds(p: np.ndarray, ov: Overlaps) -> tuple[np.ndarray, np.ndarray]:
    """Projective bounds: b_E = (sum_i c_iE)^2, a_E = max(2 sum_i c_iE^2 - b_E, 0), c_iE = sqrt(p_i)|<i|E>|.

    ``p`` may carry leading batch axes (e.g. one row per time).
    """
    if not ov.projective:
        return povm_pointwise_bounds(p, ov)
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    mag = ov.magnitudes
    b = (np.sqrt(p) @ mag) ** 2
    a = 2.0 * (p @ mag**2) - b
    return _finish(a, b)


def povm_pointwise_bounds(p: np.ndarray, ov: Overlaps) -> tuple[np.ndarray, np.ndarray]:
    """Bounds for general POVMs and mixed states.

    a_E = max(sum_i p_i (x_iE + gamma_i y_iE) - (sum_i sqrt(p_i y_iE V_i))^2, 0)
    b_E = (sum_i sqrt(p_i <E|Pi_i|E>))^2
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    if ov.projective:
        diag = ov.magnitudes**2
        x, y, gamma, vol = diag, diag, np.ones(diag.shape[0]), np.ones(diag.shape[0])
    else:
        diag, x, y, gamma, vol = ov.diagonal, ov.x, ov.y, ov.gamma, ov.volume
    sp = np.sqrt(p)
    b = (sp @ np.sqrt(np.clip(diag, 0.0, None))) ** 2
    a = p @ (x + gamma[:, None] * y) - (sp @ np.sqrt(y * vol[:, None])) ** 2
    return _finish(a, b)


@dataclass(frozen=True)
class MeasurementSet:
    """Measurements paired with the times at which each is performed."""

    entries: tuple[tuple[Measurement, np.ndarray], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("measurement set is empty")
        for _, times in self.entries:
            if np.asarray(times).size == 0:
                raise ValueError("every measurement needs at least one time")

    @classmethod
    def single(cls, m: Measurement, times=(0.0,)) -> MeasurementSet:
        return cls(entries=((m, np.atleast_1d(np.asarray(times, dtype=float))),))

    @classmethod
    def of(cls, pairs) -> MeasurementSet:
        return cls(entries=tuple((m, np.atleast_1d(np.asarray(t, dtype=float))) for m, t in pairs))

    def __len__(self) -> int:
        return len(self.entries)


def time_grid(T: float = 160.0, points: int = 401, endpoint: bool = True) -> np.ndarray:
    if points < 1:
        raise ValueError("a time grid needs at least one point")
    if points == 1:
        return np.array([0.0])
    return np.linspace(0.0, T, points, endpoint=endpoint)


@dataclass(frozen=True)
class ProbabilityBounds:
    """Extremized bounds a_max <= p_E <= b_min and per-measurement outcome ranges."""

    a_max: np.ndarray
    b_min: np.ndarray
    p_min: tuple[np.ndarray, ...] = field(default=(), repr=False)
    p_max: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def table(self, values: np.ndarray) -> list[tuple[int, float, float, float]]:
        """Rows (l, E_l, a_max, b_min)."""
        return [(l, float(values[l]), float(self.a_max[l]), float(self.b_min[l])) for l in range(values.size)]


def probability_series(state: np.ndarray, spec: Spectrum, m: Measurement, times: np.ndarray) -> np.ndarray:
    """Outcome probabilities at each time under evolution by ``spec``, shape (T, outcomes)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    state = np.asarray(state)
    coeffs = spec.to_energy_basis(state)
    phases = np.exp(-1j * np.outer(spec.values, times))  # (N, T)
    if isinstance(m, ProjectiveBasis):
        amp = m.vectors @ spec.vectors
        if state.ndim == 1:
            p = np.abs(amp @ (coeffs[:, None] * phases)) ** 2
            p = p.T
        else:
            p = np.empty((times.size, m.n_outcomes))
            for j in range(times.size):
                rt = phases[:, j, None] * coeffs * phases[:, j].conj()[None, :]
                p[j] = np.real(np.einsum("il,lm,im->i", amp, rt, amp.conj()))
    else:
        v = spec.vectors
        sandwich = np.array([v.conj().T @ el @ v for el in m.elements])
        if state.ndim == 1:
            phi = coeffs[:, None] * phases
            p = np.real(np.einsum("lt,ilm,mt->ti", phi.conj(), sandwich, phi))
        else:
            p = np.empty((times.size, m.n_outcomes))
            for j in range(times.size):
                rt = phases[:, j, None] * coeffs * phases[:, j].conj()[None, :]
                p[j] = np.real(np.einsum("iml,lm->i", sandwich, rt))
    if p.min() < -POLICY.probability_sum:
        raise ValueError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    deficit = np.max(np.abs(p.sum(axis=1) - 1.0))
    if deficit > POLICY.probability_sum:
        raise ValueError(f"outcome probabilities do not sum to one (deficit {deficit:.3e})")
    return p


def cell_bounds(state, spec, m, times, conserved=True, propagator=None):
    """Bounds extremized over the times of one measurement: (a_max, b_min, p_min, p_max)."""
    ov = overlap_data(m, spec)
    if conserved:
        p = probability_series(state, spec, m, times)
    else:
        t = float(times[0])
        if t != 0 and propagator is None:
            raise ValueError("a non-conserved target at t != 0 needs the propagating Hamiltonian")
        current = state if t == 0 else evolve(state, propagator, t)
        p = outcome_probabilities(current, m)[None, :]
    if ov.projective:
        a, b = pointwise_bounds(p, ov)
    else:
        a, b = povm_pointwise_bounds(p, ov)
    return a.max(axis=0), b.min(axis=0), p.min(axis=0), p.max(axis=0)


def sweep(state: np.ndarray, spec: Spectrum, ms: MeasurementSet, *, conserved: bool = True,
          propagator: Spectrum | None = None, threads: int = 1) -> ProbabilityBounds:
    """Extremize the pointwise bounds over every (measurement, time) cell.

    For a target that is conserved by the dynamics (``conserved=True``) the
    state is evolved by ``spec`` itself. Otherwise all measurements must share
    one single time and the state is evolved by ``propagator``.
    """
    if not isinstance(ms, MeasurementSet):
        ms = MeasurementSet.of(ms)
    if not conserved:
        grids = [np.asarray(t) for _, t in ms.entries]
        if any(g.size != 1 for g in grids) or len({float(g[0]) for g in grids}) != 1:
            raise ValueError("a non-conserved target can only be bounded at a single common time")
    args = [(state, spec, m, np.asarray(t, dtype=float), conserved, propagator) for m, t in ms.entries]
    if threads > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(lambda a: cell_bounds(*a), args))
    else:
        cells = [cell_bounds(*a) for a in args]
    return combine_cells(cells)


def combine_cells(cells) -> ProbabilityBounds:
    """Extremize per-measurement cells into one set of bounds; raises when infeasible."""
    a_max = np.max([c[0] for c in cells], axis=0)
    b_min = np.min([c[1] for c in cells], axis=0)
    gap = float(np.max(a_max - b_min))
    if gap > POLICY.feasibility:
        raise InfeasibleBoundsError(f"lower bound exceeds upper bound by {gap:.3e}")
    a_max = np.minimum(a_max, b_min)
    pb = ProbabilityBounds(a_max=a_max, b_min=b_min,
                           p_min=tuple(c[2] for c in cells), p_max=tuple(c[3] for c in cells))
    check_feasible(pb.a_max, pb.b_min)
    return pb


def check_feasible(a: np.ndarray, b: np.ndarray, tol: float = POLICY.feasibility) -> None:
    if np.sum(a) > 1.0 + tol:
        raise InfeasibleBoundsError(f"sum of lower bounds a_max is {np.sum(a):.12g} > 1")
    if np.sum(b) < 1.0 - tol:
        raise InfeasibleBoundsError(f"sum of upper bounds b_min is {np.sum(b):.12g} < 1")


@dataclass(frozen=True)
class QuadraticConstraint:
    """sqrt(p)^T A sqrt(p) <= p_min and p_max <= sqrt(p)^T B sqrt(p) for one outcome.

    B_EE' = |<E|Pi|E'>| and A equals B with the off-diagonal signs flipped.
    """

    B: np.ndarray
    p_min: float
    p_max: float
    tag: tuple = ()

    @property
    def A(self) -> np.ndarray:
        return 2.0 * np.diag(np.diag(self.B)) - self.B

    def lower_form(self, sqrt_p: np.ndarray) -> float:
        return float(sqrt_p @ self.A @ sqrt_p)

    def upper_form(self, sqrt_p: np.ndarray) -> float:
        return float(sqrt_p @ self.B @ sqrt_p)


def quadratic_forms(m: Measurement, spec: Spectrum, p_min: Sequence[float] | None = None,
                    p_max: Sequence[float] | None = None, tag=()) -> list[QuadraticConstraint]:
    """One constraint per outcome. Without observed ranges the trivial range [0, 1] is used."""
    B = overlap_data(m, spec).forms()
    n = B.shape[0]
    lo = np.zeros(n) if p_min is None else np.asarray(p_min, dtype=float)
    hi = np.ones(n) if p_max is None else np.asarray(p_max, dtype=float)
    if lo.shape != (n,) or hi.shape != (n,):
        raise ValueError(f"expected {n} outcome ranges")
    return [QuadraticConstraint(B=B[i], p_min=float(lo[i]), p_max=float(hi[i]), tag=(*tag, i)) for i in range(n)]


def collective_constraints(ms: MeasurementSet, spec: Spectrum, pb: ProbabilityBounds) -> list[QuadraticConstraint]:
    quads = []
    for j, (m, _) in enumerate(ms.entries):
        quads.extend(quadratic_forms(m, spec, pb.p_min[j], pb.p_max[j], tag=(j,)))
    return quads


def fill(a: np.ndarray, b: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Greedy fill: every entry starts at a, then entries are topped up to b in ``order``
    until the total reaches one.

    Written as the recursion u_j = min{b_j, 1 - sum_{earlier} u - sum_{later} a}.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = np.empty_like(a)
    a_sorted = a[order]
    later = np.concatenate([np.cumsum(a_sorted[::-1])[::-1][1:], [0.0]])
    done = 0.0
    for pos, l in enumerate(order):
        u[l] = min(b[l], 1.0 - done - later[pos])
        done += u[l]
    return u


def moment_values(values: np.ndarray, moment: int = 1) -> np.ndarray:
    if moment < 1:
        raise ValueError(f"moment must be >= 1, got {moment}")
    return np.asarray(values, dtype=float) ** moment


def analytic_distributions(a: np.ndarray, b: np.ndarray, values: np.ndarray,
                           moment: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """The extremal distributions (u, w) attaining the lower and upper analytic bounds."""
    check_feasible(a, b)
    v = moment_values(values, moment)
    up = np.argsort(v, kind="stable")
    # descending by value, ties still by original index
    down = np.lexsort((np.arange(v.size), -v))
    return fill(a, b, up), fill(a, b, down)


def analytic_interval(pb: ProbabilityBounds | tuple[np.ndarray, np.ndarray], values: np.ndarray,
                      moment: int = 1) -> tuple[float, float]:
    """Exact extremes of sum_l E_l^k p_l over a <= p <= b, sum p = 1."""
    a, b = (pb.a_max, pb.b_min) if isinstance(pb, ProbabilityBounds) else pb
    u, w = analytic_distributions(a, b, values, moment)
    v = moment_values(values, moment)
    return float(v @ u), float(v @ w)


def quality_factors(lo: float, hi: float, spec: Spectrum | np.ndarray) -> tuple[float, float]:
    """Q1: percentage of the spectral range excluded; Q2: percentage of eigenstates excluded."""
    values = spec.values if isinstance(spec, Spectrum) else np.asarray(spec, dtype=float)
    e1, en = float(values[0]), float(values[-1])
    width = en - e1
    if width <= 0:
        raise ValueError("quality factors need a non-degenerate spectral range")
    if hi < lo:
        raise ValueError(f"interval is empty: lo={lo} > hi={hi}")
    q1 = (1.0 - (hi - lo) / width) * 100.0
    inside = np.count_nonzero((values >= lo) & (values <= hi))
    q2 = (1.0 - inside / values.size) * 100.0
    return q1, q2
