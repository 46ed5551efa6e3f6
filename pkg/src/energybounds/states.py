"""Initial states: ground (G), pure thermal "cold" (C) and Haar-random "hot" (H)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Spectrum

STATE_KINDS = ("ground", "pure-thermal", "haar", "amplitudes", "bloch")


@dataclass(frozen=True)
class StateSpec:
    kind: str
    beta: float | None = None
    seed: int | None = None
    # kind="amplitudes": real and imaginary parts in the computational basis
    real: tuple[float, ...] | None = None
    imag: tuple[float, ...] | None = None
    # kind="bloch": single-qubit polar and azimuthal angles
    theta: float | None = None
    phi: float | None = None

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}; expected one of {STATE_KINDS}")
        if self.beta is not None and self.beta < 0:
            raise ValueError(f"inverse temperature must be >= 0, got {self.beta}")

    @property
    def label(self) -> str:
        return {"ground": "G", "pure-thermal": "C", "haar": "H"}.get(self.kind, self.kind)


def ground_state(spec: Spectrum) -> np.ndarray:
    if spec.dim == 0:
        raise ValueError("empty spectrum has no ground state")
    return spec.vectors[:, 0].copy()


def default_beta(spec: Spectrum) -> float:
    width = spec.spread
    if width <= 0:
        raise ValueError("default inverse temperature needs E_N > E_1")
    return 6.0 / width


def pure_thermal(spec: Spectrum, beta: float | None = None) -> np.ndarray:
    """(1/N) sum_E exp(-beta E / 2) |E>, with beta = 6 / (E_N - E_1) by default."""
    if spec.dim == 0:
        raise ValueError("empty spectrum")
    if beta is None:
        beta = default_beta(spec)
    # shifting by E_1 only changes the normalization and avoids overflow
    weights = np.exp(-0.5 * beta * (spec.values - spec.values[0]))
    weights /= np.linalg.norm(weights)
    return spec.vectors @ weights.astype(np.complex128)


def haar_random(dim: int, seed: int | None = None) -> np.ndarray:
    """Haar-distributed pure state; global phase fixed so the first amplitude is real positive."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    rng = np.random.Generator(np.random.PCG64(seed))
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    lead = vec[0]
    if abs(lead) > 0:
        vec *= abs(lead) / lead
    return vec


def bloch_state(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=np.complex128)


def prepare(state: StateSpec, spec: Spectrum, default_seed: int = 0) -> np.ndarray:
    if state.kind == "ground":
        return ground_state(spec)
    if state.kind == "pure-thermal":
        return pure_thermal(spec, state.beta)
    if state.kind == "haar":
        return haar_random(spec.dim, default_seed if state.seed is None else state.seed)
    if state.kind == "bloch":
        if spec.dim != 2:
            raise ValueError("bloch states need a two-dimensional Hilbert space")
        return bloch_state(state.theta, state.phi)
    vec = np.asarray(state.real, dtype=float) + 1j * np.asarray(state.imag or [0.0] * len(state.real), dtype=float)
    if vec.size != spec.dim:
        raise ValueError(f"state has {vec.size} amplitudes, Hilbert space has dimension {spec.dim}")
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("amplitude vector is zero")
    return vec / nrm
