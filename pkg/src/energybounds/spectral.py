"""Dense Hermitian diagonalization, unitary evolution and partial traces.

States are plain numpy arrays: a 1-d complex vector is a pure state, a
square 2-d array is a density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numeric import POLICY


class NonHermitianError(ValueError):
    pass


def hermitian_asymmetry(op: np.ndarray) -> float:
    op = np.asarray(op)
    if op.size == 0:
        return 0.0
    return float(np.max(np.abs(op - op.conj().T)))


def check_hermitian(op: np.ndarray, tol: float = POLICY.hermiticity) -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    asym = hermitian_asymmetry(op)
    if asym > tol:
        raise NonHermitianError(f"operator is not Hermitian: max |H - H^dagger| = {asym:.3e}")
    return op


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in ascending order and eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @property
    def ground_energy(self) -> float:
        return float(self.values[0])

    @property
    def spread(self) -> float:
        return float(self.values[-1] - self.values[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def to_energy_basis(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state)
        if state.ndim == 1:
            return self.vectors.conj().T @ state
        return self.vectors.conj().T @ state @ self.vectors

    def populations(self, state: np.ndarray) -> np.ndarray:
        """Energy probabilities p_l = <E_l|rho|E_l>."""
        coeffs = self.to_energy_basis(state)
        if coeffs.ndim == 1:
            return np.abs(coeffs) ** 2
        return np.clip(np.real(np.diag(coeffs)), 0.0, None)


def eig_hermitian(op: np.ndarray) -> Spectrum:
    op = check_hermitian(op)
    # symmetrize so eigh sees exactly Hermitian input
    herm = 0.5 * (op + op.conj().T)
    values, vectors = np.linalg.eigh(herm.astype(np.complex128))
    return Spectrum(values=np.asarray(values, dtype=float), vectors=vectors)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(vec) > 1e-12)
    if idx.size == 0:
        return vec
    lead = vec[idx[0]]
    return vec * (abs(lead) / lead)


def _lexicographic_span(projector: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of range(projector) from Gram-Schmidt on its columns in index order."""
    dim = projector.shape[0]
    for threshold in (1e-2, 1e-5, 1e-8):
        found: list[np.ndarray] = []
        for j in range(dim):
            v = projector[:, j].copy()
            for u in found:
                v -= (u.conj() @ v) * u
            nrm = np.linalg.norm(v)
            if nrm > threshold:
                v = projector @ (v / nrm)
                for u in found:
                    v -= (u.conj() @ v) * u
                found.append(_fix_phase(v / np.linalg.norm(v)))
                if len(found) == rank:
                    return np.column_stack(found)
    raise np.linalg.LinAlgError("could not span degenerate eigenspace")


def canonical_eigh(mat: np.ndarray, descending: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with a reproducible basis inside degenerate levels.

    Levels closer than the degeneracy tolerance are treated as one eigenspace,
    whose basis is rebuilt by Gram-Schmidt on the projected computational
    basis vectors taken in index order. Each vector's first non-negligible
    component is made real positive. Because the projector commutes with any
    symmetry of ``mat``, the rebuilt vectors inherit definite quantum numbers.
    """
    mat = check_hermitian(mat, tol=max(POLICY.hermiticity, 1e-12 * max(1.0, float(np.max(np.abs(mat))))))
    values, vectors = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    if descending:
        values, vectors = values[::-1], vectors[:, ::-1]
    vectors = np.array(vectors, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    tol = POLICY.degeneracy * scale
    start = 0
    n = values.size
    while start < n:
        stop = start + 1
        while stop < n and abs(values[stop] - values[stop - 1]) <= tol:
            stop += 1
        block = vectors[:, start:stop]
        if stop - start == 1:
            vectors[:, start] = _fix_phase(block[:, 0])
        else:
            projector = block @ block.conj().T
            vectors[:, start:stop] = _lexicographic_span(projector, stop - start)
            values[start:stop] = np.mean(values[start:stop])
        start = stop
    return np.asarray(values, dtype=float), vectors


def evolve(state: np.ndarray, spectrum: Spectrum, t: float) -> np.ndarray:
    """Apply exp(-iHt) to a state vector or conjugate a density matrix by it."""
    state = np.asarray(state)
    if state.shape[0] != spectrum.dim:
        raise ValueError(f"state dimension {state.shape[0]} does not match spectrum dimension {spectrum.dim}")
    if t == 0:
        return state.copy()
    phases = np.exp(-1j * spectrum.values * t)
    v = spectrum.vectors
    if state.ndim == 1:
        return v @ (phases * (v.conj().T @ state))
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise ValueError(f"state must be a vector or square matrix, got shape {state.shape}")
    u = (v * phases) @ v.conj().T
    return u @ state @ u.conj().T


def as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def check_state(state: np.ndarray) -> np.ndarray:
    """Validate a pure state (unit norm) or a density matrix (Hermitian, trace one, PSD)."""
    state = np.asarray(state)
    if state.ndim == 1:
        nrm = np.linalg.norm(state)
        if abs(nrm - 1.0) > POLICY.norm:
            raise ValueError(f"state vector is not normalized: norm = {nrm:.12g}")
        return state
    check_hermitian(state)
    tr = np.trace(state).real
    if abs(tr - 1.0) > POLICY.trace:
        raise ValueError(f"density matrix trace is {tr:.12g}, expected 1")
    low = float(np.min(np.linalg.eigvalsh(0.5 * (state + state.conj().T))))
    if low < -POLICY.positivity:
        raise ValueError(f"density matrix has negative eigenvalue {low:.3e}")
    return state


def partial_trace(rho: np.ndarray, site_dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the sites in ``keep`` (kept in ascending order)."""
    site_dims = [int(d) for d in site_dims]
    rho = as_density(rho)
    total = int(np.prod(site_dims)) if site_dims else 1
    if rho.shape != (total, total):
        raise ValueError(f"site dimensions {site_dims} multiply to {total}, but the state has shape {rho.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(site_dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(site_dims)} sites")
    n = len(site_dims)
    traced = [s for s in range(n) if s not in keep]
    tensor = rho.reshape(site_dims + site_dims)
    perm = keep + traced
    tensor = tensor.transpose(perm + [n + s for s in perm])
    dk = int(np.prod([site_dims[s] for s in keep])) if keep else 1
    dt = int(np.prod([site_dims[s] for s in traced])) if traced else 1
    tensor = tensor.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", tensor)
