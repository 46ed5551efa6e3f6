"""Projective and POVM measurements, k-local optimized bases and outcome statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from .models import ModelSpec, SymmetrySector, block_hamiltonians, check_compatible
from .numeric import POLICY
from .spectral import Spectrum, as_density, canonical_eigh, partial_trace


@dataclass(frozen=True)
class ProjectiveBasis:
    """Orthonormal measurement basis; row i of ``vectors`` is the bra <i|.

    ``blocks`` holds the per-block local unitaries when the basis is a
    product over contiguous blocks of the full 2**L space.
    """

    vectors: np.ndarray
    labels: tuple[str, ...]
    blocks: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        u = self.vectors
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"basis matrix must be square, got {u.shape}")
        if len(self.labels) != u.shape[0]:
            raise ValueError("one label per basis vector is required")
        err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) if u.size else 0.0
        if err > POLICY.orthonormality:
            raise ValueError(f"basis vectors are not orthonormal (max deviation {err:.3e})")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.vectors.shape[0]

    def as_povm(self) -> Povm:
        elements = tuple(np.outer(row.conj(), row) for row in self.vectors)
        return Povm(elements=elements, labels=self.labels)


@dataclass(frozen=True)
class Povm:
    elements: tuple[np.ndarray, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("a POVM needs at least one element")
        if len(self.labels) != len(self.elements):
            raise ValueError("one label per POVM element is required")
        dim = self.elements[0].shape[0]
        total = np.zeros((dim, dim), dtype=np.complex128)
        for i, el in enumerate(self.elements):
            if el.shape != (dim, dim):
                raise ValueError(f"element {i} has shape {el.shape}, expected {(dim, dim)}")
            if np.max(np.abs(el - el.conj().T)) > POLICY.orthonormality:
                raise ValueError(f"element {i} is not Hermitian")
            low = np.min(np.linalg.eigvalsh(0.5 * (el + el.conj().T)))
            if low < -POLICY.positivity:
                raise ValueError(f"element {i} is not positive semidefinite (eigenvalue {low:.3e})")
            total = total + el
        err = np.max(np.abs(total - np.eye(dim)))
        if err > POLICY.orthonormality:
            raise ValueError(f"POVM elements do not sum to the identity (max deviation {err:.3e})")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    @cached_property
    def spectral(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Per element: positive eigenvalues gamma_i^k and eigenvectors |i^k> as columns."""
        out = []
        for el in self.elements:
            g, v = np.linalg.eigh(0.5 * (el + el.conj().T))
            keep = g > POLICY.povm_rank
            out.append((np.minimum(g[keep], 1.0), v[:, keep]))
        return tuple(out)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.array([np.trace(el).real for el in self.elements])


Measurement = ProjectiveBasis | Povm


def outcome_probabilities(state: np.ndarray, m: Measurement) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] != m.dim:
        raise ValueError(f"state dimension {state.shape[0]} does not match measurement dimension {m.dim}")
    if isinstance(m, ProjectiveBasis):
        if state.ndim == 1:
            p = np.abs(m.vectors @ state) ** 2
        else:
            p = np.real(np.einsum("ij,jk,ik->i", m.vectors, state, m.vectors.conj()))
    else:
        rho = as_density(state)
        p = np.array([np.real(np.vdot(el, rho)) for el in m.elements])
    return _normalized(p)


def _normalized(p: np.ndarray) -> np.ndarray:
    if p.size and p.min() < -POLICY.probability_sum:
        raise ValueError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    deficit = 1.0 - p.sum(axis=-1)
    if np.max(np.abs(deficit)) > POLICY.probability_sum:
        raise ValueError(f"outcome probabilities do not sum to one (deficit {np.max(np.abs(deficit)):.3e})")
    return p


def computational_basis(sector: SymmetrySector) -> ProjectiveBasis:
    return ProjectiveBasis(vectors=np.eye(sector.dim, dtype=np.complex128), labels=tuple(sector.labels()))


def local_basis(op: np.ndarray, descending: bool = False) -> np.ndarray:
    """Unitary whose rows are the bras of the eigenbasis of a local operator."""
    _, vecs = canonical_eigh(op, descending=descending)
    return vecs.conj().T


def measurement_unitary(local_bases: Sequence[np.ndarray]) -> np.ndarray:
    """U = U^{A_1} (x) ... (x) U^{A_m}; rotating by U then reading out computationally measures the product basis."""
    if not local_bases:
        raise ValueError("at least one local basis is required")
    for b, u in enumerate(local_bases):
        u = np.asarray(u)
        err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if err > POLICY.orthonormality:
            raise ValueError(f"local basis {b} is not orthonormal (max deviation {err:.3e})")
    return reduce(np.kron, [np.asarray(u, dtype=np.complex128) for u in local_bases])


def product_basis(local_bases: Sequence[np.ndarray]) -> ProjectiveBasis:
    u = measurement_unitary(local_bases)
    dims = [b.shape[0] for b in local_bases]
    labels = tuple(".".join(str(i) for i in idx) for idx in np.ndindex(*dims))
    return ProjectiveBasis(vectors=u, labels=labels, blocks=tuple(np.asarray(b) for b in local_bases))


def restrict_to_sector(basis: ProjectiveBasis, sector: SymmetrySector) -> ProjectiveBasis:
    """Express a full-space basis inside a symmetry sector.

    Basis vectors are projected onto the sector; vanishing projections are
    dropped (their outcomes have zero probability for sector states). If the
    surviving projections are not already orthonormal they are orthonormalized
    in outcome order, and the basis is completed with computational vectors
    when rank-deficient.
    """
    if basis.dim == sector.dim:
        return basis
    if basis.dim != 2**sector.L:
        raise ValueError(f"basis of dimension {basis.dim} does not live in the full space of L={sector.L}")
    rows = basis.vectors[:, sector.indices]
    norms = np.linalg.norm(rows, axis=1)
    sel = np.flatnonzero(norms > POLICY.sector_drop)
    if sel.size == sector.dim:
        cand = rows[sel] / norms[sel, None]
        if np.max(np.abs(cand @ cand.conj().T - np.eye(sector.dim))) <= POLICY.orthonormality:
            return ProjectiveBasis(vectors=cand, labels=tuple(basis.labels[i] for i in sel))
    kept: list[np.ndarray] = []
    labels: list[str] = []
    for i in sel:
        v = rows[i].copy()
        for _ in range(2):
            for u in kept:
                v -= (u.conj() @ v) * u
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            kept.append(v / nrm)
            labels.append(basis.labels[i])
        if len(kept) == sector.dim:
            break
    for j in range(sector.dim):
        if len(kept) == sector.dim:
            break
        v = np.zeros(sector.dim, dtype=np.complex128)
        v[j] = 1.0
        for _ in range(2):
            for u in kept:
                v -= (u.conj() @ v) * u
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            kept.append(v / nrm)
            labels.append(f"fill{j}")
    return ProjectiveBasis(vectors=np.array(kept), labels=tuple(labels))


def _check_block(L: int, k: int) -> None:
    if k < 1 or L % k:
        raise ValueError(f"block size k={k} does not divide L={L}")


def _lift(state: np.ndarray, L: int, sector: SymmetrySector | None) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] == 2**L:
        return state
    if sector is None or state.shape[0] != sector.dim:
        raise ValueError(f"state of dimension {state.shape[0]} is neither full-space (2**{L}) nor in the given sector")
    if state.ndim == 1:
        return sector.embed(state)
    full = np.zeros((2**L, 2**L), dtype=np.complex128)
    full[np.ix_(sector.indices, sector.indices)] = state
    return full


def klocal_ground_state_basis(state: np.ndarray, L: int, k: int,
                              sector: SymmetrySector | None = None) -> ProjectiveBasis:
    """Product of the eigenbases of the k-site reduced states of ``state`` (local Schmidt bases).

    Eigenvectors are ordered by descending weight. With ``sector`` the state
    may be given in sector coordinates and the result is restricted to it.
    """
    _check_block(L, k)
    full = _lift(state, L, sector)
    dims = [2] * L
    local = []
    for b in range(L // k):
        sites = range(b * k, (b + 1) * k)
        if full.ndim == 1:
            psi = full.reshape(2 ** (b * k), 2**k, 2 ** (L - (b + 1) * k))
            rho = np.einsum("akc,alc->kl", psi, psi.conj())
        else:
            rho = partial_trace(full, dims, list(sites))
        local.append(local_basis(rho, descending=True))
    basis = product_basis(local)
    return restrict_to_sector(basis, sector) if sector is not None else basis


def klocal_observable_basis_type1(spec: ModelSpec, sector: SymmetrySector | None, k: int) -> ProjectiveBasis:
    """Eigenbasis of the Hamiltonian with every block-crossing term removed.

    The truncated Hamiltonian is a sum of commuting block operators, so its
    eigenbasis is taken as the product of per-block eigenbases, which keeps
    the measurement k-local even inside degenerate levels.
    """
    if sector is not None:
        check_compatible(spec, sector)
    local = [local_basis(h) for h in block_hamiltonians(spec, k)]
    basis = product_basis(local)
    return restrict_to_sector(basis, sector) if sector is not None else basis


def klocal_observable_basis_type2(H: np.ndarray, L: int, k: int,
                                  sector: SymmetrySector | None = None) -> ProjectiveBasis:
    """Product of eigenbases of the partial traces of the full-space ``H`` onto each block."""
    _check_block(L, k)
    H = np.asarray(H)
    if H.shape != (2**L, 2**L):
        raise ValueError(f"type-2 bases need the full-space Hamiltonian of shape {(2**L, 2**L)}, got {H.shape}")
    dims = [2] * L
    local = []
    for b in range(L // k):
        reduced = partial_trace(H, dims, list(range(b * k, (b + 1) * k)))
        local.append(local_basis(reduced))
    basis = product_basis(local)
    return restrict_to_sector(basis, sector) if sector is not None else basis


def pauli_x_basis(L: int, sector: SymmetrySector | None = None) -> ProjectiveBasis:
    """Every site measured in the sigma^x eigenbasis {|+>, |->}."""
    plus_minus = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    basis = product_basis([plus_minus] * L)
    labels = tuple(lab.replace("0", "+").replace("1", "-").replace(".", "") for lab in basis.labels)
    basis = ProjectiveBasis(vectors=basis.vectors, labels=labels, blocks=basis.blocks)
    return restrict_to_sector(basis, sector) if sector is not None else basis


def coarse_energy_povm(spec: Spectrum, delta_e: float) -> Povm:
    """Projectors onto energy windows [E_1 + m dE, E_1 + (m+1) dE); empty windows are omitted."""
    if not delta_e > 0:
        raise ValueError(f"energy resolution must be positive, got {delta_e}")
    e1 = spec.values[0]
    bins = np.floor((spec.values - e1) / delta_e + 1e-9).astype(np.int64)
    elements = []
    labels = []
    for m in np.unique(bins):
        cols = spec.vectors[:, bins == m]
        elements.append(cols @ cols.conj().T)
        labels.append(repr(float(e1 + m * delta_e)))
    return Povm(elements=tuple(elements), labels=tuple(labels))


def observational_entropy(p: np.ndarray, volumes: np.ndarray | None = None) -> float:
    """-sum_i p_i ln(p_i / V_i); empty outcomes contribute nothing."""
    p = np.asarray(p, dtype=float)
    v = np.ones_like(p) if volumes is None else np.asarray(volumes, dtype=float)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz] / v[nz])))


def volumes(m: Measurement) -> np.ndarray:
    if isinstance(m, ProjectiveBasis):
        return np.ones(m.n_outcomes)
    return m.volumes
