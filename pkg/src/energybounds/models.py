"""Disordered spin-chain Hamiltonians and their symmetry sectors.

Sites are numbered 0..L-1 and site 0 is the most significant bit of a
computational-basis index, so basis labels read left to right along the
chain and match ``np.kron`` ordering. A bit value 1 is an occupied site
("particle"), i.e. the sigma^z = -1 state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from math import comb

import numpy as np

KINDS = ("heisenberg", "ising", "xy", "pxp", "diagonal")
SECTOR_KINDS = ("full", "spin-z", "parity-even", "parity-odd")

_DEFAULTS = {
    "ising": {"J0": 1.0, "alpha": 1.13, "B": 4.0},
    "xy": {"J0": 1.0, "alpha": 1.24, "B": 0.0},
    "pxp": {"omega": 1.0},
}

_COMPATIBLE = {
    "heisenberg": {"full", "spin-z", "parity-even", "parity-odd"},
    "xy": {"full", "spin-z", "parity-even", "parity-odd"},
    "ising": {"full", "parity-even", "parity-odd"},
    "pxp": {"full"},
    "diagonal": {"full"},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    L: int
    W: float = 0.0
    seed: int = 0
    J0: float | None = None
    alpha: float | None = None
    B: float | None = None
    omega: float | None = None
    # explicit spectrum for kind="diagonal", length 2**L
    energies: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.L < 1:
            raise ValueError(f"chain length must be positive, got {self.L}")
        if self.W < 0:
            raise ValueError(f"disorder strength must be >= 0, got {self.W}")
        for name, value in _DEFAULTS.get(self.kind, {}).items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.kind in ("xy", "pxp", "diagonal") and self.W != 0:
            raise ValueError(f"model {self.kind!r} has no disorder term; W must be 0")
        if self.kind == "xy" and self.B != 0:
            raise ValueError("the XY field B is fixed to 0 in the total-spin-z sector")
        if self.kind == "diagonal":
            if self.energies is None or len(self.energies) != 2**self.L:
                raise ValueError("a diagonal model needs 2**L explicit energies")
            object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items() if v is not None}


@dataclass(frozen=True)
class SymmetrySector:
    kind: str
    L: int
    indices: np.ndarray = field(repr=False)
    n: int | None = None

    @property
    def dim(self) -> int:
        return int(self.indices.size)

    def labels(self) -> list[str]:
        return [format(int(b), f"0{self.L}b") for b in self.indices]

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Lift a sector vector into the full 2**L space."""
        full = np.zeros(2**self.L, dtype=np.complex128)
        full[self.indices] = vec
        return full

    def restrict(self, op: np.ndarray) -> np.ndarray:
        return op[np.ix_(self.indices, self.indices)]


def expected_sector_dim(L: int, kind: str, n: int | None = None) -> int:
    if kind == "spin-z":
        return comb(L, n)
    if kind in ("parity-even", "parity-odd"):
        return 2 ** (L - 1)
    return 2**L


def sector_basis(L: int, kind: str = "full", n: int | None = None) -> SymmetrySector:
    """Computational-basis indices spanning a symmetry sector.

    ``spin-z`` fixes the particle number ``n``; the parity sectors are the
    +1 / -1 eigenspaces of prod_i sigma^z_i (even / odd particle number).
    """
    if kind not in SECTOR_KINDS:
        raise ValueError(f"unknown sector kind {kind!r}; expected one of {SECTOR_KINDS}")
    if L < 1:
        raise ValueError(f"chain length must be positive, got {L}")
    states = np.arange(2**L, dtype=np.int64)
    counts = np.array([bin(int(b)).count("1") for b in states])
    if kind == "spin-z":
        if n is None:
            raise ValueError("spin-z sector requires a particle count n")
        if n < 0 or n > L:
            raise ValueError(f"particle count n={n} is outside 0..{L}")
        idx = states[counts == n]
    elif kind == "parity-even":
        idx = states[counts % 2 == 0]
    elif kind == "parity-odd":
        idx = states[counts % 2 == 1]
    else:
        idx = states
    return SymmetrySector(kind=kind, L=L, indices=idx, n=n if kind == "spin-z" else None)


def disorder(spec: ModelSpec) -> np.ndarray:
    """On-site fields h_i ~ U[-W, W] from a PCG64 stream seeded by ``spec.seed``."""
    if spec.kind not in ("heisenberg", "ising"):
        return np.zeros(spec.L)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return rng.uniform(-spec.W, spec.W, size=spec.L)


# A term is (coefficient, ((site, op), ...)). Operators: x, y, z Pauli matrices,
# "+" = |0><1|, "-" = |1><0|, "p" = I - sigma^z.
Term = tuple[complex, tuple[tuple[int, str], ...]]


def hamiltonian_terms(spec: ModelSpec) -> list[Term]:
    L = spec.L
    h = disorder(spec)
    terms: list[Term] = []
    if spec.kind == "heisenberg":
        for i in range(L - 1):
            for a in "xyz":
                terms.append((1.0, ((i, a), (i + 1, a))))
        for i in range(L):
            terms.append((h[i], ((i, "z"),)))
    elif spec.kind == "ising":
        for i in range(L):
            for j in range(i + 1, L):
                terms.append((spec.J0 / (j - i) ** spec.alpha, ((i, "x"), (j, "x"))))
        for i in range(L):
            terms.append((0.5 * (spec.B + h[i]), ((i, "z"),)))
    elif spec.kind == "xy":
        for i in range(L):
            for j in range(i + 1, L):
                J = spec.J0 / (j - i) ** spec.alpha
                terms.append((J, ((i, "+"), (j, "-"))))
                terms.append((J, ((i, "-"), (j, "+"))))
        for i in range(L):
            terms.append((spec.B, ((i, "z"),)))
    elif spec.kind == "pxp":
        for i in range(L - 2):
            terms.append((spec.omega / 4, ((i, "p"), (i + 1, "x"), (i + 2, "p"))))
    return [t for t in terms if t[0] != 0]


def terms_matrix(terms: list[Term], n_sites: int, offset: int = 0) -> np.ndarray:
    """Dense matrix of a sum of terms on ``n_sites`` sites starting at site ``offset``."""
    dim = 2**n_sites
    basis = np.arange(dim, dtype=np.int64)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, ops in terms:
        amp = np.full(dim, coeff, dtype=np.complex128)
        out = basis.copy()
        for site, op in ops:
            shift = n_sites - 1 - (site - offset)
            bit = (basis >> shift) & 1
            if op == "x":
                out ^= 1 << shift
            elif op == "y":
                out ^= 1 << shift
                amp *= np.where(bit == 0, 1j, -1j)
            elif op == "z":
                amp *= 1 - 2 * bit
            elif op == "+":
                out ^= 1 << shift
                amp *= bit
            elif op == "-":
                out ^= 1 << shift
                amp *= 1 - bit
            elif op == "p":
                amp *= 2 * bit
            else:
                raise ValueError(f"unknown local operator {op!r}")
        mat[out, basis] += amp
    return mat


def full_hamiltonian(spec: ModelSpec) -> np.ndarray:
    if spec.kind == "diagonal":
        return np.diag(np.asarray(spec.energies, dtype=np.complex128))
    return terms_matrix(hamiltonian_terms(spec), spec.L)


def check_compatible(spec: ModelSpec, sector: SymmetrySector) -> None:
    if sector.L != spec.L:
        raise ValueError(f"sector is for L={sector.L} but the model has L={spec.L}")
    if sector.kind not in _COMPATIBLE[spec.kind]:
        raise ValueError(f"incompatible sector: {spec.kind} does not conserve {sector.kind}")


def build_hamiltonian(spec: ModelSpec, sector: SymmetrySector) -> np.ndarray:
    check_compatible(spec, sector)
    return sector.restrict(full_hamiltonian(spec))


def _block_of(site: int, k: int) -> int:
    return site // k


def block_terms(spec: ModelSpec, k: int) -> list[list[Term]]:
    """Hamiltonian terms grouped by the length-k block containing their whole support.

    Terms whose support spans two blocks are dropped.
    """
    if k < 1 or spec.L % k:
        raise ValueError(f"block size k={k} does not divide L={spec.L}")
    if spec.kind == "diagonal":
        raise ValueError("block truncation needs a local Hamiltonian, not an explicit spectrum")
    blocks: list[list[Term]] = [[] for _ in range(spec.L // k)]
    for term in hamiltonian_terms(spec):
        owners = {_block_of(site, k) for site, _ in term[1]}
        if len(owners) == 1:
            blocks[owners.pop()].append(term)
    return blocks


def block_truncated_hamiltonian(spec: ModelSpec, sector: SymmetrySector, k: int) -> np.ndarray:
    check_compatible(spec, sector)
    kept = [t for block in block_terms(spec, k) for t in block]
    return sector.restrict(terms_matrix(kept, spec.L))


def block_hamiltonians(spec: ModelSpec, k: int) -> list[np.ndarray]:
    """Per-block 2**k x 2**k operators whose sum (tensored with identities) is the truncated Hamiltonian."""
    return [terms_matrix(terms, k, offset=b * k) for b, terms in enumerate(block_terms(spec, k))]


def total_sz(L: int) -> np.ndarray:
    return terms_matrix([(1.0, ((i, "z"),)) for i in range(L)], L)
