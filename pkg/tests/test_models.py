from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

from energybounds.models import (ModelSpec, block_hamiltonians, block_truncated_hamiltonian, build_hamiltonian,
                                 disorder, expected_sector_dim, full_hamiltonian, sector_basis, total_sz)
from energybounds.spectral import eig_hermitian

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SM = SP.T.copy()
P = I2 - Z  # 2 |1><1|


def site_op(L, ops):
    """Kronecker product with site 0 leftmost; ``ops`` maps site -> 2x2 matrix."""
    return reduce(np.kron, [ops.get(i, I2) for i in range(L)])


def kron_heisenberg(L, h):
    H = sum(site_op(L, {i: A, i + 1: A}) for i in range(L - 1) for A in (X, Y, Z))
    return H + sum(h[i] * site_op(L, {i: Z}) for i in range(L))


def kron_ising(L, h, J0=1.0, alpha=1.13, B=4.0):
    H = sum(J0 / (j - i) ** alpha * site_op(L, {i: X, j: X}) for i in range(L) for j in range(i + 1, L))
    return H + sum(0.5 * (B + h[i]) * site_op(L, {i: Z}) for i in range(L))


def kron_xy(L, J0=1.0, alpha=1.24):
    return sum(J0 / (j - i) ** alpha * (site_op(L, {i: SP, j: SM}) + site_op(L, {i: SM, j: SP}))
               for i in range(L) for j in range(i + 1, L))


def kron_pxp(L, omega=1.0):
    return sum(omega / 4 * site_op(L, {i: P, i + 1: X, i + 2: P}) for i in range(L - 2))


@pytest.mark.parametrize("L,kind,n,dim", [(6, "spin-z", 3, 20), (10, "parity-even", None, 512), (5, "full", None, 32),
                                          (10, "spin-z", 5, 252), (10, "full", None, 1024)])
def test_sector_dims(L, kind, n, dim):
    sec = sector_basis(L, kind, n)
    assert sec.dim == dim == expected_sector_dim(L, kind, n)
    assert np.all(np.diff(sec.indices) > 0)


def test_full_sector_indices():
    assert np.array_equal(sector_basis(5, "full").indices, np.arange(32))


def test_particle_count_too_large():
    with pytest.raises(ValueError, match="particle count"):
        sector_basis(4, "spin-z", 5)


def test_heisenberg_two_sites():
    H = build_hamiltonian(ModelSpec("heisenberg", 2), sector_basis(2))
    np.testing.assert_allclose(eig_hermitian(H).values, [-3, 1, 1, 1], atol=1e-12)


@pytest.mark.parametrize("L,W,seed", [(4, 0.0, 0), (5, 2.0, 3), (6, 10.0, 7)])
def test_heisenberg_matches_kron(L, W, seed):
    spec = ModelSpec("heisenberg", L, W=W, seed=seed)
    np.testing.assert_allclose(full_hamiltonian(spec), kron_heisenberg(L, disorder(spec)), atol=1e-12)


@pytest.mark.parametrize("L,W", [(4, 0.0), (5, 8.0)])
def test_ising_matches_kron(L, W):
    spec = ModelSpec("ising", L, W=W, seed=11)
    np.testing.assert_allclose(full_hamiltonian(spec), kron_ising(L, disorder(spec)), atol=1e-12)


def test_xy_and_pxp_match_kron():
    np.testing.assert_allclose(full_hamiltonian(ModelSpec("xy", 5)), kron_xy(5), atol=1e-12)
    np.testing.assert_allclose(full_hamiltonian(ModelSpec("pxp", 5)), kron_pxp(5), atol=1e-12)


def test_ising_parity_even_large():
    spec = ModelSpec("ising", 10, W=8.0, seed=1)
    assert (spec.J0, spec.alpha, spec.B) == (1.0, 1.13, 4.0)
    H = build_hamiltonian(spec, sector_basis(10, "parity-even"))
    assert H.shape == (512, 512)
    assert np.max(np.abs(H - H.conj().T)) < 1e-12


def test_pxp_zero_diagonal():
    H = build_hamiltonian(ModelSpec("pxp", 5), sector_basis(5))
    assert np.all(np.diag(H) == 0)


@pytest.mark.parametrize("kind", ["heisenberg", "xy"])
def test_conserves_total_sz(kind):
    H = full_hamiltonian(ModelSpec(kind, 6, W=1.0 if kind == "heisenberg" else 0.0))
    Sz = total_sz(6)
    assert np.max(np.abs(H @ Sz - Sz @ H)) < 1e-12


def test_ising_conserves_parity():
    H = full_hamiltonian(ModelSpec("ising", 6, W=3.0))
    parity = site_op(6, {i: Z for i in range(6)})
    assert np.max(np.abs(H @ parity - parity @ H)) < 1e-12


def test_incompatible_sector():
    with pytest.raises(ValueError, match="incompatible sector"):
        build_hamiltonian(ModelSpec("ising", 4), sector_basis(4, "spin-z", 2))
    with pytest.raises(ValueError, match="incompatible sector"):
        build_hamiltonian(ModelSpec("pxp", 4), sector_basis(4, "parity-even"))


def test_disorder_reproducible_and_uniform():
    a = disorder(ModelSpec("heisenberg", 10, W=10.0, seed=5))
    b = disorder(ModelSpec("heisenberg", 10, W=10.0, seed=5))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, disorder(ModelSpec("heisenberg", 10, W=10.0, seed=6)))
    h = disorder(ModelSpec("heisenberg", 10_000, W=2.0, seed=0))
    assert np.all(np.abs(h) <= 2.0)
    # U[-W, W] has standard deviation W / sqrt(3)
    assert abs(h.mean()) < 3 * (2.0 / np.sqrt(3)) / np.sqrt(h.size)


def test_invalid_specs():
    with pytest.raises(ValueError):
        ModelSpec("heisenberg", 4, W=-1)
    with pytest.raises(ValueError):
        ModelSpec("xy", 4, W=1.0)
    with pytest.raises(ValueError):
        ModelSpec("xy", 4, B=1.0)
    with pytest.raises(ValueError):
        ModelSpec("potts", 4)


def test_truncation_k_equals_L():
    spec = ModelSpec("heisenberg", 10, W=10.0, seed=2)
    sec = sector_basis(10, "spin-z", 5)
    assert np.array_equal(block_truncated_hamiltonian(spec, sec, 10), build_hamiltonian(spec, sec))


def test_truncation_k1_is_field():
    spec = ModelSpec("heisenberg", 10, W=10.0, seed=2)
    sec = sector_basis(10, "spin-z", 5)
    Hk = block_truncated_hamiltonian(spec, sec, 1)
    h = disorder(spec)
    bits = (sec.indices[:, None] >> (9 - np.arange(10))[None, :]) & 1
    np.testing.assert_allclose(Hk, np.diag((1 - 2 * bits) @ h), atol=1e-12)


def test_truncation_k2_pairs():
    spec = ModelSpec("heisenberg", 4, W=1.0, seed=4)
    h = disorder(spec)
    expected = sum(site_op(4, {i: A, i + 1: A}) for i in (0, 2) for A in (X, Y, Z))
    expected = expected + sum(h[i] * site_op(4, {i: Z}) for i in range(4))
    np.testing.assert_allclose(block_truncated_hamiltonian(spec, sector_basis(4), 2), expected, atol=1e-12)
    blocks = block_hamiltonians(spec, 2)
    np.testing.assert_allclose(np.kron(blocks[0], np.eye(4)) + np.kron(np.eye(4), blocks[1]), expected, atol=1e-12)


def test_truncation_bad_k():
    with pytest.raises(ValueError, match="k=3 does not divide L=10"):
        block_truncated_hamiltonian(ModelSpec("heisenberg", 10), sector_basis(10), 3)


def test_pxp_truncation_small_blocks_vanish():
    # every PXP term spans three sites, so blocks of one or two sites keep nothing
    for k in (1, 2):
        assert not np.any(block_truncated_hamiltonian(ModelSpec("pxp", 6), sector_basis(6), k if 6 % k == 0 else 1))
