import numpy as np
import pytest
from hypothesis import given, strategies as st

from quenchdesign.basis import (COMPLEX_FERMION, MAJORANA, SPIN_HALF, SectorSpec, build_sector,
                                number_operator)
from quenchdesign.ensembles import (CSYK2, CSYK4, CSYK4_REDUCED, GUE, KINDS, MAJORANA_SYK4,
                                    RICHARDSON, EnsembleSpec, derive_seed, gue_density_check,
                                    reduced_couplings, sample)
from quenchdesign.errors import ParameterError, StatisticsError

SPECS = {
    GUE: EnsembleSpec(GUE, d=12),
    CSYK4: EnsembleSpec(CSYK4, SectorSpec(COMPLEX_FERMION, 6, 3)),
    CSYK2: EnsembleSpec(CSYK2, SectorSpec(COMPLEX_FERMION, 6, 2)),
    CSYK4_REDUCED: EnsembleSpec(CSYK4_REDUCED, SectorSpec(COMPLEX_FERMION, 6, 2)),
    MAJORANA_SYK4: EnsembleSpec(MAJORANA_SYK4, SectorSpec(MAJORANA, 8)),
    RICHARDSON: EnsembleSpec(RICHARDSON, SectorSpec(SPIN_HALF, 6, 3)),
}


@pytest.mark.parametrize("kind", KINDS)
@given(seed=st.integers(0, 2 ** 63))
def test_hermitian_and_deterministic(kind, seed):
    spec = SPECS[kind]
    a = sample(spec, seed).matrix
    b = sample(spec, seed).matrix
    assert a.shape == (spec.dim, spec.dim)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a - a.conj().T)) <= 1e-12


def test_distinct_seeds_differ():
    spec = SPECS[CSYK4]
    assert not np.array_equal(sample(spec, 1).matrix, sample(spec, 2).matrix)


def test_derive_seed_is_order_free():
    s = [derive_seed(5, m, r) for m in range(20) for r in range(2)]
    assert len(set(s)) == len(s)
    assert derive_seed(5, 3, 1) == derive_seed(5, 3, 1)
    assert derive_seed(5, 3, 1) != derive_seed(6, 3, 1)


def test_gue_trace_square():
    spec = EnsembleSpec(GUE, d=70)
    vals = [np.trace(sample(spec, derive_seed(1, i)).matrix @ sample(spec, derive_seed(1, i)).matrix).real
            for i in range(1000)]
    assert abs(np.mean(vals) / 70 - 1) < 0.03


def test_gue_entry_variances():
    d = 6
    spec = EnsembleSpec(GUE, d=d)
    H = np.array([sample(spec, derive_seed(2, i)).matrix for i in range(4000)])
    diag_var = H[:, 0, 0].real.var()
    off = np.mean(np.abs(H[:, 0, 1]) ** 2)
    assert abs(diag_var * d - 1) < 0.1
    assert abs(off * d - 1) < 0.1


def test_csyk4_zero_mean():
    spec = EnsembleSpec(CSYK4, SectorSpec(COMPLEX_FERMION, 8, 4))
    H = np.array([sample(spec, derive_seed(3, i)).matrix for i in range(200)])
    assert H.shape[1:] == (70, 70)
    scale = np.abs(H).std(axis=0).max()
    assert np.max(np.abs(H.mean(axis=0))) < 5 * scale / np.sqrt(200)


@pytest.mark.parametrize("kind", [CSYK4, CSYK2, CSYK4_REDUCED])
def test_charge_conserved_on_full_space(kind):
    sector = SectorSpec(COMPLEX_FERMION, 5)
    H = sample(EnsembleSpec(kind, sector), 11).matrix
    b = build_sector(sector)
    Ntot = sum(number_operator(b, i) for i in range(1, 6))
    assert np.max(np.abs(H @ Ntot - Ntot @ H)) <= 1e-12
    assert np.max(np.abs(H)) > 0


@given(seed=st.integers(0, 2 ** 32))
def test_reduced_couplings_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    J = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    R = reduced_couplings(J)
    assert np.array_equal(R, -R.transpose(1, 0, 2, 3))
    assert np.array_equal(R, -R.transpose(0, 1, 3, 2))


def test_richardson_weak_coupling_diagonal():
    sector = SectorSpec(SPIN_HALF, 5, 2)
    spec = EnsembleSpec(RICHARDSON, sector, J=1e-14)
    H = sample(spec, 4).matrix
    assert np.max(np.abs(H - np.diag(np.diag(H)))) <= 1e-12
    eps = np.random.default_rng(4).normal(0.0, 1.0, 5)
    states = build_sector(sector).states
    s = ((states[:, None] >> np.arange(5)) & 1) - 0.5
    assert np.allclose(np.diag(H).real, s @ eps, atol=1e-12)


def _site_op(n, i, op):
    out = np.array([[1.0 + 0j]])
    for m in range(n, 0, -1):
        out = np.kron(out, op if m == i else np.eye(2))
    return out


def test_richardson_matches_full_space_and_conserves_sz():
    n, q, seed = 5, 2, 21
    raise_ = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|, bit 1 = up
    sz = np.diag([-0.5, 0.5]).astype(complex)
    Sp = [_site_op(n, i, raise_) for i in range(1, n + 1)]
    Sz = [_site_op(n, i, sz) for i in range(1, n + 1)]
    eps = np.random.default_rng(seed).normal(0.0, 1.0, n)
    H = sum(Sp[i] @ Sp[j].conj().T for i in range(n) for j in range(n)) / n
    H = H + sum(e * z for e, z in zip(eps, Sz))
    Sz_tot = sum(Sz)
    assert np.max(np.abs(H @ Sz_tot - Sz_tot @ H)) <= 1e-12
    rows = np.array([s for s in range(1 << n) if bin(s).count("1") == q])
    block = sample(EnsembleSpec(RICHARDSON, SectorSpec(SPIN_HALF, n, q)), seed).matrix
    assert np.max(np.abs(block - H[np.ix_(rows, rows)])) <= 1e-12


def test_majorana_needs_four():
    with pytest.raises(ParameterError):
        EnsembleSpec(MAJORANA_SYK4, SectorSpec(MAJORANA, 3))


def test_kind_sector_mismatch():
    with pytest.raises(ParameterError):
        EnsembleSpec(CSYK4, SectorSpec(SPIN_HALF, 4, 2))
    with pytest.raises(ParameterError):
        EnsembleSpec(GUE)


def test_gue_density():
    spec = EnsembleSpec(GUE, d=70)
    chk = gue_density_check(spec, (sample(spec, derive_seed(8, i)) for i in range(1000)))
    assert chk.fraction_outside(2.2) < 0.01
    assert abs(chk.mean) <= 3 * chk.mean_stderr + 1e-3


def test_gue_density_d2():
    spec = EnsembleSpec(GUE, d=2)
    draws = [sample(spec, derive_seed(9, i)) for i in range(20000)]
    chk = gue_density_check(spec, draws)
    ev = chk.eigenvalues.reshape(-1, 2)
    assert abs(np.mean((ev ** 2).sum(axis=1)) - 2) < 0.05


def test_density_needs_draws():
    spec = EnsembleSpec(GUE, d=4)
    with pytest.raises(StatisticsError):
        gue_density_check(spec, [sample(spec, i) for i in range(10)])
