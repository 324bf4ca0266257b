import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quenchdesign.basis import (COMPLEX_FERMION, MAJORANA, SPIN_HALF, SectorSpec, build_sector,
                                hopping_element, hopping_table, majorana_operator,
                                majorana_quartets, number_operator, pair_hopping_table,
                                quartic_fermion_element, sector_dimension, spin_operators)
from quenchdesign.errors import ParameterError

from jw_reference import annihilator, projector_rows


@pytest.mark.parametrize("kind,N,q,d", [
    (COMPLEX_FERMION, 6, 2, 15),
    (COMPLEX_FERMION, 8, 4, 70),
    (SPIN_HALF, 8, 2, 28),
    (COMPLEX_FERMION, 6, None, 64),
    (MAJORANA, 5, None, 8),
    (MAJORANA, 10, None, 32),
])
def test_dimensions(kind, N, q, d):
    spec = SectorSpec(kind, N, q)
    assert build_sector(spec).d == d == sector_dimension(spec)


def test_states_sorted_and_indexed():
    b = build_sector(SectorSpec(COMPLEX_FERMION, 5, 2))
    assert np.all(np.diff(b.states) > 0)
    assert all(b.index_of[int(s)] == a for a, s in enumerate(b.states))
    assert np.array_equal(b.index(b.states[::-1]), np.arange(b.d)[::-1])


@pytest.mark.parametrize("bad", [
    dict(model_kind="boson", N=3, q=1),
    dict(model_kind=COMPLEX_FERMION, N=0, q=0),
    dict(model_kind=COMPLEX_FERMION, N=3, q=4),
    dict(model_kind=MAJORANA, N=4, q=2),
    dict(model_kind=SPIN_HALF, N=4, q=None),
])
def test_invalid_specs(bad):
    with pytest.raises(ParameterError):
        SectorSpec(**bad)


def test_quartic_two_modes():
    b = build_sector(SectorSpec(COMPLEX_FERMION, 2, 2))
    assert np.array_equal(quartic_fermion_element(b, 1, 2, 1, 2), np.array([[-1.0]]))


def test_quartic_kills_low_sectors():
    for q in (0, 1):
        b = build_sector(SectorSpec(COMPLEX_FERMION, 4, q))
        for i, j, k, l in itertools.product(range(1, 5), repeat=4):
            if i < j and k < l:
                assert not np.any(quartic_fermion_element(b, i, j, k, l))


def test_quartic_requires_order():
    b = build_sector(SectorSpec(COMPLEX_FERMION, 4, 2))
    with pytest.raises(ParameterError):
        quartic_fermion_element(b, 2, 1, 3, 4)
    with pytest.raises(ParameterError):
        quartic_fermion_element(b, 1, 2, 3, 5)


@given(st.tuples(*[st.integers(1, 5)] * 4))
def test_quartic_adjoint(idx):
    i, j, k, l = idx
    if not (i < j and k < l):
        return
    b = build_sector(SectorSpec(COMPLEX_FERMION, 5, 2))
    A = quartic_fermion_element(b, i, j, k, l)
    assert np.array_equal(A.conj().T, quartic_fermion_element(b, k, l, i, j))


@pytest.mark.parametrize("N,q", [(4, 2), (5, 2), (6, 3), (6, 1), (6, None)])
def test_number_sum_is_charge(N, q):
    b = build_sector(SectorSpec(COMPLEX_FERMION, N, q))
    total = sum(number_operator(b, i) for i in range(1, N + 1))
    if q is None:
        expected = np.diag([bin(int(s)).count("1") for s in b.states]).astype(complex)
    else:
        expected = q * np.eye(b.d)
    assert np.max(np.abs(total - expected)) <= 1e-12


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_full_space_anticommutators(N):
    cs = [annihilator(N, i) for i in range(1, N + 1)]
    for i, j in itertools.product(range(N), repeat=2):
        ac = cs[i] @ cs[j].conj().T + cs[j].conj().T @ cs[i]
        assert np.max(np.abs(ac - (i == j) * np.eye(1 << N))) <= 1e-12
        assert np.max(np.abs(cs[i] @ cs[j] + cs[j] @ cs[i])) <= 1e-12


@pytest.mark.parametrize("N,q", [(4, 2), (5, 2), (6, 2), (6, 3)])
def test_sector_builders_match_projected_full_space(N, q):
    b = build_sector(SectorSpec(COMPLEX_FERMION, N, q))
    rows = projector_rows(N, q)
    assert np.array_equal(rows, b.states)
    cs = [annihilator(N, i) for i in range(1, N + 1)]
    cd = [c.conj().T for c in cs]
    proj = lambda A: A[np.ix_(rows, rows)]
    for i, j in itertools.product(range(1, N + 1), repeat=2):
        assert np.max(np.abs(hopping_element(b, i, j) - proj(cd[i - 1] @ cs[j - 1]))) <= 1e-12
    for i, j, k, l in itertools.product(range(1, N + 1), repeat=4):
        if i < j and k < l and (i + j + k + l) % 3 == 0:
            full = cd[i - 1] @ cd[j - 1] @ cs[k - 1] @ cs[l - 1]
            assert np.max(np.abs(quartic_fermion_element(b, i, j, k, l) - proj(full))) <= 1e-12


def test_full_fock_space_matches_reference():
    N = 4
    b = build_sector(SectorSpec(COMPLEX_FERMION, N))
    cs = [annihilator(N, i) for i in range(1, N + 1)]
    for i, j in itertools.product(range(1, N + 1), repeat=2):
        assert np.max(np.abs(hopping_element(b, i, j) - cs[i - 1].conj().T @ cs[j - 1])) <= 1e-12


def test_transition_tables_reproduce_operators():
    spec = SectorSpec(COMPLEX_FERMION, 5, 2)
    b = build_sector(spec)
    rng = np.random.default_rng(0)
    n = 5
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    direct = sum(h[j, k] * hopping_element(b, j + 1, k + 1) for j in range(n) for k in range(n))
    assert np.allclose(hopping_table(spec).assemble(h.ravel()), direct, atol=1e-12)
    pairs = list(itertools.combinations(range(n), 2))
    J = rng.normal(size=(len(pairs), len(pairs)))
    direct = sum(J[P, Q] * quartic_fermion_element(b, i + 1, j + 1, k + 1, l + 1)
                 for P, (i, j) in enumerate(pairs) for Q, (k, l) in enumerate(pairs))
    assert np.allclose(pair_hopping_table(spec).assemble(J.ravel()), direct, atol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_majorana_anticommutators(N):
    b = build_sector(SectorSpec(MAJORANA, N))
    chis = [majorana_operator(b, i) for i in range(1, N + 1)]
    for i, j in itertools.product(range(N), repeat=2):
        ac = chis[i] @ chis[j] + chis[j] @ chis[i]
        assert np.max(np.abs(ac - 2 * (i == j) * np.eye(b.d))) <= 1e-12
    for chi in chis:
        assert np.max(np.abs(chi - chi.conj().T)) <= 1e-12


def test_majorana_n5_dimension_and_range():
    b = build_sector(SectorSpec(MAJORANA, 5))
    assert majorana_operator(b, 5).shape == (8, 8)
    with pytest.raises(ParameterError):
        majorana_operator(b, 6)


def test_majorana_quartets_hermitian():
    quartets, stack = majorana_quartets(SectorSpec(MAJORANA, 6))
    assert len(quartets) == 15
    for op in stack:
        assert np.max(np.abs(op - op.conj().T)) <= 1e-12


def test_spin_single_site():
    ops = spin_operators(build_sector(SectorSpec(SPIN_HALF, 1, 1)))
    assert np.array_equal(ops.sz[0], np.array([[0.5]]))


def test_spin_flip_two_sites():
    b = build_sector(SectorSpec(SPIN_HALF, 2, 1))
    # states: 0b01 (site 1 up), 0b10 (site 2 up)
    ops = spin_operators(b)
    assert np.array_equal(ops.flip[0, 1], np.array([[0, 1], [0, 0]]))
    assert np.array_equal(ops.flip[1, 0], np.array([[0, 0], [1, 0]]))


def test_spin_projector_identity():
    b = build_sector(SectorSpec(SPIN_HALF, 5, 2))
    ops = spin_operators(b)
    for i in range(5):
        up = (b.states >> i) & 1
        assert np.array_equal(np.diag(ops.flip[i, i]).real, up.astype(float))
        assert np.allclose(ops.flip[i, i] @ ops.flip[i, i], ops.flip[i, i])
