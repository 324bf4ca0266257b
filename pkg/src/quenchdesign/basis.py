"""Fixed-charge Hilbert spaces and the operator matrices built inside them.

States are occupation bitmasks, mode 1 is the least-significant bit and the
basis is sorted as unsigned integers.  Fermionic operators carry the
Jordan-Wigner sign ``(-1)**(number of occupied modes below i)``.  Operator
matrices are plain dense ``complex128`` arrays of side ``basis.d``.

Public functions take 1-based mode indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import ParameterError

COMPLEX_FERMION = "complex-fermion"
MAJORANA = "majorana"
SPIN_HALF = "spin-half"
MODEL_KINDS = (COMPLEX_FERMION, MAJORANA, SPIN_HALF)


@dataclass(frozen=True)
class SectorSpec:
    """Which Hilbert space to build.

    ``q`` is the particle number (complex fermions) or the number of up spins.
    ``q=None`` for complex fermions means the full Fock space with all charge
    sectors; for Majoranas it must be ``None`` and ``N`` counts Majorana
    operators.
    """

    model_kind: str
    N: int
    q: int | None = None

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ParameterError(f"unknown model kind {self.model_kind!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N!r}")
        if self.model_kind == MAJORANA:
            if self.q is not None:
                raise ParameterError("majorana sectors carry no charge q")
        elif self.q is None:
            if self.model_kind == SPIN_HALF:
                raise ParameterError("spin-half sectors need a magnetization q")
        elif not 0 <= self.q <= self.N:
            raise ParameterError(f"need 0 <= q <= N, got q={self.q}, N={self.N}")

    @property
    def n_modes(self) -> int:
        """Number of bits in a basis state."""
        if self.model_kind == MAJORANA:
            return (self.N + 1) // 2
        return self.N


@dataclass(frozen=True)
class SectorBasis:
    spec: SectorSpec
    states: np.ndarray
    index_of: dict = field(repr=False, compare=False)

    @property
    def d(self) -> int:
        return len(self.states)

    def index(self, states: np.ndarray) -> np.ndarray:
        """Vectorised ``index_of`` lookup (states must be in the basis)."""
        return np.searchsorted(self.states, states)


@lru_cache(maxsize=64)
def build_sector(spec: SectorSpec) -> SectorBasis:
    n = spec.n_modes
    if spec.q is None:
        states = np.arange(1 << n, dtype=np.int64)
    else:
        masks = [sum(1 << b for b in bits) for bits in combinations(range(n), spec.q)]
        states = np.array(sorted(masks), dtype=np.int64)
    states.setflags(write=False)
    index_of = {int(s): a for a, s in enumerate(states)}
    return SectorBasis(spec, states, index_of)


def _check_mode(basis: SectorBasis, i: int) -> int:
    n = basis.spec.n_modes
    if not 1 <= i <= n:
        raise ParameterError(f"mode index {i} outside [1, {n}]")
    return i - 1


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


def apply_string(states: np.ndarray, ops) -> tuple[np.ndarray, np.ndarray]:
    """Apply a product of ladder operators to each state in ``states``.

    ``ops`` is a sequence of ``(dagger, mode)`` pairs with 0-based modes,
    written left to right as in the operator product; the rightmost acts
    first.  Returns ``(new_states, amplitude)`` where the amplitude is 0 for
    states annihilated along the way and +-1 otherwise.
    """
    cur = np.asarray(states, dtype=np.int64).copy()
    amp = np.ones(len(cur), dtype=np.int64)
    for dagger, m in reversed(ops):
        bit = np.int64(1) << m
        occupied = (cur & bit) != 0
        alive = ~occupied if dagger else occupied
        amp = np.where(alive, amp, 0)
        sign = 1 - 2 * (_popcount(cur & (bit - 1)) & 1)
        amp = amp * sign
        cur = np.where(alive, cur ^ bit, cur)
    return cur, amp


def _string_matrix(basis: SectorBasis, ops) -> np.ndarray:
    new, amp = apply_string(basis.states, ops)
    out = np.zeros((basis.d, basis.d), dtype=complex)
    cols = np.nonzero(amp)[0]
    if len(cols):
        rows = basis.index(new[cols])
        if np.any(basis.states[rows] != new[cols]):
            raise ParameterError("operator string leaves the sector")
        out[rows, cols] = amp[cols]
    return out


def _require_charged(basis: SectorBasis):
    if basis.spec.model_kind != COMPLEX_FERMION:
        raise ParameterError("complex-fermion basis required")


def number_operator(basis: SectorBasis, i: int) -> np.ndarray:
    _require_charged(basis)
    m = _check_mode(basis, i)
    return np.diag(((basis.states >> m) & 1).astype(complex))


def hopping_element(basis: SectorBasis, i: int, j: int) -> np.ndarray:
    """Matrix of c†_i c_j."""
    _require_charged(basis)
    a, b = _check_mode(basis, i), _check_mode(basis, j)
    return _string_matrix(basis, [(True, a), (False, b)])


def quartic_fermion_element(basis: SectorBasis, i: int, j: int, k: int, l: int) -> np.ndarray:
    """Matrix of c†_i c†_j c_k c_l (i<j, k<l)."""
    _require_charged(basis)
    idx = [_check_mode(basis, x) for x in (i, j, k, l)]
    if not (i < j and k < l):
        raise ParameterError("need i < j and k < l")
    a, b, c, e = idx
    return _string_matrix(basis, [(True, a), (True, b), (False, c), (False, e)])


@dataclass(frozen=True)
class TransitionTable:
    """Sparse bookkeeping ``H[rows, cols] += sign * coupling[term]``.

    Lets the ensemble samplers scatter freshly drawn couplings into a dense
    matrix without rebuilding operator matrices for each realization.
    """

    rows: np.ndarray
    cols: np.ndarray
    term: np.ndarray
    sign: np.ndarray
    n_terms: int
    d: int

    def assemble(self, couplings: np.ndarray) -> np.ndarray:
        couplings = np.asarray(couplings)
        vals = self.sign * couplings[self.term]
        flat = np.zeros(self.d * self.d, dtype=complex)
        np.add.at(flat, self.rows * self.d + self.cols, vals)
        return flat.reshape(self.d, self.d)


def _table_from_strings(basis: SectorBasis, strings) -> TransitionTable:
    rows, cols, term, sign = [], [], [], []
    for t, ops in enumerate(strings):
        new, amp = apply_string(basis.states, ops)
        c = np.nonzero(amp)[0]
        if not len(c):
            continue
        r = basis.index(new[c])
        rows.append(r)
        cols.append(c)
        term.append(np.full(len(c), t))
        sign.append(amp[c])
    cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
    return TransitionTable(cat(rows), cat(cols), cat(term), cat(sign).astype(float),
                           len(strings), basis.d)


def mode_pairs(n: int) -> list[tuple[int, int]]:
    """Ordered pairs (i<j), 0-based, in lexicographic order."""
    return list(combinations(range(n), 2))


@lru_cache(maxsize=32)
def pair_hopping_table(spec: SectorSpec) -> TransitionTable:
    """Terms c†_i c†_j c_k c_l indexed by ``P * n_pairs + Q`` with P=(i<j), Q=(k<l)."""
    basis = build_sector(spec)
    pairs = mode_pairs(spec.n_modes)
    strings = [[(True, i), (True, j), (False, k), (False, l)]
               for (i, j) in pairs for (k, l) in pairs]
    return _table_from_strings(basis, strings)


@lru_cache(maxsize=32)
def hopping_table(spec: SectorSpec) -> TransitionTable:
    """Terms c†_j c_k indexed by ``j * n + k`` (0-based)."""
    basis = build_sector(spec)
    n = spec.n_modes
    strings = [[(True, j), (False, k)] for j in range(n) for k in range(n)]
    return _table_from_strings(basis, strings)


def _ladder_full(basis: SectorBasis, m: int, dagger: bool) -> np.ndarray:
    return _string_matrix(basis, [(dagger, m)])


def majorana_operator(basis: SectorBasis, i: int) -> np.ndarray:
    """chi_i with {chi_i, chi_j} = 2 delta_ij.

    chi_{2m-1} = c_m + c†_m and chi_{2m} = i (c†_m - c_m); with an odd count
    the partner of the last Majorana is simply never requested.
    """
    if basis.spec.model_kind != MAJORANA:
        raise ParameterError("majorana basis required")
    if not 1 <= i <= basis.spec.N:
        raise ParameterError(f"Majorana index {i} outside [1, {basis.spec.N}]")
    m = (i - 1) // 2
    c = _ladder_full(basis, m, False)
    cd = _ladder_full(basis, m, True)
    return c + cd if i % 2 == 1 else 1j * (cd - c)


@lru_cache(maxsize=16)
def majorana_quartets(spec: SectorSpec) -> tuple[list[tuple[int, int, int, int]], np.ndarray]:
    """All products chi_i chi_j chi_k chi_l with i<j<k<l, stacked (n_terms, d, d)."""
    basis = build_sector(spec)
    chis = [majorana_operator(basis, i) for i in range(1, spec.N + 1)]
    quartets = list(combinations(range(spec.N), 4))
    stack = np.empty((len(quartets), basis.d, basis.d), dtype=complex)
    for t, (a, b, c, e) in enumerate(quartets):
        stack[t] = chis[a] @ chis[b] @ chis[c] @ chis[e]
    stack.setflags(write=False)
    return quartets, stack


@dataclass(frozen=True)
class SpinOperators:
    """Sector-preserving spin operators of a fixed-magnetization sector.

    ``sz[i]`` is S^z_{i+1}; ``flip[i, j]`` is S^+_{i+1} S^-_{j+1}.  Single
    raising or lowering operators leave the sector and are not represented.
    """

    sz: np.ndarray
    flip: np.ndarray


def spin_operators(basis: SectorBasis) -> SpinOperators:
    if basis.spec.model_kind != SPIN_HALF:
        raise ParameterError("spin-half basis required")
    n, d = basis.spec.N, basis.d
    up = (basis.states[None, :] >> np.arange(n)[:, None]) & 1
    sz = np.zeros((n, d, d), dtype=complex)
    for i in range(n):
        sz[i] = np.diag(up[i] - 0.5)
    flip = np.zeros((n, n, d, d), dtype=complex)
    cols_all = np.arange(d)
    for i in range(n):
        flip[i, i] = np.diag(up[i].astype(complex))
        for j in range(n):
            if i == j:
                continue
            ok = (up[j] == 1) & (up[i] == 0)
            cols = cols_all[ok]
            new = basis.states[ok] ^ (1 << j) ^ (1 << i)
            flip[i, j, basis.index(new), cols] = 1.0
    return SpinOperators(sz, flip)


def sector_dimension(spec: SectorSpec) -> int:
    if spec.model_kind == MAJORANA:
        return 2 ** spec.n_modes
    if spec.q is None:
        return 2 ** spec.N
    return math.comb(spec.N, spec.q)
