"""Ground truth at small dimension: Haar sampling, Weingarten integrals and
explicit moment operators Phi = E[U^{(x)k} (x) conj(U)^{(x)k}].

Moment operators act on (C^d)^{(x)2k} with the row-major index order
(i_1..i_k, j_1..j_k), i.e. Phi[(i, j), (a, b)] = E[prod U_{i a} prod conj(U_{j b})].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from .errors import CapacityError, ParameterError, StatisticsError
from .moments import haar_fp

MAX_SIDE = 4096


def haar_samples(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n Haar unitaries of size d: QR of a Ginibre matrix with R's diagonal made positive."""
    if d < 1:
        raise ParameterError("d must be >= 1")
    z = (rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_sample(d: int, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return haar_samples(d, 1, rng)[0]


def weingarten2(i, j, k, l, a, b, c, e, d: int) -> float:
    """E[U_{ia} conj(U_{jb}) U_{kc} conj(U_{le})] over Haar U(d), d >= 2."""
    if d < 2:
        raise ParameterError("second-moment formula needs d >= 2")
    same = (i == j) * (a == b) * (k == l) * (c == e) + (i == l) * (a == e) * (k == j) * (c == b)
    cross = (i == j) * (a == e) * (k == l) * (c == b) + (i == l) * (a == b) * (k == j) * (c == e)
    return same / (d * d - 1) - cross / (d * (d * d - 1))


@dataclass(frozen=True)
class McCheck:
    analytic: float
    empirical: complex
    z: float


def weingarten2_mc_check(pattern, d: int, samples: int, seed=0, chunk: int = 20000) -> McCheck:
    """Monte-Carlo estimate of one second-moment integral against the closed form.

    ``pattern`` is (i, j, k, l, a, b, c, e) with 1-based indices.
    """
    if samples < 1000:
        raise StatisticsError("need at least 1000 samples")
    i, j, k, l, a, b, c, e = (int(x) - 1 for x in pattern)
    if not all(0 <= x < d for x in (i, j, k, l, a, b, c, e)):
        raise ParameterError("pattern index out of range")
    rng = np.random.default_rng(seed)
    vals = []
    left = samples
    while left:
        n = min(chunk, left)
        U = haar_samples(d, n, rng)
        vals.append(U[:, i, a] * U[:, j, b].conj() * U[:, k, c] * U[:, l, e].conj())
        left -= n
    x = np.concatenate(vals)
    mean = x.mean()
    analytic = weingarten2(i, j, k, l, a, b, c, e, d)
    se = math.sqrt(np.mean(np.abs(x - mean) ** 2) / (len(x) - 1))
    z = abs(mean - analytic) / se if se > 0 else (0.0 if mean == analytic else math.inf)
    return McCheck(analytic, complex(mean), float(z))


@dataclass(frozen=True)
class MomentOperator:
    k: int
    d: int
    matrix: np.ndarray

    def frame_potential(self) -> float:
        """Tr(Phi^dagger Phi)."""
        return float(np.vdot(self.matrix, self.matrix).real)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _guard(d: int, k: int):
    side = d ** (2 * k)
    if side > MAX_SIDE:
        raise CapacityError(f"moment operator side d^(2k) = {side} exceeds {MAX_SIDE}")
    return side


def _tensor_power(U: np.ndarray, k: int) -> np.ndarray:
    out = U
    for _ in range(k - 1):
        out = np.kron(out, U)
    return out


def moment_operator(members, k: int) -> MomentOperator:
    members = np.asarray(members)
    d = members.shape[-1]
    side = _guard(d, k)
    acc = np.zeros((side, side), dtype=complex)
    for U in members:
        Uk = _tensor_power(U, k)
        acc += np.kron(Uk, Uk.conj())
    return MomentOperator(k, d, acc / len(members))


def _permutation_matrix(perm, d: int) -> np.ndarray:
    k = len(perm)
    P = np.zeros((d ** k, d ** k))
    for idx in product(range(d), repeat=k):
        src = np.ravel_multi_index(idx, (d,) * k)
        dst = np.ravel_multi_index(tuple(idx[perm[m]] for m in range(k)), (d,) * k)
        P[dst, src] = 1.0
    return P


def haar_projector(d: int, k: int) -> MomentOperator:
    """Exact Haar moment operator, the projector onto span{vec(P_sigma)}.

    Assembled as sum_{s,t} Wg[s, t] |P_s>><<P_t| where Wg is the
    (pseudo-)inverse of the Gram matrix Tr(P_s^T P_t) = d^{cycles}; the
    pseudo-inverse handles d < k where the permutation operators are
    linearly dependent.
    """
    if not 1 <= k <= 3:
        raise CapacityError("haar_projector supports k = 1, 2, 3")
    _guard(d, k)
    perms = list(permutations(range(k)))
    vecs = np.array([_permutation_matrix(p, d).ravel() for p in perms])
    gram = vecs @ vecs.T
    wg = np.linalg.pinv(gram, hermitian=True)
    Pi = vecs.T @ wg @ vecs
    return MomentOperator(k, d, Pi.astype(complex))


@dataclass(frozen=True)
class ConvolutionCheck:
    F_haar: float
    F_base: float
    F_convolved: float
    delta: float
    bound_ok: bool


def convolution_check(members, k: int, stat_slack: float = 0.0) -> ConvolutionCheck:
    """Test F_Haar <= F(Phi^2) <= F_Haar + min(delta, delta^2).

    delta = ||Phi - Pi||_F^2 so that F_base = Tr Pi + delta equals Tr(Phi^dagger Phi)
    without assuming Phi and Pi commute.
    """
    phi = moment_operator(members, k)
    Pi = haar_projector(phi.d, k).matrix
    F_haar = float(np.trace(Pi).real)
    E = phi.matrix - Pi
    delta = float(np.vdot(E, E).real)
    phi2 = phi.matrix @ phi.matrix
    F_conv = float(np.vdot(phi2, phi2).real)
    tol = 1e-9 * max(1.0, F_haar + delta) + 3 * stat_slack
    ok = (F_haar - tol <= F_conv <= F_haar + min(delta, delta * delta) + tol)
    return ConvolutionCheck(F_haar, F_haar + delta, F_conv, delta, bool(ok))


def haar_trace_matches(d: int, k: int) -> bool:
    Pi = haar_projector(d, k)
    return abs(np.trace(Pi.matrix).real - haar_fp(k, d)) <= 1e-9
