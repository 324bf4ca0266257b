"""Independent Jordan-Wigner construction on the full Fock space via Kronecker products.

Mode 1 is the least significant bit, so it is the rightmost tensor factor.
"""
import numpy as np

_Z = np.diag([1.0, -1.0]).astype(complex)
_I = np.eye(2, dtype=complex)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, bit value 1 = occupied


def annihilator(n: int, i: int) -> np.ndarray:
    """c_i (1-based) on 2^n states."""
    factors = []
    for m in range(n, 0, -1):  # leftmost factor is the most significant mode
        if m == i:
            factors.append(_LOWER)
        elif m < i:
            factors.append(_Z)
        else:
            factors.append(_I)
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def projector_rows(n: int, q: int) -> np.ndarray:
    return np.array([s for s in range(1 << n) if bin(s).count("1") == q])
