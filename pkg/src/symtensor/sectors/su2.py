"""SU(2) recoupling data.

All spins are passed as doubled integers ``tj = 2j`` so that arithmetic stays
exact.  The 6j symbol uses the Racah single-sum formula evaluated with
log-factorials; the Clebsch-Gordan coefficients (Condon-Shortley phases) are
only used by the dense reference implementation and its tests.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

#: largest supported 2j; the log-factorial table covers every argument that
#: the Racah sums can reach below this bound
MAX_TWOJ = 128
_LOGFACT = np.array([math.lgamma(n + 1) for n in range(4 * MAX_TWOJ + 8)])


def _lf(n: int) -> float:
    return _LOGFACT[n]


def triangle_ok(ta: int, tb: int, tc: int) -> bool:
    """Triangle rule on doubled spins, including integrality of the sum."""
    return (abs(ta - tb) <= tc <= ta + tb) and (ta + tb + tc) % 2 == 0


def _log_delta(ta: int, tb: int, tc: int) -> float:
    return 0.5 * (_lf((ta + tb - tc) // 2) + _lf((ta - tb + tc) // 2)
                  + _lf((-ta + tb + tc) // 2) - _lf((ta + tb + tc) // 2 + 1))


@lru_cache(maxsize=None)
def wigner6j(t1: int, t2: int, t3: int, t4: int, t5: int, t6: int) -> float:
    """Wigner 6j symbol ``{j1 j2 j3; j4 j5 j6}`` from doubled spins.

    Returns 0 when any of the four triads (j1 j2 j3), (j1 j5 j6),
    (j4 j2 j6), (j4 j5 j3) violates the triangle rule.
    """
    if max(t1, t2, t3, t4, t5, t6) > MAX_TWOJ:
        raise ValueError(f"2j above {MAX_TWOJ} not supported")
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    if not all(triangle_ok(*t) for t in triads):
        return 0.0
    pre = sum(_log_delta(*t) for t in triads)
    a1 = (t1 + t2 + t3) // 2
    a2 = (t1 + t5 + t6) // 2
    a3 = (t4 + t2 + t6) // 2
    a4 = (t4 + t5 + t3) // 2
    b1 = (t1 + t2 + t4 + t5) // 2
    b2 = (t2 + t3 + t5 + t6) // 2
    b3 = (t3 + t1 + t6 + t4) // 2
    total = 0.0
    for t in range(max(a1, a2, a3, a4), min(b1, b2, b3) + 1):
        lg = (_lf(t + 1) - _lf(t - a1) - _lf(t - a2) - _lf(t - a3) - _lf(t - a4)
              - _lf(b1 - t) - _lf(b2 - t) - _lf(b3 - t))
        total += (-1) ** t * math.exp(lg + pre)
    return total


@lru_cache(maxsize=None)
def su2_fsymbol(t1: int, t2: int, t3: int, t4: int, t5: int, t6: int) -> float:
    """Recoupling coefficient ``F^{j1 j2 j3}_{j4}[j5, j6]`` (0 if inadmissible)."""
    if not (triangle_ok(t1, t2, t5) and triangle_ok(t5, t3, t4)
            and triangle_ok(t2, t3, t6) and triangle_ok(t1, t6, t4)):
        return 0.0
    sign = -1.0 if ((t1 + t2 + t3 + t4) // 2) % 2 else 1.0
    return sign * math.sqrt((t5 + 1) * (t6 + 1)) * wigner6j(t1, t2, t5, t3, t4, t6)


def su2_rsymbol(t1: int, t2: int, t3: int) -> float:
    """Exchange phase ``(-1)^{j1 + j2 - j3}`` (0 if inadmissible)."""
    if not triangle_ok(t1, t2, t3):
        return 0.0
    return -1.0 if ((t1 + t2 - t3) // 2) % 2 else 1.0


def clebsch_gordan(t1: int, tm1: int, t2: int, tm2: int, tj: int, tm: int) -> float:
    """Condon-Shortley coefficient ``<j1 m1; j2 m2 | j m>`` from doubled values."""
    if tm1 + tm2 != tm or not triangle_ok(t1, t2, tj):
        return 0.0
    for t, m in ((t1, tm1), (t2, tm2), (tj, tm)):
        if abs(m) > t or (t + m) % 2:
            return 0.0
    j1p = (t1 + tm1) // 2
    j1m = (t1 - tm1) // 2
    j2p = (t2 + tm2) // 2
    j2m = (t2 - tm2) // 2
    jp = (tj + tm) // 2
    jm = (tj - tm) // 2
    lpre = 0.5 * (math.log(tj + 1) + _lf((tj + t1 - t2) // 2) + _lf((tj - t1 + t2) // 2)
                  + _lf((t1 + t2 - tj) // 2) - _lf((t1 + t2 + tj) // 2 + 1)
                  + _lf(jp) + _lf(jm) + _lf(j1p) + _lf(j1m) + _lf(j2p) + _lf(j2m))
    s = 0.0
    c1 = (t1 + t2 - tj) // 2
    c4 = (tj - t2 + tm1) // 2
    c5 = (tj - t1 - tm2) // 2
    for k in range(max(0, -c4, -c5), min(c1, j1m, j2p) + 1):
        lg = -(_lf(k) + _lf(c1 - k) + _lf(j1m - k) + _lf(j2p - k) + _lf(c4 + k) + _lf(c5 + k))
        s += (-1) ** k * math.exp(lg + lpre)
    return s


@lru_cache(maxsize=None)
def cg_tensor(t1: int, t2: int, tj: int) -> np.ndarray:
    """Splitting tensor ``X[m1, m2, m]`` with basis ordered m = j, j-1, ..., -j."""
    X = np.zeros((t1 + 1, t2 + 1, tj + 1))
    if triangle_ok(t1, t2, tj):
        for i1 in range(t1 + 1):
            for i2 in range(t2 + 1):
                for i in range(tj + 1):
                    X[i1, i2, i] = clebsch_gordan(t1, t1 - 2 * i1, t2, t2 - 2 * i2, tj, tj - 2 * i)
    X.setflags(write=False)
    return X


def spin_matrices(tj: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin operators (Jx, Jy, Jz) in the basis m = j, ..., -j."""
    j = tj / 2
    m = j - np.arange(tj + 1)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((tj + 1, tj + 1), dtype=complex)
    for i in range(1, tj + 1):
        jp[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    return jx, jy, jz


def wigner_d(tj: int, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rotation matrix exp(-i a Jz) exp(-i b Jy) exp(-i g Jz) on spin j."""
    _, jy, jz = spin_matrices(tj)
    return expm(-1j * alpha * jz) @ expm(-1j * beta * jy) @ expm(-1j * gamma * jz)


def zmatrix(tj: int) -> np.ndarray:
    """Isomorphism from the dual basis of spin j to spin j: ``Z[m', m] = (-1)^{j-m} δ_{m',-m}``.

    Fixed by requiring the spin-0 splitting tensor to equal
    ``(1/sqrt(d)) (1 ⊗ Z) coev``.
    """
    Z = np.zeros((tj + 1, tj + 1))
    for i in range(tj + 1):
        # m = j - i  ->  -m sits at index tj - i; (-1)^(j-m) = (-1)^i
        Z[tj - i, i] = (-1) ** i
    return Z
