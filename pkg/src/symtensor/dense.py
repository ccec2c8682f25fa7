"""Dense reference representation for group-like sectors.

The dense array of a tensor map is indexed codomain first, then domain.  For
a graded space the basis runs over the underlying labels in canonical order;
within a label the degeneracy index is the slow one and the representation
index the fast one.  A dual space uses the dual basis in the same order.

Splitting tensors are chains of Clebsch-Gordan tensors (SU(2)) or ones
(abelian kinds); a dual leg is mapped from the dual-label representation to
the dual basis of the underlying label by the Z isomorphism.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import fusiontrees as ft
from .errors import NoDenseRepresentation
from .sectors import SU2, Product, Sector
from .sectors.su2 import cg_tensor, wigner_d, zmatrix
from .spaces import GradedSpace, HomSpace
from .tensor import TensorMap, side_structure, tree_pairs


def _require_dense(sector: Sector) -> None:
    if not sector.has_dense_rep:
        raise NoDenseRepresentation(f"{sector.name} has no dense representation")


def rep_dim(sector: Sector, a) -> int:
    _require_dense(sector)
    if isinstance(sector, SU2):
        return a + 1
    if isinstance(sector, Product):
        return int(np.prod([rep_dim(f, x) for f, x in zip(sector.factors, a)]))
    return 1


@lru_cache(maxsize=None)
def cg(sector: Sector, a, b, c) -> np.ndarray:
    """Splitting tensor ``X[m_a, m_b, m_c]`` of ``c -> a ⊗ b``."""
    _require_dense(sector)
    if isinstance(sector, SU2):
        return cg_tensor(a, b, c)
    if isinstance(sector, Product):
        out = np.ones((1, 1, 1))
        for f, x, y, z in zip(sector.factors, a, b, c):
            X = cg(f, x, y, z)
            out = np.einsum("abc,ijk->aibjck", out, X).reshape(
                out.shape[0] * X.shape[0], out.shape[1] * X.shape[1], out.shape[2] * X.shape[2])
        return out
    ok = sector.nsymbol(a, b, c) > 0
    return np.full((1, 1, 1), 1.0 if ok else 0.0)


@lru_cache(maxsize=None)
def zmat(sector: Sector, a) -> np.ndarray:
    """Map from the dual basis of ``a`` to the representation of ``dual(a)``."""
    _require_dense(sector)
    if isinstance(sector, SU2):
        return zmatrix(a)
    if isinstance(sector, Product):
        out = np.ones((1, 1))
        for f, x in zip(sector.factors, a):
            out = np.kron(out, zmat(f, x))
        return out
    return np.ones((1, 1))


def splitting_tensor(tree: ft.FusionTree) -> np.ndarray:
    """Dense splitting tensor ``[m_1, ..., m_N, m_c]`` in the dense leg bases."""
    s = tree.sector
    n = len(tree)
    if n == 0:
        return np.ones((1,))
    if n == 1:
        X = np.eye(rep_dim(s, tree.coupled))
    else:
        ext = tree.ext
        X = cg(s, tree.uncoupled[0], tree.uncoupled[1], ext[1])
        for k in range(2, n):
            X = np.tensordot(X, cg(s, ext[k - 1], tree.uncoupled[k], ext[k]), axes=([-1], [0]))
    for i, d in enumerate(tree.isdual):
        if d:
            # tree label is dual(a); the leg carries the dual basis of a
            Z = zmat(s, s.dual(tree.uncoupled[i]))
            X = np.moveaxis(np.tensordot(X, Z, axes=([i], [0])), -1, i)
    return X


def _offsets(V: GradedSpace) -> dict:
    s, off, out = V.sector, 0, {}
    for a, n in V.degeneracies:
        out[a] = off
        off += n * rep_dim(s, a)
    return out


def dense_dim(V: GradedSpace) -> int:
    return sum(n * rep_dim(V.sector, a) for a, n in V.degeneracies)


def _underlying(V: GradedSpace, label):
    return V.sector.dual(label) if V.is_dual else label


def to_dense(A: TensorMap) -> np.ndarray:
    """Dense array of ``A`` with shape (codomain dims..., domain dims...)."""
    s = A.sector
    _require_dense(s)
    spaces = list(A.codomain) + list(A.domain)
    shape = tuple(dense_dim(V) for V in spaces)
    out = np.zeros(shape, dtype=complex)
    offs = [_offsets(V) for V in spaces]
    n1 = A.numout
    for c, rs, cs in tree_pairs(A.space):
        if rs.extent == 0 or cs.extent == 0:
            continue
        T = A.subblock(rs.tree, cs.tree)
        if not np.any(T):
            continue
        Xs = splitting_tensor(rs.tree)
        Xf = splitting_tensor(cs.tree)
        G = np.tensordot(Xs, Xf.conj(), axes=([-1], [-1]))
        full = np.multiply.outer(T, G)
        r = len(spaces)
        axes = [x for k in range(r) for x in (k, r + k)]
        full = full.transpose(axes)
        labels = rs.tree.uncoupled + cs.tree.uncoupled
        idx = []
        for k in range(r):
            V = spaces[k]
            a = _underlying(V, labels[k])
            ext = full.shape[2 * k] * full.shape[2 * k + 1]
            idx.append(slice(offs[k][a], offs[k][a] + ext))
        out[tuple(idx)] += full.reshape(tuple(full.shape[2 * k] * full.shape[2 * k + 1]
                                              for k in range(r)))
    return out


def to_dense_matrix(A: TensorMap) -> np.ndarray:
    """Dense array reshaped (column-major) to ``dim(codomain) x dim(domain)``."""
    D = to_dense(A)
    m = int(np.prod(D.shape[:A.numout]))
    return D.reshape((m, -1), order="F")


def rep_matrix(V: GradedSpace, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Action of an SU(2) rotation on the dense basis of ``V``."""
    s = V.sector
    if not isinstance(s, SU2):
        raise NoDenseRepresentation("rotations are only provided for SU2 spaces")
    blocks = [np.kron(np.eye(n), wigner_d(a, alpha, beta, gamma)) for a, n in V.degeneracies]
    M = _block_diag(blocks)
    return M.conj() if V.is_dual else M


def _block_diag(blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    M = np.zeros((n, n), dtype=complex)
    o = 0
    for b in blocks:
        k = b.shape[0]
        M[o:o + k, o:o + k] = b
        o += k
    return M


def apply_rotation(A_dense: np.ndarray, space: HomSpace, angles) -> np.ndarray:
    """``ρ_cod(g) · A · ρ_dom(g)^{-1}`` applied leg by leg."""
    out = A_dense
    spaces = list(space.codomain) + list(space.domain)
    n1 = space.n_codomain
    for k, V in enumerate(spaces):
        R = rep_matrix(V, *angles)
        if k >= n1:
            R = R.conj()
        out = np.moveaxis(np.tensordot(R, out, axes=([1], [k])), 0, k)
    return out


__all__ = ["to_dense", "to_dense_matrix", "splitting_tensor", "cg", "zmat", "rep_dim",
           "dense_dim", "rep_matrix", "apply_rotation"]
