"""Dense reference operations used to cross-check the block-sparse code.

Everything here acts on plain arrays from ``symtensor.dense.to_dense``; none
of it touches fusion trees or F-symbols.
"""
import numpy as np

from symtensor.spaces import GradedSpace, ProductSpace


def permute(D, n_out, p, q):
    return np.transpose(D, tuple(p) + tuple(q))


def compose(DA, DB, nA_out, nB_out):
    """``A ∘ B`` contracting the domain of ``A`` with the codomain of ``B``."""
    k = DA.ndim - nA_out
    return np.tensordot(DA, DB, axes=(list(range(nA_out, DA.ndim)), list(range(k))))


def adjoint(D, n_out):
    r = D.ndim
    return np.transpose(D.conj(), tuple(range(n_out, r)) + tuple(range(n_out)))


def partial_trace(D, t1, t2, p, q):
    labels = list(range(D.ndim))
    for a, b in zip(t1, t2):
        labels[b] = labels[a]
    return np.einsum(D, labels, list(p) + list(q))


def outer(DA, DB, nA_out, nB_out):
    """``A ⊗ B`` with legs ordered (cod A, cod B, dom A, dom B)."""
    rA, rB = DA.ndim, DB.ndim
    T = np.multiply.outer(DA, DB)
    order = (list(range(nA_out)) + [rA + i for i in range(nB_out)]
             + list(range(nA_out, rA)) + [rA + i for i in range(nB_out, rB)])
    return np.transpose(T, order)


def random_space(rng, sector, labels, max_deg=2, dual=None):
    """Graded space with a random nonempty subset of ``labels``."""
    while True:
        degs = {a: int(rng.integers(0, max_deg + 1)) for a in labels}
        degs = {a: n for a, n in degs.items() if n}
        if degs:
            break
    V = GradedSpace.from_dict(sector, degs)
    if dual is None:
        dual = bool(rng.integers(0, 2))
    return V.dual() if dual else V
