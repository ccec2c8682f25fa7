"""Block-wise matrix factorizations of tensor maps.

Every factorization first reorders the indices into ``(p, q)`` and then
works on the block of each coupled charge independently.  The new bond is a
single graded space whose degeneracy for charge ``c`` is the number of kept
columns in block ``c``.  The dense kernels are LAPACK routines via numpy.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotHermitian, NotSquare
from .spaces import GradedSpace, HomSpace, ProductSpace
from .tensor import TensorMap, adjoint, block_shapes, norm, reorder


# ---------------------------------------------------------------------------
# truncation

@dataclass(frozen=True)
class TruncationScheme:
    """One of ``none``, ``max_total_dim`` (D), ``rel_error`` (ε) or ``threshold`` (σ_min)."""

    kind: str = "none"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "max_total_dim", "rel_error", "threshold"):
            raise ValueError(f"unknown truncation {self.kind!r}")
        if self.kind != "none" and (self.value is None or not self.value > 0):
            raise ValueError("truncation parameter must be positive")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def max_total_dim(cls, D: float):
        return cls("max_total_dim", float(D))

    @classmethod
    def rel_error(cls, eps: float):
        return cls("rel_error", float(eps))

    @classmethod
    def threshold(cls, sigma_min: float):
        return cls("threshold", float(sigma_min))


NoTruncation = TruncationScheme()


@dataclass
class SpectrumReport:
    """Kept values per coupled charge and the weighted discarded weight."""

    sector_kind: str
    values: dict = field(default_factory=dict)
    truncation_error: float = 0.0
    label_str: object = None

    def to_json(self) -> str:
        fmt = self.label_str or str
        doc = {"format_version": 1, "sector_kind": self.sector_kind,
               "truncation_error": self.truncation_error,
               "spectrum": [{"charge": fmt(c), "values": [float(x) for x in np.real(v)]}
                            for c, v in self.values.items()]}
        return json.dumps(doc)


def _kept_counts(spectra: dict, sector, scheme: TruncationScheme, total_norm: float):
    """Number of leading values kept per block and the truncation error."""
    if scheme.kind == "none":
        return {c: len(v) for c, v in spectra.items()}, 0.0
    order = list(spectra)  # blocks arrive in canonical charge order
    rank = {c: k for k, c in enumerate(order)}
    entries = [(float(s), rank[c], i, c) for c in order for i, s in enumerate(spectra[c])]
    entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    keep = {c: 0 for c in spectra}
    if scheme.kind == "threshold":
        for s, _, _, c in entries:
            if s >= scheme.value:
                keep[c] += 1
    elif scheme.kind == "max_total_dim":
        total = 0.0
        for s, _, _, c in entries:
            d = sector.qdim(c)
            if total + d > scheme.value + 1e-12:
                break
            total += d
            keep[c] += 1
    else:
        budget = (scheme.value * total_norm) ** 2
        acc = 0.0
        n_drop = 0
        for s, _, _, c in reversed(entries):
            w = sector.qdim(c) * s * s
            if acc + w > budget:
                break
            acc += w
            n_drop += 1
        for s, _, _, c in entries[:len(entries) - n_drop]:
            keep[c] += 1
    err2 = sum(sector.qdim(c) * float(np.sum(np.asarray(spectra[c][keep[c]:]) ** 2)) for c in spectra)
    return keep, float(np.sqrt(err2))


def _sorted_blocks(A: TensorMap) -> list:
    return [c for c in A.space.blocksectors]


def _bond(sector, counts: dict) -> GradedSpace:
    return GradedSpace.from_dict(sector, {c: n for c, n in counts.items() if n > 0})


def _prepare(A: TensorMap, p, q) -> TensorMap:
    if p is None and q is None:
        return A
    return reorder(A, p, q)


def _assemble(space: HomSpace, mats: dict) -> TensorMap:
    shapes = block_shapes(space)
    blocks = {}
    for c, shp in shapes.items():
        m = mats.get(c)
        blocks[c] = np.zeros(shp, dtype=complex) if m is None or m.size == 0 else m
    return TensorMap(space, blocks)


# ---------------------------------------------------------------------------
# SVD

def svd(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None,
        trunc: TruncationScheme = NoTruncation):
    """Thin SVD ``A ≈ U ∘ S ∘ Vh`` with optional global truncation.

    Returns
    -------
    U, S, Vh : TensorMap
        ``U: W -> codomain``, ``S: W -> W`` diagonal, ``Vh: domain -> W``.
    report : SpectrumReport
    """
    At = _prepare(A, p, q)
    sec = At.sector
    raw = {}
    for c in _sorted_blocks(At):
        b = At.block(c)
        if b.size == 0:
            raw[c] = (np.zeros((b.shape[0], 0)), np.zeros(0), np.zeros((0, b.shape[1])))
        else:
            u, s, vh = np.linalg.svd(b, full_matrices=False)
            raw[c] = (u, s, vh)
    _count_svd(At)
    spectra = {c: r[1] for c, r in raw.items()}
    keep, err = _kept_counts(spectra, sec, trunc, norm(At))
    W = _bond(sec, keep)
    Wp = ProductSpace((W,))
    U = _assemble(HomSpace(At.codomain, Wp, sec), {c: raw[c][0][:, :keep[c]] for c in raw})
    S = _assemble(HomSpace(Wp, Wp, sec), {c: np.diag(raw[c][1][:keep[c]]).astype(complex) for c in raw})
    Vh = _assemble(HomSpace(Wp, At.domain, sec), {c: raw[c][2][:keep[c], :] for c in raw})
    report = SpectrumReport(sec.name, {c: raw[c][1][:keep[c]] for c in raw if keep[c] > 0},
                            err, sec.label_str)
    return U, S, Vh, report


def _count_svd(At: TensorMap) -> None:
    # one matmul-equivalent 8·m·n·min(m, n) per block, mirrored for the dense matrix
    from .tensor import _counters, _dense_size, _record
    if not _counters:
        return
    bl = sum(8 * b.shape[0] * b.shape[1] * min(b.shape) for b in At.blocks.values())
    m, n = _dense_size(At.codomain), _dense_size(At.domain)
    _record(bl, 8 * m * n * min(m, n))


def truncation_error_dense(singular_values: dict, sector, scheme: TruncationScheme,
                           total_norm: float) -> float:
    """Error of a truncation applied to given spectra (used for cross-checks)."""
    return _kept_counts(singular_values, sector, scheme, total_norm)[1]


# ---------------------------------------------------------------------------
# QR / LQ

def _qr_block(b: np.ndarray):
    Q, R = np.linalg.qr(b, mode="reduced")
    d = np.diag(R)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1.0)
    return Q * ph[None, :], ph.conj()[:, None] * R


def qr(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None):
    """``A = Q ∘ R`` with ``Q`` isometric and ``R`` upper triangular per block.

    The diagonal of each ``R`` block is made real and non-negative.
    """
    At = _prepare(A, p, q)
    sec = At.sector
    Qs, Rs, counts = {}, {}, {}
    for c in _sorted_blocks(At):
        b = At.block(c)
        k = min(b.shape)
        counts[c] = k
        if k == 0:
            continue
        Qs[c], Rs[c] = _qr_block(b)
    Wp = ProductSpace((_bond(sec, counts),))
    return (_assemble(HomSpace(At.codomain, Wp, sec), Qs),
            _assemble(HomSpace(Wp, At.domain, sec), Rs))


def lq(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None):
    """``A = L ∘ Q`` with ``Q`` co-isometric and ``L`` lower triangular per block."""
    At = _prepare(A, p, q)
    sec = At.sector
    Ls, Qs, counts = {}, {}, {}
    for c in _sorted_blocks(At):
        b = At.block(c)
        k = min(b.shape)
        counts[c] = k
        if k == 0:
            continue
        Q, R = _qr_block(b.conj().T)
        Ls[c], Qs[c] = R.conj().T, Q.conj().T
    Wp = ProductSpace((_bond(sec, counts),))
    return (_assemble(HomSpace(At.codomain, Wp, sec), Ls),
            _assemble(HomSpace(Wp, At.domain, sec), Qs))


# ---------------------------------------------------------------------------
# eigen decompositions

def _square(At: TensorMap) -> None:
    if At.codomain != At.domain:
        raise NotSquare(f"{At.codomain} != {At.domain}")


def eig(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None):
    """``A ∘ V = V ∘ Λ`` per block; assumes diagonalizable blocks."""
    At = _prepare(A, p, q)
    _square(At)
    sec = At.sector
    Vs, Ls, counts = {}, {}, {}
    for c in _sorted_blocks(At):
        b = At.block(c)
        counts[c] = b.shape[0]
        if b.size == 0:
            continue
        w, v = np.linalg.eig(b)
        Vs[c], Ls[c] = v, np.diag(w)
    Wp = ProductSpace((_bond(sec, counts),))
    return (_assemble(HomSpace(At.codomain, Wp, sec), Vs),
            _assemble(HomSpace(Wp, Wp, sec), Ls))


def eigh(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None,
         tol: float = 1e-12):
    """Hermitian eigendecomposition ``A = V ∘ Λ ∘ V†`` with real ascending ``Λ``."""
    At = _prepare(A, p, q)
    _square(At)
    dev = max((float(np.max(np.abs(b - b.conj().T))) for b in At.blocks.values() if b.size),
              default=0.0)
    scale = max((float(np.max(np.abs(b))) for b in At.blocks.values() if b.size), default=0.0)
    if dev > tol * max(1.0, scale):
        raise NotHermitian(f"deviation from hermiticity {dev:.3e}")
    sec = At.sector
    Vs, Ls, counts = {}, {}, {}
    for c in _sorted_blocks(At):
        b = At.block(c)
        counts[c] = b.shape[0]
        if b.size == 0:
            continue
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        Vs[c], Ls[c] = v, np.diag(w).astype(complex)
    Wp = ProductSpace((_bond(sec, counts),))
    return (_assemble(HomSpace(At.codomain, Wp, sec), Vs),
            _assemble(HomSpace(Wp, Wp, sec), Ls))


def eigenvalues(L: TensorMap) -> dict:
    """Diagonal of a diagonal map as ``{charge: values}``."""
    return {c: np.diag(b) for c, b in L.blocks.items() if b.size}


# ---------------------------------------------------------------------------
# polar

def polar(A: TensorMap, p: Sequence[int] | None = None, q: Sequence[int] | None = None,
          side: str = "left"):
    """Polar decomposition from the thin SVD.

    ``side="left"`` gives ``A = W ∘ P`` with ``P = Vh† S Vh`` acting on the
    domain; ``side="right"`` gives ``A = P ∘ W`` with ``P = U S U†`` on the
    codomain.  ``W = U ∘ Vh`` in both cases.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    U, S, Vh, _ = svd(A, p, q)
    W = U @ Vh
    if side == "left":
        return W, adjoint(Vh) @ S @ Vh
    return W, U @ S @ adjoint(U)
