"""Block-diagonal tensor maps and whole-tensor operations.

A tensor map ``t: W -> V`` stores one dense matrix per coupled charge ``c``.
Rows run over the splitting trees of the codomain with coupled charge ``c``,
columns over the fusion trees of the domain.  Each tree owns a contiguous
range whose length is the product of the degeneracies of its uncoupled
charges, and the reduced array of a ``(splitting, fusion)`` pair is the
matching sub-block reshaped column-major to those degeneracies.

Within a block, trees are ordered by their uncoupled charges
(lexicographically, following the canonical label order of each space) and
then by inner charges and vertex labels.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Mapping, Sequence

import numpy as np

from . import fusiontrees as ft
from .errors import (BraidingUnavailable, InvalidPermutation, MalformedNetwork,
                     NonMatchingTracePair, NotCyclic, SectorMismatch,
                     SpaceMismatch)
from .sectors import BraidingStyle, Sector
from .spaces import GradedSpace, HomSpace, ProductSpace

_workers = 1
_counters: list = []


class FlopCounter:
    """Accumulates matrix-multiply FLOPs (8·m·k·n per complex product).

    ``block`` sums over the blocks actually multiplied; ``dense`` is the cost
    of the same products on the full dense matrices.
    """

    def __init__(self):
        self.block = 0
        self.dense = 0

    def add(self, block: int, dense: int) -> None:
        self.block += int(block)
        self.dense += int(dense)

    def __enter__(self):
        _counters.append(self)
        return self

    def __exit__(self, *exc):
        _counters.remove(self)
        return False


def _record(block: int, dense: int) -> None:
    for c in _counters:
        c.add(block, dense)


def _dense_size(P: ProductSpace) -> int:
    return int(round(P.dim))


def set_num_workers(n: int) -> None:
    """Number of threads used for per-block work (1 disables threading)."""
    global _workers
    _workers = max(1, int(n))


def get_num_workers() -> int:
    return _workers


def _map_blocks(fn, keys):
    keys = list(keys)
    if _workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(_workers) as ex:
            return dict(zip(keys, ex.map(fn, keys)))
    return {k: fn(k) for k in keys}


# ---------------------------------------------------------------------------
# structural index

@dataclass(frozen=True)
class TreeSlot:
    tree: ft.FusionTree
    offset: int
    shape: tuple

    @property
    def extent(self) -> int:
        return prod(self.shape)


@lru_cache(maxsize=None)
def side_structure(P: ProductSpace, sector: Sector) -> Mapping:
    """Coupled charge -> tuple of :class:`TreeSlot` for one side of a map."""
    isdual = tuple(V.is_dual for V in P)
    slots: dict = {}
    for unc in itertools.product(*[V.sectors() for V in P]):
        reach = {sector.unit}
        for a in unc:
            reach = {e for c in reach for e in sector.fusion_outputs(c, a)}
        shape = tuple(V.degeneracy(a) for V, a in zip(P, unc))
        for c in reach:
            for t in ft.enumerate_trees(sector, unc, isdual, c):
                slots.setdefault(c, []).append((t, shape))
    out = {}
    for c, lst in slots.items():
        off, row = 0, []
        for t, shape in lst:
            row.append(TreeSlot(t, off, shape))
            off += prod(shape)
        out[c] = tuple(row)
    return out


@lru_cache(maxsize=None)
def _slot_index(P: ProductSpace, sector: Sector) -> dict:
    return {s.tree: s for slots in side_structure(P, sector).values() for s in slots}


def _side_dim(P: ProductSpace, sector: Sector, c) -> int:
    slots = side_structure(P, sector).get(c, ())
    return sum(s.extent for s in slots)


@lru_cache(maxsize=None)
def block_shapes(space: HomSpace) -> dict:
    return {c: (_side_dim(space.codomain, space.sector, c), _side_dim(space.domain, space.sector, c))
            for c in space.blocksectors}


def tree_pairs(space: HomSpace):
    """Iterate ``(c, row_slot, col_slot)`` over all tree pairs in canonical order.

    Within a block the splitting tree varies fastest.
    """
    rows = side_structure(space.codomain, space.sector)
    cols = side_structure(space.domain, space.sector)
    for c in space.blocksectors:
        for f in cols.get(c, ()):
            for s in rows.get(c, ()):
                yield c, s, f


# ---------------------------------------------------------------------------
# the container

class TensorMap:
    """Symmetric linear map ``domain -> codomain`` stored as blocks per coupled charge.

    Parameters
    ----------
    space : HomSpace
    blocks : mapping
        Coupled charge to complex matrix.  Missing charges are filled with
        zeros; shapes are checked against the structural index.
    """

    __array_priority__ = 100

    def __init__(self, space: HomSpace, blocks: Mapping | None = None):
        self.space = space
        shapes = block_shapes(space)
        blocks = dict(blocks or {})
        extra = set(blocks) - set(shapes)
        if extra:
            raise SpaceMismatch(f"blocks for charges outside the block set: {sorted(map(str, extra))}")
        self._blocks = {}
        for c, shp in shapes.items():
            b = blocks.get(c)
            if b is None:
                b = np.zeros(shp, dtype=complex)
            else:
                b = np.asarray(b, dtype=complex)
                if b.shape != shp:
                    raise SpaceMismatch(f"block {c!r} has shape {b.shape}, expected {shp}")
            self._blocks[c] = b

    # -- accessors ----------------------------------------------------------
    @property
    def sector(self) -> Sector:
        return self.space.sector

    @property
    def codomain(self) -> ProductSpace:
        return self.space.codomain

    @property
    def domain(self) -> ProductSpace:
        return self.space.domain

    @property
    def numout(self) -> int:
        return self.space.n_codomain

    @property
    def numin(self) -> int:
        return self.space.n_domain

    @property
    def blocks(self) -> dict:
        return dict(self._blocks)

    def block(self, c) -> np.ndarray:
        return self._blocks[c]

    def subblock(self, s: ft.FusionTree, f: ft.FusionTree) -> np.ndarray:
        """Reduced array of the tree pair ``(s, f)`` (a view into its block)."""
        if s.coupled != f.coupled:
            raise ValueError("trees must share the coupled charge")
        rs = _slot_index(self.codomain, self.sector)[s]
        cs = _slot_index(self.domain, self.sector)[f]
        b = self._blocks[s.coupled][rs.offset:rs.offset + rs.extent, cs.offset:cs.offset + cs.extent]
        return b.reshape(rs.shape + cs.shape, order="F")

    @classmethod
    def from_subblocks(cls, space: HomSpace, data: Mapping) -> "TensorMap":
        """Build from ``{(s, f): reduced array}``; absent pairs are zero."""
        shapes = block_shapes(space)
        blocks = {c: np.zeros(shp, dtype=complex) for c, shp in shapes.items()}
        rix = _slot_index(space.codomain, space.sector)
        cix = _slot_index(space.domain, space.sector)
        for (s, f), arr in data.items():
            rs, cs = rix[s], cix[f]
            blocks[s.coupled][rs.offset:rs.offset + rs.extent, cs.offset:cs.offset + cs.extent] = \
                np.asarray(arr).reshape((rs.extent, cs.extent), order="F")
        return cls(space, blocks)

    def copy(self) -> "TensorMap":
        return TensorMap(self.space, {c: b.copy() for c, b in self._blocks.items()})

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, lam):
        return scale(self, lam)

    __rmul__ = __mul__

    def __truediv__(self, lam):
        return scale(self, 1.0 / lam)

    def __matmul__(self, other):
        return compose(self, other)

    def adjoint(self) -> "TensorMap":
        return adjoint(self)

    def norm(self) -> float:
        return norm(self)

    @property
    def dim(self):
        """Dimension of the hom-space (number of free reduced coefficients)."""
        return sum(m * n for m, n in block_shapes(self.space).values())

    def __repr__(self) -> str:
        return f"TensorMap({self.space})"


# ---------------------------------------------------------------------------
# construction

def _as_product(x) -> ProductSpace:
    if isinstance(x, ProductSpace):
        return x
    if isinstance(x, GradedSpace):
        return ProductSpace((x,))
    return ProductSpace(tuple(x))


def homspace(codomain, domain, sector: Sector | None = None) -> HomSpace:
    return HomSpace.of(_as_product(codomain), _as_product(domain), sector)


def make_tensor(space: HomSpace, fill: str = "zeros", seed: int | None = None,
                rng: np.random.Generator | None = None) -> TensorMap:
    """Allocate a tensor map.

    ``fill="random"`` draws every entry as ``(x + i y) / sqrt(2)`` with
    ``x, y`` standard normal, block by block in canonical charge order.
    """
    shapes = block_shapes(space)
    if fill == "zeros":
        return TensorMap(space)
    if fill != "random":
        raise ValueError(f"unknown fill {fill!r}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    blocks = {}
    for c, shp in shapes.items():
        re = rng.standard_normal(shp)
        im = rng.standard_normal(shp)
        blocks[c] = (re + 1j * im) / np.sqrt(2)
    return TensorMap(space, blocks)


def zeros(codomain, domain, sector: Sector | None = None) -> TensorMap:
    return make_tensor(homspace(codomain, domain, sector))


def random_tensor(codomain, domain, seed: int | None = None, sector: Sector | None = None,
                  rng: np.random.Generator | None = None) -> TensorMap:
    return make_tensor(homspace(codomain, domain, sector), "random", seed=seed, rng=rng)


def identity(V, sector: Sector | None = None) -> TensorMap:
    P = _as_product(V)
    space = HomSpace.of(P, P, sector)
    return TensorMap(space, {c: np.eye(m, dtype=complex) for c, (m, _) in block_shapes(space).items()})


# ---------------------------------------------------------------------------
# linear structure

def _same_space(A: TensorMap, B: TensorMap) -> None:
    if A.space != B.space:
        raise SpaceMismatch(f"{A.space} != {B.space}")


def add(A: TensorMap, B: TensorMap) -> TensorMap:
    _same_space(A, B)
    return TensorMap(A.space, {c: A._blocks[c] + B._blocks[c] for c in A._blocks})


def scale(A: TensorMap, lam: complex) -> TensorMap:
    return TensorMap(A.space, {c: lam * b for c, b in A._blocks.items()})


def inner(A: TensorMap, B: TensorMap) -> complex:
    """``sum_c d_c tr(A_c^H B_c)``."""
    _same_space(A, B)
    s = A.sector
    return complex(sum(s.qdim(c) * np.vdot(A._blocks[c], B._blocks[c]) for c in A._blocks))


def norm(A: TensorMap) -> float:
    s = A.sector
    return float(np.sqrt(sum(s.qdim(c) * np.vdot(b, b).real for c, b in A._blocks.items())))


def allclose(A: TensorMap, B: TensorMap, atol: float = 1e-12) -> bool:
    _same_space(A, B)
    return all(np.allclose(A._blocks[c], B._blocks[c], rtol=0, atol=atol) for c in A._blocks)


def max_abs_diff(A: TensorMap, B: TensorMap) -> float:
    _same_space(A, B)
    return max((float(np.max(np.abs(A._blocks[c] - B._blocks[c]))) for c in A._blocks
                if A._blocks[c].size), default=0.0)


def adjoint(A: TensorMap) -> TensorMap:
    return TensorMap(A.space.adjoint(), {c: b.conj().T for c, b in A._blocks.items()})


def compose(A: TensorMap, B: TensorMap) -> TensorMap:
    """``A ∘ B``; requires ``domain(A) == codomain(B)``."""
    if A.domain != B.codomain:
        raise SpaceMismatch(f"cannot compose: {A.domain} != {B.codomain}")
    if A.sector != B.sector:
        raise SectorMismatch(f"{A.sector.name} != {B.sector.name}")
    space = HomSpace(A.codomain, B.domain, A.sector)
    shapes = block_shapes(space)

    def one(c):
        a, b = A._blocks.get(c), B._blocks.get(c)
        if a is None or b is None or a.shape[1] == 0:
            return np.zeros(shapes[c], dtype=complex)
        return a @ b

    out = TensorMap(space, _map_blocks(one, shapes))
    if _counters:
        bl = sum(8 * A._blocks[c].shape[0] * A._blocks[c].shape[1] * B._blocks[c].shape[1]
                 for c in shapes if c in A._blocks and c in B._blocks)
        _record(bl, 8 * _dense_size(A.codomain) * _dense_size(A.domain) * _dense_size(B.domain))
    return out


# ---------------------------------------------------------------------------
# index manipulations

@dataclass(frozen=True)
class _Move:
    c_in: object
    r_in: slice
    c_slice_in: slice
    shape_in: tuple
    targets: tuple  # (c_out, row slice, col slice, out rows, out cols, coefficient)


def _plan(space: HomSpace, new_space: HomSpace, pair_fn) -> tuple:
    rix = _slot_index(new_space.codomain, new_space.sector)
    cix = _slot_index(new_space.domain, new_space.sector)
    moves = []
    for c, rs, cs in tree_pairs(space):
        if rs.extent == 0 or cs.extent == 0:
            continue
        targets = []
        for (s2, f2), coef in pair_fn(rs.tree, cs.tree).items():
            r2, c2 = rix[s2], cix[f2]
            targets.append((s2.coupled, slice(r2.offset, r2.offset + r2.extent),
                            slice(c2.offset, c2.offset + c2.extent), r2.extent, c2.extent, coef))
        if targets:
            moves.append(_Move(c, slice(rs.offset, rs.offset + rs.extent),
                               slice(cs.offset, cs.offset + cs.extent), rs.shape + cs.shape,
                               tuple(targets)))
    return tuple(moves)


def _execute(A: TensorMap, new_space: HomSpace, moves, array_op) -> TensorMap:
    shapes = block_shapes(new_space)
    out: dict = {}
    for mv in moves:
        arr = A._blocks[mv.c_in][mv.r_in, mv.c_slice_in].reshape(mv.shape_in, order="F")
        arr = array_op(arr)
        for c2, r2, s2, m, n, coef in mv.targets:
            piece = arr.reshape((m, n), order="F")
            blk = out.get(c2)
            if blk is None:
                if (m, n) == shapes[c2]:
                    # first write covers the whole block
                    out[c2] = coef * piece if coef != 1 else np.array(piece, dtype=complex)
                    continue
                blk = out[c2] = np.zeros(shapes[c2], dtype=complex)
            blk[r2, s2] += coef * piece
    return TensorMap(new_space, out)


def _normalize_pq(A: TensorMap, p, q) -> tuple:
    return _checked_pq(A.space.rank, tuple(p), tuple(q))


@lru_cache(maxsize=4096)
def _checked_pq(rank: int, p: tuple, q: tuple) -> tuple:
    p, q = tuple(int(i) for i in p), tuple(int(i) for i in q)
    if sorted(p + q) != list(range(rank)):
        raise InvalidPermutation(f"({p}, {q}) is not a permutation of {rank} indices")
    return p, q


@lru_cache(maxsize=None)
def _permute_plan(space: HomSpace, p: tuple, q: tuple, kind: str, levels: tuple | None):
    new_space = space.permuted(p, q)
    if kind == "permute":
        fn = lambda s, f: ft.permute_pair(s, f, p, q)
    elif kind == "transpose":
        fn = lambda s, f: ft.transpose_pair(s, f, p, q)
    else:
        fn = lambda s, f: ft.braid_pair(s, f, p, q, levels)
    return new_space, _plan(space, new_space, fn)


def _reindex(A: TensorMap, p, q, kind, levels=None) -> TensorMap:
    if p == tuple(range(A.numout)) and q == tuple(range(A.numout, A.space.rank)):
        return A
    new_space, moves = _permute_plan(A.space, p, q, kind, levels)
    axes = p + q
    return _execute(A, new_space, moves, lambda arr: arr.transpose(axes))


def permute(A: TensorMap, p: Sequence[int], q: Sequence[int]) -> TensorMap:
    """Arbitrary index reordering; codomain gets indices ``p``, domain ``q``.

    Requires symmetric braiding; anyonic sectors must use :func:`transpose`.
    """
    if A.sector.braiding_style not in (BraidingStyle.BOSONIC, BraidingStyle.FERMIONIC):
        raise BraidingUnavailable(
            f"permute needs symmetric braiding; {A.sector.name} is "
            f"{A.sector.braiding_style.name}, use transpose")
    p, q = _normalize_pq(A, p, q)
    return _reindex(A, p, q, "permute")


def transpose(A: TensorMap, p: Sequence[int], q: Sequence[int]) -> TensorMap:
    """Planar index reordering; ``(p..., reverse(q)...)`` must be a cyclic shift."""
    p, q = _normalize_pq(A, p, q)
    if not ft.is_cyclic(p, q, A.numout, A.numin):
        raise NotCyclic(f"({p}, {q}) is not a cyclic permutation")
    return _reindex(A, p, q, "transpose")


def braid(A: TensorMap, p: Sequence[int], q: Sequence[int], levels: Sequence[int]) -> TensorMap:
    """Index reordering with over/under crossings fixed by ``levels``."""
    p, q = _normalize_pq(A, p, q)
    if A.sector.braiding_style == BraidingStyle.NO_BRAIDING:
        raise BraidingUnavailable(f"{A.sector.name} has no braiding")
    levels = tuple(int(x) for x in levels)
    if len(levels) != A.space.rank:
        raise ValueError("one level per index required")
    return _reindex(A, p, q, "braid", levels)


def reorder(A: TensorMap, p: Sequence[int], q: Sequence[int]) -> TensorMap:
    """:func:`permute` for symmetric braiding, otherwise :func:`transpose`."""
    if A.sector.braiding_style in (BraidingStyle.BOSONIC, BraidingStyle.FERMIONIC):
        return permute(A, p, q)
    p, q = _normalize_pq(A, p, q)
    if not ft.is_cyclic(p, q, A.numout, A.numin):
        raise BraidingUnavailable(
            f"reordering ({p}, {q}) needs braiding, which {A.sector.name} lacks in planar form")
    return transpose(A, p, q)


@lru_cache(maxsize=None)
def _trace_plan(space: HomSpace, p: tuple, q: tuple, t1: tuple, t2: tuple):
    full = space.permuted(p + t1, q + t2)
    k = len(t1)
    for i in range(k):
        if full.codomain[len(p) + i] != full.domain[len(q) + i]:
            raise NonMatchingTracePair(
                f"index {t1[i]} ({full.codomain[len(p) + i]}) cannot be traced with "
                f"index {t2[i]} ({full.domain[len(q) + i]})")
    new_space = space.permuted(p, q)
    return new_space, _plan(space, new_space, lambda s, f: ft.trace_pair(s, f, p, q, t1, t2))


def partial_trace(A: TensorMap, t1: Sequence[int], t2: Sequence[int],
                  p: Sequence[int] | None = None, q: Sequence[int] | None = None) -> TensorMap:
    """Trace index ``t1[k]`` against ``t2[k]``; the rest are ordered as ``(p, q)``.

    By default untraced codomain indices stay in the codomain and untraced
    domain indices in the domain, in their original order.
    """
    t1, t2 = tuple(int(i) for i in t1), tuple(int(i) for i in t2)
    if len(t1) != len(t2):
        raise NonMatchingTracePair("trace index lists differ in length")
    rest = [i for i in range(A.space.rank) if i not in t1 + t2]
    if p is None and q is None:
        p = tuple(i for i in rest if i < A.numout)
        q = tuple(i for i in rest if i >= A.numout)
    p, q = tuple(p or ()), tuple(q or ())
    _normalize_pq(A, p + t1, q + t2)
    new_space, moves = _trace_plan(A.space, p, q, t1, t2)
    labels = list(range(A.space.rank))
    for a, b in zip(t1, t2):
        labels[b] = labels[a]
    out_labels = list(p + q)
    return _execute(A, new_space, moves, lambda arr: np.einsum(arr, labels, out_labels))


def trace(A: TensorMap) -> complex:
    """Full categorical trace of an endomorphism."""
    if A.codomain != A.domain:
        raise SpaceMismatch("trace needs codomain == domain")
    s = A.sector
    return complex(sum(s.qdim(c) * np.trace(b) for c, b in A._blocks.items()))


# ---------------------------------------------------------------------------
# contraction

def contract(A: TensorMap, pA, qA, B: TensorMap, pB, qB, pAB, qAB) -> TensorMap:
    """Reorder ``A`` and ``B``, compose, then reorder the result."""
    At = reorder(A, pA, qA)
    Bt = reorder(B, pB, qB)
    C = compose(At, Bt)
    return reorder(C, pAB, qAB)


def outer_product(A: TensorMap, B: TensorMap) -> TensorMap:
    """Tensor product ``A ⊗ B: dom(A) ⊗ dom(B) -> cod(A) ⊗ cod(B)``."""
    if A.sector != B.sector:
        raise SectorMismatch(f"{A.sector.name} != {B.sector.name}")
    n1, m1 = A.numout, A.numin
    n2, m2 = B.numout, B.numin
    # move every index of A to the codomain and every index of B to the domain
    At = reorder(A, tuple(range(n1)) + tuple(reversed(range(n1, n1 + m1))), ())
    Bt = reorder(B, (), tuple(reversed(range(n2))) + tuple(range(n2, n2 + m2)))
    C = compose(At, Bt)
    # indices of C: A-cod, reversed A-dom, reversed B-cod, B-dom
    na = n1 + m1
    pos_Acod = list(range(n1))
    pos_Adom = [n1 + m1 - 1 - k for k in range(m1)]
    pos_Bcod = [na + n2 - 1 - k for k in range(n2)]
    pos_Bdom = [na + n2 + k for k in range(m2)]
    return reorder(C, tuple(pos_Acod + pos_Bcod), tuple(pos_Adom + pos_Bdom))


# ---------------------------------------------------------------------------
# audit

def audit(A: TensorMap) -> None:
    """Raise AssertionError if the structural invariants are violated."""
    shapes = block_shapes(A.space)
    assert set(A._blocks) == set(shapes), "block set differs from the hom-space charges"
    for c, b in A._blocks.items():
        assert b.shape == shapes[c], f"block {c!r} has wrong shape"
        assert np.all(np.isfinite(b)), f"block {c!r} has non-finite entries"
    for c, slots in side_structure(A.codomain, A.sector).items():
        assert sum(s.extent for s in slots) == shapes.get(c, (0, 0))[0]
    for c, slots in side_structure(A.domain, A.sector).items():
        assert sum(s.extent for s in slots) == shapes.get(c, (0, 0))[1]


# ---------------------------------------------------------------------------
# network evaluation

def ncon(tensors: Sequence[TensorMap], labels: Sequence[Sequence[int]],
         order: Sequence[int] | None = None, n_codomain: int | None = None) -> TensorMap:
    """Evaluate a network in the NCON convention.

    Positive labels are contracted (each appears exactly twice), negative
    labels are open (once).  ``order`` lists every positive label; pairs are
    contracted left to right, with all labels shared by the two tensors
    consumed together.  Open indices end up sorted as -1, -2, ...; the first
    ``n_codomain`` go to the codomain (default: the number of open indices
    that sat in a codomain originally).
    """
    if len(tensors) != len(labels) or not tensors:
        raise MalformedNetwork("one label list per tensor required")
    labels = [list(map(int, l)) for l in labels]
    for T, l in zip(tensors, labels):
        if len(l) != T.space.rank:
            raise MalformedNetwork(f"label list {l} does not match rank {T.space.rank}")
    counts: dict = {}
    for l in labels:
        for x in l:
            if x == 0:
                raise MalformedNetwork("label 0 is not allowed")
            counts[x] = counts.get(x, 0) + 1
    for x, n in counts.items():
        if x > 0 and n != 2:
            raise MalformedNetwork(f"positive label {x} appears {n} times")
        if x < 0 and n != 1:
            raise MalformedNetwork(f"negative label {x} appears {n} times")
    positives = sorted(x for x in counts if x > 0)
    if order is None:
        order = positives
    order = list(map(int, order))
    if sorted(order) != positives:
        raise MalformedNetwork("contraction order must list every positive label once")
    if n_codomain is None:
        n_codomain = sum(1 for T, l in zip(tensors, labels)
                         for k, x in enumerate(l) if x < 0 and k < T.numout)

    items = [(T, l) for T, l in zip(tensors, labels)]
    items = [_ncon_selftrace(T, l) for T, l in items]
    done: set = set()
    for x in order:
        if x in done:
            continue
        holders = [k for k, (_, l) in enumerate(items) if x in l]
        if not holders:
            continue
        if len(holders) == 1:
            T, l = items[holders[0]]
            items[holders[0]] = _ncon_selftrace(T, l)
            done.add(x)
            continue
        i, j = holders
        (T1, l1), (T2, l2) = items[i], items[j]
        shared = [y for y in l1 if y in l2]
        done.update(shared)
        T, l = _ncon_pair(T1, l1, T2, l2, shared)
        items = [it for k, it in enumerate(items) if k not in (i, j)] + [(T, l)]
    T, l = items[0]
    for T2, l2 in items[1:]:
        l = l[:T.numout] + l2[:T2.numout] + l[T.numout:] + l2[T2.numout:]
        T = outer_product(T, T2)
    perm = sorted(range(len(l)), key=lambda k: -l[k])
    return reorder(T, tuple(perm[:n_codomain]), tuple(perm[n_codomain:]))


def _ncon_selftrace(T: TensorMap, l: list):
    seen: dict = {}
    t1, t2 = [], []
    for k, x in enumerate(l):
        if x in seen:
            a, b = seen.pop(x), k
            full = T.space.permuted((a,), (b,))
            if full.codomain[0] == full.domain[0]:
                t1.append(a), t2.append(b)
            else:
                t1.append(b), t2.append(a)
        else:
            seen[x] = k
    if not t1:
        return T, l
    rest = [k for k in range(len(l)) if k not in t1 + t2]
    p = tuple(k for k in rest if k < T.numout)
    q = tuple(k for k in rest if k >= T.numout)
    if T.sector.braiding_style not in (BraidingStyle.BOSONIC, BraidingStyle.FERMIONIC) and \
            not ft.is_cyclic(p + tuple(t1), q + tuple(t2), T.numout, T.numin):
        raise BraidingUnavailable("trace requires a non-planar reordering")
    out = partial_trace(T, t1, t2, p, q)
    return out, [l[k] for k in p + q]


def _ncon_pair(T1, l1, T2, l2, shared):
    open1 = [k for k, x in enumerate(l1) if x not in shared]
    open2 = [k for k, x in enumerate(l2) if x not in shared]
    c1 = [l1.index(x) for x in shared]
    c2 = [l2.index(x) for x in shared]
    C = contract(T1, tuple(open1), tuple(c1), T2, tuple(c2), tuple(open2),
                 tuple(range(len(open1))), tuple(range(len(open1), len(open1) + len(open2))))
    return C, [l1[k] for k in open1] + [l2[k] for k in open2]
