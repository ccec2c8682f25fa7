"""Fusion trees and their recoupling algebra.

A splitting tree with uncoupled legs ``u[0], ..., u[N-1]`` is built from left
to right: ``u[0] ⊗ u[1] -> ext[1]``, ``ext[1] ⊗ u[2] -> ext[2]`` and so on,
with ``ext[N-1]`` the coupled charge.  ``inner`` holds ``ext[1..N-2]`` and
``vertices`` the (0-based) multiplicity index at each of the ``N-1``
vertices.  A fusion tree is the adjoint of a splitting tree and uses the same
data type.

Every manipulation returns a read-only mapping from output trees (or
``(splitting, fusion)`` pairs) to complex coefficients.  Leg positions are
0-based throughout.  Results are memoized in a process-wide cache.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import wraps
from types import MappingProxyType
from typing import Iterator, Sequence

import numpy as np

from .errors import (BraidingUnavailable, ChargeMismatch, InadmissibleTree,
                     InvalidPermutation, NonMatchingTracePair, NotCyclic)
from .sectors import BraidingStyle, FusionStyle, Sector

PRUNE_RTOL = 1e-15


@dataclass(frozen=True)
class FusionTree:
    sector: Sector
    uncoupled: tuple
    coupled: object
    isdual: tuple
    inner: tuple = ()
    vertices: tuple = ()

    def __len__(self) -> int:
        return len(self.uncoupled)

    @property
    def ext(self) -> tuple:
        """Charges after fusing the first k+1 legs, k = 0..N-1."""
        n = len(self.uncoupled)
        if n == 0:
            return ()
        if n == 1:
            return (self.coupled,)
        return (self.uncoupled[0],) + self.inner + (self.coupled,)

    def check(self) -> "FusionTree":
        """Raise InadmissibleTree unless the labels form a valid tree."""
        s, n = self.sector, len(self.uncoupled)
        if len(self.isdual) != n or len(self.inner) != max(n - 2, 0) \
                or len(self.vertices) != max(n - 1, 0):
            raise InadmissibleTree("inconsistent tree lengths")
        for a in self.uncoupled + self.inner + (self.coupled,):
            s.check_label(a)
        if n == 0 and self.coupled != s.unit:
            raise InadmissibleTree("empty tree must couple to the unit")
        if n == 1 and self.coupled != self.uncoupled[0]:
            raise InadmissibleTree("single-leg tree must couple to its leg")
        ext = self.ext
        for k in range(1, n):
            nab = s.nsymbol(ext[k - 1], self.uncoupled[k], ext[k])
            if not 0 <= self.vertices[k - 1] < nab:
                raise InadmissibleTree(f"vertex {k} not admissible in {self}")
        return self

    def __str__(self) -> str:
        s = self.sector
        u = ",".join(s.label_str(a) + ("*" if d else "") for a, d in zip(self.uncoupled, self.isdual))
        inn = ",".join(s.label_str(a) for a in self.inner)
        return f"FusionTree(({u}) -> {s.label_str(self.coupled)}; inner=({inn}); v={self.vertices})"


# ---------------------------------------------------------------------------
# memoization

_cache_lock = threading.Lock()
_cache_enabled = True
_caches: list[dict] = []


def set_cache_enabled(flag: bool) -> None:
    global _cache_enabled
    _cache_enabled = bool(flag)


def clear_caches() -> None:
    with _cache_lock:
        for c in _caches:
            c.clear()


def _memo(fn):
    store: dict = {}
    _caches.append(store)

    @wraps(fn)
    def wrapper(*args):
        if not _cache_enabled:
            return fn(*args)
        try:
            return store[args]
        except KeyError:
            pass
        out = fn(*args)
        with _cache_lock:
            return store.setdefault(args, out)

    wrapper.uncached = fn
    return wrapper


def _finish(d: dict) -> MappingProxyType:
    if d:
        cut = PRUNE_RTOL * max(abs(v) for v in d.values())
        d = {k: v for k, v in d.items() if abs(v) > cut}
    return MappingProxyType(d)


def _acc(d: dict, key, val) -> None:
    d[key] = d.get(key, 0.0) + val


# ---------------------------------------------------------------------------
# enumeration

def enumerate_trees(sector: Sector, uncoupled: Sequence, isdual: Sequence | None,
                    coupled) -> Iterator[FusionTree]:
    """All admissible trees, ordered by (inner charges, vertex labels)."""
    return iter(_enumerate(sector, tuple(uncoupled),
                           tuple(isdual) if isdual is not None else (False,) * len(uncoupled),
                           coupled))


@_memo
def _enumerate(sector, uncoupled, isdual, coupled) -> tuple:
    n = len(uncoupled)
    if n == 0:
        return (FusionTree(sector, (), sector.unit, (), (), ()),) if coupled == sector.unit else ()
    if n == 1:
        return (FusionTree(sector, uncoupled, coupled, isdual, (), ()),) if uncoupled[0] == coupled else ()
    out = []

    def rec(k, cur, inner, verts):
        if k == n:
            if cur == coupled:
                out.append(FusionTree(sector, uncoupled, coupled, isdual,
                                      tuple(inner[:-1]), tuple(verts)))
            return
        for e in sector.fusion_outputs(cur, uncoupled[k]):
            for mu in range(sector.nsymbol(cur, uncoupled[k], e)):
                rec(k + 1, e, inner + [e], verts + [mu])

    rec(1, uncoupled[0], [], [])
    key = sector.sort_key
    out.sort(key=lambda t: (tuple(key(x) for x in t.inner), t.vertices))
    return tuple(out)


def split(f: FusionTree, m: int) -> tuple[FusionTree, FusionTree]:
    """Split into the tree of the first ``m`` legs and the remainder."""
    s, n = f.sector, len(f)
    if not 0 <= m <= n:
        raise ValueError("split position out of range")
    if m == 0:
        f1 = FusionTree(s, (), s.unit, (), (), ())
        inner2 = (f.uncoupled[0],) + f.inner if n >= 2 else ()
        f2 = FusionTree(s, (s.unit,) + f.uncoupled, f.coupled, (False,) + f.isdual,
                        inner2 if n >= 1 else (), (0,) + f.vertices if n >= 1 else ())
        return f1, f2
    if m == n:
        return f, FusionTree(s, (f.coupled,), f.coupled, (False,), (), ())
    if m == 1:
        f1 = FusionTree(s, (f.uncoupled[0],), f.uncoupled[0], (f.isdual[0],), (), ())
        f2 = FusionTree(s, f.uncoupled, f.coupled, (False,) + f.isdual[1:], f.inner, f.vertices)
        return f1, f2
    ext = f.ext
    f1 = FusionTree(s, f.uncoupled[:m], ext[m - 1], f.isdual[:m], f.inner[:m - 2], f.vertices[:m - 1])
    f2 = FusionTree(s, (ext[m - 1],) + f.uncoupled[m:], f.coupled, (False,) + f.isdual[m:],
                    f.inner[m - 1:], f.vertices[m - 1:])
    return f1, f2


# ---------------------------------------------------------------------------
# F-moves and insertion

@_memo
def f_move(f: FusionTree, i: int) -> MappingProxyType:
    """Recouple legs ``i`` and ``i+1`` (1 <= i <= N-2) so that they fuse first.

    Returns ``{(host, guest): F}`` with ``guest = (u[i] ⊗ u[i+1] -> x)`` and
    ``host`` the tree whose leg ``i`` carries ``x``; the canonical tree equals
    ``sum F * insert_at(host, i, guest)``.
    """
    s, n = f.sector, len(f)
    if not 1 <= i <= n - 2:
        raise InadmissibleTree(f"no adjacent vertex pair at leg {i} of a {n}-leg tree")
    ext = f.ext
    a, b, c = ext[i - 1], f.uncoupled[i], f.uncoupled[i + 1]
    e, d = ext[i], ext[i + 1]
    mu, nu = f.vertices[i - 1], f.vertices[i]
    out: dict = {}
    for x in s.fusion_outputs(b, c):
        F = s.fsymbol(a, b, c, d, e, x)
        if F.size == 0:
            continue
        for kap in range(F.shape[2]):
            for lam in range(F.shape[3]):
                coeff = F[mu, nu, kap, lam]
                if coeff == 0:
                    continue
                host = FusionTree(s, f.uncoupled[:i] + (x,) + f.uncoupled[i + 2:], f.coupled,
                                  f.isdual[:i] + (False,) + f.isdual[i + 2:],
                                  f.inner[:i - 1] + f.inner[i:],
                                  f.vertices[:i - 1] + (lam,) + f.vertices[i + 1:])
                guest = FusionTree(s, (b, c), x, (f.isdual[i], f.isdual[i + 1]), (), (kap,))
                out[(host, guest)] = complex(coeff)
    return _finish(out)


@_memo
def insert_at(host: FusionTree, i: int, guest: FusionTree) -> MappingProxyType:
    """Canonical expansion of ``host`` with ``guest`` attached to its leg ``i``."""
    s = host.sector
    if host.uncoupled[i] != guest.coupled or host.isdual[i]:
        raise ChargeMismatch("guest coupled charge must match an undualized host leg")
    n, m = len(host), len(guest)
    if n == 1:
        return MappingProxyType({guest: 1.0})
    if m == 0:
        unc = host.uncoupled[:i] + host.uncoupled[i + 1:]
        dual = host.isdual[:i] + host.isdual[i + 1:]
        inner = () if len(unc) <= 2 else host.inner[:max(0, i - 1)] + host.inner[max(1, i):]
        verts = () if len(unc) <= 1 else host.vertices[:max(0, i - 1)] + host.vertices[max(1, i):]
        return MappingProxyType({FusionTree(s, unc, host.coupled, dual, inner, verts): 1.0})
    if m == 1:
        dual = host.isdual[:i] + guest.isdual + host.isdual[i + 1:]
        return MappingProxyType({FusionTree(s, host.uncoupled, host.coupled, dual,
                                            host.inner, host.vertices): 1.0})
    if i == 0:
        t = FusionTree(s, guest.uncoupled + host.uncoupled[1:], host.coupled,
                       guest.isdual + host.isdual[1:],
                       guest.inner + (guest.coupled,) + host.inner,
                       guest.vertices + host.vertices)
        return MappingProxyType({t: 1.0})
    if m == 2:
        ext = host.ext
        a, d, xp = ext[i - 1], ext[i], host.uncoupled[i]
        b, c = guest.uncoupled
        kap, lam = guest.vertices[0], host.vertices[i - 1]
        unc = host.uncoupled[:i] + (b, c) + host.uncoupled[i + 1:]
        dual = host.isdual[:i] + guest.isdual + host.isdual[i + 1:]
        out: dict = {}
        for e in s.fusion_outputs(a, b):
            F = s.fsymbol(a, b, c, d, e, xp)
            if F.size == 0:
                continue
            inner = host.inner[:i - 1] + (e,) + host.inner[i - 1:]
            for mu in range(F.shape[0]):
                for nu in range(F.shape[1]):
                    coeff = np.conj(F[mu, nu, kap, lam])
                    if coeff == 0:
                        continue
                    verts = host.vertices[:i - 1] + (mu, nu) + host.vertices[i:]
                    _acc(out, FusionTree(s, unc, host.coupled, dual, inner, verts), complex(coeff))
        return _finish(out)
    g1, g2 = split(guest, m - 1)
    out = {}
    for t, c1 in insert_at(host, i, g2).items():
        for t2, c2 in insert_at(t, i, g1).items():
            _acc(out, t2, c1 * c2)
    return _finish(out)


# ---------------------------------------------------------------------------
# braiding

def _require_braiding(s: Sector) -> None:
    if s.braiding_style == BraidingStyle.NO_BRAIDING:
        raise BraidingUnavailable(f"sector {s.name} has no braiding")


def _rmat(s: Sector, a, b, c, inv: bool) -> np.ndarray:
    return s.rsymbol(b, a, c).conj().T if inv else s.rsymbol(a, b, c)


@_memo
def artin_braid(f: FusionTree, i: int, inv: bool = False) -> MappingProxyType:
    """Exchange legs ``i`` and ``i+1``; ``inv`` selects the inverse braid."""
    s, n = f.sector, len(f)
    if not 0 <= i < n - 1:
        raise ValueError(f"braid position {i} out of range for {n} legs")
    u = f.uncoupled
    a, b = u[i], u[i + 1]
    unc = u[:i] + (b, a) + u[i + 2:]
    dual = f.isdual[:i] + (f.isdual[i + 1], f.isdual[i]) + f.isdual[i + 2:]
    ext = f.ext
    one = s.unit
    if a == one or b == one:
        inner, verts = f.inner, f.vertices
        if i > 0:
            new = ext[i + 1] if a == one else ext[i - 1]
            if i < n - 1 and i - 1 < len(inner):
                inner = inner[:i - 1] + (new,) + inner[i:]
            verts = verts[:i - 1] + (verts[i], verts[i - 1]) + verts[i + 1:]
        return MappingProxyType({FusionTree(s, unc, f.coupled, dual, inner, verts): 1.0})
    _require_braiding(s)
    if i == 0:
        c = ext[1]
        R = _rmat(s, a, b, c, inv)
        mu = f.vertices[0]
        out: dict = {}
        for nu in range(R.shape[1]):
            if R[mu, nu] == 0:
                continue
            t = FusionTree(s, unc, f.coupled, dual, f.inner, (nu,) + f.vertices[1:])
            out[t] = complex(R[mu, nu])
        return _finish(out)
    # legs b = u[i], d = u[i+1] hang off a -> c -> e
    b, d = u[i], u[i + 1]
    a, c, e = ext[i - 1], ext[i], ext[i + 1]
    mu, nu = f.vertices[i - 1], f.vertices[i]
    R1 = _rmat(s, c, d, e, inv)
    out = {}
    for cp in s.fusion_outputs(a, d):
        if s.nsymbol(cp, b, e) == 0:
            continue
        R2 = _rmat(s, a, d, cp, inv)
        F = s.fsymbol(d, a, b, e, cp, c)
        if F.size == 0:
            continue
        inner = f.inner[:i - 1] + (cp,) + f.inner[i:]
        for sig in range(F.shape[0]):
            for lam in range(F.shape[1]):
                coeff = 0.0
                for rho in range(R1.shape[1]):
                    for kap in range(R2.shape[1]):
                        coeff += R1[nu, rho] * np.conj(F[kap, lam, mu, rho]) * np.conj(R2[sig, kap])
                if coeff == 0:
                    continue
                verts = f.vertices[:i - 1] + (sig, lam) + f.vertices[i + 1:]
                _acc(out, FusionTree(s, unc, f.coupled, dual, inner, verts), complex(coeff))
    return _finish(out)


def permutation_to_swaps(p: Sequence[int]) -> list[int]:
    """Adjacent transpositions (bubble sort) producing the arrangement ``p``.

    Applying swap ``s`` exchanges positions ``s`` and ``s+1``; after all swaps
    position ``k`` holds the element ``p[k]`` of the original arrangement.
    """
    p = list(p)
    if sorted(p) != list(range(len(p))):
        raise InvalidPermutation(f"not a permutation: {p}")
    target = {x: k for k, x in enumerate(p)}
    cur = list(range(len(p)))
    swaps = []
    changed = True
    while changed:
        changed = False
        for k in range(len(cur) - 1):
            if target[cur[k]] > target[cur[k + 1]]:
                cur[k], cur[k + 1] = cur[k + 1], cur[k]
                swaps.append(k)
                changed = True
    return swaps


def braid_tree(f: FusionTree, levels: Sequence[int], swaps: Sequence[int]) -> dict:
    """Apply a sequence of adjacent swaps; a leg with the higher level crosses over."""
    levels = list(levels)
    trees = {f: 1.0}
    for sw in swaps:
        inv = levels[sw] > levels[sw + 1]
        new: dict = {}
        for t, c in trees.items():
            for t2, c2 in artin_braid(t, sw, inv).items():
                _acc(new, t2, c * c2)
        trees = new
        levels[sw], levels[sw + 1] = levels[sw + 1], levels[sw]
    return trees


@_memo
def braid(f: FusionTree, levels: tuple, p: tuple) -> MappingProxyType:
    """Reorder the legs of a single tree to ``p`` via bubble-sort braids."""
    return _finish(braid_tree(f, levels, permutation_to_swaps(p)))


# ---------------------------------------------------------------------------
# bending and folding of tree pairs (splitting tree f1, fusion tree f2)

@_memo
def bend_right(f1: FusionTree, f2: FusionTree) -> MappingProxyType:
    """Move the last splitting leg to the end of the fusion tree."""
    s = f1.sector
    n1, n2 = len(f1), len(f2)
    if n1 == 0:
        raise ValueError("splitting tree has no leg to bend")
    c = f1.coupled
    ext = f1.ext
    a = s.unit if n1 == 1 else ext[n1 - 2]
    b = f1.uncoupled[-1]
    g1 = FusionTree(s, f1.uncoupled[:-1], a, f1.isdual[:-1], f1.inner[:-1] if n1 > 2 else (),
                    f1.vertices[:-1])
    unc2 = f2.uncoupled + (s.dual(b),)
    dual2 = f2.isdual + (not f1.isdual[-1],)
    inner2 = f2.inner + (c,) if n2 > 1 else ()
    coeff0 = np.sqrt(s.qdim(c) / s.qdim(a))
    if f1.isdual[-1]:
        coeff0 = coeff0 * np.conj(s.frobenius_schur(b))
    B = s.bsymbol(a, b, c)
    mu = f1.vertices[-1] if n1 > 1 else 0
    out: dict = {}
    for nu in range(B.shape[1]):
        coeff = coeff0 * B[mu, nu]
        if coeff == 0:
            continue
        verts2 = f2.vertices + (nu,) if n2 > 0 else ()
        g2 = FusionTree(s, unc2, a, dual2, inner2, verts2)
        out[(g1, g2)] = complex(coeff)
    return _finish(out)


@_memo
def bend_left_last(f1: FusionTree, f2: FusionTree) -> MappingProxyType:
    """Move the last fusion leg to the end of the splitting tree."""
    return MappingProxyType({(g1, g2): np.conj(c) for (g2, g1), c in bend_right(f2, f1).items()})


@_memo
def fold_right(f1: FusionTree, f2: FusionTree) -> MappingProxyType:
    """Move the first splitting leg to the front of the fusion tree."""
    s = f1.sector
    n1 = len(f1)
    if n1 == 0:
        raise ValueError("splitting tree has no leg to fold")
    a = f1.uncoupled[0]
    isduala = f1.isdual[0]
    factor = np.sqrt(s.qdim(a))
    if not isduala:
        factor = factor * np.conj(s.frobenius_schur(a))
    c1, c2 = s.dual(a), f1.coupled
    if n1 == 1:
        cset = {s.unit}
    elif n1 == 2:
        cset = {f1.uncoupled[1]}
    else:
        cset = None
    out: dict = {}
    for c in s.fusion_outputs(c1, c2):
        if cset is not None and c not in cset:
            continue
        for mu in range(s.nsymbol(c1, c2, c)):
            fc = FusionTree(s, (c1, c2), c, (not isduala, False), (), (mu,))
            for fl_, coeff1 in insert_at(fc, 1, f1).items():
                if n1 > 1 and fl_.inner[0] != s.unit:
                    continue
                fl = FusionTree(s, fl_.uncoupled[2:], fl_.coupled, fl_.isdual[2:],
                                fl_.inner[2:] if n1 > 3 else (),
                                fl_.vertices[2:] if n1 > 2 else ())
                for fr, coeff2 in insert_at(fc, 1, f2).items():
                    _acc(out, (fl, fr), factor * coeff1 * np.conj(coeff2))
    return _finish(out)


@_memo
def fold_left(f1: FusionTree, f2: FusionTree) -> MappingProxyType:
    """Move the first fusion leg to the front of the splitting tree."""
    return MappingProxyType({(g1, g2): np.conj(c) for (g2, g1), c in fold_right(f2, f1).items()})


def bend_left(f1: FusionTree, f2: FusionTree) -> MappingProxyType:
    """Fold the leftmost domain leg to the front of the codomain."""
    return fold_left(f1, f2)


def _compose(maps_in: dict, step) -> dict:
    out: dict = {}
    for key, c in maps_in.items():
        for key2, c2 in step(*key).items():
            _acc(out, key2, c * c2)
    return out


@_memo
def repartition(f1: FusionTree, f2: FusionTree, n: int) -> MappingProxyType:
    """Bend legs on the right until the splitting tree has ``n`` legs."""
    if f1.coupled != f2.coupled:
        raise ChargeMismatch("tree pair with different coupled charges")
    total = len(f1) + len(f2)
    if not 0 <= n <= total:
        raise ValueError("new codomain arity out of range")
    cur = {(f1, f2): 1.0}
    for _ in range(len(f1) - n):
        cur = _compose(cur, bend_right)
    for _ in range(n - len(f1)):
        cur = _compose(cur, bend_left_last)
    return _finish(cur)


def _cycle_clockwise(f1, f2):
    if len(f1) > 0:
        return _compose(_compose({(f1, f2): 1.0}, fold_right), bend_left_last)
    return _compose(_compose({(f1, f2): 1.0}, bend_left_last), fold_right)


def _cycle_anticlockwise(f1, f2):
    if len(f2) > 0:
        return _compose(_compose({(f1, f2): 1.0}, fold_left), bend_right)
    return _compose(_compose({(f1, f2): 1.0}, bend_right), fold_left)


def linearize(p: Sequence[int], q: Sequence[int], n1: int, n2: int) -> tuple:
    """Positions of ``(p..., reverse(q)...)`` in the cyclic leg order.

    The cyclic order lists the codomain legs left to right followed by the
    domain legs right to left.
    """
    n = n1 + n2

    def lin(x):
        return x if x < n1 else n - 1 - (x - n1)

    return tuple(lin(x) for x in p) + tuple(lin(x) for x in reversed(q))


def _check_perm(p, q, n):
    if sorted(tuple(p) + tuple(q)) != list(range(n)):
        raise InvalidPermutation(f"({p}, {q}) is not a permutation of {n} indices")


def is_cyclic(p: Sequence[int], q: Sequence[int], n1: int, n2: int) -> bool:
    lin = linearize(p, q, n1, n2)
    n = len(lin)
    return n == 0 or all(lin[k] == (lin[0] + k) % n for k in range(n))


@_memo
def transpose_pair(f1: FusionTree, f2: FusionTree, p: tuple, q: tuple) -> MappingProxyType:
    """Planar reshuffling of legs; ``(p..., reverse(q)...)`` must be cyclic."""
    n1, n2 = len(f1), len(f2)
    n = n1 + n2
    _check_perm(p, q, n)
    if not is_cyclic(p, q, n1, n2):
        raise NotCyclic(f"({p}, {q}) is not a cyclic permutation")
    cur = dict(repartition(f1, f2, len(p)))
    if n == 0:
        return _finish(cur)
    i1 = linearize(p, q, n1, n2).index(0)
    half = n // 2
    while 1 <= i1 < half:
        cur = _compose(cur, _cycle_anticlockwise)
        i1 -= 1
    while i1 >= half and i1 != 0:
        cur = _compose(cur, _cycle_clockwise)
        i1 = (i1 + 1) % n
    return _finish(cur)


@_memo
def braid_pair(f1: FusionTree, f2: FusionTree, p: tuple, q: tuple,
               levels: tuple) -> MappingProxyType:
    """Reorder legs with braids; ``levels[k]`` is the height of index ``k``."""
    n1, n2 = len(f1), len(f2)
    n = n1 + n2
    _check_perm(p, q, n)
    lin = linearize(p, q, n1, n2)
    lev_lin = tuple(levels[k] for k in range(n1)) + tuple(levels[n1 + k] for k in reversed(range(n2)))
    out: dict = {}
    for (f, f0), c1 in repartition(f1, f2, n).items():
        for fp, c2 in braid(f, lev_lin, lin).items():
            for key, c3 in repartition(fp, f0, len(p)).items():
                _acc(out, key, c1 * c2 * c3)
    return _finish(out)


def permute_pair(f1: FusionTree, f2: FusionTree, p: tuple, q: tuple) -> MappingProxyType:
    """Arbitrary leg reordering for sectors with symmetric braiding."""
    s = f1.sector
    if s.braiding_style not in (BraidingStyle.BOSONIC, BraidingStyle.FERMIONIC):
        raise BraidingUnavailable(
            f"permute needs symmetric braiding; {s.name} is {s.braiding_style.name}, use transpose")
    n = len(f1) + len(f2)
    return braid_pair(f1, f2, tuple(p), tuple(q), tuple(range(n)))


def _reorder(f1, f2, p, q):
    if f1.sector.braiding_style in (BraidingStyle.BOSONIC, BraidingStyle.FERMIONIC):
        return permute_pair(f1, f2, p, q)
    return transpose_pair(f1, f2, p, q)


@_memo
def trace_pair(f1: FusionTree, f2: FusionTree, p: tuple, q: tuple,
               t1: tuple, t2: tuple) -> MappingProxyType:
    """Partial trace of index ``t1[k]`` with ``t2[k]``; ``(p, q)`` order the rest.

    The pair is first reordered to ``(p + t1, q + t2)`` (planarly when that is
    cyclic), after which traced legs sit at the right end of both trees and
    are closed from the outside in.  Closing the last leg of a tree pair with
    coupled charge ``c`` leaves a loop on the line ``c'`` that fused with it,
    contributing ``d_c / d_c'``.
    """
    if len(t1) != len(t2):
        raise NonMatchingTracePair("trace index lists differ in length")
    s = f1.sector
    cur = _reorder(f1, f2, tuple(p) + tuple(t1), tuple(q) + tuple(t2))
    out: dict = {}
    k = len(t1)
    for (g1, g2), c in cur.items():
        ok = True
        for _ in range(k):
            if g1.uncoupled[-1] != g2.uncoupled[-1]:
                ok = False
                break
            if g1.isdual[-1] != g2.isdual[-1]:
                raise NonMatchingTracePair("traced legs differ in duality")
            h1, _r1 = split(g1, len(g1) - 1)
            h2, _r2 = split(g2, len(g2) - 1)
            mu1 = g1.vertices[-1] if len(g1) > 1 else 0
            mu2 = g2.vertices[-1] if len(g2) > 1 else 0
            if h1.coupled != h2.coupled or mu1 != mu2:
                ok = False
                break
            c = c * s.qdim(g1.coupled) / s.qdim(h1.coupled)
            g1, g2 = h1, h2
        if ok:
            _acc(out, (g1, g2), c)
    return _finish(out)


def tree_pair_matrix(pairs_in: Sequence, pairs_out: Sequence, transform) -> np.ndarray:
    """Coefficient matrix ``M[i, j]`` of ``pairs_out[j]`` in ``transform(*pairs_in[i])``."""
    index = {k: j for j, k in enumerate(pairs_out)}
    M = np.zeros((len(pairs_in), len(pairs_out)), dtype=complex)
    for i, pair in enumerate(pairs_in):
        for key, c in transform(*pair).items():
            M[i, index[key]] += c
    return M
