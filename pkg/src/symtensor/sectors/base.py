"""Sector contract and generic consistency checks.

A sector kind is an immutable object describing a family of simple objects
(irreps or anyon types) together with their topological data.  Labels are
plain hashable Python values (ints, or tuples of ints for products) whose
natural ordering is the canonical total order used for block layout.

F-symbols are returned as 4-index arrays ``F[mu, nu, kappa, lam]`` for

    ((a x b -> e) x c -> d)  =  sum  F * (a x (b x c -> f) -> d)

with ``mu`` the ``ab -> e`` vertex, ``nu`` the ``ec -> d`` vertex, ``kappa``
the ``bc -> f`` vertex and ``lam`` the ``af -> d`` vertex.  Inadmissible
tuples give arrays with a zero-length axis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import IntEnum
from typing import Hashable, Iterable, Sequence

import numpy as np

from ..errors import NoBraidingDefined, UnknownLabel

Label = Hashable


class FusionStyle(IntEnum):
    UNIQUE = 0
    MULTIPLICITY_FREE = 1
    GENERIC = 2


class BraidingStyle(IntEnum):
    BOSONIC = 0
    FERMIONIC = 1
    ANYONIC = 2
    NO_BRAIDING = 3


_EMPTY4 = np.zeros((0, 0, 0, 0), dtype=complex)
_EMPTY2 = np.zeros((0, 0), dtype=complex)
_EMPTY4.setflags(write=False)
_EMPTY2.setflags(write=False)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Sector:
    """Interface every symmetry sector kind implements.

    Subclasses of multiplicity-free kinds only need the scalar hooks
    ``_f``/``_r``; the array-valued accessors are derived from them.
    """

    name: str = ""
    fusion_style: FusionStyle = FusionStyle.UNIQUE
    braiding_style: BraidingStyle = BraidingStyle.BOSONIC
    #: True when the sector is a group (has an explicit dense representation)
    has_dense_rep: bool = False

    # -- label plumbing -------------------------------------------------
    @property
    def unit(self) -> Label:
        raise NotImplementedError

    def is_label(self, a) -> bool:
        raise NotImplementedError

    def check_label(self, a) -> Label:
        if not self.is_label(a):
            raise UnknownLabel(f"{a!r} is not a label of sector {self.name}")
        return a

    def sort_key(self, a):
        return a

    def label_str(self, a) -> str:
        raise NotImplementedError

    def parse_label(self, s: str) -> Label:
        raise NotImplementedError

    def magnitude(self, a) -> float:
        """Size measure used to cap generated label sets."""
        return 0.0

    def seed_labels(self) -> list:
        """Labels from which every label is generated by fusion."""
        raise NotImplementedError

    def all_labels(self) -> list | None:
        """Every label for finite sectors, ``None`` otherwise."""
        return None

    # -- fusion ring ----------------------------------------------------
    def dual(self, a) -> Label:
        raise NotImplementedError

    def fusion_outputs(self, a, b) -> tuple:
        raise NotImplementedError

    def nsymbol(self, a, b, c) -> int:
        return int(c in self.fusion_outputs(a, b))

    def qdim(self, a) -> float:
        return 1.0

    def frobenius_schur(self, a) -> complex:
        return 1.0

    def twist(self, a) -> complex:
        if self.braiding_style == BraidingStyle.NO_BRAIDING:
            raise NoBraidingDefined(self.name)
        return 1.0

    # -- scalar hooks for multiplicity-free kinds ----------------------
    def _f(self, a, b, c, d, e, f) -> complex:
        """F-symbol of admissible multiplicity-free tuples."""
        return 1.0

    def _r(self, a, b, c) -> complex:
        """R-symbol of admissible multiplicity-free triads."""
        return 1.0

    def f_admissible(self, a, b, c, d, e, f) -> bool:
        return (self.nsymbol(a, b, e) > 0 and self.nsymbol(e, c, d) > 0
                and self.nsymbol(b, c, f) > 0 and self.nsymbol(a, f, d) > 0)

    def fscalar(self, a, b, c, d, e, f) -> complex:
        """F-symbol as a scalar for multiplicity-free kinds, 0 if inadmissible."""
        if not self.f_admissible(a, b, c, d, e, f):
            return 0.0
        return self._f(a, b, c, d, e, f)

    def rscalar(self, a, b, c) -> complex:
        if self.braiding_style == BraidingStyle.NO_BRAIDING:
            raise NoBraidingDefined(self.name)
        if self.nsymbol(a, b, c) == 0:
            return 0.0
        return self._r(a, b, c)

    def fsymbol(self, a, b, c, d, e, f) -> np.ndarray:
        if not self.f_admissible(a, b, c, d, e, f):
            return _EMPTY4
        return _frozen(np.full((1, 1, 1, 1), self._f(a, b, c, d, e, f), dtype=complex))

    def rsymbol(self, a, b, c) -> np.ndarray:
        if self.braiding_style == BraidingStyle.NO_BRAIDING:
            raise NoBraidingDefined(self.name)
        if self.nsymbol(a, b, c) == 0:
            return _EMPTY2
        return _frozen(np.full((1, 1), self._r(a, b, c), dtype=complex))

    def bsymbol(self, a, b, c) -> np.ndarray:
        """Bending coefficients ``B^{ab}_c`` as a ``[N^{ab}_c, N^{c b̄}_a]`` matrix."""
        bb = self.dual(b)
        F = self.fsymbol(a, b, bb, a, c, self.unit)
        if F.size == 0:
            return np.zeros((self.nsymbol(a, b, c), self.nsymbol(c, bb, a)), dtype=complex)
        scale = np.sqrt(self.qdim(a) * self.qdim(b) / self.qdim(c))
        return scale * F[:, :, 0, 0]

    # -- misc -----------------------------------------------------------
    def __str__(self) -> str:
        return self.name

    def sorted_labels(self, labels: Iterable) -> list:
        return sorted(set(labels), key=self.sort_key)


@dataclass(frozen=True)
class ConsistencyReport:
    """Outcome of one consistency check."""

    checked_equation: str
    max_residual: float
    failing_tuple: tuple | None
    tuples_checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def default_tol(sector: Sector) -> float:
    return 1e-10 if "SU2" in sector.name else 1e-12


def label_closure(sector: Sector, seeds: Sequence | None = None,
                  bound: float = 1.0) -> list:
    """Close ``seeds`` under fusion and duality, dropping labels above ``bound``."""
    finite = sector.all_labels()
    if finite is not None and seeds is None:
        return sector.sorted_labels(finite)
    seeds = sector.seed_labels() if seeds is None else list(seeds)
    for a in seeds:
        sector.check_label(a)
    found = {sector.unit}
    found.update(a for a in seeds if sector.magnitude(a) <= bound)
    frontier = set(found)
    while frontier:
        new = set()
        current = list(found)
        for a in frontier:
            cands = [sector.dual(a)]
            for b in current:
                cands.extend(sector.fusion_outputs(a, b))
                cands.extend(sector.fusion_outputs(b, a))
            for c in cands:
                if c not in found and sector.magnitude(c) <= bound:
                    new.add(c)
        found |= new
        frontier = new
    return sector.sorted_labels(found)


def _report(eq, residual, worst, count, tol):
    return ConsistencyReport(eq, float(residual),
                             worst if residual > tol else None, count, tol)


def _check_labels(sector, labels):
    return [sector.check_label(a) for a in labels]


def validate_pentagon(sector: Sector, labels: Sequence, tol: float | None = None) -> ConsistencyReport:
    """Maximal residual of the pentagon equation over ``labels``.

    Outer labels ``a, b, c, d`` range over ``labels``; intermediate labels are
    every admissible fusion output.
    """
    tol = default_tol(sector) if tol is None else tol
    labels = _check_labels(sector, labels)
    fo = sector.fusion_outputs
    worst, res, count = None, 0.0, 0
    scalar = sector.fusion_style != FusionStyle.GENERIC
    F = sector.fscalar if scalar else sector.fsymbol
    for a, b, c, d in itertools.product(labels, repeat=4):
        for f in fo(a, b):
            for h in fo(c, d):
                for g in fo(f, c):
                    for i in fo(b, h):
                        for e in fo(g, d):
                            if sector.nsymbol(a, i, e) == 0:
                                continue
                            count += 1
                            if scalar:
                                lhs = F(f, c, d, e, g, h) * F(a, b, h, e, f, i)
                                rhs = 0.0
                                for j in fo(b, c):
                                    rhs += F(a, b, c, g, f, j) * F(a, j, d, e, g, i) * F(b, c, d, i, j, h)
                                r = abs(lhs - rhs)
                            else:
                                lhs = np.einsum("kmng,lgrs->kmnlrs",
                                                F(f, c, d, e, g, h), F(a, b, h, e, f, i))
                                rhs = np.zeros_like(lhs)
                                for j in fo(b, c):
                                    rhs = rhs + np.einsum("klab,bmts,atnr->kmnlrs",
                                                          F(a, b, c, g, f, j),
                                                          F(a, j, d, e, g, i),
                                                          F(b, c, d, i, j, h))
                                r = float(np.max(np.abs(lhs - rhs), initial=0.0))
                            if r > res:
                                res, worst = r, (a, b, c, d, e, f, g, h, i)
    return _report("Pentagon", res, worst, count, tol)


def validate_triangle(sector: Sector, labels: Sequence, tol: float | None = None) -> ConsistencyReport:
    """F with the unit in any of the three upper slots must be the identity."""
    tol = default_tol(sector) if tol is None else tol
    labels = _check_labels(sector, labels)
    one = sector.unit
    fo = sector.fusion_outputs
    res, worst, count = 0.0, None, 0
    for a, b in itertools.product(labels, repeat=2):
        for c in fo(a, b):
            n = sector.nsymbol(a, b, c)
            for k, tup in enumerate(((one, a, b, c, a, c), (a, one, b, c, a, b),
                                     (a, b, one, c, c, b))):
                F = sector.fsymbol(*tup)
                if F.size == 0:
                    r = float(n > 0)
                else:
                    M = F[:, 0, 0, :] if k == 2 else F[0, :, 0, :]
                    r = float(np.max(np.abs(M - np.eye(n))))
                count += 1
                if r > res:
                    res, worst = r, tup
    return _report("Triangle", res, worst, count, tol)


def validate_hexagon(sector: Sector, labels: Sequence, tol: float | None = None) -> ConsistencyReport:
    """Maximal residual of both hexagon equations (braid and inverse braid)."""
    if sector.braiding_style == BraidingStyle.NO_BRAIDING:
        raise NoBraidingDefined(sector.name)
    if sector.fusion_style == FusionStyle.GENERIC:
        raise NotImplementedError("hexagon check for generic fusion multiplicities")
    tol = default_tol(sector) if tol is None else tol
    labels = _check_labels(sector, labels)
    fo = sector.fusion_outputs
    F, R = sector.fscalar, sector.rscalar
    res, worst, count = 0.0, None, 0
    for a, b, c in itertools.product(labels, repeat=3):
        for e in fo(c, a):
            for g in fo(c, b):
                for d in fo(e, b):
                    if sector.nsymbol(a, g, d) == 0:
                        continue
                    count += 1
                    p1 = R(c, a, e) * F(a, c, b, d, e, g) * R(b, c, g)
                    q1 = np.conj(R(a, c, e)) * F(a, c, b, d, e, g) * np.conj(R(c, b, g))
                    p2 = q2 = 0.0
                    for f in fo(a, b):
                        p2 += F(c, a, b, d, e, f) * R(f, c, d) * F(a, b, c, d, f, g)
                        q2 += F(c, a, b, d, e, f) * np.conj(R(c, f, d)) * F(a, b, c, d, f, g)
                    r = max(abs(p1 - p2), abs(q1 - q2))
                    if r > res:
                        res, worst = r, (a, b, c, d, e, g)
    return _report("Hexagon", res, worst, count, tol)


def _fmatrix(sector: Sector, a, b, c, d):
    """F^{abc}_d assembled as a square matrix over (e, mu, nu) x (f, kappa, lam)."""
    fo = sector.fusion_outputs
    es = [e for e in fo(a, b) if sector.nsymbol(e, c, d)]
    fs = [f for f in fo(b, c) if sector.nsymbol(a, f, d)]
    rows = [(e, m, n) for e in es for m in range(sector.nsymbol(a, b, e))
            for n in range(sector.nsymbol(e, c, d))]
    cols = [(f, k, l) for f in fs for k in range(sector.nsymbol(b, c, f))
            for l in range(sector.nsymbol(a, f, d))]
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, (e, m, n) in enumerate(rows):
        for j, (f, k, l) in enumerate(cols):
            M[i, j] = sector.fsymbol(a, b, c, d, e, f)[m, n, k, l]
    return M


def validate_unitarity(sector: Sector, labels: Sequence, tol: float | None = None) -> ConsistencyReport:
    """Deviation of assembled F-matrices and R-matrices from unitarity."""
    tol = 1e-12 if tol is None else tol
    labels = _check_labels(sector, labels)
    fo = sector.fusion_outputs
    res, worst, count = 0.0, None, 0
    braided = sector.braiding_style != BraidingStyle.NO_BRAIDING
    for a, b, c in itertools.product(labels, repeat=3):
        ds = {d for e in fo(a, b) for d in fo(e, c)}
        for d in sector.sorted_labels(ds):
            M = _fmatrix(sector, a, b, c, d)
            count += 1
            if M.shape[0] != M.shape[1]:
                r = np.inf
            else:
                r = float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0])), initial=0.0))
            if r > res:
                res, worst = r, (a, b, c, d)
    if braided:
        for a, b in itertools.product(labels, repeat=2):
            for c in fo(a, b):
                Rm = sector.rsymbol(a, b, c)
                count += 1
                r = float(np.max(np.abs(Rm.conj().T @ Rm - np.eye(Rm.shape[1])), initial=0.0))
                if r > res:
                    res, worst = r, (a, b, c)
    return _report("Unitarity", res, worst, count, tol)


def validate_dimensions(sector: Sector, labels: Sequence, tol: float = 1e-12) -> ConsistencyReport:
    """Relative residual of d_a d_b = sum_c N^{ab}_c d_c and of the dual axioms."""
    labels = _check_labels(sector, labels)
    res, worst, count = 0.0, None, 0
    one = sector.unit
    for a in labels:
        ad = sector.dual(a)
        r = 0.0
        if sector.dual(ad) != a or sector.nsymbol(a, ad, one) != 1:
            r = np.inf
        r = max(r, abs(sector.qdim(ad) - sector.qdim(a)) / sector.qdim(a))
        count += 1
        if r > res:
            res, worst = r, (a,)
    for a, b in itertools.product(labels, repeat=2):
        lhs = sector.qdim(a) * sector.qdim(b)
        rhs = sum(sector.nsymbol(a, b, c) * sector.qdim(c) for c in sector.fusion_outputs(a, b))
        r = abs(lhs - rhs) / lhs
        if sector.nsymbol(a, b, one) != int(b == sector.dual(a)):
            r = np.inf
        count += 1
        if r > res:
            res, worst = r, (a, b)
    return _report("Dimensions", res, worst, count, tol)


def derive_frobenius_schur(sector: Sector, a) -> complex:
    """Phase of ``F^{a ā a}_a[I, I]``."""
    sector.check_label(a)
    one = sector.unit
    val = sector.fsymbol(a, sector.dual(a), a, a, one, one)[0, 0, 0, 0]
    return val / abs(val)


def derive_qdim(sector: Sector, a) -> float:
    """``1 / |F^{a ā a}_a[I, I]|``."""
    one = sector.unit
    return 1.0 / abs(sector.fsymbol(a, sector.dual(a), a, a, one, one)[0, 0, 0, 0])


def derive_twist(sector: Sector, a) -> complex:
    """``sum_b (d_b / d_a) tr R^{aa}_b``."""
    if sector.braiding_style == BraidingStyle.NO_BRAIDING:
        raise NoBraidingDefined(sector.name)
    sector.check_label(a)
    da = sector.qdim(a)
    return complex(sum(sector.qdim(b) / da * np.trace(sector.rsymbol(a, a, b))
                       for b in sector.fusion_outputs(a, a)))


def run_all_checks(sector: Sector, labels: Sequence, tol: float | None = None) -> list[ConsistencyReport]:
    reports = [validate_triangle(sector, labels, tol),
               validate_pentagon(sector, labels, tol),
               validate_unitarity(sector, labels),
               validate_dimensions(sector, labels)]
    if sector.braiding_style != BraidingStyle.NO_BRAIDING:
        reports.append(validate_hexagon(sector, labels, tol))
    return reports
