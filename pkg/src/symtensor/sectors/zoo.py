"""Concrete sector kinds and the name-based registry."""
from __future__ import annotations

import cmath
import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ArityMismatch, UnknownLabel
from .base import BraidingStyle, FusionStyle, Sector, _frozen
from . import su2 as _su2


def _is_int(a) -> bool:
    return isinstance(a, (int, np.integer)) and not isinstance(a, bool)


@dataclass(frozen=True)
class Trivial(Sector):
    """Single label ``0`` (printed ``I``)."""

    name = "Trivial"
    has_dense_rep = True

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and a == 0

    def label_str(self, a):
        return "I"

    def parse_label(self, s):
        if s.strip() in ("I", "0"):
            return 0
        raise UnknownLabel(s)

    def seed_labels(self):
        return [0]

    def all_labels(self):
        return [0]

    def dual(self, a):
        return 0

    def fusion_outputs(self, a, b):
        return (0,)


@dataclass(frozen=True)
class ZN(Sector):
    """Cyclic group charges ``0..n-1``."""

    n: int

    fusion_style = FusionStyle.UNIQUE
    has_dense_rep = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Z_N requires N >= 2")

    @property
    def name(self):
        return f"Z{self.n}"

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and 0 <= a < self.n

    def label_str(self, a):
        return str(int(a))

    def parse_label(self, s):
        try:
            a = int(s)
        except ValueError:
            raise UnknownLabel(s) from None
        return self.check_label(a)

    def seed_labels(self):
        return [1]

    def all_labels(self):
        return list(range(self.n))

    def dual(self, a):
        return (-a) % self.n

    def fusion_outputs(self, a, b):
        return ((a + b) % self.n,)


@dataclass(frozen=True)
class U1(Sector):
    """Integer charges."""

    name = "U1"
    has_dense_rep = True

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a)

    def label_str(self, a):
        return str(int(a))

    def parse_label(self, s):
        try:
            return int(s)
        except ValueError:
            raise UnknownLabel(s) from None

    def magnitude(self, a):
        return abs(a)

    def seed_labels(self):
        return [1, -1]

    def dual(self, a):
        return -a

    def fusion_outputs(self, a, b):
        return (a + b,)


@dataclass(frozen=True)
class FermionParity(Sector):
    """Super vector spaces: ``0`` even (``I``), ``1`` odd (``J``)."""

    name = "fZ2"
    braiding_style = BraidingStyle.FERMIONIC
    _names = ("I", "J")

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and a in (0, 1)

    def label_str(self, a):
        return self._names[a]

    def parse_label(self, s):
        s = s.strip()
        if s in self._names:
            return self._names.index(s)
        if s in ("0", "1"):
            return int(s)
        raise UnknownLabel(s)

    def seed_labels(self):
        return [1]

    def all_labels(self):
        return [0, 1]

    def dual(self, a):
        return a

    def fusion_outputs(self, a, b):
        return (a ^ b,)

    def _r(self, a, b, c):
        return -1.0 if (a == 1 and b == 1) else 1.0

    def twist(self, a):
        return -1.0 if a == 1 else 1.0


@dataclass(frozen=True)
class SU2(Sector):
    """SU(2) irreps labelled by the doubled spin ``2j``."""

    name = "SU2"
    fusion_style = FusionStyle.MULTIPLICITY_FREE
    has_dense_rep = True

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and a >= 0

    def label_str(self, a):
        return str(a // 2) if a % 2 == 0 else f"{a}/2"

    def parse_label(self, s):
        s = s.strip()
        m = re.fullmatch(r"(\d+)(?:/2)?", s)
        if not m:
            raise UnknownLabel(s)
        v = int(m.group(1))
        return v if s.endswith("/2") else 2 * v

    def magnitude(self, a):
        return a / 2

    def seed_labels(self):
        return [1]

    def dual(self, a):
        return a

    def fusion_outputs(self, a, b):
        return tuple(range(abs(a - b), a + b + 1, 2))

    def nsymbol(self, a, b, c):
        return int(_su2.triangle_ok(a, b, c))

    def qdim(self, a):
        return float(a + 1)

    def frobenius_schur(self, a):
        return -1.0 if a % 2 else 1.0

    def _f(self, a, b, c, d, e, f):
        return _su2.su2_fsymbol(a, b, c, d, e, f)

    def _r(self, a, b, c):
        return _su2.su2_rsymbol(a, b, c)

    @lru_cache(maxsize=None)
    def fsymbol(self, a, b, c, d, e, f):
        return super().fsymbol(a, b, c, d, e, f)


_PHI = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class Fibonacci(Sector):
    """Fibonacci anyons: ``0`` = I, ``1`` = τ."""

    name = "Fib"
    fusion_style = FusionStyle.MULTIPLICITY_FREE
    braiding_style = BraidingStyle.ANYONIC
    _names = ("I", "τ")
    _alias = {"tau": 1, "t": 1}

    # τ ⊗ τ recoupling in the basis {I, τ}
    _FTTT = np.array([[1 / _PHI, 1 / math.sqrt(_PHI)],
                      [1 / math.sqrt(_PHI), -1 / _PHI]])
    _R = {0: cmath.exp(4j * math.pi / 5), 1: cmath.exp(-3j * math.pi / 5)}

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and a in (0, 1)

    def label_str(self, a):
        return self._names[a]

    def parse_label(self, s):
        s = s.strip()
        if s in self._names:
            return self._names.index(s)
        if s in self._alias:
            return self._alias[s]
        raise UnknownLabel(s)

    def seed_labels(self):
        return [1]

    def all_labels(self):
        return [0, 1]

    def dual(self, a):
        return a

    def fusion_outputs(self, a, b):
        if a == 0:
            return (b,)
        if b == 0:
            return (a,)
        return (0, 1)

    def qdim(self, a):
        return _PHI if a == 1 else 1.0

    def _f(self, a, b, c, d, e, f):
        if a == b == c == d == 1:
            return self._FTTT[e, f]
        return 1.0

    def _r(self, a, b, c):
        if a == b == 1:
            return self._R[c]
        return 1.0

    def twist(self, a):
        return cmath.exp(-4j * math.pi / 5) if a == 1 else 1.0


@dataclass(frozen=True)
class Ising(Sector):
    """Ising anyons: ``0`` = I, ``1`` = σ, ``2`` = ψ."""

    name = "Ising"
    fusion_style = FusionStyle.MULTIPLICITY_FREE
    braiding_style = BraidingStyle.ANYONIC
    _names = ("I", "σ", "ψ")
    _alias = {"sigma": 1, "s": 1, "psi": 2, "p": 2}

    @property
    def unit(self):
        return 0

    def is_label(self, a):
        return _is_int(a) and a in (0, 1, 2)

    def label_str(self, a):
        return self._names[a]

    def parse_label(self, s):
        s = s.strip()
        if s in self._names:
            return self._names.index(s)
        if s in self._alias:
            return self._alias[s]
        raise UnknownLabel(s)

    def seed_labels(self):
        return [1]

    def all_labels(self):
        return [0, 1, 2]

    def dual(self, a):
        return a

    def fusion_outputs(self, a, b):
        if a == 0:
            return (b,)
        if b == 0:
            return (a,)
        if a == 1 and b == 1:
            return (0, 2)
        if a == 2 and b == 2:
            return (0,)
        return (1,)

    def qdim(self, a):
        return math.sqrt(2) if a == 1 else 1.0

    def _f(self, a, b, c, d, e, f):
        if a == b == c == d == 1:
            # rows e, columns f over {I, ψ}
            return -1 / math.sqrt(2) if (e == 2 and f == 2) else 1 / math.sqrt(2)
        if (a, b, c, d) in ((1, 2, 1, 2), (2, 1, 2, 1)):
            return -1.0
        return 1.0

    def _r(self, a, b, c):
        if a == b == 1:
            return cmath.exp(-1j * math.pi / 8) if c == 0 else cmath.exp(3j * math.pi / 8)
        if a == b == 2:
            return -1.0
        if {a, b} == {1, 2}:
            return -1j
        return 1.0

    def twist(self, a):
        return (1.0, cmath.exp(1j * math.pi / 8), -1.0)[a]


def _kron4(arrays):
    out = arrays[0]
    for arr in arrays[1:]:
        s1, s2 = out.shape, arr.shape
        out = np.einsum("abcd,efgh->aebfcgdh", out, arr).reshape(
            tuple(x * y for x, y in zip(s1, s2)))
    return out


@dataclass(frozen=True)
class Product(Sector):
    """Deligne product of sector kinds; labels are tuples of component labels."""

    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("a product sector needs at least two factors")

    @property
    def name(self):
        return " x ".join(f.name for f in self.factors)

    @property
    def fusion_style(self):
        return max(f.fusion_style for f in self.factors)

    @property
    def braiding_style(self):
        styles = [f.braiding_style for f in self.factors]
        if BraidingStyle.NO_BRAIDING in styles:
            return BraidingStyle.NO_BRAIDING
        return max(styles)

    @property
    def has_dense_rep(self):
        return all(f.has_dense_rep for f in self.factors)

    @property
    def unit(self):
        return tuple(f.unit for f in self.factors)

    def _arity(self, a):
        if not isinstance(a, tuple) or len(a) != len(self.factors):
            raise ArityMismatch(f"{a!r} does not match {self.name}")

    def is_label(self, a):
        return (isinstance(a, tuple) and len(a) == len(self.factors)
                and all(f.is_label(x) for f, x in zip(self.factors, a)))

    def sort_key(self, a):
        return tuple(f.sort_key(x) for f, x in zip(self.factors, a))

    def label_str(self, a):
        return "(" + ",".join(f.label_str(x) for f, x in zip(self.factors, a)) + ")"

    def parse_label(self, s):
        s = s.strip()
        if not (s.startswith("(") and s.endswith(")")):
            raise UnknownLabel(s)
        parts = s[1:-1].split(",")
        if len(parts) != len(self.factors):
            raise ArityMismatch(s)
        return tuple(f.parse_label(p) for f, p in zip(self.factors, parts))

    def magnitude(self, a):
        return max(f.magnitude(x) for f, x in zip(self.factors, a))

    def seed_labels(self):
        seeds = []
        for k, f in enumerate(self.factors):
            for s in f.seed_labels():
                lab = list(self.unit)
                lab[k] = s
                seeds.append(tuple(lab))
        return seeds

    def all_labels(self):
        parts = [f.all_labels() for f in self.factors]
        if any(p is None for p in parts):
            return None
        return [tuple(x) for x in itertools.product(*parts)]

    def dual(self, a):
        return tuple(f.dual(x) for f, x in zip(self.factors, a))

    @lru_cache(maxsize=None)
    def fusion_outputs(self, a, b):
        self._arity(a)
        self._arity(b)
        outs = itertools.product(*(f.fusion_outputs(x, y) for f, x, y in zip(self.factors, a, b)))
        return tuple(sorted((tuple(o) for o in outs), key=self.sort_key))

    def nsymbol(self, a, b, c):
        return math.prod(f.nsymbol(x, y, z) for f, x, y, z in zip(self.factors, a, b, c))

    def qdim(self, a):
        return math.prod(f.qdim(x) for f, x in zip(self.factors, a))

    def frobenius_schur(self, a):
        return math.prod(f.frobenius_schur(x) for f, x in zip(self.factors, a))

    def twist(self, a):
        return math.prod(f.twist(x) for f, x in zip(self.factors, a))

    def _f(self, a, b, c, d, e, f):
        return math.prod(s._f(*xs) for s, *xs in zip(self.factors, a, b, c, d, e, f))

    def _r(self, a, b, c):
        return math.prod(s._r(*xs) for s, *xs in zip(self.factors, a, b, c))

    @lru_cache(maxsize=None)
    def fsymbol(self, a, b, c, d, e, f):
        parts = [s.fsymbol(*xs) for s, *xs in zip(self.factors, a, b, c, d, e, f)]
        return _frozen(_kron4(parts).astype(complex))

    @lru_cache(maxsize=None)
    def rsymbol(self, a, b, c):
        parts = [s.rsymbol(*xs) for s, *xs in zip(self.factors, a, b, c)]
        out = parts[0]
        for p in parts[1:]:
            out = np.kron(out, p)
        return _frozen(np.asarray(out, dtype=complex))


_SIMPLE = {
    "Trivial": Trivial,
    "U1": U1,
    "fZ2": FermionParity,
    "SU2": SU2,
    "Fib": Fibonacci,
    "Ising": Ising,
}


@lru_cache(maxsize=None)
def get_sector(name: str) -> Sector:
    """Sector kind from its canonical name, e.g. ``"Z3"`` or ``"fZ2 x SU2"``."""
    parts = [p.strip() for p in re.split(r"\s+x\s+|\s*×\s*|\s*⊠\s*", name.strip())]
    kinds = []
    for p in parts:
        if p in _SIMPLE:
            kinds.append(_SIMPLE[p]())
        elif re.fullmatch(r"Z\d+", p):
            kinds.append(ZN(int(p[1:])))
        else:
            raise UnknownLabel(f"unknown sector kind {p!r}")
    return kinds[0] if len(kinds) == 1 else Product(tuple(kinds))
