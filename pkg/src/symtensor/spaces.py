"""Graded vector spaces, tensor products of them and hom-spaces."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping

from .errors import ConfigError, SectorMismatch
from .sectors import Sector, get_sector


@dataclass(frozen=True)
class GradedSpace:
    """Direct sum of simple objects with degeneracies.

    ``degeneracies`` holds ``(label, n)`` pairs of the underlying normal space,
    sorted by label.  A dual space keeps the same pairs and flips ``is_dual``;
    its labels, seen from the normal-space perspective, are the duals.
    """

    sector: Sector
    degeneracies: tuple
    is_dual: bool = False

    def __post_init__(self):
        labs = [a for a, _ in self.degeneracies]
        if labs != self.sector.sorted_labels(labs):
            raise ValueError("degeneracies must be sorted and unique")
        for a, n in self.degeneracies:
            self.sector.check_label(a)
            if int(n) <= 0:
                raise ValueError("degeneracies must be positive")

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((self.sector, self.degeneracies, self.is_dual))
            self.__dict__["_hash"] = h
            return h

    @classmethod
    def from_dict(cls, sector: Sector | str, degs: Mapping, dual: bool = False) -> "GradedSpace":
        if isinstance(sector, str):
            sector = get_sector(sector)
        pairs = [(a, int(n)) for a, n in degs.items() if int(n) > 0]
        pairs.sort(key=lambda p: sector.sort_key(p[0]))
        return cls(sector, tuple(pairs), dual)

    @cached_property
    def _map(self) -> dict:
        if self.is_dual:
            return {self.sector.dual(a): n for a, n in self.degeneracies}
        return dict(self.degeneracies)

    @cached_property
    def _sectors(self) -> tuple:
        return tuple(self.sector.sorted_labels(self._map))

    def sectors(self) -> tuple:
        """Labels as seen from the normal-space perspective, in canonical order."""
        return self._sectors

    def degeneracy(self, a) -> int:
        return self._map.get(a, 0)

    @property
    def dim(self) -> float:
        """Total dimension; an int whenever every quantum dimension is integral."""
        d = sum(n * self.sector.qdim(a) for a, n in self.degeneracies)
        return int(round(d)) if abs(d - round(d)) < 1e-9 else d

    def dual(self) -> "GradedSpace":
        return GradedSpace(self.sector, self.degeneracies, not self.is_dual)

    @property
    def total_degeneracy(self) -> int:
        return sum(n for _, n in self.degeneracies)

    def __str__(self) -> str:
        body = ", ".join(f"{self.sector.label_str(a)}:{n}" for a, n in self.degeneracies)
        return f"{self.sector.name}[{body}]" + ("'" if self.is_dual else "")

    __repr__ = __str__


@dataclass(frozen=True)
class ProductSpace:
    """Ordered tensor product of graded spaces; empty means the unit object."""

    spaces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "spaces", tuple(self.spaces))

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash(self.spaces)
            self.__dict__["_hash"] = h
            return h

    def __len__(self) -> int:
        return len(self.spaces)

    def __iter__(self):
        return iter(self.spaces)

    def __getitem__(self, i):
        return self.spaces[i]

    def dual(self) -> "ProductSpace":
        return ProductSpace(tuple(V.dual() for V in reversed(self.spaces)))

    @property
    def dim(self):
        out = 1
        for V in self.spaces:
            out *= V.dim
        return out

    def __str__(self) -> str:
        return " ⊗ ".join(str(V) for V in self.spaces) if self.spaces else "one"


def _common_sector(spaces: Iterable[GradedSpace]) -> Sector | None:
    kinds = {V.sector for V in spaces}
    if len(kinds) > 1:
        raise SectorMismatch(f"mixed sector kinds: {sorted(k.name for k in kinds)}")
    return kinds.pop() if kinds else None


def _fuse_counts(sector: Sector, spaces: tuple) -> dict:
    """Map coupled label -> number of (tree, outer index) combinations."""
    counts = {sector.unit: 1}
    for V in spaces:
        new: dict = {}
        for c, n in counts.items():
            for a in V.sectors():
                na = V.degeneracy(a)
                for e in sector.fusion_outputs(c, a):
                    new[e] = new.get(e, 0) + n * na * sector.nsymbol(c, a, e)
        counts = new
    return counts


@lru_cache(maxsize=None)
def _fuse_cached(P: ProductSpace, sector: Sector) -> GradedSpace:
    return GradedSpace.from_dict(sector, _fuse_counts(sector, P.spaces))


def fuse(P: ProductSpace | Iterable[GradedSpace], sector: Sector | None = None) -> GradedSpace:
    """Single graded space isomorphic to the tensor product ``P``.

    ``sector`` is needed only for the empty product.
    """
    if not isinstance(P, ProductSpace):
        P = ProductSpace(tuple(P))
    kind = _common_sector(P.spaces) or sector
    if kind is None:
        raise SectorMismatch("sector kind required to fuse an empty product")
    return _fuse_cached(P, kind)


@dataclass(frozen=True)
class HomSpace:
    """Space of maps ``domain -> codomain``."""

    codomain: ProductSpace
    domain: ProductSpace
    sector: Sector

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((self.codomain, self.domain, self.sector))
            self.__dict__["_hash"] = h
            return h

    @classmethod
    def of(cls, codomain, domain, sector: Sector | None = None) -> "HomSpace":
        cod = codomain if isinstance(codomain, ProductSpace) else ProductSpace(tuple(codomain))
        dom = domain if isinstance(domain, ProductSpace) else ProductSpace(tuple(domain))
        kind = _common_sector(cod.spaces + dom.spaces) or sector
        if kind is None:
            raise SectorMismatch("cannot infer the sector kind of an empty hom-space")
        if sector is not None and kind != sector:
            raise SectorMismatch(f"{kind.name} != {sector.name}")
        return cls(cod, dom, kind)

    @property
    def n_codomain(self) -> int:
        return len(self.codomain)

    @property
    def n_domain(self) -> int:
        return len(self.domain)

    @property
    def rank(self) -> int:
        return len(self.codomain) + len(self.domain)

    @cached_property
    def blocksectors(self) -> tuple:
        """Coupled charges reachable from either side.

        Charges present on one side only give zero-dimensional blocks.
        """
        cod = _fuse_counts(self.sector, self.codomain.spaces)
        dom = _fuse_counts(self.sector, self.domain.spaces)
        return tuple(self.sector.sorted_labels(set(cod) | set(dom)))

    def index_space(self, i: int) -> GradedSpace:
        """Space of index ``i`` as it appears in the codomain-first ordering."""
        n1 = self.n_codomain
        return self.codomain[i] if i < n1 else self.domain[i - n1]

    def permuted(self, p: tuple, q: tuple) -> "HomSpace":
        """Hom-space after moving indices ``p`` to the codomain and ``q`` to the domain."""
        n1 = self.n_codomain
        cod = [self.codomain[i] if i < n1 else self.domain[i - n1].dual() for i in p]
        dom = [self.codomain[i].dual() if i < n1 else self.domain[i - n1] for i in q]
        return HomSpace(ProductSpace(tuple(cod)), ProductSpace(tuple(dom)), self.sector)

    def adjoint(self) -> "HomSpace":
        return HomSpace(self.domain, self.codomain, self.sector)

    def __str__(self) -> str:
        return f"{self.codomain} ← {self.domain}"


_SPACE_RE = re.compile(r"^\s*(?P<kind>[^\[]+?)\s*\[(?P<body>[^\]]*)\]\s*(?P<dual>'?)\s*$")


def parse_space(text: str) -> GradedSpace:
    """Parse ``Kind[label:n, ...]`` with an optional trailing ``'`` for the dual."""
    m = _SPACE_RE.match(text)
    if not m:
        raise ConfigError(f"malformed space {text!r}")
    try:
        sector = get_sector(m.group("kind"))
    except Exception as exc:
        raise ConfigError(str(exc)) from None
    degs: dict = {}
    body = m.group("body").strip()
    # product labels contain commas inside parentheses, so split at top level
    items = re.findall(r"\s*(\([^)]*\)|[^,]+?)\s*:\s*(\d+)\s*(?:,|$)", body) if body else []
    consumed = re.sub(r"\s+", "", ",".join(f"{a}:{n}" for a, n in items))
    if consumed != re.sub(r"\s+", "", body):
        raise ConfigError(f"malformed space body {body!r}")
    for lab, n in items:
        try:
            a = sector.parse_label(lab.replace(" ", ""))
        except Exception as exc:
            raise ConfigError(f"bad label {lab!r}: {exc}") from None
        if int(n) <= 0:
            raise ConfigError("degeneracies must be positive")
        if a in degs:
            raise ConfigError(f"duplicate label {lab!r}")
        degs[a] = int(n)
    return GradedSpace.from_dict(sector, degs, dual=bool(m.group("dual")))


def space_str(V: GradedSpace) -> str:
    return str(V)
