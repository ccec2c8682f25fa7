"""DMRG-style contraction benchmarks and the consistency harness.

Spaces follow the usual MPS conventions::

    A  : V ⊗ P <- V            O  : W ⊗ P <- P ⊗ W
    FL : V <- V ⊗ W            FR : W ⊗ V* <- V*
    AC2: V ⊗ P <- V ⊗ P*

FLOPs are counted for every matrix product as ``8·m·k·n`` (complex
arithmetic), once over the blocks that are actually multiplied and once for
the equivalent dense matrices.
"""
from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .factorizations import TruncationScheme, svd
from .sectors import (SU2, U1, FermionParity, Product, Sector, Trivial,
                      get_sector, label_closure, run_all_checks)
from .spaces import GradedSpace, parse_space
from .tensor import (FlopCounter, TensorMap, make_tensor, homspace, ncon,
                     set_num_workers)

WORKLOADS = ("single_site", "two_site", "svd_only", "consistency")


@dataclass
class BenchConfig:
    sector_kind: str
    physical: str = ""
    virtual: str = ""
    mpo: str = ""
    repetitions: int = 3
    seed: int = 0
    workload: str = "single_site"
    output: str | None = None
    workers: int = 1
    max_label: float = 1.0

    def validate(self) -> None:
        if self.workload not in WORKLOADS:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if int(self.repetitions) < 1:
            raise ConfigError("repetitions must be at least 1")
        try:
            get_sector(self.sector_kind)
        except Exception as exc:
            raise ConfigError(f"unknown sector {self.sector_kind!r}: {exc}") from None

    def spaces(self) -> tuple[GradedSpace, GradedSpace, GradedSpace]:
        """Parsed (P, V, W), restricted to ``sector_kind`` when needed."""
        self.validate()
        target = get_sector(self.sector_kind)
        out = []
        for name, text in (("physical", self.physical), ("virtual", self.virtual), ("mpo", self.mpo)):
            if not text:
                raise ConfigError(f"missing {name} space")
            V = resolve_space(text, name)
            out.append(V if V.sector == target else restrict(V, target))
        return tuple(out)


@dataclass
class BenchResult:
    workload: str
    config: dict
    times_s: list
    flops_block: int
    flops_dense: int
    dim_total: float
    extra: dict = field(default_factory=dict)

    @property
    def median_s(self) -> float:
        return statistics.median(self.times_s) if self.times_s else 0.0

    def to_dict(self) -> dict:
        return {"config": self.config, "workload": self.workload, "times_s": self.times_s,
                "median_s": self.median_s, "flops_block": self.flops_block,
                "flops_dense": self.flops_dense, "dim_total": self.dim_total,
                "version": __version__, **self.extra}


# ---------------------------------------------------------------------------
# fixtures

def fixture_path(name: str) -> Path:
    """Path of a shipped fixture (``name`` without the ``.json`` suffix)."""
    return Path(str(resources.files("symtensor") / "fixtures" / f"{name}.json"))


def load_fixture(ref: str) -> dict:
    p = Path(ref)
    if not p.exists():
        p = fixture_path(ref)
    if not p.exists():
        raise ConfigError(f"fixture {ref!r} not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"fixture {ref!r} is not valid JSON: {exc}") from None


def resolve_space(text: str, role: str = "virtual") -> GradedSpace:
    """Parse a space, or read one from a fixture as ``@file[#key]``.

    For ``role="virtual"`` the key selects an entry of the fixture's
    ``virtual`` table (its ``default`` entry without ``#key``).  Other roles
    (``physical``, ``mpo``) read the field of that name.
    """
    text = text.strip()
    if not text.startswith("@"):
        return parse_space(text)
    ref, _, key = text[1:].partition("#")
    doc = load_fixture(ref)
    if role != "virtual":
        if key or role not in doc:
            raise ConfigError(f"fixture {ref!r} has no {role} space{' ' + repr(key) if key else ''}")
        return parse_space(doc[role])
    table = doc.get("virtual", {})
    key = key or str(doc.get("default", ""))
    if key not in table:
        raise ConfigError(f"fixture {ref!r} has no entry {key!r}; available: {sorted(table)}")
    return parse_space(table[key])


def gaussian_profile(D: int, spins: int = 8, width: float = 1.5) -> dict:
    """Half-integer SU(2) degeneracies with total dimension exactly ``D``.

    Weights follow ``exp(-j^2 / (2 width^2))`` over ``j = 1/2, 3/2, ...``
    (truncated after ``spins`` values); rounding leftovers go to spin 1/2.
    Labels are doubled spins.
    """
    if D % 2 or D < 2:
        raise ValueError("total dimension of half-integer spins must be even and positive")
    tj = [2 * k + 1 for k in range(spins)]
    w = np.array([math.exp(-(t / 2) ** 2 / (2 * width ** 2)) for t in tj])
    dims = np.array([t + 1 for t in tj])
    n = np.floor(D * w / np.dot(w, dims)).astype(int)
    n[0] += (D - int(np.dot(n, dims))) // 2
    return {t: int(k) for t, k in zip(tj, n) if k > 0}


def heisenberg_fixture(dims=(16, 32, 64, 128, 256)) -> dict:
    return {
        "description": "Artifact-chosen spin-1 Heisenberg spaces: truncated-Gaussian "
                       "degeneracy profile over half-integer spins, not ground-state data.",
        "sector": "SU2",
        "physical": "SU2[1:1]",
        "mpo": "SU2[0:2, 1:1]",
        "default": "64",
        "virtual": {str(D): str(GradedSpace.from_dict(SU2(), gaussian_profile(D))) for D in dims},
    }


def hubbard_profile(D: int, width: float = 1.0) -> dict:
    """Degeneracies over ``fZ2 x SU2 x SU2`` charges with total dimension ``D``.

    Charges are ``(p, 2s, 2t)`` with spin and pseudospin up to 1 and fermion
    parity ``p = 2s mod 2``; weights follow ``exp(-(s^2 + t^2) / (2 width^2))``.
    Leftovers go to the trivial charge.
    """
    labs = [(a % 2, a, b) for a in range(3) for b in range(3)]
    w = np.array([math.exp(-((a / 2) ** 2 + (b / 2) ** 2) / (2 * width ** 2)) for _, a, b in labs])
    dims = np.array([(a + 1) * (b + 1) for _, a, b in labs])
    n = np.rint(D * w / np.dot(w, dims)).astype(int)
    while np.dot(n, dims) > D:
        k = int(np.argmax(np.where(n > 0, dims, 0)))
        n[k] -= 1
    n[0] += D - int(np.dot(n, dims))
    return {lab: int(k) for lab, k in zip(labs, n) if k > 0}


def hubbard_fixture(dims=(16, 32, 64)) -> dict:
    s = get_sector("fZ2 x SU2 x SU2")
    return {
        "description": "Artifact-chosen Hubbard-like spaces with fermion parity, spin and "
                       "pseudospin symmetry: truncated-Gaussian profile, not ground-state data.",
        "sector": s.name,
        "physical": "fZ2 x SU2 x SU2[(I,0,1/2):1, (J,1/2,0):1]",
        "mpo": "fZ2 x SU2 x SU2[(I,0,0):2, (J,1/2,1/2):1]",
        "default": "32",
        "virtual": {str(D): str(GradedSpace.from_dict(s, hubbard_profile(D))) for D in dims},
    }


# ---------------------------------------------------------------------------
# restriction to subgroups

def _restrict_label(src: Sector, dst: Sector, a) -> list:
    """Labels (with multiplicity) of ``dst`` that the ``src`` label splits into."""
    if src == dst:
        return [a]
    if isinstance(dst, Trivial):
        return [0] * int(round(src.qdim(a)))
    if isinstance(src, SU2) and isinstance(dst, U1):
        return [a - 2 * k for k in range(a + 1)]  # doubled S_z
    raise ConfigError(f"cannot restrict {src.name} to {dst.name}")


def restrict(V: GradedSpace, target: Sector) -> GradedSpace:
    """Same space seen through a subgroup (SU2 -> U1 -> Trivial, factor-wise on products)."""
    src = V.sector
    counts: dict = {}
    for a, n in V.degeneracies:
        if isinstance(src, Product) and isinstance(target, Product):
            if len(src.factors) != len(target.factors):
                raise ConfigError(f"cannot restrict {src.name} to {target.name}")
            parts = [_restrict_label(s, t, x) for s, t, x in zip(src.factors, target.factors, a)]
            labs = [tuple(p) for p in _product(parts)]
        elif isinstance(src, Product) and isinstance(target, Trivial):
            labs = [0] * int(round(src.qdim(a)))
        else:
            labs = _restrict_label(src, target, a)
        for b in labs:
            counts[b] = counts.get(b, 0) + n
    out = GradedSpace.from_dict(target, counts)
    return out.dual() if V.is_dual else out


def _product(parts):
    out = [[]]
    for p in parts:
        out = [o + [x] for o in out for x in p]
    return out


# ---------------------------------------------------------------------------
# workloads

def _operators(P, V, W, rng):
    A = make_tensor(homspace((V, P), (V,)), "random", rng=rng)
    O = make_tensor(homspace((W, P), (P, W)), "random", rng=rng)
    FL = make_tensor(homspace((V,), (V, W)), "random", rng=rng)
    FR = make_tensor(homspace((W, V.dual()), (V.dual(),)), "random", rng=rng)
    return A, O, FL, FR


def apply_single_site(A, O, FL, FR) -> TensorMap:
    """``FL`` then ``O`` then ``FR`` applied to ``A``."""
    return ncon([FL, A, O, FR], [[-1, 1, 2], [1, 3, 4], [2, -2, 3, 5], [5, -3, 4]],
                [1, 2, 3, 5, 4], n_codomain=2)


def two_site_tensor(A1, A2) -> TensorMap:
    """``A1`` contracted with ``A2`` as ``V ⊗ P <- V ⊗ P*``."""
    return ncon([A1, A2], [[-1, -2, 1], [1, -4, -3]], [1], n_codomain=2)


def apply_two_site(AC2, O, FL, FR) -> TensorMap:
    return ncon([FL, AC2, O, O, FR],
                [[-1, 1, 2], [1, 3, 4, 7], [2, -2, 3, 5], [5, -4, 7, 8], [8, -3, 4]],
                [1, 2, 3, 5, 7, 8, 4], n_codomain=2)


def _timed(fn, reps):
    fn()  # warm-up, excluded
    times = []
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, times


def run_single_site(config: BenchConfig) -> BenchResult:
    P, V, W = config.spaces()
    rng = np.random.default_rng(config.seed)
    A, O, FL, FR = _operators(P, V, W, rng)
    set_num_workers(config.workers)
    try:
        with FlopCounter() as fc:
            apply_single_site(A, O, FL, FR)
        out, times = _timed(lambda: apply_single_site(A, O, FL, FR), config.repetitions)
    finally:
        set_num_workers(1)
    return BenchResult("single_site", _cfg(config), times, fc.block, fc.dense, V.dim,
                       {"workers": config.workers, "output_norm": out.norm()})


def run_two_site(config: BenchConfig) -> BenchResult:
    P, V, W = config.spaces()
    rng = np.random.default_rng(config.seed)
    A, O, FL, FR = _operators(P, V, W, rng)
    AC2 = two_site_tensor(A, A)
    set_num_workers(config.workers)
    try:
        with FlopCounter() as fc:
            apply_two_site(AC2, O, FL, FR)
        out, times = _timed(lambda: apply_two_site(AC2, O, FL, FR), config.repetitions)
        with FlopCounter() as fs:
            t0 = time.perf_counter()
            U, S, Vh, rep = svd(out, (0, 1), (2, 3), TruncationScheme.max_total_dim(V.dim))
            t_svd = time.perf_counter() - t0
    finally:
        set_num_workers(1)
    recon = (U @ S @ Vh - out).norm()
    return BenchResult("two_site", _cfg(config), times, fc.block + fs.block, fc.dense + fs.dense,
                       V.dim, {"workers": config.workers, "svd_time_s": t_svd,
                               "truncation_error": rep.truncation_error,
                               "reconstruction_error": recon,
                               "bond_dim": U.domain[0].dim})


def run_svd_only(config: BenchConfig) -> BenchResult:
    P, V, W = config.spaces()
    rng = np.random.default_rng(config.seed)
    AC2 = make_tensor(homspace((V, P), (V, P.dual())), "random", rng=rng)
    trunc = TruncationScheme.max_total_dim(V.dim)
    with FlopCounter() as fc:
        svd(AC2, None, None, trunc)
    (_, _, _, rep), times = _timed(lambda: svd(AC2, None, None, trunc), config.repetitions)
    return BenchResult("svd_only", _cfg(config), times, fc.block, fc.dense, V.dim,
                       {"truncation_error": rep.truncation_error})


def run_consistency(config: BenchConfig) -> dict:
    """Topological-data checks plus, for group sectors, dense-oracle spot checks."""
    config.validate()
    sector = get_sector(config.sector_kind)
    labels = label_closure(sector, bound=config.max_label)
    reports = run_all_checks(sector, labels)
    checks = [{"check": r.checked_equation, "passed": r.passed, "max_residual": r.max_residual,
               "tuples": r.tuples_checked, "tol": r.tol,
               "failing_tuple": None if r.failing_tuple is None else repr(r.failing_tuple)}
              for r in reports]
    if sector.has_dense_rep:
        checks.append(_dense_spot_check(sector, labels, config.seed))
    return {"sector": sector.name, "labels": [sector.label_str(a) for a in labels],
            "checks": checks, "passed": all(c["passed"] for c in checks), "version": __version__}


def _dense_spot_check(sector, labels, seed, tol=1e-10) -> dict:
    from .dense import to_dense
    from .tensor import permute, random_tensor
    rng = np.random.default_rng(seed)
    V = GradedSpace.from_dict(sector, {a: 1 + k % 2 for k, a in enumerate(labels[:4])})
    worst = 0.0
    for _ in range(3):
        A = random_tensor((V, V), (V,), rng=rng)
        D = to_dense(A)
        for p, q in (((1, 0), (2,)), ((2,), (0, 1)), ((0, 2, 1), ())):
            worst = max(worst, float(np.max(np.abs(to_dense(permute(A, p, q)) - D.transpose(p + q)),
                                            initial=0.0)))
    return {"check": "dense_oracle_permute", "passed": worst < tol, "max_residual": worst,
            "tuples": 9, "tol": tol, "failing_tuple": None}


def run(config: BenchConfig):
    config.validate()
    fn = {"single_site": run_single_site, "two_site": run_two_site,
          "svd_only": run_svd_only, "consistency": run_consistency}[config.workload]
    return fn(config)


def _cfg(config: BenchConfig) -> dict:
    return asdict(config)
