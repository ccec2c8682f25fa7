"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import time

import numpy as np
import pytest

import oracle
from symtensor import tensor as tm
from symtensor.bench import BenchConfig, run
from symtensor.dense import apply_rotation, to_dense, to_dense_matrix
from symtensor.factorizations import svd
from symtensor.io import from_bytes, from_json, to_bytes, to_json
from symtensor.sectors import get_sector
from symtensor.sectors.base import derive_twist, label_closure, run_all_checks
from symtensor.spaces import parse_space
from symtensor.tensor import (adjoint, contract, norm, outer_product,
                              partial_trace, permute, random_tensor, transpose)
from test_tensor import M_PERMUTE, M_TRACE, M_TRANSPOSE, _matrix_of


@pytest.fixture
def report(capsys, request):
    def emit(passed, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if passed else 'FAIL'} {request.node.name}: {detail}")
        assert passed, detail
    return emit


def _cyclic_pq(rng, n1, n2):
    r = n1 + n2
    lin = list(range(n1)) + list(reversed(range(n1, r)))
    k = int(rng.integers(0, r))
    lin = lin[k:] + lin[:k]
    j = int(rng.integers(0, r + 1))
    return tuple(lin[:j]), tuple(reversed(lin[j:]))


def _bounded_spaces(rng, s, labels, n, cap=64):
    while True:
        spaces = [oracle.random_space(rng, s, labels) for _ in range(n)]
        if np.prod([V.dim for V in spaces]) <= cap:
            return spaces


def _oracle_case(rng, name, labels):
    """Largest deviation from the dense reference over every operation."""
    s = get_sector(name)
    n1, n2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    sp = _bounded_spaces(rng, s, labels, n1 + n2)
    A = random_tensor(sp[:n1], sp[n1:], rng=rng)
    D, r = to_dense(A), n1 + n2
    dev = []
    perm = tuple(int(x) for x in rng.permutation(r))
    k = int(rng.integers(0, r + 1))
    dev.append(to_dense(permute(A, perm[:k], perm[k:])) - oracle.permute(D, n1, perm[:k], perm[k:]))
    p, q = _cyclic_pq(rng, n1, n2)
    dev.append(to_dense(transpose(A, p, q)) - oracle.permute(D, n1, p, q))
    dev.append(to_dense(adjoint(A)) - oracle.adjoint(D, n1))
    B = random_tensor(A.domain, [oracle.random_space(rng, s, labels)], rng=rng)
    dev.append(to_dense(A @ B) - oracle.compose(D, to_dense(B), n1, n2))
    C = random_tensor(*[[V] for V in _bounded_spaces(rng, s, labels, 2, 8)], rng=rng)
    dev.append(to_dense(outer_product(A, C)) - oracle.outer(D, to_dense(C), n1, 1))
    V, W, X = _bounded_spaces(rng, s, labels, 3, 16)
    T = random_tensor([V, W], [X, W], rng=rng)
    dev.append(to_dense(partial_trace(T, (1,), (3,)))
               - oracle.partial_trace(to_dense(T), (1,), (3,), (0,), (2,)))
    E = random_tensor([V, W], [X], rng=rng)
    F = random_tensor([W.dual(), X], [V], rng=rng)
    G = contract(E, (0, 2), (1,), F, (0,), (1, 2), (0, 1), (2, 3))
    dev.append(to_dense(G) - np.einsum("abx,bcd->axcd", to_dense(E), to_dense(F)))
    U, S, Vh, _ = svd(A)
    dev.append(to_dense(U @ S @ Vh) - D)
    sv = np.sort(np.concatenate([np.repeat(v, int(round(s.qdim(c)))) for c, v in _.values.items()]
                                or [np.zeros(0)]))[::-1]
    ref = np.linalg.svd(to_dense_matrix(A), compute_uv=False)
    dev.append(sv - ref[:len(sv)])
    dev.append(ref[len(sv):])
    return max(float(np.abs(d).max(initial=0.0)) for d in dev), A


def test_c1_golden_matrices(report):
    t0 = time.perf_counter()
    err = max(np.abs(_matrix_of(lambda T: transpose(T, (1, 3), (0, 2))) - M_TRANSPOSE).max(),
              np.abs(_matrix_of(lambda T: permute(T, (1, 0), (3, 2))) - M_PERMUTE).max(),
              np.abs(_matrix_of(lambda T: partial_trace(T, (1,), (3,))) - M_TRACE).max())
    dt = time.perf_counter() - t0
    report(err < 1e-12 and dt < 1.0, f"max deviation {err:.2e}, {dt:.3f} s")


SUITES = [("Z2", None, 1.0), ("Z3", None, 1.0), ("Z4", None, 1.0), ("Z5", None, 1.0),
          ("U1", list(range(-3, 4)), 3.0), ("SU2", [1], 2.0), ("fZ2", None, 1.0),
          ("Fib", None, 1.0), ("Ising", None, 1.0), ("fZ2 x SU2", None, 1.0)]
LIMITS = {"Pentagon": 1e-10, "Hexagon": 1e-10, "Unitarity": 1e-12}


def test_c2_topological_suites(report):
    t0 = time.perf_counter()
    worst, bad = {k: 0.0 for k in LIMITS}, []
    hexagons = 0
    for name, seeds, bound in SUITES:
        s = get_sector(name)
        for r in run_all_checks(s, label_closure(s, seeds, bound)):
            if r.checked_equation in LIMITS:
                worst[r.checked_equation] = max(worst[r.checked_equation], r.max_residual)
                hexagons += r.checked_equation == "Hexagon"
                if r.max_residual >= LIMITS[r.checked_equation] or not r.passed:
                    bad.append((name, r.checked_equation, r.max_residual))
    dt = time.perf_counter() - t0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(not bad and hexagons == len(SUITES) and dt < 60,
           f"{detail}; {hexagons} braided suites; {dt:.1f} s; failures {bad}")


def test_c3_dense_oracle_abelian(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    cases = [("Z2", [0, 1]), ("Z3", [0, 1, 2]), ("U1", [-1, 0, 1, 2])]
    worst = 0.0
    for i in range(200):
        name, labels = cases[i % 3]
        dev, _ = _oracle_case(rng, name, labels)
        worst = max(worst, dev)
    dt = time.perf_counter() - t0
    report(worst < 1e-12 and dt < 120, f"200 cases, max deviation {worst:.2e}, {dt:.1f} s")


def test_c4_dense_oracle_su2(report):
    rng = np.random.default_rng(77)
    worst, worst_rot = 0.0, 0.0
    for _ in range(50):
        dev, A = _oracle_case(rng, "SU2", [0, 1, 2])
        worst = max(worst, dev)
        D = to_dense(A)
        for _ in range(10):
            g = rng.uniform(0, 2 * np.pi, 3)
            worst_rot = max(worst_rot, float(np.abs(apply_rotation(D, A.space, g) - D).max()))
    report(worst < 1e-10 and worst_rot < 1e-10,
           f"50 cases, max deviation {worst:.2e}, rotation residual {worst_rot:.2e}")


FACT_LABELS = {
    "Trivial": [0], "Z2": [0, 1], "Z3": [0, 1, 2], "Z4": [0, 1, 2, 3], "Z5": [0, 2, 4],
    "U1": [-1, 0, 1], "SU2": [0, 1, 2], "fZ2": [0, 1], "Fib": [0, 1], "Ising": [0, 1, 2],
    "fZ2 x SU2": [(0, 0), (1, 1), (0, 2)],
}


def test_c5_factorization_contracts(report):
    rng = np.random.default_rng(5)
    worst = {"isometry": 0.0, "reconstruction": 0.0, "norm": 0.0}
    ordered = True
    for name, labels in FACT_LABELS.items():
        s = get_sector(name)
        for _ in range(4):
            n1, n2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
            sp = [oracle.random_space(rng, s, labels, max_deg=3) for _ in range(n1 + n2)]
            A = random_tensor(sp[:n1], sp[n1:], rng=rng)
            U, S, Vh, rep = svd(A)
            for Q in (adjoint(U) @ U, Vh @ adjoint(Vh)):
                for b in Q.blocks.values():
                    if b.size:
                        worst["isometry"] = max(worst["isometry"],
                                                float(np.abs(b - np.eye(len(b))).max()))
            nA = norm(A)
            worst["reconstruction"] = max(worst["reconstruction"], norm(A - U @ S @ Vh) / nA)
            total = sum(s.qdim(c) * np.sum(v ** 2) for c, v in rep.values.items())
            worst["norm"] = max(worst["norm"], abs(total - nA ** 2) / nA ** 2)
            ordered &= all(np.all(v >= 0) and np.all(np.diff(v) <= 0) for v in rep.values.values())
    ok = ordered and all(v <= 1e-12 for v in worst.values())
    report(ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", ordered spectra {ordered}")


def test_c6_fermionic_signs(report):
    J, I = parse_space("fZ2[J:1]"), parse_space("fZ2[I:1]")
    A = random_tensor((J, J), (I,), seed=0)
    odd = np.array_equal(permute(A, (1, 0), (2,)).block(0), -A.block(0))
    E = random_tensor((J, I), (J,), seed=1)
    even = np.array_equal(permute(E, (1, 0), (2,)).block(1), E.block(1))
    tw = derive_twist(get_sector("fZ2"), 1)
    report(odd and even and tw == -1,
           f"odd-odd swap gives exactly -1: {odd}, odd-even swap unchanged: {even}, "
           f"derived twist(J) {tw.real:+g}")


def test_c7_benchmark_properties(report):
    heis = dict(physical="@heisenberg_su2", mpo="@heisenberg_su2")
    t0 = time.perf_counter()
    Ds = [16, 32, 64, 128]
    med = [run(BenchConfig("Trivial", virtual=f"@heisenberg_su2#{D}", workload="two_site",
                           repetitions=5, **heis)).median_s for D in Ds]
    slope = float(np.polyfit(np.log(Ds), np.log(med), 1)[0])
    dt = time.perf_counter() - t0
    flops = [run(BenchConfig(s, virtual="@heisenberg_su2#64", workload="two_site", repetitions=1,
                             **heis)).flops_block for s in ("Trivial", "U1", "SU2")]
    ok = 2.2 <= slope <= 3.8 and dt < 300 and flops[0] > flops[1] > flops[2]
    report(ok, f"slope {slope:.2f} ({dt:.1f} s); block FLOPs Trivial {flops[0]} > U1 {flops[1]} "
               f"> SU2 {flops[2]}")


def test_c8_serialization(report):
    rng = np.random.default_rng(8)
    names = list(FACT_LABELS)
    bits_ok, text_err = True, 0.0
    for i in range(100):
        name = names[i % len(names)]
        s = get_sector(name)
        sp = [oracle.random_space(rng, s, FACT_LABELS[name]) for _ in range(3)]
        A = random_tensor(sp[:2], sp[2:], rng=rng)
        B = from_bytes(to_bytes(A))
        bits_ok &= B.space == A.space and all(
            np.array_equal(A.blocks[c].view(np.float64), np.ascontiguousarray(B.blocks[c]).view(np.float64))
            for c in A.blocks)
        C = from_json(to_json(A))
        text_err = max(text_err, max((float(np.abs(C.blocks[c] - A.blocks[c]).max(initial=0.0))
                                      for c in A.blocks), default=0.0))
    report(bits_ok and text_err <= 1e-15,
           f"100 tensors, binary bit-exact {bits_ok}, text max deviation {text_err:.1e}")
