import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import oracle
from symtensor import tensor as tm
from symtensor.dense import to_dense_matrix
from symtensor.errors import NotHermitian, NotSquare
from symtensor.factorizations import (TruncationScheme, eig, eigenvalues,
                                      eigh, lq, polar, qr, svd)
from symtensor.sectors import get_sector
from symtensor.spaces import GradedSpace, parse_space
from symtensor.tensor import adjoint, identity, norm, random_tensor

SECTORS = {
    "Trivial": [0], "Z2": [0, 1], "Z3": [0, 1, 2], "U1": [-1, 0, 1], "SU2": [0, 1, 2],
    "fZ2": [0, 1], "Fib": [0, 1], "Ising": [0, 1, 2],
    "fZ2 x SU2": [(0, 0), (1, 1), (0, 2)],
}


def _random(name, seed, n1=2, n2=1):
    rng = np.random.default_rng(seed)
    s = get_sector(name)
    spaces = [oracle.random_space(rng, s, SECTORS[name], max_deg=3) for _ in range(n1 + n2)]
    return random_tensor(spaces[:n1], spaces[n1:], rng=rng)


def _isometry_error(Q):
    QQ = adjoint(Q) @ Q
    return max((np.abs(b - np.eye(b.shape[0])).max() for b in QQ.blocks.values() if b.size),
               default=0.0)


@pytest.mark.parametrize("name", list(SECTORS))
def test_svd_contract(name):
    for seed in range(3):
        A = _random(name, seed)
        U, S, Vh, rep = svd(A)
        for T in (U, S, Vh):
            tm.audit(T)
        assert len(U.domain) == 1 and len(Vh.codomain) == 1
        assert _isometry_error(U) < 1e-12
        assert _isometry_error(adjoint(Vh)) < 1e-12
        assert norm(A - U @ S @ Vh) <= 1e-12 * norm(A)
        total = 0.0
        for c, vals in rep.values.items():
            assert np.all(vals >= 0)
            assert np.all(np.diff(vals) <= 0)
            total += A.sector.qdim(c) * np.sum(vals ** 2)
        assert total == pytest.approx(norm(A) ** 2, rel=1e-12)
        assert rep.truncation_error == 0


def test_svd_identity():
    V = parse_space("SU2[0:2, 1/2:1]")
    U, S, Vh, rep = svd(identity(V))
    for vals in rep.values.values():
        assert_allclose(vals, 1, atol=1e-14)


def test_svd_with_permutation():
    A = _random("SU2", 4, 2, 2)
    U, S, Vh, _ = svd(A, (0, 2), (1, 3))
    assert tm.max_abs_diff(U @ S @ Vh, tm.permute(A, (0, 2), (1, 3))) < 1e-12


def test_truncation_schemes():
    A = _random("SU2", 5, 2, 2)
    U, S, Vh, full = svd(A)
    sec = A.sector
    D = 6
    _, S2, _, rep = svd(A, trunc=TruncationScheme.max_total_dim(D))
    kept = sum(sec.qdim(c) * len(v) for c, v in rep.values.items())
    assert kept <= D
    U3, S3, Vh3, rep3 = svd(A, trunc=TruncationScheme.rel_error(0.3))
    assert rep3.truncation_error <= 0.3 * norm(A) + 1e-12
    assert norm(A - U3 @ S3 @ Vh3) == pytest.approx(rep3.truncation_error, rel=1e-10)
    smin = float(np.median(np.concatenate(list(full.values.values()))))
    _, _, _, rep4 = svd(A, trunc=TruncationScheme.threshold(smin))
    for v in rep4.values.values():
        assert np.all(v >= smin)
    with pytest.raises(ValueError):
        TruncationScheme.rel_error(-1)


def test_truncation_error_matches_dense_abelian():
    A = _random("U1", 6, 2, 2)
    M = to_dense_matrix(A)
    sv = np.linalg.svd(M, compute_uv=False)
    for k in (1, 3, 5):
        U, S, Vh, rep = svd(A, trunc=TruncationScheme.max_total_dim(k))
        dense_err = np.sqrt(np.sum(sv[k:] ** 2))
        assert rep.truncation_error == pytest.approx(dense_err, abs=1e-12)
        assert norm(A - U @ S @ Vh) == pytest.approx(dense_err, abs=1e-12)


def test_spectrum_report_json():
    A = _random("fZ2 x SU2", 2)
    _, _, _, rep = svd(A, trunc=TruncationScheme.max_total_dim(4))
    doc = json.loads(rep.to_json())
    assert doc["sector_kind"] == "fZ2 x SU2"
    assert all(isinstance(e["charge"], str) for e in doc["spectrum"])
    assert doc["truncation_error"] == pytest.approx(rep.truncation_error)


def test_blockwise_independence():
    A = _random("U1", 9, 2, 1)
    U, S, Vh, rep = svd(A)
    for c, b in A.blocks.items():
        if b.size:
            _, s, _ = np.linalg.svd(b, full_matrices=False)
            assert np.array_equal(s, rep.values[c])


@pytest.mark.parametrize("name", list(SECTORS))
def test_qr_lq(name):
    A = _random(name, 1)
    Q, R = qr(A)
    assert _isometry_error(Q) < 1e-12
    assert norm(A - Q @ R) <= 1e-12 * norm(A)
    for b in R.blocks.values():
        if b.size:
            assert np.allclose(np.tril(b, -1), 0)
            assert np.all(np.diag(b).real >= 0) and np.allclose(np.diag(b).imag, 0)
    L, Q2 = lq(A)
    assert _isometry_error(adjoint(Q2)) < 1e-12
    assert norm(A - L @ Q2) <= 1e-12 * norm(A)
    for b in L.blocks.values():
        if b.size:
            assert np.allclose(np.triu(b, 1), 0)


def test_qr_identity():
    V = parse_space("U1[0:2, 1:1]")
    Q, R = qr(identity(V))
    assert tm.max_abs_diff(Q @ R, identity(V)) < 1e-14
    for b in R.blocks.values():
        assert_allclose(b, np.eye(b.shape[0]), atol=1e-14)


@pytest.mark.parametrize("name", ["Z3", "SU2", "Fib", "Ising", "fZ2"])
def test_eig_and_eigh(name):
    rng = np.random.default_rng(2)
    s = get_sector(name)
    V = oracle.random_space(rng, s, SECTORS[name], max_deg=3, dual=False)
    A = random_tensor([V], [V], rng=rng)
    W, L = eig(A)
    assert norm(A @ W - W @ L) <= 1e-10 * norm(A)
    lam = eigenvalues(L)
    assert sum(s.qdim(c) * np.sum(v) for c, v in lam.items()) == pytest.approx(tm.trace(A), abs=1e-10)
    H = adjoint(A) @ A
    Wh, Lh = eigh(H)
    assert _isometry_error(Wh) < 1e-12
    assert norm(H @ Wh - Wh @ Lh) <= 1e-10 * norm(H)
    _, _, _, rep = svd(A)
    for c, v in eigenvalues(Lh).items():
        assert np.all(v.real >= -1e-12)
        assert_allclose(np.sort(v.real)[::-1], rep.values.get(c, np.zeros(0)) ** 2, atol=1e-10)
    with pytest.raises(NotHermitian):
        eigh(A)
    with pytest.raises(NotSquare):
        eig(_random(name, 3, 2, 1))


def test_eig_diagonal():
    V = GradedSpace.from_dict("Z2", {0: 2, 1: 1})
    A = tm.TensorMap(tm.homspace([V], [V]), {0: np.diag([3.0, -1.0]), 1: np.array([[2.0]])})
    _, L = eigh(A)
    assert_allclose(np.sort(eigenvalues(L)[0].real), [-1, 3])
    assert_allclose(eigenvalues(L)[1].real, [2])


@pytest.mark.parametrize("name", ["U1", "SU2", "Fib"])
def test_polar(name):
    A = _random(name, 8, 1, 1)
    for side in ("left", "right"):
        W, P = polar(A, side=side)
        rec = W @ P if side == "left" else P @ W
        assert norm(A - rec) <= 1e-12 * norm(A)
        assert tm.max_abs_diff(P, adjoint(P)) < 1e-12
        for b in P.blocks.values():
            if b.size:
                assert np.linalg.eigvalsh(b).min() >= -1e-12
    with pytest.raises(ValueError):
        polar(A, side="up")


def test_polar_of_unitary():
    V = parse_space("SU2[0:1, 1/2:2]")
    U, _, Vh, _ = svd(random_tensor([V], [V], seed=0))
    W, P = polar(U @ Vh)
    assert tm.max_abs_diff(P, identity(V)) < 1e-12


def test_zero_tensor_factorizes():
    a, b = parse_space("U1[1:2]"), parse_space("U1[2:1]")
    A = random_tensor([a], [b], seed=0)
    U, S, Vh, rep = svd(A)
    assert rep.values == {} and norm(U @ S @ Vh) == 0
    Q, R = qr(A)
    assert norm(Q @ R) == 0


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(SECTORS)), st.integers(0, 2 ** 32 - 1), st.floats(0.05, 0.9))
def test_rel_error_bound(name, seed, eps):
    A = _random(name, seed)
    U, S, Vh, rep = svd(A, trunc=TruncationScheme.rel_error(eps))
    assert rep.truncation_error <= eps * norm(A) * (1 + 1e-12)
    assert norm(A - U @ S @ Vh) == pytest.approx(rep.truncation_error, abs=1e-10 * norm(A))
