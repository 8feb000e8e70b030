"""The seven acceptance criteria, each at its stated tolerance and time budget."""
import io
import math
import time
from contextlib import redirect_stdout

import numpy as np

from injnorm.cli import main
from injnorm.construction import check_eqinter2, lemma1_construct, theorem1_witness, theorem2_embedding
from injnorm.optimize import certified_grid
from injnorm.spaces import Field, LinearMap, Space, euclidean_iso_for_lp, norm
from injnorm.symtensor import SymTensor, injective_norm
from injnorm.verify import check_distortion, check_extreme_failure

P_VALUES = [1.0, 1.5, 2.0, 4.0, math.inf]


def lp_iso(m, p, field=Field.REAL):
    T, _ = euclidean_iso_for_lp(m, p, field)
    return LinearMap(T.matrix, T.domain, Space.lp(m, p, field))


def closed_form_d(m, p):
    return m ** abs(0.5 - 1.0 / p)


def test_1_rank_one_exactness(acceptance):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 5))
        p = P_VALUES[rng.integers(len(P_VALUES))]
        n = int(rng.integers(2, 5))
        field = Field.COMPLEX if rng.random() < 0.5 else Field.REAL
        x = rng.standard_normal(m) + (1j * rng.standard_normal(m) if field is Field.COMPLEX else 0)
        E = Space.lp(m, p, field)
        expect = norm(E, x) ** n
        got = injective_norm(SymTensor.power(x, n, E)).lower
        worst = max(worst, abs(got - expect) / expect)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed <= 120
    acceptance("1 rank-one exactness", ok, f"worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def random_tensor(rng, m, n, k, field):
    cplx = field is Field.COMPLEX
    c = rng.standard_normal(k) + (1j * rng.standard_normal(k) if cplx else 0)
    X = rng.standard_normal((k, m)) + (1j * rng.standard_normal((k, m)) if cplx else 0)
    return SymTensor(n, Space.lp(m, P_VALUES[rng.integers(len(P_VALUES))], field), c, X)


def test_2_oracle_sandwich(acceptance):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    failures, widest = [], 0.0
    for i in range(50):
        field = Field.COMPLEX if i % 2 else Field.REAL
        t = random_tensor(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 5)), field)
        lower = injective_norm(t, seed=i).lower
        cert = certified_grid(t.canonical().objective(), t.ambient.dual_ball(), 1e-3)
        widest = max(widest, cert.width)
        if not (cert.lower - 1e-6 <= lower <= cert.upper + 1e-6 and cert.width <= 1e-3):
            failures.append(i)
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed <= 600
    acceptance("2 oracle sandwich", ok, f"failures {failures}, widest {widest:.1e}, {elapsed:.1f}s")
    assert ok


def test_3_lemma1_invariants(acceptance):
    t0 = time.perf_counter()
    failures = []
    for m in (2, 3):
        for p in (1.0, 4.0 / 3.0, 2.0, 4.0, math.inf):
            E = Space.lp(m, p)
            res = lemma1_construct(E, lp_iso(m, p))
            dg = res.diagnostics
            d = closed_form_d(m, p) + 1e-6
            ok = (dg["biorth_offdiag_residual"] <= 1e-6 and dg["biorth_diag_imag_residual"] <= 1e-6
                  and dg["biorth_diag_min"] >= 1 - 1e-6 and dg["biorth_diag_max"] <= d
                  and dg["xnorm_min_norm"] >= 1 - 1e-6
                  and dg["xnorm_max_norm"] <= dg["xnorm_norm_x1"] + 1e-6
                  and dg["xnorm_norm_x1"] <= d)
            for r in (2.0, 2.5, 3.0):
                chk = check_eqinter2(res, r, certify=(m == 2))
                ok = ok and chk.residual <= 1e-5 and chk.passed
            if not ok:
                failures.append((m, p))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed <= 600
    acceptance("3 biorthogonal system invariants", ok, f"failures {failures}, {elapsed:.1f}s")
    assert ok


def test_4_extreme_point_certificates(acceptance):
    t0 = time.perf_counter()
    failures = []
    spaces = [(2, 2.0), (2, 4.0), (2, 1.0), (2, math.inf), (3, 2.0)]
    for m, p in spaces:
        for field in (Field.REAL, Field.COMPLEX):
            for n in (2, 3):
                w = theorem1_witness(Space.lp(m, p, field), n)
                cert = check_extreme_failure(w.u, w.v, w.x1, w.x2, certify=(m == 2))
                ok = (abs(cert.norm_u - 1) <= 1e-5 and cert.norm_v >= 0.1 and cert.sup_uv <= 1 + 1e-5
                      and cert.passed and cert.cross_check_passed)
                if not ok:
                    failures.append((m, p, field.value, n))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed <= 600
    acceptance("4 extreme-point certificates", ok, f"failures {failures}, {elapsed:.1f}s")
    assert ok


def test_5_embedding_distortion(acceptance):
    t0 = time.perf_counter()
    failures = []
    for m in (2, 3, 4):
        for n in (2, 3):
            pre = theorem2_embedding(Space.lp(m, 2), m, n)
            rep = check_distortion(pre, n, samples=32)
            if not (pre.eps == 0 and rep.min_ratio >= 1 - 1e-5 and rep.max_ratio <= 1 + 1e-5):
                failures.append((m, n))
    E = Space.lp(2, 4)
    T = lp_iso(2, 4)
    assert np.allclose(T.matrix, 2 ** 0.25 * np.eye(2))
    rep = check_distortion(theorem2_embedding(E, 2, 2, T=T), 2, samples=32)
    if not (rep.min_ratio >= 1 - 1e-5 and rep.max_ratio <= 2 ** 0.5 + 1e-5):
        failures.append("l4")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed <= 600
    acceptance("5 embedding distortion", ok, f"failures {failures}, l4 ratios [{rep.min_ratio:.6f}, "
                                             f"{rep.max_ratio:.6f}], {elapsed:.1f}s")
    assert ok


def test_6_non_vertex_regression(acceptance):
    t0 = time.perf_counter()
    e = np.eye(2)
    t = SymTensor.from_terms(2, Space.lp(2, 1), [(1.0, e[0]), (-1.0, e[1])])
    value = injective_norm(t).lower
    elapsed = time.perf_counter() - t0
    ok = abs(value - 1.0) <= 1e-6 and elapsed <= 60
    acceptance("6 non-vertex regression", ok, f"value {value!r}, {elapsed:.1f}s")
    assert ok


def test_7_suite_determinism(acceptance):
    outputs = []
    for _ in range(2):
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = main(["suite", "--seed", "0"])
        outputs.append((code, buf.getvalue()))
    ok = outputs[0] == outputs[1] and outputs[0][0] == 0 and outputs[0][1]
    acceptance("7 suite determinism", bool(ok), f"exit {outputs[0][0]}, {len(outputs[0][1])} bytes")
    assert ok
