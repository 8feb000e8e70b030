"""Pass/fail certificates for the extreme-point and l_inf embedding constructions.

A certificate only ever says that all residuals are within tolerance at the
instances checked; it is numerical evidence, not a proof.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .construction import check_eqinter2, lemma1_construct, theorem1_witness, theorem2_embedding
from .optimize import CertifiedInterval, PowerSum, certified_grid, maximize
from .spaces import (
    Field,
    LinearMap,
    Space,
    decode_array,
    encode_array,
    euclidean_iso_for_lp,
    norm,
    space_from_json,
    space_to_json,
)
from .symtensor import add, injective_norm, scale, sup_over_unimodular, tensor_to_json

PASS_STATEMENT = "all residuals within tolerance at these instances"
FAIL_STATEMENT = "some residuals exceed tolerance at these instances"


@dataclass(frozen=True, eq=False)
class WitnessCertificate:
    u: object
    v: object
    norm_u: float
    norm_v: float
    sup_uv: float
    tol: float
    zeta_grid_max: float
    zeta_points: int
    sup_uv_upper: Optional[float] = None

    @property
    def passed(self):
        return abs(self.norm_u - 1) <= self.tol and self.norm_v >= self.tol and self.sup_uv <= 1 + self.tol

    @property
    def cross_check_passed(self):
        return self.zeta_grid_max <= self.sup_uv + self.tol

    def to_dict(self):
        out = {
            "u": tensor_to_json(self.u),
            "v": tensor_to_json(self.v),
            "norm_u": self.norm_u,
            "norm_v": self.norm_v,
            "sup_uv": self.sup_uv,
            "norm_u_residual": abs(self.norm_u - 1),
            "sup_uv_excess_residual": max(0.0, self.sup_uv - 1),
            "zeta_grid_max": self.zeta_grid_max,
            "zeta_points": self.zeta_points,
            "cross_check_pass": bool(self.cross_check_passed),
            "tol": self.tol,
            "pass": bool(self.passed),
        }
        if self.sup_uv_upper is not None:
            out["sup_uv_upper"] = self.sup_uv_upper
        return out


def _rank_one(t):
    if len(t) != 1:
        raise ValueError("expected a rank-one tensor")
    return t.coeffs[0], t.vectors[0]


def check_extreme_failure(u, v, x1, x2, *, field=None, tol=1e-5, starts=64, seed=0,
                          zeta_points=64, cross_check_starts=16, certify=False, resolution=1e-4):
    """Certify ``sup_{|zeta|=1} ||u + zeta v|| <= 1`` with ``||u|| = 1`` and ``v != 0``.

    The supremum over ``zeta`` is removed exactly
    (``sup |a + zeta b| = |a| + |b|``), leaving one maximization of
    ``(|<phi, x_1>|^n + |<phi, x_2>|^n) / ||x_1||^n``.  Direct norms of
    ``u + zeta v`` on a grid of ``zeta`` serve as a one-sided cross-check.
    """
    E = u.ambient
    field = E.field if field is None else Field(field)
    if u.degree != v.degree:
        raise ValueError("u and v must have equal degree")
    x1, x2 = np.asarray(x1), np.asarray(x2)
    if x1.shape != (E.dim,) or x2.shape != (E.dim,):
        raise ValueError("x1, x2 must be vectors of the ambient space")
    n = u.degree
    scale_n = norm(E, x1) ** n
    # u, v must be x1^n / ||x1||^n and x2^n / ||x1||^n
    probe = np.random.default_rng(seed).standard_normal((4, E.dim))
    for phi in probe:
        a = (phi @ x1) ** n / scale_n
        b = (phi @ x2) ** n / scale_n
        if not (np.isclose(u.eval(phi), a, rtol=1e-9, atol=1e-12) and np.isclose(v.eval(phi), b, rtol=1e-9, atol=1e-12)):
            raise ValueError("u, v do not match x1, x2")

    norm_u = injective_norm(u, starts=starts, seed=seed).lower
    norm_v = injective_norm(v, starts=starts, seed=seed).lower
    obj = PowerSum(np.array([x1, x2]), r=n, power=1.0)
    ball = E.dual_ball()
    res = maximize(obj, ball, starts=starts, seed=seed)
    sup_uv = res.lower / scale_n
    upper = None
    if certify:
        upper = certified_grid(obj, ball, resolution * scale_n).upper / scale_n

    if field.is_complex:
        zetas = np.exp(2j * np.pi * np.arange(zeta_points) / zeta_points)
    else:
        zetas = np.array([1.0, -1.0])
    grid = [injective_norm(add(u, scale(v, z)), starts=cross_check_starts, seed=seed).lower for z in zetas]
    return WitnessCertificate(u, v, norm_u, norm_v, sup_uv, tol, float(max(grid)), len(zetas), upper)


def zeta_elimination_gap(u, v, phi, zetas):
    """``(|u(phi)| + |v(phi)|) - max_zeta |u(phi) + zeta v(phi)|``; never negative."""
    a, b = u.eval(phi), v.eval(phi)
    exact = sup_over_unimodular(a, b, Field.COMPLEX)
    return exact - max(abs(a + z * b) for z in zetas)


# ---------------------------------------------------------------------------
# l_inf^m embeddings


def default_alphas(m, field=Field.REAL, count=32, seed=0):
    """Deterministic coefficient vectors on the l_inf sphere, padded with seeded samples."""
    field = Field(field)
    eye = np.eye(m)
    fixed = [eye[i] for i in range(m)] + [-eye[i] for i in range(m)]
    fixed.append(np.ones(m))
    fixed.append(np.array([(-1.0) ** i for i in range(m)]))
    rng = np.random.default_rng(seed)
    out = [a.astype(field.dtype) for a in fixed[:count]]
    while len(out) < count:
        a = rng.uniform(-1, 1, m)
        if field.is_complex:
            a = a + 1j * rng.uniform(-1, 1, m)
        mx = np.abs(a).max()
        if mx > 0:
            out.append(a / mx)
    return out


@dataclass(frozen=True, eq=False)
class EmbeddingReport:
    m: int
    n: int
    xs: np.ndarray
    phis: np.ndarray
    eps: float
    samples: list = field(default_factory=list)
    tol: float = 1e-5

    @property
    def ratios(self):
        return [s["ratio"] for s in self.samples]

    @property
    def min_ratio(self):
        return min(self.ratios) if self.samples else math.nan

    @property
    def max_ratio(self):
        return max(self.ratios) if self.samples else math.nan

    @property
    def upper_limit(self):
        return (1 + self.eps) ** self.n

    @property
    def passed(self):
        return all(s["pass"] for s in self.samples)

    def to_dict(self):
        return {
            "m": self.m,
            "n": self.n,
            "eps": self.eps,
            "xs": encode_array(self.xs),
            "phis": encode_array(self.phis),
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "upper_limit": self.upper_limit,
            "ratio_low_residual": max(0.0, 1 - self.min_ratio),
            "ratio_high_residual": max(0.0, self.max_ratio - self.upper_limit),
            "samples": self.samples,
            "tol": self.tol,
            "pass": bool(self.passed),
        }


def check_distortion(pre, n=None, alphas=None, *, tol=1e-5, starts=64, seed=0, samples=32):
    """Measure ``||sum_i alpha_i x_i^n|| / max_i |alpha_i|`` against ``[1, (1 + eps)^n]``."""
    n = pre.n if n is None else int(n)
    if alphas is None:
        alphas = default_alphas(pre.m, pre.space.field, samples, seed)
    limit = (1 + pre.eps) ** n
    sigma = pre.lemma.sigma
    rows = []
    for alpha in alphas:
        alpha = np.asarray(alpha, dtype=pre.space.field.dtype)
        amax = float(np.abs(alpha).max()) if alpha.size else 0.0
        if amax == 0:
            raise ValueError("alpha must be nonzero")
        t = pre.embed(alpha, n)
        value = injective_norm(t, starts=starts, seed=seed).lower
        ratio = value / amax
        # evaluation at phi_j on the subspace: no optimization involved
        P = pre.phis @ pre.xs_sub.T
        certified_lower = float(np.abs((alpha * P**n).sum(axis=1)).max())
        rows.append({
            "alpha": encode_array(alpha),
            "norm_value": value,
            "ratio": ratio,
            "certified_lower": certified_lower,
            "linear_lower": float((np.abs(alpha) * sigma).max()),
            "sandwich_residual": max(0.0, certified_lower - value),
            "pass": bool(1 - tol <= ratio <= limit + tol and certified_lower <= value + 1e-9),
        })
    return EmbeddingReport(pre.m, n, pre.xs, pre.phis, pre.eps, rows, tol)


# ---------------------------------------------------------------------------
# suites


def default_config(seed=0):
    spaces = [Space.lp(2, p) for p in (1.0, 4.0 / 3.0, 2.0, 4.0, math.inf)]
    return {
        "seed": seed,
        "tol": 1e-5,
        "starts": 64,
        "samples": 32,
        "cases": [{"space": space_to_json(E), "n": [2, 3], "r": [2, 2.5, 3]} for E in spaces],
    }


def _iso_for(E, case):
    if "iso" in case:
        M = decode_array(case["iso"], E.field)
        return LinearMap(M, Space.lp(E.dim, 2, E.field), E)
    if E.kind == "lp":
        T, _ = euclidean_iso_for_lp(E.dim, E.p, E.field)
        return LinearMap(T.matrix, T.domain, E)
    raise ValueError("cases over non-l_p spaces need an 'iso' matrix")


def _entry(case, values, passed):
    return {"case": case, "values": values, "pass": bool(passed)}


def _run_case(case, seed, tol, starts, samples):
    E = space_from_json(case["space"])
    ns = case.get("n", [2])
    rs = case.get("r", [2])
    m = int(case.get("m", E.dim))
    base = {"space": case["space"]}
    entries = []

    def guarded(meta, fn):
        try:
            values, passed = fn()
            entries.append(_entry({**base, **meta}, values, passed))
        except Exception as exc:  # captured per case, never fatal to the suite
            entries.append(_entry({**base, **meta}, {"error": f"{type(exc).__name__}: {exc}"}, False))

    T = None
    try:
        T = _iso_for(E, case)
    except ValueError:
        pass
    state = {}

    def lemma():
        if T is None:
            raise ValueError("no isomorphism available")
        res = lemma1_construct(E, T, starts=starts, seed=seed, tol=1e-6)
        state["lemma"] = res
        return res.to_dict(), res.passed

    guarded({"check": "lemma1"}, lemma)
    for r in rs:
        def eq2(r=r):
            chk = check_eqinter2(state["lemma"], r, tol=tol, starts=starts, seed=seed)
            return chk.to_dict(), chk.passed
        guarded({"check": "eqinter2", "r": r}, eq2)
    for n in ns:
        def witness(n=n):
            w = theorem1_witness(E, n, T=T if E.dim == 2 else None, starts=starts, seed=seed)
            cert = check_extreme_failure(w.u, w.v, w.x1, w.x2, tol=tol, starts=starts, seed=seed)
            return cert.to_dict(), cert.passed and cert.cross_check_passed

        def embed(n=n):
            pre = theorem2_embedding(E, m, n, T=T if m == E.dim else None, starts=starts, seed=seed)
            rep = check_distortion(pre, n, tol=tol, starts=starts, seed=seed, samples=samples)
            return rep.to_dict(), rep.passed

        guarded({"check": "witness", "n": n}, witness)
        guarded({"check": "embedding", "n": n, "m": m}, embed)
    return entries


def _worst_residuals(entries):
    worst = {}

    def walk(d):
        for k, v in d.items():
            if isinstance(v, dict):
                walk(v)
            elif k.endswith("residual") and isinstance(v, (int, float)):
                worst[k] = max(worst.get(k, 0.0), float(v))
            elif k == "samples" and isinstance(v, list):
                for s in v:
                    walk(s)

    for e in entries:
        walk(e["values"])
    return dict(sorted(worst.items()))


def run_suite(config):
    """Run every construction and check listed in ``config``; errors are recorded per case."""
    seed = int(config.get("seed", 0))
    tol = float(config.get("tol", 1e-5))
    starts = int(config.get("starts", 64))
    samples = int(config.get("samples", 32))
    entries = []
    for case in config.get("cases", []):
        try:
            entries.extend(_run_case(case, seed, tol, starts, samples))
        except Exception as exc:
            entries.append(_entry({"space": case.get("space")}, {"error": f"{type(exc).__name__}: {exc}"}, False))
    entries.sort(key=lambda e: json.dumps(e["case"], sort_keys=True))
    passed = sum(e["pass"] for e in entries)
    all_pass = passed == len(entries)
    return {
        "entries": entries,
        "summary": {
            "cases": len(entries),
            "passed": passed,
            "failed": len(entries) - passed,
            "all_pass": all_pass,
            "worst_residuals": _worst_residuals(entries),
            "statement": PASS_STATEMENT if all_pass else FAIL_STATEMENT,
        },
    }
