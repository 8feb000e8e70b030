"""Symmetric tensors ``sum_j lam_j x_j (x) ... (x) x_j`` and their injective norm."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimize import (
    NormResult,
    Objective,
    _safe_pow,
    certified_grid,
    conjugate_exponent,
    lq_norm,
    maximize,
)
from .spaces import Field, Space, as_array, decode_array, decode_scalar, encode_array, encode_scalar


class TensorObjective(Objective):
    """``phi -> sum_j lam_j <phi, x_j>^n``; maximized in modulus.

    The surrogate is ``|f|^2``, whose Hessian is bounded by
    ``2 |f| ||D^2 f|| + 2 ||Df||^2`` with term-wise envelopes.
    """

    power = 2.0

    def __init__(self, coeffs, vectors, degree):
        self.coeffs = np.asarray(coeffs)
        vectors = np.asarray(vectors)
        self.vectors = vectors.reshape(len(self.coeffs), vectors.shape[-1] if vectors.ndim else 0)
        self.degree = int(degree)
        self.surrogate_degree = 2 * self.degree

    def evaluate(self, phi):
        if len(self.coeffs) == 0:
            return 0.0
        p = self.vectors @ np.asarray(phi)
        return (self.coeffs * p**self.degree).sum()

    def surrogate(self, Z):
        n = self.degree
        if len(self.coeffs) == 0:
            return np.zeros(len(Z)), np.zeros_like(Z)
        P = Z @ self.vectors.T
        f = (self.coeffs * P**n).sum(axis=1)
        df = (self.coeffs * n * P ** (n - 1)) @ self.vectors
        return np.abs(f) ** 2, 2 * np.conj(f)[:, None] * df

    def _envelopes(self, Z, rho):
        norms = np.linalg.norm(self.vectors, axis=1)
        P = np.abs(Z @ self.vectors.T) + np.outer(rho, norms)
        lam = np.abs(self.coeffs)
        n = self.degree
        s0 = (lam * P**n).sum(axis=1)
        s1 = (lam * n * _safe_pow(P, n - 1) * norms).sum(axis=1)
        s2 = (lam * n * (n - 1) * _safe_pow(P, n - 2) * norms**2).sum(axis=1) if n >= 2 else np.zeros(len(Z))
        return s0, s1, s2

    def envelope(self, Z, rho):
        if len(self.coeffs) == 0:
            return np.zeros(len(Z))
        s0, _, _ = self._envelopes(Z, rho)
        return s0**2

    def slope(self, Z, rho):
        if len(self.coeffs) == 0:
            return np.zeros(len(Z))
        s0, s1, _ = self._envelopes(Z, rho)
        return 2 * s0 * s1

    def curvature(self, Z, rho):
        if len(self.coeffs) == 0:
            return np.zeros(len(Z))
        s0, s1, s2 = self._envelopes(Z, rho)
        return 2 * s0 * s2 + 2 * s1**2

    def lipschitz_bound(self, q):
        """``n sum_j |lam_j| ||x_j||^(n-1) ||x_j||_2`` on the l_q ball."""
        if len(self.coeffs) == 0:
            return 0.0
        dual = lq_norm(self.vectors, conjugate_exponent(q))
        norms = np.linalg.norm(self.vectors, axis=1)
        n = self.degree
        return float((n * np.abs(self.coeffs) * dual ** (n - 1) * norms).sum())

    def pullback(self, L):
        return TensorObjective(self.coeffs, self.vectors @ np.asarray(L), self.degree)


@dataclass(frozen=True, eq=False)
class SymTensor:
    """A finite rank-one combination of degree ``degree`` over ``ambient``."""

    degree: int
    ambient: Space
    coeffs: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        field = self.ambient.field
        coeffs = as_array(np.atleast_1d(self.coeffs), field, name="coefficients")
        vectors = np.asarray(self.vectors)
        if vectors.size == 0:
            vectors = np.zeros((0, self.ambient.dim))
        vectors = as_array(vectors, field, ndim=2, name="vectors")
        if vectors.shape != (len(coeffs), self.ambient.dim):
            raise ValueError(
                f"{len(coeffs)} coefficients need vectors of shape ({len(coeffs)}, {self.ambient.dim}),"
                f" got {vectors.shape}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_terms(cls, degree, ambient, terms):
        terms = list(terms)
        coeffs = [c for c, _ in terms]
        vectors = [np.asarray(x) for _, x in terms]
        return cls(degree, ambient, np.array(coeffs), np.array(vectors).reshape(len(terms), ambient.dim))

    @classmethod
    def power(cls, x, degree, ambient, coeff=1.0):
        """``coeff * x^{(x) degree}``."""
        return cls(degree, ambient, np.array([coeff]), np.asarray(x)[None, :])

    @classmethod
    def zero(cls, degree, ambient):
        return cls(degree, ambient, np.zeros(0), np.zeros((0, ambient.dim)))

    @property
    def terms(self):
        return list(zip(self.coeffs, self.vectors))

    def __len__(self):
        return len(self.coeffs)

    def eval(self, phi):
        return eval_tensor(self, phi)

    def canonical(self):
        """Terms sorted by coefficient, then lexicographically by vector."""
        if len(self) < 2:
            return self
        keys = [
            (c.real, getattr(c, "imag", 0.0), *np.real(x).tolist(), *np.imag(x).tolist())
            for c, x in zip(self.coeffs.astype(complex), self.vectors.astype(complex))
        ]
        order = sorted(range(len(keys)), key=keys.__getitem__)
        return SymTensor(self.degree, self.ambient, self.coeffs[order], self.vectors[order])

    def objective(self):
        return TensorObjective(self.coeffs, self.vectors, self.degree)

    def __add__(self, other):
        return add(self, other)


def eval_tensor(t, phi):
    phi = np.asarray(phi)
    if phi.shape != (t.ambient.dim,):
        raise ValueError(f"functional of shape {phi.shape} does not match dimension {t.ambient.dim}")
    value = t.objective().evaluate(phi)
    if not t.ambient.is_complex:
        return float(np.real(value))
    return complex(value)


def _compatible(t1, t2):
    if t1.degree != t2.degree:
        raise ValueError(f"degree mismatch: {t1.degree} vs {t2.degree}")
    a, b = t1.ambient, t2.ambient
    if a is b:
        return
    from .spaces import space_to_json

    if space_to_json(a) != space_to_json(b):
        raise ValueError("tensors live over different spaces")


def add(t1, t2):
    _compatible(t1, t2)
    return SymTensor(t1.degree, t1.ambient,
                     np.concatenate([t1.coeffs, t2.coeffs]),
                     np.vstack([t1.vectors, t2.vectors]))


def scale(t, s):
    if not t.ambient.is_complex and np.iscomplexobj(s) and np.imag(s) != 0:
        raise ValueError("complex scalar applied to a tensor over a real space")
    if s == 0:
        return SymTensor.zero(t.degree, t.ambient)
    return SymTensor(t.degree, t.ambient, t.coeffs * s, t.vectors)


def sup_over_unimodular(a, b, field=Field.COMPLEX):
    """``sup |a + zeta b|`` over unimodular scalars ``zeta`` of ``field``."""
    if Field(field).is_complex:
        return float(abs(a) + abs(b))
    return float(max(abs(a + b), abs(a - b)))


def injective_norm(t, *, starts=64, seed=0, max_iter=200, tol=1e-12, certify=False, resolution=1e-3):
    """``sup |t(phi)|`` over the dual unit ball of ``t.ambient``.

    With ``certify=True`` the certified search also runs and supplies
    ``upper``.
    """
    if len(t) == 0 or not np.any(t.coeffs):
        return NormResult(0.0, np.zeros(t.ambient.dim, dtype=t.ambient.field.dtype),
                          upper=0.0 if certify else None, starts_used=0, method="zero")
    tc = t.canonical()
    obj = tc.objective()
    ball = t.ambient.dual_ball()
    res = maximize(obj, ball, starts=starts, seed=seed, max_iter=max_iter, tol=tol)
    if not certify:
        return res
    cert = certified_grid(obj, ball, resolution)
    return NormResult(res.lower, res.maximizer, upper=cert.upper, starts_used=res.starts_used,
                      method="multistart-slsqp+certified")


def tensor_to_json(t):
    return {
        "degree": t.degree,
        "terms": [{"coeff": encode_scalar(c), "vector": encode_array(x)} for c, x in t.terms],
    }


def tensor_from_json(data, ambient):
    try:
        degree = int(data["degree"])
        terms = data["terms"]
        coeffs = [decode_scalar(term["coeff"], ambient.field) for term in terms]
        vectors = [decode_array(term["vector"], ambient.field) for term in terms]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed tensor description: {exc}") from exc
    if not terms:
        return SymTensor.zero(degree, ambient)
    for v in vectors:
        if v.shape != (ambient.dim,):
            raise ValueError(f"tensor vector of shape {v.shape} does not match dimension {ambient.dim}")
    return SymTensor(degree, ambient, np.array(coeffs), np.array(vectors))
