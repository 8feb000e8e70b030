"""Biorthogonal systems from near-Euclidean isomorphisms and the two witnesses built on them.

Given ``T : l_2^m -> F`` with ``||T^{-1}|| = 1`` and ``||T|| <= d``, functionals
``phi_k`` are picked by successive maximization of ``||T* phi||_2`` over the
dual ball, each subject to ``<T* phi, T* phi_i>_2 = 0`` for the earlier ones.
With ``w_k = conj(T* phi_k) / ||T* phi_k||_2`` and ``x_k = T w_k`` the pairs
``(x_k, phi_k)`` are biorthogonal, ``1 <= <phi_k, x_k> <= d`` and
``sup_phi (sum_k |<phi, x_k>|^r)^(1/r) = ||x_1||`` for every ``r >= 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .optimize import CertifiedInterval, PowerSum, certified_grid, maximize
from .spaces import LinearMap, Space, dual_norm, euclidean_iso_for_lp, norm, operator_norm
from .symtensor import SymTensor


@dataclass(frozen=True, eq=False)
class Lemma1Result:
    d: float
    T: LinearMap
    space: Space
    xs: np.ndarray
    phis: np.ndarray
    sigma: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    tol: float = 1e-6

    @property
    def m(self):
        return len(self.sigma)

    @property
    def passed(self):
        return all(v for k, v in self.diagnostics.items() if k.endswith("_pass"))

    def pairings(self):
        """Matrix ``[<phi_j, x_k>]``."""
        return self.phis @ self.xs.T

    def to_dict(self):
        from .spaces import encode_array, space_to_json

        return {
            "space": space_to_json(self.space),
            "d": float(self.d),
            "T": encode_array(self.T.matrix),
            "xs": encode_array(self.xs),
            "phis": encode_array(self.phis),
            "sigma": [float(s) for s in self.sigma],
            "diagnostics": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                            for k, v in self.diagnostics.items()},
            "pass": bool(self.passed),
        }


def _validate_iso(F, T):
    if T.codomain.dim != F.dim or T.domain.dim != F.dim:
        raise ValueError("T must map l_2^m onto F with m = dim F")
    if not T.domain.is_euclidean:
        raise ValueError("the domain of T must be the Euclidean space l_2^m")
    if T.domain.field != F.field:
        raise ValueError("T and F must share the scalar field")


def lemma1_construct(F, T, *, starts=64, seed=0, max_iter=200, tol=1e-6, rescale=True):
    """Biorthogonal system of ``F`` from the isomorphism ``T : l_2^m -> F``.

    ``||T^{-1}||`` is measured; when it differs from 1 by more than 1e-6 the
    map is rescaled (``rescale=True``) or rejected.  The returned ``d`` is the
    operator norm of the map actually used.
    """
    _validate_iso(F, T)
    T = LinearMap(T.matrix, T.domain, F)
    inv_norm = operator_norm(T.inverse(), starts=starts, seed=seed)
    if abs(inv_norm - 1.0) > 1e-6:
        if not rescale:
            raise ValueError(f"||T^-1|| = {inv_norm:.9g}, expected 1")
        T = T.scaled(inv_norm)
    d = operator_norm(T, starts=starts, seed=seed)

    M = T.matrix
    ball = F.dual_ball()
    objective = PowerSum(M.T, r=2)
    phis, sigma, rows = [], [], []
    for k in range(F.dim):
        dom = ball.with_constraints(np.array(rows)) if rows else ball
        res = maximize(objective, dom, starts=starts, seed=seed + k, max_iter=max_iter)
        phi = res.maximizer
        s = float(np.linalg.norm(T.adjoint(phi)))
        if s < 1e-9:
            raise RuntimeError(f"stage {k + 1}: optimizer returned a null functional")
        phis.append(phi)
        sigma.append(s)
        # <T* phi, T* phi_k>_2 = sum_i (T* phi)_i conj((T* phi_k)_i) = <phi, T conj(T* phi_k)>
        rows.append(M @ np.conj(T.adjoint(phi)))

    phis = np.array(phis)
    sigma = np.array(sigma)
    ws = np.conj(phis @ M) / sigma[:, None]
    xs = ws @ M.T
    diag = lemma1_diagnostics(F, d, xs, phis, sigma, tol=tol, starts=starts, seed=seed)
    diag["inverse_norm"] = inv_norm
    return Lemma1Result(d, T, F, xs, phis, sigma, diag, tol)


def lemma1_diagnostics(F, d, xs, phis, sigma, *, tol=1e-6, starts=16, seed=0):
    P = phis @ xs.T
    m = len(sigma)
    off = np.abs(P - np.diag(np.diag(P)))
    diag = np.diag(P)
    norms = np.array([norm(F, x) for x in xs])
    dual = np.array([dual_norm(F, phi, starts=starts, seed=seed) for phi in phis])
    out = {
        "biorth_offdiag_residual": float(off.max()) if m > 1 else 0.0,
        "biorth_diag_imag_residual": float(np.abs(np.imag(diag)).max()),
        "biorth_diag_min": float(np.real(diag).min()),
        "biorth_diag_max": float(np.real(diag).max()),
        "xnorm_min_norm": float(norms.min()),
        "xnorm_max_norm": float(norms.max()),
        "xnorm_norm_x1": float(norms[0]),
        "sigma_pair_residual": float(np.abs(sigma - np.real(diag)).max()),
        "sigma_monotone_residual": float(max(0.0, np.max(np.diff(sigma), initial=0.0))),
        "phi_dual_norm_residual": float(np.abs(dual - 1.0).max()),
    }
    out["biorth_pass"] = (out["biorth_offdiag_residual"] <= tol and out["biorth_diag_imag_residual"] <= tol
                       and out["biorth_diag_min"] >= 1 - tol and out["biorth_diag_max"] <= d + tol)
    out["xnorm_pass"] = (out["xnorm_min_norm"] >= 1 - tol
                         and out["xnorm_max_norm"] <= out["xnorm_norm_x1"] + tol
                         and out["xnorm_norm_x1"] <= d + tol)
    out["sigma_pass"] = (out["sigma_pair_residual"] <= 1e-9 and out["sigma_monotone_residual"] <= 1e-9
                         and sigma.min() >= 1 - tol and sigma.max() <= d + tol)
    out["dual_sphere_pass"] = out["phi_dual_norm_residual"] <= tol
    return out


@dataclass(frozen=True)
class Eqinter2Check:
    r: float
    sup_value: float
    target: float
    tol: float
    certified: Optional[CertifiedInterval] = None

    @property
    def residual(self):
        return abs(self.sup_value - self.target)

    @property
    def passed(self):
        ok = self.residual <= self.tol
        if self.certified is not None:
            ok = ok and self.certified.lower - self.tol <= self.target <= self.certified.upper + self.tol
        return ok

    def to_dict(self):
        out = {"r": self.r, "sup_value": self.sup_value, "target": self.target,
               "residual": self.residual, "pass": bool(self.passed)}
        if self.certified is not None:
            out["certified_lower"] = self.certified.lower
            out["certified_upper"] = self.certified.upper
        return out


def check_eqinter2(res, r, *, tol=1e-5, starts=64, seed=0, certify=False, resolution=1e-5):
    """``sup_phi (sum_k |<phi, x_k>|^r)^(1/r)`` against ``||x_1||``."""
    if r < 2:
        raise ValueError("the identity is only claimed for r >= 2")
    obj = PowerSum(res.xs, r=r)
    ball = res.space.dual_ball()
    sup_value = maximize(obj, ball, starts=starts, seed=seed).lower
    cert = certified_grid(obj, ball, resolution) if certify else None
    return Eqinter2Check(float(r), sup_value, norm(res.space, res.xs[0]), tol, cert)


# ---------------------------------------------------------------------------
# witnesses


def _coordinate_plane_iso(E, rows):
    """Isometry-based ``T`` for a plane spanned by multiples of coordinate vectors of l_p."""
    idx, scales = [], []
    for v in rows:
        nz = np.flatnonzero(np.abs(v) > 0)
        if len(nz) != 1:
            return None
        idx.append(nz[0])
        scales.append(abs(v[nz[0]]))
    if len(set(idx)) != len(idx):
        return None
    T, _ = euclidean_iso_for_lp(len(rows), E.p, E.field)
    return np.diag(1.0 / np.array(scales)) @ T.matrix


def _gram_iso(rows):
    """``(B^H B)^{-1/2}``: an isometry from l_2^k onto the span of ``rows`` in Euclidean space."""
    G = np.conj(rows) @ rows.T
    vals, vecs = np.linalg.eigh(G)
    return (vecs / np.sqrt(vals)) @ np.conj(vecs).T


def _subspace_and_iso(E, rows, T):
    """Resolve ``(F, T matrix)`` for the span of ``rows`` (None = whole space)."""
    if rows is None:
        F = E
        rows_arr = np.eye(E.dim)
    else:
        rows_arr = np.asarray(rows, dtype=E.field.dtype)
        F = E if (rows_arr.shape[0] == E.dim and np.allclose(rows_arr, np.eye(E.dim))) else Space.subspace(E, rows_arr)
    if T is not None:
        M = T.matrix if isinstance(T, LinearMap) else np.asarray(T)
    elif E.kind == "lp" and E.p == 2:
        M = _gram_iso(rows_arr)
    elif E.kind == "lp":
        M = _coordinate_plane_iso(E, rows_arr)
        if M is None:
            raise ValueError("supply T for a non-coordinate subspace of a non-Euclidean space")
    else:
        raise ValueError("supply T: near-Euclidean subspaces are not searched for")
    k = F.dim
    return F, LinearMap(M, Space.lp(k, 2, E.field), F)


@dataclass(frozen=True, eq=False)
class Witness:
    u: SymTensor
    v: SymTensor
    lemma: Lemma1Result
    x1: np.ndarray
    x2: np.ndarray

    def __iter__(self):
        yield self.u
        yield self.v
        yield self.lemma


def theorem1_witness(E, n, plane=None, T=None, **opts):
    """Unit tensor ``u = x_1^n / ||x_1||^n`` and ``v = x_2^n / ||x_1||^n`` with ``sup_zeta ||u + zeta v|| <= 1``."""
    if n < 2:
        raise ValueError("witnesses are built for degree n >= 2")
    if E.dim < 2:
        raise ValueError("the space must have dimension >= 2")
    if plane is None:
        plane = np.eye(E.dim, dtype=E.field.dtype)[:2]
    plane = np.asarray(plane, dtype=E.field.dtype)
    if plane.shape != (2, E.dim) or np.linalg.matrix_rank(plane) < 2:
        raise ValueError("plane must consist of two independent vectors of E")
    F, TF = _subspace_and_iso(E, plane, T)
    res = lemma1_construct(F, TF, **opts)
    x1 = F.to_ambient(res.xs[0])
    x2 = F.to_ambient(res.xs[1])
    c = 1.0 / norm(E, x1) ** n
    u = SymTensor.power(x1, n, E, coeff=c)
    v = SymTensor.power(x2, n, E, coeff=c)
    return Witness(u, v, res, x1, x2)


@dataclass(frozen=True, eq=False)
class EmbeddingPrecursor:
    """Vectors ``x_i`` (ambient), functionals on ``F`` and ``eps = d - 1``."""

    space: Space
    subspace: Space
    n: int
    xs: np.ndarray
    xs_sub: np.ndarray
    phis: np.ndarray
    eps: float
    lemma: Lemma1Result
    phis_ambient: Optional[np.ndarray] = None

    @property
    def m(self):
        return len(self.xs)

    def embed(self, alpha, n=None):
        """``sum_i alpha_i x_i^n`` as a tensor over the ambient space."""
        n = self.n if n is None else n
        alpha = np.asarray(alpha, dtype=self.space.field.dtype)
        if alpha.shape != (self.m,):
            raise ValueError(f"alpha must have length {self.m}")
        return SymTensor(n, self.space, alpha, self.xs)


def theorem2_embedding(E, m, n, T=None, basis=None, **opts):
    """The near-isometric copy ``alpha -> sum_i alpha_i x_i^n`` of ``l_inf^m``."""
    if n < 2:
        raise ValueError("embeddings are built for degree n >= 2")
    if m < 1 or m > E.dim:
        raise ValueError(f"m must lie in [1, {E.dim}]")
    if T is None and not E.is_euclidean:
        raise ValueError("a non-Euclidean host needs an explicit isomorphism T (no Dvoretzky search)")
    rows = None if (basis is None and m == E.dim) else (
        np.eye(E.dim, dtype=E.field.dtype)[:m] if basis is None else np.asarray(basis))
    F, TF = _subspace_and_iso(E, rows, T)
    res = lemma1_construct(F, TF, **opts)
    xs = np.array([F.to_ambient(x) for x in res.xs])
    ext = None
    if E.is_euclidean:
        if F is E:
            ext = res.phis.copy()
        else:
            # min-norm solution of B^T psi = phi is the norm-preserving extension
            ext = (np.linalg.pinv(F.basis.T) @ res.phis.T).T
    return EmbeddingPrecursor(E, F, int(n), xs, res.xs, res.phis, res.d - 1.0, res, ext)
