"""Finite-dimensional real and complex normed spaces.

Three families are modelled: ``l_p^m``, polytope norms
``||x|| = max_j |<psi_j, x>|`` and subspaces ``span(basis)`` of another space
(vectors of a subspace are coordinate arrays with respect to its basis).

The pairing between functionals and vectors is bilinear, with no complex
conjugation; conjugates are always written explicitly by callers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .optimize import (
    CertifiedInterval,
    PowerSum,
    SearchDomain,
    certified_grid,
    conjugate_exponent,
    lq_norm,
    maximize,
)


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def is_complex(self):
        return self is Field.COMPLEX

    @property
    def dtype(self):
        return complex if self.is_complex else float

    @property
    def multiplicity(self):
        return 2 if self.is_complex else 1


def as_array(values, field, *, ndim=1, name="vector"):
    """Coerce to the dtype of ``field``; real fields reject nonzero imaginary parts."""
    field = Field(field)
    arr = np.asarray(values)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimension(s), got shape {arr.shape}")
    if not field.is_complex:
        if np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise ValueError(f"{name} has nonzero imaginary part over the real field")
            arr = arr.real
        return arr.astype(float)
    return arr.astype(complex)


def _check_p(p):
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return p


@dataclass(frozen=True, eq=False)
class Space:
    field: Field
    dim: int
    kind: str
    p: float | None = None
    generators: np.ndarray | None = None
    host: "Space | None" = None
    basis: np.ndarray | None = None

    # -- constructors ----------------------------------------------------
    @classmethod
    def lp(cls, dim, p, field=Field.REAL):
        if dim < 1:
            raise ValueError("dimension must be positive")
        return cls(Field(field), int(dim), "lp", p=_check_p(p))

    @classmethod
    def polytope(cls, generators, field=Field.REAL):
        field = Field(field)
        gens = as_array(generators, field, ndim=2, name="generators")
        if np.linalg.matrix_rank(gens) < gens.shape[1]:
            raise ValueError("polytope generators must span the dual space")
        return cls(field, gens.shape[1], "polytope", generators=gens)

    @classmethod
    def subspace(cls, host, basis):
        """``basis`` is a list of host vectors (one per row)."""
        rows = as_array(basis, host.field, ndim=2, name="basis")
        if rows.shape[1] != host.dim:
            raise ValueError("basis vectors must live in the host space")
        if np.linalg.matrix_rank(rows) < rows.shape[0]:
            raise ValueError("subspace basis must be linearly independent")
        return cls(host.field, rows.shape[0], "subspace", host=host, basis=rows.T.copy())

    # -- predicates ------------------------------------------------------
    @property
    def is_complex(self):
        return self.field.is_complex

    @property
    def is_euclidean(self):
        return self.kind == "lp" and self.p == 2

    def describe(self):
        if self.kind == "lp":
            p = "inf" if math.isinf(self.p) else f"{self.p:g}"
            return f"{self.field.value} l_{p}^{self.dim}"
        if self.kind == "polytope":
            return f"{self.field.value} polytope({len(self.generators)} generators) in dim {self.dim}"
        return f"{self.dim}-dim subspace of {self.host.describe()}"

    # -- balls as linear images of l_q balls --------------------------------
    def dual_ball(self):
        """The dual unit ball ``B_{E'}`` as a :class:`SearchDomain`."""
        cplx = self.is_complex
        if self.kind == "lp":
            return SearchDomain(np.eye(self.dim), conjugate_exponent(self.p), cplx)
        if self.kind == "polytope":
            # absolutely convex hull of the generators
            return SearchDomain(self.generators.T, 1.0, cplx)
        host = self.host.dual_ball()
        # restrictions of host functionals (Hahn-Banach)
        return SearchDomain(self.basis.T @ host.L, host.q, cplx, host.C)

    def unit_ball(self):
        """The unit ball ``B_E`` as a :class:`SearchDomain`."""
        cplx = self.is_complex
        if self.kind == "lp":
            return SearchDomain(np.eye(self.dim), self.p, cplx)
        if self.kind == "polytope":
            P = self.generators
            pinv = np.linalg.pinv(P)
            return SearchDomain(pinv, np.inf, cplx, np.eye(len(P)) - P @ pinv)
        host = self.host.unit_ball()
        B = self.basis
        Bp = np.linalg.pinv(B)
        off_range = (np.eye(B.shape[0]) - B @ Bp) @ host.L
        return SearchDomain(Bp @ host.L, host.q, cplx, np.vstack([host.C, off_range]))

    # -- conveniences ----------------------------------------------------
    def vector(self, values):
        x = as_array(values, self.field)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected length {self.dim}, got {x.shape[0]}")
        return x

    def norm(self, x):
        return norm(self, x)

    def dual_norm(self, phi, **kw):
        return dual_norm(self, phi, **kw)

    def to_ambient(self, x):
        """Coordinates in the outermost host space."""
        x = np.asarray(x)
        if self.kind != "subspace":
            return x
        return self.host.to_ambient(self.basis @ x)


def _check_len(space, x, what="vector"):
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != space.dim:
        raise ValueError(f"{what} of shape {x.shape} does not match dimension {space.dim}")
    return x


def norm(space, x):
    x = _check_len(space, x)
    if space.kind == "lp":
        return float(lq_norm(x, space.p))
    if space.kind == "polytope":
        return float(np.abs(space.generators @ x).max())
    return norm(space.host, space.basis @ x)


def pair(phi, x):
    phi, x = np.asarray(phi), np.asarray(x)
    if phi.shape != x.shape:
        raise ValueError(f"pairing shape mismatch: {phi.shape} vs {x.shape}")
    return (phi * x).sum()


def dual_norm(space, phi, *, starts=16, seed=0):
    """``sup |<phi, x>|`` over the unit ball; closed form for l_p."""
    phi = _check_len(space, phi, "functional")
    if space.kind == "lp":
        return float(lq_norm(phi, conjugate_exponent(space.p)))
    return maximize(PowerSum(phi[None, :]), space.unit_ball(), starts=starts, seed=seed).lower


def dual_norm_bounds(space, phi, resolution=1e-4) -> CertifiedInterval:
    phi = _check_len(space, phi, "functional")
    return certified_grid(PowerSum(phi[None, :]), space.unit_ball(), resolution)


# ---------------------------------------------------------------------------
# linear maps


@dataclass(frozen=True, eq=False)
class LinearMap:
    matrix: np.ndarray
    domain: Space
    codomain: Space

    def __post_init__(self):
        dtype = complex if (self.domain.is_complex or self.codomain.is_complex) else float
        M = np.atleast_2d(np.asarray(self.matrix, dtype=dtype))
        if M.shape != (self.codomain.dim, self.domain.dim):
            raise ValueError(f"matrix shape {M.shape} does not match {self.codomain.dim}x{self.domain.dim}")
        object.__setattr__(self, "matrix", M)

    def __call__(self, x):
        return self.matrix @ np.asarray(x)

    def adjoint(self, phi):
        """``T* phi``; satisfies ``pair(T* phi, x) == pair(phi, T x)``."""
        return self.matrix.T @ np.asarray(phi)

    def inverse(self):
        if self.domain.dim != self.codomain.dim:
            raise ValueError("only square maps can be inverted")
        cond = np.linalg.cond(self.matrix)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError("linear map is not invertible")
        return LinearMap(np.linalg.inv(self.matrix), self.codomain, self.domain)

    def scaled(self, c):
        return LinearMap(self.matrix * c, self.domain, self.codomain)


def _diagonal_lp_norm(T):
    M = T.matrix
    if not (T.domain.kind == T.codomain.kind == "lp") or M.shape[0] != M.shape[1]:
        return None
    if np.count_nonzero(M - np.diag(np.diag(M))):
        return None
    d = np.abs(np.diag(M))
    p, s = T.domain.p, T.codomain.p
    if p <= s:
        return float(d.max())
    # Hoelder: ||d x||_s <= ||d||_t ||x||_p with 1/t = 1/s - 1/p
    t = np.inf if math.isinf(s) else (1.0 / (1.0 / s - (0.0 if math.isinf(p) else 1.0 / p)))
    return float(lq_norm(d, t))


def operator_norm_problem(T):
    """``(objective, domain)`` whose supremum is ``||T||``, or None.

    Prefers a form whose power-sum exponent is at least 2 so the certified
    search has second-order bounds available.
    """
    dom, cod, M = T.domain, T.codomain, T.matrix
    cod_lp = cod.kind == "lp" and not math.isinf(cod.p)
    dom_dual = conjugate_exponent(dom.p) if dom.kind == "lp" else None
    if cod_lp and (cod.p >= 2 or dom_dual is None or math.isinf(dom_dual)):
        return PowerSum(M, r=cod.p), dom.unit_ball()
    if dom_dual is not None and not math.isinf(dom_dual):
        return PowerSum(M.T, r=dom_dual), cod.dual_ball()
    return None


def operator_norm(T, *, exact=True, starts=64, seed=0):
    """``sup ||T x||`` over the unit ball of the domain."""
    if exact:
        v = _diagonal_lp_norm(T)
        if v is not None:
            return v
    dom, cod, M = T.domain, T.codomain, T.matrix
    prob = operator_norm_problem(T)
    if prob is not None:
        obj, ball = prob
        return maximize(obj, ball, starts=starts, seed=seed).lower
    if cod.kind == "lp":
        # l_inf codomain: max_i ||row_i||_{dom'}
        return max(dual_norm(dom, row, starts=starts, seed=seed) for row in M)
    if cod.kind == "polytope":
        return max(dual_norm(dom, M.T @ g, starts=starts, seed=seed) for g in cod.generators)
    return operator_norm(LinearMap(cod.basis @ M, dom, cod.host), exact=exact, starts=starts, seed=seed)


def operator_norm_bounds(T, resolution=1e-6) -> CertifiedInterval:
    prob = operator_norm_problem(T)
    if prob is None:
        raise ValueError("no certified formulation for this pair of spaces")
    obj, ball = prob
    return certified_grid(obj, ball, resolution)


def euclidean_iso_for_lp(m, p, field=Field.REAL):
    """``c I : l_2^m -> l_p^m`` with ``||T^{-1}|| = 1`` and ``||T|| = d = m^{|1/2 - 1/p|}``."""
    if m < 1:
        raise ValueError("m must be positive")
    p = _check_p(p)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    d = m ** abs(0.5 - inv_p)
    c = m ** (0.5 - inv_p) if p >= 2 else 1.0
    T = LinearMap(c * np.eye(m), Space.lp(m, 2, field), Space.lp(m, p, field))
    return T, d


# ---------------------------------------------------------------------------
# JSON


def encode_scalar(v):
    v = complex(v) if np.iscomplexobj(v) else float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def encode_array(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.astype(float).tolist()


def decode_array(data, field):
    field = Field(field)
    arr = np.asarray(data, dtype=float)
    if field.is_complex:
        if arr.shape[-1:] != (2,):
            raise ValueError("complex scalars must be [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    return arr


def decode_scalar(data, field):
    field = Field(field)
    if field.is_complex:
        if isinstance(data, (int, float)):
            return complex(data)
        re, im = data
        return complex(float(re), float(im))
    if isinstance(data, (list, tuple)):
        re, im = data
        if im != 0:
            raise ValueError("complex scalar in a real space")
        return float(re)
    return float(data)


def _encode_p(p):
    return "inf" if math.isinf(p) else p


def _decode_p(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        return float(p)
    if p is None:
        return math.inf
    return float(p)


def space_to_json(space):
    out = {"field": space.field.value, "dim": space.dim}
    if space.kind == "lp":
        out["kind"] = {"lp": _encode_p(space.p)}
    elif space.kind == "polytope":
        out["kind"] = {"polytope": encode_array(space.generators)}
    else:
        out["kind"] = {"subspace": {"host": space_to_json(space.host), "basis": encode_array(space.basis.T)}}
    return out


def space_from_json(data):
    try:
        field = Field(data["field"])
        kind = data["kind"]
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed space description: {exc}") from exc
    if not isinstance(kind, dict) or len(kind) != 1:
        raise ValueError('space "kind" must be an object with one key: lp, polytope or subspace')
    if "lp" in kind:
        space = Space.lp(dim, _decode_p(kind["lp"]), field)
    elif "polytope" in kind:
        space = Space.polytope(decode_array(kind["polytope"], field), field)
    elif "subspace" in kind:
        sub = kind["subspace"]
        host = space_from_json(sub["host"])
        space = Space.subspace(host, decode_array(sub["basis"], field))
    else:
        raise ValueError(f"unknown space kind {sorted(kind)}")
    if space.dim != dim:
        raise ValueError(f"declared dim {dim} does not match the description ({space.dim})")
    return space
