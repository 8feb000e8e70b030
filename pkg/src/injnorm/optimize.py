"""Global maximization of moduli over linear images of l_q balls.

Every supremum in this package has the form

    sup { |f(phi)| : phi = L z,  ||z||_q <= 1,  C z = 0 }

where ``z`` lives in a small "base" coordinate space.  A :class:`SearchDomain`
stores ``(L, q, C)``; the dual ball of every supported space is of that form
(see :mod:`injnorm.spaces`).  Two independent routes are provided:

* :func:`maximize` - multi-start local ascent (SLSQP), fast, lower bound only;
* :func:`certified_grid` - adaptive branch and bound with Lipschitz and
  second-order Lagrangian box bounds, returning ``lower <= sup <= upper``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# real parametrization helpers


def to_real(z):
    """Complex ``(..., k)`` -> real ``(..., 2k)`` as ``[re, im]``; real passes through."""
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return np.concatenate([z.real, z.imag], axis=-1)
    return z.astype(float)


def from_real(y, is_complex):
    y = np.asarray(y, dtype=float)
    if not is_complex:
        return y
    k = y.shape[-1] // 2
    return y[..., :k] + 1j * y[..., k:]


def real_gradient(gc, is_complex):
    """Map a complex gradient ``g`` (``dS = Re(g . dz)``) to real coordinates."""
    if not is_complex:
        return np.real(gc)
    return np.concatenate([gc.real, -gc.imag], axis=-1)


def real_linear_rows(C, is_complex):
    """Real form of the complex-linear equations ``C z = 0``."""
    C = np.atleast_2d(np.asarray(C))
    if C.size == 0:
        width = C.shape[1] * (2 if is_complex else 1)
        return np.zeros((0, width))
    if not is_complex:
        return np.real(C).astype(float)
    return np.block([[C.real, -C.imag], [C.imag, C.real]])


def conjugate_exponent(q):
    if q == 1:
        return np.inf
    if np.isinf(q):
        return 1.0
    return q / (q - 1.0)


def lq_norm(z, q, axis=-1):
    a = np.abs(z)
    if np.isinf(q):
        return a.max(axis=axis) if a.shape[axis] else np.zeros(a.shape[:-1])
    if q == 1:
        return a.sum(axis=axis)
    if a.shape[axis] == 0:
        return a.sum(axis=axis)
    # factor out the largest modulus against under/overflow
    top = a.max(axis=axis, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    r = a / safe
    if q == 2:
        s = np.sqrt((r * r).sum(axis=axis))
    else:
        s = (r**q).sum(axis=axis) ** (1.0 / q)
    return np.squeeze(top, axis=axis) * s


def null_space(A, rtol=1e-10):
    """Orthonormal basis (columns) of ``ker A`` for a real matrix ``A``."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A)
    rank = int((s > rtol * max(1.0, s[0] if s.size else 0.0)).sum())
    return vt[rank:].T.copy()


# ---------------------------------------------------------------------------
# search domains


@dataclass(frozen=True, eq=False)
class SearchDomain:
    """The set ``{L z : ||z||_q <= 1, C z = 0}`` with ``z`` real or complex.

    ``L`` has shape ``(dim, base_dim)``; ``C`` has shape ``(r, base_dim)``.
    """

    L: np.ndarray
    q: float
    is_complex: bool = False
    C: np.ndarray = field(default=None)

    def __post_init__(self):
        dtype = complex if self.is_complex else float
        L = np.atleast_2d(np.asarray(self.L, dtype=dtype))
        object.__setattr__(self, "L", L)
        C = self.C
        if C is None:
            C = np.zeros((0, L.shape[1]), dtype=dtype)
        C = np.asarray(C, dtype=dtype).reshape(-1, L.shape[1])
        object.__setattr__(self, "C", C)
        if not self.q >= 1:
            raise ValueError(f"base exponent must be >= 1, got {self.q}")

    @property
    def dim(self):
        return self.L.shape[0]

    @property
    def base_dim(self):
        return self.L.shape[1]

    @property
    def real_dim(self):
        return self.base_dim * (2 if self.is_complex else 1)

    def with_constraints(self, A):
        """Add the equations ``A phi = 0`` on the image coordinates."""
        A = np.atleast_2d(np.asarray(A, dtype=self.L.dtype))
        if A.size == 0:
            return self
        return SearchDomain(self.L, self.q, self.is_complex, np.vstack([self.C, A @ self.L]))

    def image(self, z):
        return np.asarray(z) @ self.L.T

    def base_norm(self, z):
        return lq_norm(z, self.q)

    def constraint_rows(self):
        return real_linear_rows(self.C, self.is_complex)

    def effective_dim(self):
        A = self.constraint_rows()
        rank = np.linalg.matrix_rank(A) if A.shape[0] else 0
        return self.real_dim - rank


# ---------------------------------------------------------------------------
# objectives


class Objective:
    """Base class for maximands ``phi -> |evaluate(phi)|``.

    Subclasses work on row-stacked points ``Z`` of shape ``(N, k)`` through a
    smooth surrogate ``S = value ** power`` and supply the bounds the
    certified search needs.  All objectives here are invariant under
    unimodular scalars and positively homogeneous.
    """

    power = 2.0
    phase_invariant = True
    homogeneous = True
    # S(t z) = |t| ** surrogate_degree * S(z)
    surrogate_degree = None

    def evaluate(self, phi):
        raise NotImplementedError

    def value(self, phi):
        return float(abs(self.evaluate(phi)))

    def gradient(self, phi):
        """Gradient of ``|evaluate|`` in real coordinates (``[re, im]`` if complex)."""
        phi = np.asarray(phi)
        s, gc = self.surrogate(phi[None, :])
        v = s[0] ** (1.0 / self.power)
        scale = 0.0 if v == 0 else v / (self.power * s[0])
        return real_gradient(gc[0] * scale, np.iscomplexobj(phi))

    # -- vectorized interface -------------------------------------------
    def surrogate(self, Z):
        """Return ``(S, g)`` with ``dS = Re(g . dz)``."""
        raise NotImplementedError

    def curvature(self, Z, rho):
        """Bound on the real Hessian norm of ``S`` over ``B(Z, rho)``, or None."""
        return None

    def slope(self, Z, rho):
        """Bound on the Euclidean Lipschitz constant of ``S`` over ``B(Z, rho)``."""
        raise NotImplementedError

    def envelope(self, Z, rho):
        """Bound on ``S`` over ``B(Z, rho)`` from term magnitudes alone."""
        raise NotImplementedError

    def lipschitz_bound(self, q):
        """Lipschitz constant of ``|evaluate|`` on the l_q unit ball (Euclidean metric)."""
        raise NotImplementedError

    def pullback(self, L):
        """The same objective composed with ``z -> L z``."""
        raise NotImplementedError

    def values(self, Z):
        s, _ = self.surrogate(Z)
        return np.maximum(s, 0.0) ** (1.0 / self.power)


def _safe_pow(a, e):
    """``a ** e`` for ``a >= 0`` with ``0 ** e = 0`` when ``e <= 0`` is irrelevant."""
    out = np.zeros_like(a, dtype=float)
    nz = a > 0
    out[nz] = a[nz] ** e
    if e == 0:
        out[~nz] = 1.0
    return out


class PowerSum(Objective):
    """``value(phi) = (sum_k |<phi, y_k>|^r) ** (1/power)``.

    ``power = r`` gives the l_r norm of the pairing vector, ``power = 1`` the
    plain power sum.  ``r = 2, power = 2`` with ``y_k`` the columns of ``T``
    is ``||T^T phi||_2``.
    """

    def __init__(self, vectors, r=2.0, power=None):
        self.vectors = np.atleast_2d(np.asarray(vectors))
        self.r = float(r)
        self.power = self.r if power is None else float(power)
        self.surrogate_degree = self.r
        if self.r < 1:
            raise ValueError("exponent r must be >= 1")

    def evaluate(self, phi):
        p = np.abs(self.vectors @ np.asarray(phi))
        return float((p**self.r).sum() ** (1.0 / self.power))

    def surrogate(self, Z):
        P = Z @ self.vectors.T
        A = np.abs(P)
        S = (A**self.r).sum(axis=1)
        w = self.r * _safe_pow(A, self.r - 2)
        G = (w * np.conj(P)) @ self.vectors
        return S, G

    def _norms2(self):
        return np.linalg.norm(self.vectors, axis=1)

    def _moduli_bound(self, Z, rho):
        return np.abs(Z @ self.vectors.T) + np.outer(rho, self._norms2())

    def curvature(self, Z, rho):
        if self.r < 2:
            return None
        P = self._moduli_bound(Z, rho)
        return (self.r * (self.r - 1) * _safe_pow(P, self.r - 2) * self._norms2() ** 2).sum(axis=1)

    def slope(self, Z, rho):
        P = self._moduli_bound(Z, rho)
        return (self.r * _safe_pow(P, self.r - 1) * self._norms2()).sum(axis=1)

    def envelope(self, Z, rho):
        return (self._moduli_bound(Z, rho) ** self.r).sum(axis=1)

    def lipschitz_bound(self, q):
        norms2 = self._norms2()
        if self.power == self.r:
            # ||v||_r <= ||v||_1 for r >= 1
            return float(norms2.sum())
        dual = lq_norm(self.vectors, conjugate_exponent(q))
        return float((self.r * dual ** (self.r - 1) * norms2).sum())

    def pullback(self, L):
        return PowerSum(self.vectors @ np.asarray(L), self.r, self.power)


class Linear(PowerSum):
    """``|<phi, y>|``."""

    def __init__(self, vector):
        super().__init__(np.atleast_2d(vector), r=2.0, power=2.0)


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class NormResult:
    lower: float
    maximizer: np.ndarray
    upper: Optional[float] = None
    starts_used: int = 0
    method: str = "multistart-slsqp"

    def to_dict(self):
        from .spaces import encode_array

        out = {
            "lower": float(self.lower),
            "maximizer": encode_array(self.maximizer),
            "starts_used": int(self.starts_used),
            "method": self.method,
        }
        if self.upper is not None:
            out["upper"] = float(self.upper)
        return out


# ---------------------------------------------------------------------------
# multi-start local search


class InfeasibleDomain(ValueError):
    pass


def _structured_starts(D):
    eye = np.eye(D)
    rows = [eye[i] for i in range(D)]
    for i in range(D):
        for j in range(i + 1, D):
            rows.append((eye[i] + eye[j]) / np.sqrt(2))
            rows.append((eye[i] - eye[j]) / np.sqrt(2))
    rows.append(np.ones(D) / np.sqrt(D))
    rows.append(np.array([(-1.0) ** i for i in range(D)]) / np.sqrt(D))
    return rows


def _ball_constraints(dom, N, n_aux):
    """SLSQP inequality constraints for ``||N w||_q <= 1`` (plus aux variables)."""
    q, cplx, k = dom.q, dom.is_complex, dom.base_dim
    nw = N.shape[1]

    def split(v):
        return v[:nw], v[nw:]

    def parts(y):
        if cplx:
            return y[:k], y[k:]
        return y, None

    cons = []
    if q == 1:
        if not cplx:
            # t - y >= 0, t + y >= 0, 1 - sum t >= 0
            jac_pos = np.hstack([-N, np.eye(k)])
            jac_neg = np.hstack([N, np.eye(k)])
            cons.append({"type": "ineq", "fun": lambda v: split(v)[1] - N @ split(v)[0], "jac": lambda v: jac_pos})
            cons.append({"type": "ineq", "fun": lambda v: split(v)[1] + N @ split(v)[0], "jac": lambda v: jac_neg})
        else:
            def fun(v):
                w, t = split(v)
                a, b = parts(N @ w)
                return t * t - a * a - b * b

            def jac(v):
                w, t = split(v)
                a, b = parts(N @ w)
                J = np.zeros((k, nw + k))
                J[:, :nw] = -2 * (a[:, None] * N[:k] + b[:, None] * N[k:])
                J[:, nw:] = np.diag(2 * t)
                return J

            cons.append({"type": "ineq", "fun": fun, "jac": jac})
        row = np.concatenate([np.zeros(nw), -np.ones(k)])
        cons.append({"type": "ineq", "fun": lambda v: 1.0 - split(v)[1].sum(), "jac": lambda v: row[None, :]})
    elif np.isinf(q):
        if not cplx:
            cons.append({"type": "ineq", "fun": lambda v: 1.0 - N @ v, "jac": lambda v: -N})
            cons.append({"type": "ineq", "fun": lambda v: 1.0 + N @ v, "jac": lambda v: N})
        else:
            def fun(v):
                a, b = parts(N @ v)
                return 1.0 - a * a - b * b

            def jac(v):
                a, b = parts(N @ v)
                return -2 * (a[:, None] * N[:k] + b[:, None] * N[k:])

            cons.append({"type": "ineq", "fun": fun, "jac": jac})
    else:
        def fun(v):
            z = from_real(N @ v, cplx)
            return np.atleast_1d(1.0 - (np.abs(z) ** q).sum())

        def jac(v):
            y = N @ v
            z = from_real(y, cplx)
            m = np.abs(z)
            w = q * _safe_pow(m, q - 2)
            g = np.concatenate([w, w]) * y if cplx else w * y
            return -(g @ N)[None, :]

        cons.append({"type": "ineq", "fun": fun, "jac": jac})
    return cons


def _canonical_phase(phi, z):
    """Rotate so the first significant coordinate of ``phi`` is real positive."""
    idx = np.flatnonzero(np.abs(phi) > 1e-12)
    if idx.size == 0:
        return phi, z
    c = phi[idx[0]]
    u = np.conj(c) / abs(c)
    if not np.iscomplexobj(phi):
        u = float(np.sign(c))
    return phi * u, z * u


def _tie_key(phi):
    return tuple(np.round(to_real(np.asarray(phi)[None, :])[0], 6).tolist())


def _snap_to_faces(z, dom, atol=1e-7):
    """Push moduli within ``atol`` of 1 onto the sup-norm sphere; SLSQP stops a hair inside."""
    a = np.abs(z)
    near = (a > 1 - atol) & (a < 1)
    if not near.any():
        return None
    zs = z.copy()
    zs[near] = z[near] / a[near]
    C = dom.C
    if C is not None and len(C) and np.abs(C @ zs).max() > 1e-12:
        return None
    return zs


def maximize(obj, dom, *, starts=64, max_iter=200, tol=1e-12, seed=0, screen=32):
    """Maximize ``|obj|`` over ``dom`` from ``starts`` deterministic starting points.

    Half of the starts are structured (coordinate and pairwise directions);
    the rest come from a seeded random pool of ``screen * starts`` feasible
    points, half of them the best-scoring ones.  Every returned value is
    evaluated at an exactly feasible point, so ``lower`` is a genuine lower
    bound for the supremum.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    cplx = dom.is_complex
    pb = obj.pullback(dom.L)
    D = dom.real_dim
    N = null_space(dom.constraint_rows())
    nw = N.shape[1]
    k = dom.base_dim
    zero = np.zeros(dom.dim, dtype=dom.L.dtype)
    if nw == 0:
        return NormResult(float(pb.values(np.zeros((1, k), dtype=dom.L.dtype))[0]), zero, starts_used=0)

    def feasible(y):
        z = from_real(y, cplx)
        with np.errstate(over="ignore", invalid="ignore"):
            nu = float(dom.base_norm(z))
        if nu == 0 or not np.isfinite(nu):
            return None
        if pb.homogeneous or nu > 1:
            z = z / nu
        return z

    rng = np.random.default_rng(seed)
    candidates = []
    for y in _structured_starts(D):
        if len(candidates) >= max(1, starts // 2):
            break
        w = N.T @ y
        if np.linalg.norm(w) > 1e-9:
            z = feasible(N @ w)
            if z is not None:
                candidates.append(z)
    # screen a random pool: the best-scoring points first, then the rest in draw order
    pool = rng.standard_normal((screen * starts, nw)) @ N.T
    pz = from_real(pool, cplx)
    pz = pz / np.maximum(dom.base_norm(pz), 1e-300)[:, None]
    order = np.argsort(-pb.values(pz), kind="stable")
    n_best = (starts - len(candidates) + 1) // 2
    chosen = list(order[:n_best])
    chosen += sorted(order[n_best:n_best + starts - len(candidates) - n_best])
    candidates.extend(pz[i] for i in chosen)

    cons = _ball_constraints(dom, N, k if dom.q == 1 else 0)

    # smooth base norm and homogeneous objective: maximize S(z) / ||z||_q^kappa
    # without constraints, which avoids infeasible SLSQP subproblems
    kappa = pb.surrogate_degree
    smooth = pb.homogeneous and kappa is not None and 1 < dom.q < np.inf
    q = dom.q

    def log_ratio(w):
        y = N @ w
        z = from_real(y, cplx)
        s, g = pb.surrogate(z[None, :])
        a = np.abs(z)
        nu = lq_norm(a, q)
        if not (s[0] > 0 and nu > 0 and np.isfinite(s[0])):
            return np.inf, np.zeros_like(w)
        r = a / nu
        # d||z||_q / dy = (|z_i| / ||z||)^(q-2) y_i / ||z||
        rq = _safe_pow(r, q - 2)
        dn = (np.concatenate([rq, rq]) if cplx else rq) * y / nu
        gy = real_gradient(g[0], cplx)
        grad = gy / s[0] - kappa * dn / nu
        return -(np.log(s[0]) - kappa * np.log(nu)), -(grad @ N)

    def local(z0, ftol, maxiter):
        """SLSQP from ``z0``; returns the best of the start, the end point and its snapped copy."""
        y0 = to_real(z0)
        w0 = N.T @ y0
        s0 = float(pb.values(z0[None, :])[0]) ** pb.power
        if not np.isfinite(s0):
            raise FloatingPointError("objective is not finite at a start point")
        scale = s0 if s0 > 1e-300 else 1.0
        v0 = np.concatenate([w0, np.abs(z0)]) if dom.q == 1 else w0

        def fun(v):
            z = from_real(N @ v[:nw], cplx)
            s, g = pb.surrogate(z[None, :])
            grad = np.zeros_like(v)
            grad[:nw] = -(real_gradient(g[0], cplx) @ N) / scale
            return -s[0] / scale, grad

        if smooth:
            if s0 <= 0:
                return float(pb.values(z0[None, :])[0]), z0
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                res = minimize(log_ratio, w0, jac=True, method="BFGS",
                               options={"maxiter": maxiter, "gtol": 1e-11})
        else:
            # trial steps of the line search may leave the ball and overflow
            with np.errstate(over="ignore", invalid="ignore"):
                res = minimize(fun, v0, jac=True, method="SLSQP", constraints=cons,
                               options={"maxiter": maxiter, "ftol": ftol})
        z1 = feasible(N @ res.x[:nw]) if np.all(np.isfinite(res.x)) else None
        pts = [z0] if z1 is None else [z1, z0]
        if z1 is not None and np.isinf(dom.q):
            zs = _snap_to_faces(z1, dom)
            if zs is not None:
                pts.append(zs)
        vals = [float(pb.values(p[None, :])[0]) for p in pts]
        if not all(np.isfinite(vals)):
            raise FloatingPointError("objective evaluated to a non-finite value")
        i = int(np.argmax(vals))
        return vals[i], pts[i]

    results = [local(z0, tol, max_iter) for z0 in candidates]
    # one tighter pass on the winner
    top = max(range(len(results)), key=lambda i: results[i][0])
    polished = local(results[top][1], min(tol, 1e-15), 2 * max_iter)
    if polished[0] > results[top][0]:
        results[top] = polished

    best = max(v for v, _ in results)
    ties = []
    for idx, (v, z) in enumerate(results):
        if v >= best - TIE_TOL * max(1.0, best):
            phi, zc = _canonical_phase(dom.image(z), z)
            ties.append((_tie_key(phi), -idx, v, phi))
    # largest key wins, then lowest start index
    ties.sort(key=lambda t: (t[0], t[1]))
    _, _, v, phi = ties[-1]
    return NormResult(float(v), phi, starts_used=len(candidates))


# ---------------------------------------------------------------------------
# certified branch and bound

MAX_CERTIFIED_DIM = 6
_MU_SCALES = (0.0, 0.5, 0.8, 0.95, 1.0, 1.05, 1.25, 2.0)


class CertificationError(ValueError):
    """The certified search cannot be run on this domain."""


@dataclass(frozen=True)
class CertifiedInterval:
    lower: float
    upper: float
    evaluations: int = 0
    complete: bool = True

    def __iter__(self):
        yield self.lower
        yield self.upper

    @property
    def width(self):
        return self.upper - self.lower


def _real_block_sup(a, c, s, mu, q):
    """Exact ``sup_{|t - c| <= s} a (t - c) - mu |t|^q`` (elementwise, concave in t)."""
    lo, hi = c - s, c + s
    cands = [lo, hi, np.clip(0.0, lo, hi)]
    if q > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = np.sign(a) * (np.abs(a) / np.where(mu > 0, mu * q, np.inf)) ** (1.0 / (q - 1.0))
        cands.append(np.clip(np.nan_to_num(tstar), lo, hi))
    best = None
    for t in cands:
        v = a * (t - c) - mu * np.abs(t) ** q
        best = v if best is None else np.maximum(best, v)
    return best


def _complex_block_sup(a, c, s, mu, q):
    """Upper bound on ``sup a.(z - c) - mu |z|^q`` over the rectangle ``|z_i - c_i| <= s_i``.

    ``a, c, s`` have a trailing axis of length 2 (real, imaginary).
    """
    linear = (np.abs(a) * s).sum(-1)
    r = np.linalg.norm(c, axis=-1)
    anorm = np.linalg.norm(a, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(r[..., None] > 0, c / r[..., None], 0.0)
        grad_rho = q * (r ** (q - 1.0))[..., None] * unit
        if q == 1:
            # supergradient of -mu|z| at z = 0 chosen to cancel a
            shrink = np.where(anorm > 0, np.minimum(1.0, mu / anorm), 0.0)
            at_zero = (r == 0)[..., None]
            grad_rho = np.where(at_zero, (a * shrink[..., None]) / np.where(mu > 0, mu, 1.0)[..., None], grad_rho)
        tangent = -mu * r**q + (np.abs(a - mu[..., None] * grad_rho) * s).sum(-1)
        ac = (a * c).sum(-1)
        if q == 1:
            free = np.where(anorm <= mu, -ac, np.inf)
        else:
            free = (q - 1.0) * mu * (anorm / (mu * q)) ** (q / (q - 1.0)) - ac
        free = np.where(mu > 0, free, np.inf)
    out = np.minimum(tangent, free)
    return np.where(mu > 0, out, linear)


class _BoxBounder:
    def __init__(self, pb, dom):
        self.pb = pb
        self.dom = dom
        self.cplx = dom.is_complex
        self.k = dom.base_dim
        self.q = dom.q
        self.Cr = dom.constraint_rows()
        self.has_eq = self.Cr.shape[0] > 0
        if self.has_eq:
            self.Nsp = null_space(self.Cr)
            self.proj = self.Nsp @ self.Nsp.T
            self.pinvCT = np.linalg.pinv(self.Cr.T)
            self.Q = np.eye(dom.real_dim) - self.Cr.T @ self.pinvCT
            self.absCr = np.abs(self.Cr)

    def _blocks(self, v):
        """(N, D) real -> (N, k, 2) for complex, (N, k) for real."""
        if self.cplx:
            return np.stack([v[:, : self.k], v[:, self.k:]], axis=-1)
        return v

    def _min_moduli(self, lo, hi):
        d = np.maximum(0.0, np.maximum(lo, -hi))
        if self.cplx:
            return np.hypot(d[:, : self.k], d[:, self.k:])
        return d

    def _moduli(self, c):
        if self.cplx:
            return np.hypot(c[:, : self.k], c[:, self.k:])
        return np.abs(c)

    def feasible_points(self, c):
        y = c @ self.proj if self.has_eq else c
        z = from_real(y, self.cplx)
        nu = lq_norm(z, self.q)
        ok = nu > 1e-15
        z = z[ok] / nu[ok, None]
        return z

    def bound(self, lo, hi):
        """Return (keep_mask, upper bound on value) for boxes ``[lo, hi]``."""
        pb, q = self.pb, self.q
        c = (lo + hi) / 2
        s = (hi - lo) / 2
        rho = np.linalg.norm(s, axis=1)
        n = c.shape[0]

        feas = np.ones(n, dtype=bool)
        mins = self._min_moduli(lo, hi)
        if np.isinf(q):
            feas &= (mins <= 1 + 1e-12).all(axis=1)
        else:
            feas &= (mins**q).sum(axis=1) <= 1 + 1e-12
        if self.has_eq:
            feas &= (np.abs(c @ self.Cr.T) <= s @ self.absCr.T + 1e-12).all(axis=1)

        z = from_real(c, self.cplx)
        S, gc = pb.surrogate(z)
        g = real_gradient(gc, self.cplx)
        ub = np.minimum(pb.envelope(z, rho), S + pb.slope(z, rho) * rho)

        M = pb.curvature(z, rho)
        if M is not None:
            ub = np.minimum(ub, self._lagrangian(c, s, S + 0.5 * M * rho**2, g))
        ub = np.maximum(ub, 0.0) ** (1.0 / pb.power)
        ub = ub + 1e-12 * (1.0 + ub)
        return feas, ub

    def _lagrangian(self, c, s, base, g):
        q = self.q
        Cc = c @ self.Cr.T if self.has_eq else None

        def eta_for(rhs):
            # multipliers eta minimizing ||rhs + Cr^T eta||
            eta = -(rhs @ self.pinvCT.T)
            return eta, rhs + eta @ self.Cr

        if np.isinf(q) and not self.cplx:
            if not self.has_eq:
                return base + (np.abs(g) * s).sum(axis=1)
            eta, a = eta_for(g)
            return base + (eta * Cc).sum(axis=1) + (np.abs(a) * s).sum(axis=1)

        if np.isinf(q):
            # complex polydisc: |z_j|^2 <= 1 with one multiplier per coordinate
            if self.has_eq:
                eta, a = eta_for(g)
                const = (eta * Cc).sum(axis=1)
            else:
                a, const = g, 0.0
            ab, cb, sb = self._blocks(a), self._blocks(c), self._blocks(s)
            dh = 2 * cb
            nrm = (dh * dh).sum(-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                mu_star = np.where(nrm > 0, np.maximum(0.0, (ab * dh).sum(-1) / nrm), 0.0)
            best = None
            for f in _MU_SCALES:
                mu = f * mu_star
                val = base + const + (mu + _complex_block_sup(ab, cb, sb, mu, 2.0)).sum(axis=1)
                best = val if best is None else np.minimum(best, val)
            return best

        # finite q: sum_j |z_j|^q <= 1 with a single multiplier
        m = self._moduli(c)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(m > 0, q * m ** (q - 1.0) / np.where(m > 0, m, 1.0), 0.0)
        dh = np.concatenate([w, w], axis=1) * c if self.cplx else w * c
        if self.has_eq:
            gq, hq = g @ self.Q.T, dh @ self.Q.T
        else:
            gq, hq = g, dh
        hh = (hq * hq).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            mu_star = np.where(hh > 0, np.maximum(0.0, (gq * hq).sum(axis=1) / hh), 0.0)
        best = None
        for f in _MU_SCALES:
            mu = f * mu_star
            if self.has_eq:
                eta, _ = eta_for(g - mu[:, None] * dh)
                a = g + eta @ self.Cr
                const = (eta * Cc).sum(axis=1)
            else:
                a, const = g, 0.0
            if self.cplx:
                blk = _complex_block_sup(self._blocks(a), self._blocks(c), self._blocks(s), mu[:, None], q)
            else:
                blk = _real_block_sup(a, c, s, mu[:, None], q)
            val = base + const + mu + blk.sum(axis=1)
            best = val if best is None else np.minimum(best, val)
        return best


def certified_grid(obj, dom, resolution=1e-3, *, batch=20000, max_evaluations=20_000_000,
                   seed=0, samples=4096):
    """Certified enclosure ``lower <= sup |obj| <= upper`` over ``dom``.

    Boxes covering the base coordinates are refined best-first until every
    remaining box is bounded by ``lower + resolution``; the returned width is
    then at most ``resolution``.  Upper bounds come from term envelopes,
    local Lipschitz constants and a second-order Taylor bound of the
    Lagrangian, so they remain sound up to floating point rounding.  The
    lower bound is the best value seen at exactly feasible points.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    eff = dom.effective_dim()
    if eff > MAX_CERTIFIED_DIM:
        raise CertificationError(
            f"search dimension {eff} exceeds the enumeration limit {MAX_CERTIFIED_DIM}")
    pb = obj.pullback(dom.L)
    B = _BoxBounder(pb, dom)
    D = dom.real_dim
    if eff == 0:
        v = float(pb.values(np.zeros((1, dom.base_dim), dtype=dom.L.dtype))[0])
        return CertifiedInterval(v, v, 1, True)

    rng = np.random.default_rng(seed)
    probe = np.vstack([np.eye(D), rng.standard_normal((samples, D))])
    pts = B.feasible_points(probe)
    lower = float(pb.values(pts).max()) if len(pts) else 0.0

    lo = -np.ones((1, D))
    hi = np.ones((1, D))
    if pb.phase_invariant:
        lo[0, 0] = 0.0
        if dom.is_complex:
            lo[0, dom.base_dim] = hi[0, dom.base_dim] = 0.0
    feas, ub = B.bound(lo, hi)
    retired = lower
    evaluations = 1
    while True:
        keep = ub > lower + resolution
        if np.any(~keep):
            retired = max(retired, float(ub[~keep].max(initial=-np.inf)))
        lo, hi, ub = lo[keep], hi[keep], ub[keep]
        if len(ub) == 0:
            return CertifiedInterval(lower, max(retired, lower), evaluations, True)
        if evaluations >= max_evaluations:
            return CertifiedInterval(lower, max(retired, float(ub.max())), evaluations, False)
        if len(ub) > batch:
            sel = np.argpartition(-ub, batch)[:batch]
            mask = np.zeros(len(ub), dtype=bool)
            mask[sel] = True
        else:
            mask = np.ones(len(ub), dtype=bool)
        plo, phi_ = lo[mask], hi[mask]
        lo, hi, ub = lo[~mask], hi[~mask], ub[~mask]
        widths = phi_ - plo
        axis = np.argmax(widths, axis=1)
        rows = np.arange(len(plo))
        mid = (plo[rows, axis] + phi_[rows, axis]) / 2
        lo1, hi1 = plo.copy(), phi_.copy()
        hi1[rows, axis] = mid
        lo2, hi2 = plo.copy(), phi_.copy()
        lo2[rows, axis] = mid
        clo = np.vstack([lo1, lo2])
        chi = np.vstack([hi1, hi2])
        f, cub = B.bound(clo, chi)
        evaluations += len(clo)
        clo, chi, cub = clo[f], chi[f], cub[f]
        if len(clo):
            pts = B.feasible_points((clo + chi) / 2)
            if len(pts):
                lower = max(lower, float(pb.values(pts).max()))
        lo = np.vstack([lo, clo])
        hi = np.vstack([hi, chi])
        ub = np.concatenate([ub, cub])
