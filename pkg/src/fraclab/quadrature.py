"""Deterministic quadrature over balls and exteriors, plus pair Monte Carlo.

The workhorse is a vectorized adaptive Gauss-Kronrod (7/15) rule that
integrates vector-valued integrands and evaluates every new panel of a
refinement sweep in a single call. Ball integrals are done in polar
coordinates about a chosen origin: adaptive in angle (N = 2) or a fixed
product rule with doubling (N = 3), and adaptive in a graded radial
variable. Additional singular points are split off with a smooth
partition of unity and integrated in their own polar frames.

Points inside the unit ball carry an accurate value of ``w = 1 - |z|^2``
alongside their coordinates; fields that vanish on the unit sphere use it
to avoid cancellation at depths far below ``1e-8``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .specfun import sphere_area

__all__ = [
    "QuadConfig",
    "ScalarField",
    "SingularPoint",
    "QuadResult",
    "adaptive_gk",
    "integrate_ball",
    "integrate_exterior",
    "mc_integrate_pairs",
    "one_minus_sq",
    "ball_exit",
    "cutoff",
    "gauss_jacobi",
    "sphere_rule",
    "polar_integral",
    "boundary_features",
]

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5]] = _WG[:3]
G_WEIGHTS[[13, 11, 9]] = _WG[:3]
G_WEIGHTS[7] = _WG[3]


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and budgets for every quadrature in the package.

    Attributes
    ----------
    abs_tol, rel_tol : float
        Target absolute and relative accuracy.
    max_subdivisions : int
        Panel budget of each adaptive Gauss-Kronrod call.
    singular_split_radius : float
        Fraction of the distance to the nearest other feature used as the
        radius of local polar frames and near-field balls.
    mc_samples : int
        Number of Monte Carlo pair samples.
    seed : int
        Key of the counter-based random stream.
    tail_radius : float
        Radius beyond which exterior integrals switch to the tail map.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_subdivisions: int = 400
    singular_split_radius: float = 0.5
    mc_samples: int = 200_000
    seed: int = 20240917
    tail_radius: float = 4.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not 0.0 < self.singular_split_radius < 1.0:
            raise ValueError("singular_split_radius must lie in (0, 1)")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if not self.tail_radius > 0:
            raise ValueError("tail_radius must be positive")

    def replace(self, **kw) -> "QuadConfig":
        d = asdict(self)
        d.update(kw)
        return QuadConfig(**d)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SingularPoint:
    """A point where a field blows up like ``|x - point|^{-strength}``."""

    point: tuple
    strength: float

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.point, dtype=float)


def one_minus_sq(points) -> np.ndarray:
    """``1 - |x|^2`` computed as ``(1 - |x|)(1 + |x|)``."""
    n = np.linalg.norm(np.asarray(points, dtype=float), axis=-1)
    return (1.0 - n) * (1.0 + n)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real-valued function on ``R^N`` with support and smoothness metadata.

    Parameters
    ----------
    func : callable
        ``func(points, w)`` with ``points`` of shape ``(..., N)`` and ``w``
        the matching array of ``1 - |x|^2``; returns values of shape
        ``(...)``.
    N : int
        Dimension.
    support_radius : float
        The field vanishes for ``|x| > support_radius``.
    interior_smooth : bool
        Whether the field is smooth inside its support away from
        ``singular_points``.
    singular_points : tuple of SingularPoint
        Interior points where the field is unbounded.
    boundary_exponent : float or None
        ``e`` with ``field ~ dist(x, support boundary)^e`` near the
        support boundary, used to grade radial meshes there.
    decay : float or None
        ``γ`` with ``field ~ |x|^{-N-γ}`` at infinity (infinite support).
    radial : bool
        Whether the field depends on ``|x|`` only.
    name : str
        Label used in reports.
    """

    func: Callable
    N: int = 2
    support_radius: float = math.inf
    interior_smooth: bool = True
    singular_points: tuple = ()
    boundary_exponent: float | None = None
    decay: float | None = None
    radial: bool = False
    name: str = "field"

    def __call__(self, points, w=None) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if w is None:
            w = one_minus_sq(pts)
        else:
            w = np.broadcast_to(np.asarray(w, dtype=float), pts.shape[:-1])
        vals = np.asarray(self.func(pts, w), dtype=float)
        vals = np.broadcast_to(vals, pts.shape[:-1]).copy()
        if math.isfinite(self.support_radius):
            if self.support_radius == 1.0:
                vals[w <= 0] = 0.0
            else:
                vals[np.linalg.norm(pts, axis=-1) >= self.support_radius] = 0.0
        return vals

    @classmethod
    def from_function(cls, fn: Callable, N: int = 2, **meta) -> "ScalarField":
        """Wrap ``fn(points)``, which ignores the ``w`` hint."""
        return cls(func=lambda p, w: fn(p), N=N, **meta)

    @classmethod
    def from_profile(cls, profile: Callable, N: int = 2, **meta) -> "ScalarField":
        """Radial field on the unit ball from ``profile(w)``, ``w = 1 - |x|^2``.

        The profile is evaluated only where ``w > 0``.
        """

        def func(p, w):
            out = np.zeros(np.shape(w))
            inside = w > 0
            if np.any(inside):
                out[inside] = profile(w[inside])
            return out

        meta.setdefault("support_radius", 1.0)
        return cls(func=func, N=N, radial=True, **meta)

    @classmethod
    def constant(cls, c: float, N: int = 2, **meta) -> "ScalarField":
        """Constant ``c`` on the unit ball and zero outside."""
        meta.setdefault("name", f"const({c})")
        meta.setdefault("boundary_exponent", 0.0)
        return cls.from_profile(lambda w: np.full(np.shape(w), float(c)), N=N, **meta)

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(
            func=lambda p, w: c * self.func(p, w), N=self.N, support_radius=self.support_radius,
            interior_smooth=self.interior_smooth, singular_points=self.singular_points,
            boundary_exponent=self.boundary_exponent, decay=self.decay, radial=self.radial,
            name=f"{c}*{self.name}",
        )

    def __add__(self, other: "ScalarField") -> "ScalarField":
        sup = max(self.support_radius, other.support_radius)
        exps = [e for e in (self.boundary_exponent, other.boundary_exponent) if e is not None]
        decays = [d for d in (self.decay, other.decay) if d is not None]
        return ScalarField(
            func=lambda p, w: self.func(p, w) * _inside(p, w, self.support_radius)
            + other.func(p, w) * _inside(p, w, other.support_radius),
            N=self.N, support_radius=sup,
            interior_smooth=self.interior_smooth and other.interior_smooth,
            singular_points=tuple(self.singular_points) + tuple(other.singular_points),
            boundary_exponent=min(exps) if exps else None,
            decay=min(decays) if decays else None,
            radial=self.radial and other.radial,
            name=f"({self.name}+{other.name})",
        )


def _inside(p, w, R):
    if not math.isfinite(R):
        return 1.0
    if R == 1.0:
        return (w > 0).astype(float)
    return (np.linalg.norm(p, axis=-1) < R).astype(float)


@dataclass(frozen=True)
class QuadResult:
    """Integral value with error estimate; unpacks as ``(value, err_est)``."""

    value: float
    err_est: float
    converged: bool = True
    n_eval: int = 0

    def __iter__(self):
        return iter((self.value, self.err_est))


# ---------------------------------------------------------------------------
# one-dimensional adaptive Gauss-Kronrod for batched vector integrands


@dataclass
class _GKOut:
    value: np.ndarray
    error: np.ndarray
    converged: bool
    n_eval: int


def _gk_panels(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * GK_NODES[None, :]
    vals = np.asarray(f(nodes.ravel()))
    vals = vals.reshape((a.size, 15) + vals.shape[1:])
    hk = half[(slice(None),) + (None,) * (vals.ndim - 2)]
    K = hk * np.tensordot(GK_WEIGHTS, vals, axes=([0], [1]))
    G = hk * np.tensordot(G_WEIGHTS, vals, axes=([0], [1]))
    return K, G


def adaptive_gk(f, breaks, *, abs_tol, rel_tol, max_intervals=400, vector_scale=False) -> _GKOut:
    """Globally adaptive 15-point Gauss-Kronrod quadrature.

    Parameters
    ----------
    f : callable
        ``f(nodes)`` for a 1-D array of nodes returns an array of shape
        ``(len(nodes), *shape)``.
    breaks : sequence of float
        Initial panel boundaries, increasing.
    abs_tol, rel_tol : float
        Componentwise stopping rule
        ``err_j <= max(abs_tol, rel_tol * scale_j)``.
    max_intervals : int
        Panel budget.
    vector_scale : bool
        If true, ``scale_j = max(|I_j|, mean_k |I_k|)`` so that tiny
        components of a batch are not resolved to full relative accuracy.

    Returns
    -------
    _GKOut
        Value and error arrays of shape ``shape``.
    """
    br = np.asarray(breaks, dtype=float)
    a, b = br[:-1].copy(), br[1:].copy()
    K, G = _gk_panels(f, a, b)
    n_eval = 15 * a.size
    while True:
        err = np.abs(K - G)
        total = K.sum(axis=0)
        errsum = err.sum(axis=0)
        scale = np.abs(total)
        if vector_scale and scale.ndim > 0 and scale.size > 1:
            scale = np.maximum(scale, scale.mean())
        tol = np.maximum(abs_tol, rel_tol * scale)
        if np.all(errsum <= tol):
            return _GKOut(total, errsum, True, n_eval)
        if a.size >= max_intervals:
            return _GKOut(total, errsum, False, n_eval)
        score = (err / tol).reshape(a.size, -1).max(axis=1)
        order = np.argsort(-score, kind="stable")
        cut = score[order[0]] * 0.25
        pick = order[score[order] >= cut]
        pick = pick[: max(1, min(pick.size, max_intervals - a.size))]
        keep = np.ones(a.size, dtype=bool)
        keep[pick] = False
        pa, pb = a[pick], b[pick]
        pm = 0.5 * (pa + pb)
        na = np.concatenate([pa, pm])
        nb = np.concatenate([pm, pb])
        nK, nG = _gk_panels(f, na, nb)
        n_eval += 15 * na.size
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        K = np.concatenate([K[keep], nK])
        G = np.concatenate([G[keep], nG])
        srt = np.argsort(a, kind="stable")
        a, b, K, G = a[srt], b[srt], K[srt], G[srt]


# ---------------------------------------------------------------------------
# geometry helpers


def ball_exit(origin, omega, center=None, radius=1.0, h=None):
    """Distance from ``origin`` along unit directions ``omega`` to a sphere.

    ``h = radius^2 - |origin - center|^2`` may be supplied for accuracy; the
    origin must lie inside the ball. Returns an array over directions.
    """
    o = np.asarray(origin, dtype=float)
    c = np.zeros_like(o) if center is None else np.asarray(center, dtype=float)
    d = o - c
    if h is None:
        n = np.linalg.norm(d)
        h = (radius - n) * (radius + n)
    bb = omega @ d
    root = np.sqrt(bb * bb + h)
    out = np.empty_like(bb)
    pos = bb > 0
    out[pos] = h / (bb[pos] + root[pos])
    out[~pos] = root[~pos] - bb[~pos]
    return out


def boundary_features(angle: float, dist: float, radius: float):
    """Angular refinement targets for a polar origin at ``dist`` from a sphere.

    The ray integrals vary on the angular scale ``sqrt(dist/radius)``
    around the outward normal and down to ``dist/radius`` around the two
    tangent directions.
    """
    rel = max(dist / radius, 1e-300)
    out = [(angle, math.sqrt(rel))]
    if rel < 0.1:
        out += [(angle + math.pi / 2, rel), (angle - math.pi / 2, rel)]
    return out


def cutoff(r, radius):
    """Smooth radial cutoff: 1 for ``r <= radius/2``, 0 for ``r >= radius``."""
    x = np.clip(2.0 * np.asarray(r, dtype=float) / radius - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        e0 = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
        e1 = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        out = e0 / (e0 + e1)
    return out


@lru_cache(maxsize=64)
def gauss_jacobi(n: int, alpha: float, beta: float):
    """Gauss-Jacobi rule on ``[0, 1]`` for weight ``(1-x)^alpha x^beta``."""
    x, w = special.roots_jacobi(n, alpha, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (1.0 + alpha + beta)


@lru_cache(maxsize=64)
def sphere_rule(N: int, n: int):
    """Product rule on the unit sphere; exact for low-degree polynomials.

    ``N = 2``: ``n`` equispaced angles. ``N = 3``: ``n`` azimuths times
    ``n // 2`` Gauss-Legendre nodes in the polar cosine. The rule is
    symmetric under ``ω -> -ω``.
    """
    if N == 2:
        th = (np.arange(n) + 0.5) * (2 * np.pi / n)
        return np.stack([np.cos(th), np.sin(th)], axis=-1), np.full(n, 2 * np.pi / n)
    if N == 3:
        m = max(2, n // 2)
        ct, wt = np.polynomial.legendre.leggauss(m)
        ph = (np.arange(n) + 0.5) * (2 * np.pi / n)
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack([
            (st[:, None] * np.cos(ph)[None, :]).ravel(),
            (st[:, None] * np.sin(ph)[None, :]).ravel(),
            np.repeat(ct, n),
        ], axis=-1)
        wts = np.repeat(wt, n) * (2 * np.pi / n)
        return dirs, wts
    raise ValueError("product sphere rules are provided for N = 2 and N = 3 only")


# ---------------------------------------------------------------------------
# polar integration about an origin


@dataclass(frozen=True)
class _RadialMap:
    r_in: float
    q0: float
    qe: float

    def nodes(self, u, r_out):
        """Map ``u`` in [0,1] to radii for each direction.

        Returns ``r`` and ``dr/du`` of shape ``(len(u), len(r_out))``.
        """
        u = np.asarray(u)[:, None]
        lg = np.log1p(-u)
        g = -np.expm1(self.qe * lg)
        dg = self.qe * np.exp((self.qe - 1.0) * lg)
        if self.r_in == 0.0:
            r = r_out[None, :] * g**self.q0
            dr = r_out[None, :] * self.q0 * g ** (self.q0 - 1.0) * dg
        else:
            L = np.log(r_out / self.r_in)[None, :]
            r = self.r_in * np.exp(L * g)
            dr = r * L * dg
        return r, dr

    def gaps(self, u, r_out):
        """``r_out - r`` at the nodes, free of cancellation near ``u = 1``."""
        u = np.asarray(u)[:, None]
        one_g = np.exp(self.qe * np.log1p(-u))
        if self.r_in == 0.0:
            return -r_out[None, :] * np.expm1(self.q0 * np.log1p(-one_g))
        L = np.log(r_out / self.r_in)[None, :]
        return -r_out[None, :] * np.expm1(-L * one_g)


def _sphere_roots(w_origin, od):
    """Exit distance ``ρ+`` along each ray and ``-ρ-`` for the unit sphere."""
    root = np.sqrt(od * od + w_origin)
    rp = np.where(od > 0, w_origin / (od + root), root - od)
    mneg = np.where(od < 0, w_origin / (root - od), od + root)
    return rp, mneg


def _radial_breaks(rmap: _RadialMap, r_out, radial_scale):
    if rmap.r_in == 0.0:
        br = [0.0, 1.0]
        if radial_scale is not None and radial_scale > 0:
            rmax = float(np.max(r_out))
            v = (min(radial_scale, rmax) / rmax) ** (1.0 / rmap.q0) / rmap.qe
            pts = []
            while v < 0.5:
                pts.append(v)
                v *= 4.0
            br = [0.0] + pts + [1.0]
        else:
            br = [0.0, 0.5, 1.0]
        return np.array(br)
    L = float(np.max(np.log(r_out / rmap.r_in)))
    n = int(min(24, max(2, math.ceil(L / math.log(6.0)))))
    return np.linspace(0.0, 1.0, n + 1)


def polar_integral(
    integrand,
    origin,
    r_out_fn,
    cfg: QuadConfig,
    *,
    N: int = 2,
    r_in: float = 0.0,
    gamma: float = 0.0,
    end_exponent: float | None = None,
    theta_features: Sequence = (),
    radial_scale: float | None = None,
    comp_shape: tuple = (),
    w_origin: float | None = None,
    tail_decay: float | None = None,
) -> QuadResult:
    """Integrate ``integrand`` over a star-shaped region around ``origin``.

    Parameters
    ----------
    integrand : callable
        ``integrand(points, w, r, omega)`` with ``points`` of shape
        ``(nr, nd, N)``, ``w`` and ``r`` of shape ``(nr, nd)``, ``omega`` of
        shape ``(nd, N)``. Returns values of shape ``(nr, nd, *comp_shape)``.
        The polar Jacobian ``r^{N-1}`` is applied here.
    origin : array_like
        Polar origin.
    r_out_fn : callable
        Maps directions ``(nd, N)`` to outer radii ``(nd,)``; ``inf`` means
        the rays extend to infinity (then ``tail_decay`` is required).
    r_in : float
        Inner radius (0 for a full star-shaped region).
    gamma : float
        Strength of an integrable singularity at the origin; sets the
        radial grading when ``r_in = 0``.
    end_exponent : float or None
        Endpoint behaviour ``(r_out - r)^e`` of the integrand.
    theta_features : sequence of (angle, width)
        Directions (N = 2) around which the angular panels are refined.
    radial_scale : float, optional
        Length scale of structure near the origin.
    """
    o = np.asarray(origin, dtype=float)
    if w_origin is None:
        w_origin = float(one_minus_sq(o))
    q0 = max(1.0, 2.0 / (N - gamma)) if r_in == 0.0 else 1.0
    if end_exponent is None:
        qe = 1.0
    elif end_exponent <= -1.0:
        raise ValueError("endpoint singularity is not integrable")
    else:
        qe = float(min(12, max(1, math.ceil(3.0 / (1.0 + end_exponent)))))
    rtol_in = cfg.rel_tol * 0.25
    atol_in = cfg.abs_tol * 0.05

    def radial_values(omega):
        nd = omega.shape[0]
        r_out = np.asarray(r_out_fn(omega), dtype=float)
        infinite = ~np.isfinite(r_out)
        if np.any(infinite):
            T = max(cfg.tail_radius, 2.0 * r_in if r_in > 0 else cfg.tail_radius)
            r_fin = np.where(infinite, T, r_out)
        else:
            r_fin = r_out
        res = np.zeros((nd,) + comp_shape)
        err = np.zeros((nd,) + comp_shape)
        conv = True
        n_ev = 0
        good = r_fin > r_in
        if np.any(good):
            om = omega[good]
            rf = r_fin[good]
            rmap = _RadialMap(r_in, q0, qe if not np.all(infinite[good]) else 1.0)
            od = om @ o

            if w_origin > 0:
                # w = (ρ+ - r)(r - ρ-), exact up to rounding where the ray leaves the unit sphere
                rp, mneg = _sphere_roots(w_origin, od)
                off = np.where(np.abs(rp - rf) <= 8 * np.finfo(float).eps * rp, 0.0, rp - rf)

            def fr(u):
                r, dr = rmap.nodes(u, rf)
                pts = o[None, None, :] + r[:, :, None] * om[None, :, :]
                if w_origin > 0:
                    w = (rmap.gaps(u, rf) + off[None, :]) * (r + mneg[None, :])
                else:
                    w = w_origin - r * (2.0 * od[None, :] + r)
                vals = integrand(pts, w, r, om)
                jac = dr * r ** (N - 1)
                return vals * jac.reshape(jac.shape + (1,) * len(comp_shape))

            out = adaptive_gk(fr, _radial_breaks(rmap, rf, radial_scale), abs_tol=atol_in,
                              rel_tol=rtol_in, max_intervals=cfg.max_subdivisions, vector_scale=True)
            res[good] = out.value
            err[good] = out.error
            conv &= out.converged
            n_ev += out.n_eval * om.shape[0]
        if np.any(infinite):
            if tail_decay is None or tail_decay <= 0:
                raise ValueError("infinite rays need a positive tail decay exponent")
            om = omega[infinite]
            T = r_fin[infinite][0]
            k = 1.0 / tail_decay
            od = om @ o

            def ft(u):
                one_u = 1.0 - u[:, None]
                r = T * one_u ** (-k) * np.ones((1, om.shape[0]))
                dr = T * k * one_u ** (-k - 1.0) * np.ones((1, om.shape[0]))
                pts = o[None, None, :] + r[:, :, None] * om[None, :, :]
                w = w_origin - r * (2.0 * od[None, :] + r)
                vals = integrand(pts, w, r, om)
                jac = dr * r ** (N - 1)
                return vals * jac.reshape(jac.shape + (1,) * len(comp_shape))

            out = adaptive_gk(ft, np.array([0.0, 0.5, 0.75, 1.0]), abs_tol=atol_in, rel_tol=rtol_in,
                              max_intervals=cfg.max_subdivisions, vector_scale=True)
            res[infinite] += out.value
            err[infinite] += out.error
            conv &= out.converged
            n_ev += out.n_eval * om.shape[0]
        return res, err, conv, n_ev

    if N == 2:
        state = {"conv": True, "n": 0}

        def fang(th):
            omega = np.stack([np.cos(th), np.sin(th)], axis=-1)
            v, _, c, n = radial_values(omega)
            state["conv"] &= c
            state["n"] += n
            return v

        base = 0.0
        if theta_features:
            base = float(theta_features[0][0])
        br = {0.0, 2 * np.pi}
        for k in range(1, 8):
            br.add(2 * np.pi * k / 8)
        for ang, width in theta_features:
            rel = (float(ang) - base) % (2 * np.pi)
            br.add(rel)
            wd = max(float(width), 1e-15)
            while wd < np.pi / 2:
                br.add((rel + wd) % (2 * np.pi))
                br.add((rel - wd) % (2 * np.pi))
                wd *= 4.0
        brs = np.array(sorted(br))
        brs = brs[np.concatenate([[True], np.diff(brs) > 1e-13])]
        if brs[-1] < 2 * np.pi:
            brs = np.append(brs, 2 * np.pi)
        out = adaptive_gk(lambda th: fang(th + base), brs, abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
                          max_intervals=cfg.max_subdivisions)
        return QuadResult(_as_out(out.value), float(np.max(out.error)), out.converged and state["conv"],
                          state["n"])
    if N == 3:
        prev = None
        n_tot = 0
        conv_all = True
        for n in (16, 32, 64, 128):
            dirs, wts = sphere_rule(3, n)
            v, e, c, k = radial_values(dirs)
            n_tot += k
            conv_all &= c
            val = np.tensordot(wts, v, axes=([0], [0]))
            if prev is not None:
                err = float(np.max(np.abs(val - prev)))
                if err <= max(cfg.abs_tol, cfg.rel_tol * float(np.max(np.abs(val)))):
                    return QuadResult(_as_out(val), err, conv_all, n_tot)
            prev = val
        return QuadResult(_as_out(val), err, False, n_tot)
    raise ValueError("polar_integral supports N = 2 and N = 3")


def _as_out(val):
    val = np.asarray(val)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# public integrators


def _field_integrand(f: ScalarField, mult=None):
    def g(pts, w, r, om):
        v = f(pts, w)
        if mult is not None:
            v = v * mult(pts)
        return v

    return g


def integrate_ball(f: ScalarField, center=None, radius: float = 1.0, cfg: QuadConfig | None = None,
                   *, extra_singular: Sequence[SingularPoint] = (), focus_points: Sequence = ()) -> QuadResult:
    """Integrate a field over a ball.

    Parameters
    ----------
    f : ScalarField
        Integrand. Its ``singular_points`` (plus ``extra_singular``) get
        dedicated polar frames with graded radial meshes.
    center : array_like, optional
        Ball center, default the origin.
    radius : float
        Ball radius.
    cfg : QuadConfig, optional
    focus_points : sequence of points, optional
        Points outside the ball near which the integrand peaks; angular
        panels are refined towards them.

    Returns
    -------
    QuadResult
        ``(value, err_est)`` with a convergence flag.
    """
    cfg = cfg or QuadConfig()
    N = f.N
    c = np.zeros(N) if center is None else np.asarray(center, dtype=float)
    if not radius > 0:
        raise ValueError("radius must be positive")
    if N >= 4:
        return _mc_ball(f, c, radius, cfg)
    sps = []
    for sp in tuple(f.singular_points) + tuple(extra_singular):
        p = sp.array
        d_ball = radius - np.linalg.norm(p - c)
        d_sup = f.support_radius - np.linalg.norm(p) if math.isfinite(f.support_radius) else np.inf
        if d_ball > 0 and d_sup > 0:
            sps.append((p, float(sp.strength), float(min(d_ball, d_sup))))
    return _integrate_ball_frames(_field_integrand(f), f, c, radius, sps, cfg, focus=focus_points)


def _integrate_ball_frames(base_integrand, f: ScalarField, c, radius, sps, cfg, comp_shape=(), focus=()):
    """Polar integration about the first singular point (or the center),
    with smooth cutoffs around the remaining singular points."""
    N = f.N
    frac = cfg.singular_split_radius
    pieces = []
    origin = c if not sps else sps[0][0]
    gamma0 = 0.0 if not sps else sps[0][1]
    cut = []
    for i, (p, g, dbound) in enumerate(sps[1:], start=1):
        others = [np.linalg.norm(p - q[0]) for j, q in enumerate(sps) if j != i]
        rc = frac * min([dbound] + others)
        cut.append((p, g, rc))

    def weight_out(pts):
        wgt = np.ones(pts.shape[:-1])
        for p, g, rc in cut:
            wgt = wgt * (1.0 - cutoff(np.linalg.norm(pts - p, axis=-1), rc))
        return wgt

    def main_integrand(pts, w, r, om):
        v = base_integrand(pts, w, r, om)
        if cut:
            wo = weight_out(pts)
            v = v * wo.reshape(wo.shape + (1,) * len(comp_shape))
        return v

    w0 = float(one_minus_sq(origin))
    finite_sup = math.isfinite(f.support_radius)
    sup_inside = finite_sup and (np.linalg.norm(c) + f.support_radius <= radius * (1 + 1e-14) or
                                 (f.support_radius == radius and np.allclose(c, 0)))
    origin_in_sup = finite_sup and np.linalg.norm(origin) < f.support_radius

    def r_out_fn(om):
        r = ball_exit(origin, om, c, radius,
                      h=w0 if (radius == 1.0 and np.allclose(c, 0)) else None)
        if origin_in_sup:
            hs = w0 if f.support_radius == 1.0 else None
            r = np.minimum(r, ball_exit(origin, om, None, f.support_radius, h=hs))
        return r

    dist_b = radius - np.linalg.norm(origin - c)
    if origin_in_sup:
        dist_b = min(dist_b, f.support_radius - np.linalg.norm(origin))
    feats = []
    off = origin - c
    if np.linalg.norm(off) > 0 and N == 2:
        feats += boundary_features(math.atan2(off[1], off[0]), dist_b, radius)
    if N == 2:
        for p, g, rc in cut:
            d = p - origin
            dist = np.linalg.norm(d)
            feats.append((math.atan2(d[1], d[0]), rc / dist))
        for q in focus:
            d = np.asarray(q, dtype=float) - origin
            gap = abs(np.linalg.norm(np.asarray(q, dtype=float) - c) - radius)
            feats.append((math.atan2(d[1], d[0]), max(gap, 1e-12) / np.linalg.norm(d)))
    scales = [dist_b] + [np.linalg.norm(p - origin) - rc for p, g, rc in cut]
    end_exp = f.boundary_exponent if sup_inside else None
    main = polar_integral(main_integrand, origin, r_out_fn, cfg, N=N, gamma=gamma0, end_exponent=end_exp,
                          theta_features=feats, radial_scale=min(scales), comp_shape=comp_shape, w_origin=w0)
    pieces.append(main)
    for p, g, rc in cut:
        wp = float(one_minus_sq(p))

        def loc_integrand(pts, w, r, om, _rc=rc):
            v = base_integrand(pts, w, r, om)
            ph = cutoff(r, _rc)
            return v * ph.reshape(ph.shape + (1,) * len(comp_shape))

        pieces.append(polar_integral(loc_integrand, p, lambda om, _rc=rc: np.full(om.shape[0], _rc), cfg,
                                     N=N, gamma=g, comp_shape=comp_shape, w_origin=wp))
    val = sum(np.asarray(pc.value) for pc in pieces)
    err = sum(pc.err_est for pc in pieces)
    return QuadResult(_as_out(val), float(err), all(pc.converged for pc in pieces),
                      sum(pc.n_eval for pc in pieces))


MC_BLOCK = 1 << 15


def _philox(seed: int, chunk: int):
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64, counter=[0, 0, 0, chunk]))


def _uniform_ball(gen, n, N, center, radius):
    x = gen.standard_normal((n, N))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * gen.random(n) ** (1.0 / N)
    return center + r[:, None] * x


def _ball_volume(N, radius):
    return sphere_area(N) / N * radius**N


def _mc_ball(f, c, radius, cfg):
    N = f.N
    chunk = MC_BLOCK
    total = 0.0
    total2 = 0.0
    n_done = 0
    k = 0
    while n_done < cfg.mc_samples:
        n = min(chunk, cfg.mc_samples - n_done)
        x = _uniform_ball(_philox(cfg.seed, k), n, N, c, radius)
        v = f(x)
        total += float(np.sum(v))
        total2 += float(np.sum(v * v))
        n_done += n
        k += 1
    vol = _ball_volume(N, radius)
    mean = total / n_done
    var = max(total2 / n_done - mean * mean, 0.0)
    se = vol * math.sqrt(var / n_done)
    val = vol * mean
    return QuadResult(val, se, se <= max(cfg.abs_tol, cfg.rel_tol * abs(val)), n_done)


def integrate_exterior(f: ScalarField, excluded_ball, cfg: QuadConfig | None = None) -> QuadResult:
    """Integrate a field over ``R^N`` minus a ball.

    Rays leave the excluded ball radially from its center. On fields with
    finite support the rays stop at the support boundary; otherwise the
    ray segment beyond ``cfg.tail_radius`` is mapped to ``[0, 1)`` by
    ``r = T (1 - τ)^{-1/γ}`` with ``γ = f.decay``, which integrates pure
    algebraic tails ``|z|^{-N-γ}`` with a constant integrand.
    """
    cfg = cfg or QuadConfig()
    N = f.N
    c = np.asarray(excluded_ball[0], dtype=float)
    R = float(excluded_ball[1])
    if not R > 0:
        raise ValueError("excluded radius must be positive")
    if N >= 4:
        raise ValueError("integrate_exterior supports N = 2 and N = 3")
    finite = math.isfinite(f.support_radius)
    if finite and np.linalg.norm(c) >= f.support_radius:
        raise ValueError("excluded ball center must lie inside the field support")
    if not finite and (f.decay is None or f.decay <= 0):
        raise ValueError("field with infinite support needs a positive decay exponent")
    wc = float(one_minus_sq(c))

    def r_out_fn(om):
        if finite:
            return ball_exit(c, om, None, f.support_radius, h=wc if f.support_radius == 1.0 else None)
        return np.full(om.shape[0], np.inf)

    feats = []
    if N == 2 and finite and np.linalg.norm(c) > 0:
        db = f.support_radius - np.linalg.norm(c)
        feats += boundary_features(math.atan2(c[1], c[0]), db, f.support_radius)
    if finite:
        probe = r_out_fn(sphere_rule(N, 64)[0])
        if np.all(probe <= R):
            return QuadResult(0.0, 0.0, True, 0)
    res = polar_integral(_field_integrand(f), c, r_out_fn, cfg, N=N, r_in=R,
                         end_exponent=f.boundary_exponent if finite else None, theta_features=feats,
                         w_origin=wc, tail_decay=f.decay)
    return res


def mc_integrate_pairs(g, region=None, cfg: QuadConfig | None = None, *, N: int = 2, sigma: float = 0.0):
    """Importance-sampled Monte Carlo estimate of ``∬_{B×B} g(x, y) dx dy``.

    ``x`` is uniform in the ball ``B``; given ``x``, ``y`` is drawn from an
    equal mixture of the uniform law on ``B`` and a radial law about ``x``
    with density proportional to ``|x - y|^{-sigma}`` on ``B_{2R}(x)``.
    The joint density is symmetric in ``(x, y)``, and the estimator averages
    ``g(x, y)`` and ``g(y, x)``. Samples come in fixed blocks of
    ``MC_BLOCK``; block ``k`` uses the counter-based stream ``(cfg.seed, k)``,
    so blocks can be evaluated in any order or in parallel shards.

    Parameters
    ----------
    g : callable
        ``g(x, y)`` for arrays of shape ``(n, N)``.
    region : (center, radius), optional
        Default unit ball at the origin.
    sigma : float
        Diagonal singularity strength of ``g``, ``0 <= sigma < N``.

    Returns
    -------
    (value, std_err)
    """
    cfg = cfg or QuadConfig()
    if region is None:
        region = (np.zeros(N), 1.0)
    c = np.asarray(region[0], dtype=float)
    R = float(region[1])
    if not 0.0 <= sigma < N:
        raise ValueError("sigma must lie in [0, N)")
    vol = _ball_volume(N, R)
    big = 2.0 * R
    kern_norm = (N - sigma) / (sphere_area(N) * big ** (N - sigma))
    s1 = 0.0
    s2 = 0.0
    n_done = 0
    k = 0
    while n_done < cfg.mc_samples:
        n = min(MC_BLOCK, cfg.mc_samples - n_done)
        gen = _philox(cfg.seed, k)
        x = _uniform_ball(gen, n, N, c, R)
        use_k = gen.random(n) < 0.5
        yu = _uniform_ball(gen, n, N, c, R)
        dirs = gen.standard_normal((n, N))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rk = big * gen.random(n) ** (1.0 / (N - sigma))
        yk = x + rk[:, None] * dirs
        y = np.where(use_k[:, None], yk, yu)
        d = np.linalg.norm(y - x, axis=1)
        inside = np.linalg.norm(y - c, axis=1) < R
        with np.errstate(divide="ignore"):
            qk = np.where(d < big, kern_norm * d ** (-sigma), 0.0)
        dens = (0.5 / vol + 0.5 * qk) / vol
        vals = np.zeros(n)
        if np.any(inside):
            xi, yi = x[inside], y[inside]
            gv = 0.5 * (np.asarray(g(xi, yi), dtype=float) + np.asarray(g(yi, xi), dtype=float))
            bad = ~np.isfinite(gv)
            if np.any(bad):
                j = int(np.flatnonzero(bad)[0])
                raise FloatingPointError(f"non-finite integrand at pair x={xi[j].tolist()}, y={yi[j].tolist()}")
            vals[inside] = gv / dens[inside]
        s1 += float(np.sum(vals))
        s2 += float(np.sum(vals * vals))
        n_done += n
        k += 1
    mean = s1 / n_done
    var = max(s2 / n_done - mean * mean, 0.0)
    return mean, math.sqrt(var / n_done)
