"""Fractional Laplacian, regional fractional Laplacian, complement term and
Riesz fractional gradient of scalar fields, normalization constants included.

All four operators share one splitting at the evaluation point ``x``:

* inside ``B_ρ(x)`` the integrand is symmetrized under ``z -> -z`` and
  integrated with a Gauss-Jacobi rule whose weight absorbs the remaining
  power of ``|z|``;
* outside ``B_ρ(x)`` the plain integrand is integrated in polar
  coordinates about ``x``, with smooth cutoffs around the field's singular
  points, each of which gets its own polar frame.

``ρ`` is a fraction of the distance from ``x`` to the nearest
non-smoothness: the support boundary, the domain boundary, or a singular
point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import (
    QuadConfig,
    ScalarField,
    adaptive_gk,
    ball_exit,
    boundary_features,
    cutoff,
    gauss_jacobi,
    one_minus_sq,
    polar_integral,
    sphere_rule,
)
from .specfun import norm_const_gradient, norm_const_laplacian, sphere_area

__all__ = [
    "OperatorRequest",
    "OpResult",
    "frac_laplacian_pv",
    "regional_frac_laplacian",
    "complement_term",
    "complement_integral",
    "riesz_gradient",
]


@dataclass(frozen=True, eq=False)
class OperatorRequest:
    """Inputs of an operator evaluation.

    Parameters
    ----------
    field : ScalarField
    order : float
        ``t`` in ``(-Δ)^{t/2}`` or ``∇^t``; must lie in ``(0, 1)``.
    eval_point : array_like
    cfg : QuadConfig
    domain : (center, radius)
        Ball used by the regional and complement variants.
    smooth_radius : float, optional
        Radius of a ball around ``eval_point`` on which the field is smooth.
        Required when ``field.interior_smooth`` is false.
    """

    field: ScalarField
    order: float
    eval_point: np.ndarray
    cfg: QuadConfig = field(default_factory=QuadConfig)
    domain: tuple = (None, 1.0)
    smooth_radius: float | None = None

    def __post_init__(self):
        if not 0.0 < self.order < 1.0:
            raise ValueError("order must lie in (0, 1)")
        x = np.asarray(self.eval_point, dtype=float)
        object.__setattr__(self, "eval_point", x)
        if x.shape != (self.field.N,):
            raise ValueError("eval_point has the wrong dimension")
        for sp in self.field.singular_points:
            if np.allclose(sp.array, x, rtol=0, atol=1e-15):
                raise ValueError("eval_point coincides with a singular point of the field")

    @property
    def domain_center(self) -> np.ndarray:
        c = self.domain[0]
        return np.zeros(self.field.N) if c is None else np.asarray(c, dtype=float)

    @property
    def domain_radius(self) -> float:
        return float(self.domain[1])


@dataclass(frozen=True)
class OpResult:
    """Operator value with quadrature diagnostics."""

    value: float | np.ndarray
    err_est: float
    converged: bool
    constant: float
    rho: float
    parts: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# geometry of the splitting


def _is_unit(c, R):
    return R == 1.0 and not np.any(c)


def _support_dist(f: ScalarField, x):
    if not math.isfinite(f.support_radius):
        return math.inf
    if f.support_radius == 1.0:
        w = float(one_minus_sq(x))
        return w / (1.0 + np.linalg.norm(x)) if w > 0 else 1.0 - np.linalg.norm(x)
    return f.support_radius - np.linalg.norm(x)


def _split_radius(req: OperatorRequest, extra_dist=math.inf) -> float:
    f, x = req.field, req.eval_point
    dists = [extra_dist]
    ds = _support_dist(f, x)
    if ds <= 0:
        raise ValueError("eval_point must lie inside the field support")
    dists.append(ds)
    for sp in f.singular_points:
        dists.append(np.linalg.norm(sp.array - x))
    if req.smooth_radius is not None:
        dists.append(req.smooth_radius / req.cfg.singular_split_radius)
    elif not f.interior_smooth:
        raise ValueError("field is not declared smooth near eval_point; pass smooth_radius")
    d = min(dists)
    if not math.isfinite(d):
        d = 1.0
    return req.cfg.singular_split_radius * d


# ---------------------------------------------------------------------------
# near field


def _near_field(f: ScalarField, x, t, rho, cfg: QuadConfig, kind: str):
    """Symmetrized integral over ``B_ρ(x)``.

    ``kind = "lap"``: ``-½ ∫ (u(x+z) + u(x-z) - 2u(x)) |z|^{-N-t} dz``.
    ``kind = "grad"``: ``½ ∫ z (u(x+z) - u(x-z)) |z|^{-N-t-1} dz``.
    """
    N = f.N
    wx = float(one_minus_sq(x))
    ux = float(f(x[None, :], np.array([wx]))[0])
    prev = None
    beta = 1.0 - t if kind == "lap" else -t
    for level, (nr, na) in enumerate(((12, 16), (24, 32), (48, 64), (96, 128))):
        v, wr = gauss_jacobi(nr, 0.0, beta)
        dirs, wa = sphere_rule(N, na)
        r = rho * v
        od = dirs @ x
        zp = x[None, None, :] + r[:, None, None] * dirs[None, :, :]
        zm = x[None, None, :] - r[:, None, None] * dirs[None, :, :]
        wp = wx - r[:, None] * (2.0 * od[None, :] + r[:, None])
        wm = wx - r[:, None] * (-2.0 * od[None, :] + r[:, None])
        up = f(zp, wp)
        um = f(zm, wm)
        if kind == "lap":
            d2 = (up + um - 2.0 * ux) / (r[:, None] ** 2)
            inner = wr @ d2
            val = -0.5 * rho ** (2.0 - t) * float(inner @ wa)
        else:
            d1 = (up - um) / r[:, None]
            inner = wr @ d1
            val = 0.5 * rho ** (1.0 - t) * ((inner * wa) @ dirs)
        if prev is not None:
            err = float(np.max(np.abs(np.asarray(val) - np.asarray(prev))))
            scale = float(np.max(np.abs(val)))
            if err <= max(cfg.abs_tol * 0.1, cfg.rel_tol * 0.1 * scale) or level == 3:
                return val, err, err <= max(cfg.abs_tol, cfg.rel_tol * scale), ux
        prev = val
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# far field


def _far_field(f: ScalarField, x, t, rho, cfg: QuadConfig, kind: str, region=None):
    """Integral over ``{|z - x| > ρ}`` within the support (or ``region``).

    ``kind = "lap"``: ``∫ u(z) |z-x|^{-N-t} dz``.
    ``kind = "reg"``: ``∫ (u(x) - u(z)) |z-x|^{-N-t} dz`` over ``region``.
    ``kind = "grad"``: ``∫ ω u(z) |z-x|^{-N-t} dz``, ``ω = (z-x)/|z-x|``.
    """
    N = f.N
    wx = float(one_minus_sq(x))
    comp = (N,) if kind == "grad" else ()
    ux = float(f(x[None, :], np.array([wx]))[0]) if kind == "reg" else 0.0
    finite = math.isfinite(f.support_radius)

    if region is not None:
        rc_, rR = region
        unit_region = _is_unit(rc_, rR)

        def exit_fn(om):
            return ball_exit(x, om, rc_, rR, h=wx if unit_region else None)

        bdist = rR - np.linalg.norm(x - rc_)
        end_exp = f.boundary_exponent if (finite and unit_region and f.support_radius == 1.0) else None
    elif finite:
        unit_sup = f.support_radius == 1.0

        def exit_fn(om):
            return ball_exit(x, om, None, f.support_radius, h=wx if unit_sup else None)

        bdist = _support_dist(f, x)
        end_exp = f.boundary_exponent
    else:
        def exit_fn(om):
            return np.full(om.shape[0], np.inf)

        bdist = math.inf
        end_exp = None

    # smooth cutoffs around singular points lying in the far region
    cuts = []
    for sp in f.singular_points:
        p = sp.array
        d = np.linalg.norm(p - x)
        dp = _support_dist(f, p)
        if region is not None:
            dp = min(dp, region[1] - np.linalg.norm(p - region[0]))
        if dp <= 0:
            continue
        rc = 0.8 * cfg.singular_split_radius * min(d, dp)
        cuts.append((p, float(sp.strength), rc))

    def kern(vals, r, om):
        if kind == "grad":
            return vals[..., None] * r[..., None] ** (-N - t) * om[None, :, :]
        return vals * r ** (-N - t)

    def values(pts, w):
        v = f(pts, w)
        return ux - v if kind == "reg" else v

    def main_integrand(pts, w, r, om):
        v = values(pts, w)
        for p, g, rc in cuts:
            v = v * (1.0 - cutoff(np.linalg.norm(pts - p, axis=-1), rc))
        return kern(v, r, om)

    feats = []
    if N == 2:
        if math.isfinite(bdist):
            cen = np.zeros(N) if region is None else region[0]
            off = x - cen
            if np.linalg.norm(off) > 0:
                R0 = f.support_radius if region is None else region[1]
                feats += boundary_features(math.atan2(off[1], off[0]), bdist, R0)
        for p, g, rc in cuts:
            d = p - x
            feats.append((math.atan2(d[1], d[0]), rc / np.linalg.norm(d)))
    tail = None
    if not finite and region is None:
        tail = t + (N + f.decay if f.decay is not None else 0.0)
    res = polar_integral(main_integrand, x, exit_fn, cfg, N=N, r_in=rho, end_exponent=end_exp,
                         theta_features=feats, comp_shape=comp, w_origin=wx, tail_decay=tail)
    val = np.asarray(res.value, dtype=float)
    err = res.err_est
    conv = res.converged
    for p, g, rc in cuts:
        wp = float(one_minus_sq(p))

        def loc(pts, w, r, om, _p=p, _rc=rc):
            v = values(pts, w) * cutoff(r, _rc)
            dz = pts - x
            dist = np.linalg.norm(dz, axis=-1)
            if kind == "grad":
                return v[..., None] * dist[..., None] ** (-N - t - 1) * dz
            return v * dist ** (-N - t)

        pc = polar_integral(loc, p, lambda om, _rc=rc: np.full(om.shape[0], _rc), cfg, N=N, gamma=g,
                            comp_shape=comp, w_origin=wp)
        val = val + np.asarray(pc.value)
        err += pc.err_est
        conv &= pc.converged
    return (float(val) if val.ndim == 0 else val), err, conv


# ---------------------------------------------------------------------------
# public operators


def frac_laplacian_pv(req: OperatorRequest) -> OpResult:
    """``(-Δ)^{t/2} u(x) = a_{N,t/2} PV ∫ (u(x) - u(y)) |x-y|^{-N-t} dy``."""
    f, x, t, cfg = req.field, req.eval_point, req.order, req.cfg
    a = norm_const_laplacian(f.N, t / 2)
    rho = _split_radius(req)
    near, e1, c1, ux = _near_field(f, x, t, rho, cfg, "lap")
    shell = ux * sphere_area(f.N) * rho ** (-t) / t
    far, e2, c2 = _far_field(f, x, t, rho, cfg, "lap")
    val = a * (near + shell - far)
    return OpResult(val, a * (e1 + e2), c1 and c2, a, rho,
                    {"near": a * near, "shell": a * shell, "far": -a * far})


def regional_frac_laplacian(req: OperatorRequest) -> OpResult:
    """``a_{N,t/2} PV ∫_Ω (u(x) - u(z)) |x-z|^{-N-t} dz`` for the domain ball ``Ω``."""
    f, x, t, cfg = req.field, req.eval_point, req.order, req.cfg
    c, R = req.domain_center, req.domain_radius
    dd = R - np.linalg.norm(x - c)
    if _is_unit(c, R):
        w = float(one_minus_sq(x))
        dd = w / (1.0 + np.linalg.norm(x)) if w > 0 else dd
    if dd <= 0:
        raise ValueError("eval_point must lie inside the domain")
    a = norm_const_laplacian(f.N, t / 2)
    rho = _split_radius(req, extra_dist=dd)
    near, e1, c1, _ = _near_field(f, x, t, rho, cfg, "lap")
    far, e2, c2 = _far_field(f, x, t, rho, cfg, "reg", region=(c, R))
    return OpResult(a * (near + far), a * (e1 + e2), c1 and c2, a, rho, {"near": a * near, "far": a * far})


def complement_integral(x, t: float, N: int = 2, cfg: QuadConfig | None = None, domain=(None, 1.0)):
    """``∫_{Ω^c} |x - z|^{-N-t} dz`` for a ball ``Ω`` and ``x`` inside it.

    Reduced to one angle about the axis through ``x``:
    ``σ_{N-2} ∫_0^π sin^{N-2}φ  r(φ)^{-t} / t  dφ`` with ``r(φ)`` the exit
    distance along the direction at angle ``φ`` from the outward axis.
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    c = np.zeros(N) if domain[0] is None else np.asarray(domain[0], dtype=float)
    R = float(domain[1])
    off = x - c
    n = np.linalg.norm(off)
    h = float(one_minus_sq(x)) if _is_unit(c, R) else (R - n) * (R + n)
    if h <= 0:
        raise ValueError("x must lie inside the domain")
    dist = h / (R + n)
    side = 2.0 if N == 2 else sphere_area(N - 1)

    def fn(phi):
        bb = n * np.cos(phi)
        root = np.sqrt(bb * bb + h)
        r = np.where(bb > 0, h / (bb + root), root - bb)
        return side * np.sin(phi) ** (N - 2) * r ** (-t) / t

    br = [0.0]
    wd = math.sqrt(dist / R)
    while wd < 1.0:
        br.append(wd)
        wd *= 4.0
    br += [1.0, 2.0, math.pi]
    out = adaptive_gk(fn, np.array(sorted(set(br))), abs_tol=cfg.abs_tol * 0.1, rel_tol=cfg.rel_tol * 0.1,
                      max_intervals=cfg.max_subdivisions)
    return float(out.value), float(out.error)


def complement_term(req: OperatorRequest) -> OpResult:
    """``a_{N,t/2} u(x) ∫_{Ω^c} |x-z|^{-N-t} dz``."""
    f, x, t = req.field, req.eval_point, req.order
    a = norm_const_laplacian(f.N, t / 2)
    ux = float(f(x[None, :])[0])
    if ux == 0.0:
        return OpResult(0.0, 0.0, True, a, 0.0)
    geo, err = complement_integral(x, t, f.N, req.cfg, req.domain)
    return OpResult(a * ux * geo, a * abs(ux) * err, True, a, 0.0, {"geometric": geo})


def riesz_gradient(req: OperatorRequest) -> OpResult:
    """``∇^t u(x) = μ_{N,t} ∫ (x-y)(u(x) - u(y)) |x-y|^{-N-t-1} dy``."""
    f, x, t, cfg = req.field, req.eval_point, req.order, req.cfg
    mu = norm_const_gradient(f.N, t)
    rho = _split_radius(req)
    near, e1, c1, _ = _near_field(f, x, t, rho, cfg, "grad")
    far, e2, c2 = _far_field(f, x, t, rho, cfg, "grad")
    val = mu * (np.asarray(near) + np.asarray(far))
    return OpResult(val, mu * (e1 + e2), c1 and c2, mu, rho, {"near": mu * near, "far": mu * far})
