"""Numerical checks of three auxiliary integral inequalities.

* ``mvt_check``: the mean-value bound
  ``||u|^λ - |w|^λ| <= λ max(1, 2^{λ-2}) (|u-w|^{λ-1} + |u|^{λ-1}) |u-w|``.
* ``grzywny_scan``: ``I(x, y) = ∫_{B_ρ} |x-z|^{-α} |y-z|^{-β} dz`` as
  ``|x-y| -> 0``, which is bounded, logarithmic or a power
  ``|x-y|^{N-α-β}`` according to the sign of ``N - α - β``.
* ``tobias_scan``: ``J(x) = ∫_{B_1} |x-y|^{λ-N} δ(y)^{-a} dy`` as
  ``δ(x) -> 0``, which is bounded, ``|ln δ(x)|`` or ``δ(x)^{λ-a}``.

The regime is read off the data rather than assumed: successive
increments ``I_{k+1} - I_k`` along a geometric sequence of separations
scale like ``r^{e}`` with ``e > 0`` (bounded), ``e = 0`` (logarithmic) or
``e < 0`` (power), and this scaling is insensitive to the additive
constant that contaminates direct log-log fits.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .quadrature import QuadConfig, QuadResult, ball_exit, boundary_features, cutoff, polar_integral
from .records import RegimeReport

__all__ = [
    "grzywny_integral",
    "grzywny_scan",
    "tobias_integral",
    "tobias_scan",
    "mvt_ratio",
    "mvt_check",
    "classify_regime",
]

# |slope| of the increment fit below which growth counts as logarithmic
REGIME_TOL = 0.1


def grzywny_integral(alpha: float, beta: float, x, y, rho: float = 1.0, cfg: QuadConfig | None = None):
    """``∫_{B_ρ(0)} |x-z|^{-α} |y-z|^{-β} dz`` for ``N = 2`` or ``3``.

    The ball is split with a smooth cutoff of radius ``rc`` around ``y``;
    both pieces are integrated in polar frames centred at their singular
    point, with ``|z - center|`` taken from the radial variable so that
    nothing cancels near the singularities.

    Returns
    -------
    QuadResult
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    N = x.shape[0]
    if not (alpha < N and beta < N):
        raise ValueError("alpha and beta must be < N for integrability")
    if not (np.linalg.norm(x) < rho and np.linalg.norm(y) < rho):
        raise ValueError("x and y must lie inside B_rho")
    sep = float(np.linalg.norm(x - y))
    if sep == 0.0:
        raise ValueError("x and y must differ")
    rc = 0.5 * min(sep, rho - np.linalg.norm(y))
    dxy = y - x
    hx = (rho - np.linalg.norm(x)) * (rho + np.linalg.norm(x))
    hy = (rho - np.linalg.norm(y)) * (rho + np.linalg.norm(y))

    def main(pts, w, r, om):
        dy = np.linalg.norm(r[..., None] * om[None, :, :] - dxy, axis=-1)
        return r ** (-alpha) * dy ** (-beta) * (1.0 - cutoff(dy, rc))

    def local(pts, w, r, om):
        dx = np.linalg.norm(r[..., None] * om[None, :, :] + dxy, axis=-1)
        return dx ** (-alpha) * r ** (-beta) * cutoff(r, rc)

    feats = []
    if N == 2:
        ang = math.atan2(dxy[1], dxy[0])
        feats.append((ang, rc / sep))
        if np.linalg.norm(x) > 0:
            feats += boundary_features(math.atan2(x[1], x[0]), rho - np.linalg.norm(x), rho)
    a = polar_integral(main, x, lambda om: ball_exit(x, om, None, rho, h=hx), cfg, N=N, gamma=alpha,
                       theta_features=feats, radial_scale=min(sep - rc, rho - np.linalg.norm(x)))
    b = polar_integral(local, y, lambda om: np.minimum(np.full(om.shape[0], rc), ball_exit(y, om, None, rho, h=hy)),
                       cfg, N=N, gamma=beta)
    return QuadResult(a.value + b.value, a.err_est + b.err_est, a.converged and b.converged,
                      a.n_eval + b.n_eval)


def tobias_integral(lam: float, a: float, x, cfg: QuadConfig | None = None):
    """``∫_{B_1} |x-y|^{λ-N} δ(y)^{-a} dy`` with ``δ(y) = 1 - |y|``.

    Integrated in a polar frame centred at ``x`` with a graded mesh at the
    sphere; ``δ(y)`` is formed from ``1 - |y|^2`` carried along each ray.
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    N = x.shape[0]
    nx = float(np.linalg.norm(x))
    if not nx < 1.0:
        raise ValueError("x must lie in the open unit ball")
    h = (1.0 - nx) * (1.0 + nx)

    def integrand(pts, w, r, om):
        nz = np.linalg.norm(pts, axis=-1)
        dl = np.maximum(w, 0.0) / (1.0 + nz)
        with np.errstate(divide="ignore"):
            return np.where(dl > 0, r ** (lam - N) * dl ** (-a), 0.0)

    feats = boundary_features(math.atan2(x[1], x[0]), 1.0 - nx, 1.0) if N == 2 and nx > 0 else []
    return polar_integral(integrand, x, lambda om: ball_exit(x, om, None, 1.0, h=h), cfg, N=N,
                          gamma=N - lam, end_exponent=-a, theta_features=feats, radial_scale=1.0 - nx,
                          w_origin=h)


def _linfit(xs, ys):
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), min(max(r2, 0.0), 1.0)


def classify_regime(scales, values, tol: float = REGIME_TOL) -> dict:
    """Classify ``values(scale)`` as ``scale -> 0`` from its increments.

    Parameters
    ----------
    scales : array_like
        Geometric sequence of positive scales (any order).
    values : array_like
        Matching integral values.

    Returns
    -------
    dict
        ``label``, ``increment_slope`` (exponent of the increments),
        plus the two candidate fits over the window that drops the
        largest decade: ``loglog_slope``/``loglog_r2`` and
        ``loglin_slope``/``loglin_r2`` (values against ``|ln scale|``).
    """
    r = np.asarray(scales, dtype=float)
    v = np.asarray(values, dtype=float)
    order = np.argsort(-r)
    r, v = r[order], v[order]
    inc = np.abs(np.diff(v))
    rm = np.sqrt(r[:-1] * r[1:])
    ok = inc > 0
    if np.count_nonzero(ok) >= 2:
        inc_slope, _, _ = _linfit(np.log(rm[ok]), np.log(inc[ok]))
    else:
        inc_slope = math.inf
    if inc_slope > tol:
        label = "bounded"
    elif inc_slope < -tol:
        label = "power"
    else:
        label = "logarithmic"
    win = r <= r[0] / 10.0 * (1 + 1e-12)
    if np.count_nonzero(win) < 3:
        win = np.ones_like(r, dtype=bool)
    ll_slope, ll_icpt, ll_r2 = _linfit(np.log(r[win]), np.log(v[win]))
    lin_slope, lin_icpt, lin_r2 = _linfit(np.abs(np.log(r[win])), v[win])
    return {
        "label": label,
        "increment_slope": inc_slope,
        "loglog_slope": ll_slope,
        "loglog_intercept": ll_icpt,
        "loglog_r2": ll_r2,
        "loglin_slope": lin_slope,
        "loglin_intercept": lin_icpt,
        "loglin_r2": lin_r2,
        "window": [float(r[win].min()), float(r[win].max())],
    }


def _report(scales, values, errs, conv, rhs, meta) -> RegimeReport:
    cls = classify_regime(scales, values)
    label = cls["label"]
    if label == "power":
        expo, r2 = cls["loglog_slope"], cls["loglog_r2"]
    elif label == "logarithmic":
        expo, r2 = 0.0, cls["loglin_r2"]
    else:
        expo, r2 = cls["loglog_slope"], cls["loglog_r2"]
    C = float(np.max(np.asarray(values) / rhs))
    meta = dict(meta)
    meta.update(cls)
    meta.update({"scales": list(map(float, scales)), "err_est": list(map(float, errs)),
                 "converged": bool(all(conv)),
                 "max_min_ratio": float(np.max(values) / np.min(values))})
    return RegimeReport(label, float(expo), float(r2), C, meta, np.asarray(values, dtype=float))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def grzywny_scan(alpha: float, beta: float, rho: float = 1.0, separations=None, cfg: QuadConfig | None = None,
                 N: int = 2, *, threads: int = 1) -> RegimeReport:
    """Scan ``∫_{B_ρ} |x-z|^{-α}|y-z|^{-β} dz`` over separations ``|x-y|``.

    ``x = -y`` sit on the first axis. The reported ``empirical_C`` is
    ``max I / (1 + |x-y|^{N-α-β})``, or ``max I / (1 + |ln|x-y||)`` when
    ``N = α + β``.
    """
    if not (alpha < N and beta < N):
        raise ValueError("alpha and beta must be < N for integrability")
    cfg = cfg or QuadConfig(rel_tol=1e-8, abs_tol=1e-12)
    seps = np.geomspace(1e-1, 1e-4, 10) if separations is None else np.asarray(separations, dtype=float)
    if seps.size < 3 or np.any(seps <= 0) or np.any(seps >= 2 * rho):
        raise ValueError("need at least three separations in (0, 2 rho)")
    e1 = np.eye(N)[0]

    def one(sep):
        return grzywny_integral(alpha, beta, 0.5 * sep * e1, -0.5 * sep * e1, rho, cfg)

    res = _map(one, seps, threads)
    vals = np.array([q.value for q in res])
    e = N - alpha - beta
    rhs = 1.0 + (np.abs(np.log(seps)) if abs(e) < 1e-12 else seps**e)
    meta = {"lemma": "grzywny", "N": N, "alpha": alpha, "beta": beta, "rho": rho,
            "predicted_exponent": e}
    return _report(seps, vals, [q.err_est for q in res], [q.converged for q in res], rhs, meta)


def tobias_scan(lam: float, a: float, deltas=None, cfg: QuadConfig | None = None, N: int = 2,
                *, threads: int = 1) -> RegimeReport:
    """Scan ``∫_{B_1} |x-y|^{λ-N} δ(y)^{-a} dy`` over ``δ(x)``.

    ``x = (1 - δ(x)) e_1``. ``empirical_C`` is ``max J / ω(δ)`` with
    ``ω = 1``, ``1 + |ln δ|`` or ``δ^{λ-a}``.
    """
    if not (0 < lam < 1 and 0 < a < 1):
        raise ValueError("lambda and a must lie in (0, 1)")
    cfg = cfg or QuadConfig(rel_tol=1e-7, abs_tol=1e-12)
    ds = np.geomspace(1e-1, 1e-5, 13) if deltas is None else np.asarray(deltas, dtype=float)
    if ds.size < 3 or np.any(ds <= 0) or np.any(ds >= 1):
        raise ValueError("need at least three distances in (0, 1)")
    e1 = np.eye(N)[0]
    res = _map(lambda d: tobias_integral(lam, a, (1.0 - d) * e1, cfg), ds, threads)
    vals = np.array([q.value for q in res])
    if lam > a:
        rhs = np.ones_like(ds)
    elif lam == a:
        rhs = 1.0 + np.abs(np.log(ds))
    else:
        rhs = ds ** (lam - a)
    meta = {"lemma": "tobias", "N": N, "lambda": lam, "a": a, "predicted_exponent": min(lam - a, 0.0)}
    return _report(ds, vals, [q.err_est for q in res], [q.converged for q in res], rhs, meta)


def mvt_ratio(u, w, lam):
    """LHS/RHS of the mean-value bound, row-wise; 0 where both vanish."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    lam = np.broadcast_to(np.asarray(lam, dtype=float), u.shape[:1])
    nu = np.linalg.norm(u, axis=-1)
    nw = np.linalg.norm(w, axis=-1)
    d = np.linalg.norm(u - w, axis=-1)
    lhs = np.abs(nu**lam - nw**lam)
    rhs = lam * np.maximum(1.0, 2.0 ** (lam - 2.0)) * (d ** (lam - 1.0) + nu ** (lam - 1.0)) * d
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))


def mvt_check(sample_count: int = 100_000, dim: int = 2, lambda_range=(1.0, 3.0), seed: int = 20240917):
    """Randomized test of the mean-value bound.

    Draws mix generic pairs, near-coincident pairs, nearly opposite pairs
    and pairs with ``w = 0``, over magnitudes spanning ``1e-6..1e6``.

    Returns
    -------
    (passed, worst_ratio) : (bool, float)
        ``passed`` means every ratio is ``<= 1 + 1e-12``.
    """
    lo, hi = lambda_range
    if not 1.0 <= lo < hi:
        raise ValueError("lambda_range must lie in (1, inf)")
    gen = np.random.Generator(np.random.Philox(key=seed))
    n = int(sample_count)
    lam = lo + (hi - lo) * (1.0 - gen.random(n))
    scale = 10.0 ** gen.uniform(-6, 6, n)
    u = gen.standard_normal((n, dim)) * scale[:, None]
    kind = gen.integers(0, 4, n)
    w = gen.standard_normal((n, dim)) * scale[:, None]
    near = kind == 1
    w[near] = u[near] * (1 + 10.0 ** gen.uniform(-8, -1, (np.count_nonzero(near), 1)))
    opp = kind == 2
    w[opp] = -u[opp] * gen.uniform(0.5, 2.0, (np.count_nonzero(opp), 1))
    w[kind == 3] = 0.0
    ratio = mvt_ratio(u, w, lam)
    worst = float(np.max(ratio))
    return worst <= 1.0 + 1e-12, worst
