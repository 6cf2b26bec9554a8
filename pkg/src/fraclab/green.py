"""Green kernel of ``(-Δ)^s`` on a ball and checks of its pointwise bounds.

On the unit ball

    G(x, y) = κ |x-y|^{2s-N} ∫_0^{r0} r^{s-1} (1+r)^{-N/2} dr,
    r0 = (1-|x|^2)(1-|y|^2) / |x-y|^2,
    κ = Γ(N/2) / (2^{2s} π^{N/2} Γ(s)^2).

Substituting ``r = v / (1 - v)`` turns the profile integral into the
incomplete beta function ``B(w0; s, N/2 - s)`` with
``w0 = r0 / (1 + r0)``. Balls of other radii follow by scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import qmc

from .operators import OperatorRequest, complement_term, regional_frac_laplacian, riesz_gradient
from .quadrature import QuadConfig, ScalarField, SingularPoint, integrate_ball, one_minus_sq
from .records import EstimateReport, Timer
from .specfun import ln_gamma, norm_const_laplacian

__all__ = [
    "BallGeometry",
    "GreenKernel",
    "make_green",
    "green_ball",
    "green_from_d2",
    "green_grad",
    "green_profile_quad",
    "green_slice",
    "stratified_pairs",
    "kernel_bound_check",
    "green_flap_numeric",
    "green_riesz_numeric",
    "thm15_check",
    "riesz_gradient_green_check",
    "exterior_value",
    "exterior_check",
    "far_field_slope",
    "alpha_gradient_ratio",
]


@dataclass(frozen=True)
class BallGeometry:
    """A ball ``Ω = B_radius(center)`` and the enclosing radius ``R``.

    ``R = 1/3 + 4/3 (diam Ω + dist(0, Ω))``; every ``x`` with
    ``|x| >= R`` satisfies ``|x - y| >= (1 + |x|)/4`` for ``y`` in ``Ω``.
    """

    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    @property
    def N(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def is_unit(self) -> bool:
        return self.radius == 1.0 and not np.any(self.c)

    @property
    def enclosing_R(self) -> float:
        dist0 = max(0.0, float(np.linalg.norm(self.c)) - self.radius)
        return 1.0 / 3.0 + 4.0 / 3.0 * (2.0 * self.radius + dist0)

    def w(self, x) -> np.ndarray:
        """``1 - |ξ|^2`` in the unit-ball coordinates ``ξ = (x - center)/radius``."""
        return one_minus_sq((np.asarray(x, dtype=float) - self.c) / self.radius)

    def delta(self, x) -> np.ndarray:
        """Distance to the boundary, ``radius - |x - center|``, signed."""
        xi = (np.asarray(x, dtype=float) - self.c) / self.radius
        n = np.linalg.norm(xi, axis=-1)
        w = (1.0 - n) * (1.0 + n)
        return self.radius * w / (1.0 + n)


@dataclass(frozen=True)
class GreenKernel:
    """Green kernel of ``(-Δ)^s`` on ``geometry`` with constant ``normalization``."""

    geometry: BallGeometry
    s: float
    normalization: float

    @property
    def N(self) -> int:
        return self.geometry.N

    @property
    def beta_total(self) -> float:
        return math.exp(ln_gamma(self.s) + ln_gamma(self.N / 2 - self.s) - ln_gamma(self.N / 2))


def make_green(N: int = 2, s: float = 0.5, geometry: BallGeometry | None = None) -> GreenKernel:
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    geometry = geometry or BallGeometry(tuple([0.0] * N), 1.0)
    if geometry.N != N:
        raise ValueError("geometry dimension does not match N")
    kappa = math.exp(ln_gamma(N / 2) - 2 * s * math.log(2.0) - N / 2 * math.log(math.pi) - 2 * ln_gamma(s))
    return GreenKernel(geometry, s, kappa)


def _unit(k: GreenKernel, x, y, wx=None, wy=None):
    g = k.geometry
    xi = (np.asarray(x, dtype=float) - g.c) / g.radius
    eta = (np.asarray(y, dtype=float) - g.c) / g.radius
    if wx is None or not g.is_unit:
        wx = one_minus_sq(xi)
    if wy is None or not g.is_unit:
        wy = one_minus_sq(eta)
    return xi, eta, np.asarray(wx, dtype=float), np.asarray(wy, dtype=float)


def green_ball(k: GreenKernel, x, y, wx=None, wy=None):
    """``G_s(x, y)``; zero when either point is outside the open ball.

    Broadcasts over leading dimensions. ``wx``, ``wy`` optionally supply
    ``1 - |x|^2`` and ``1 - |y|^2`` (unit ball only). The formula is
    symmetric in floating point: it uses only ``|x-y|`` and ``wx * wy``.
    """
    xi, eta, wx, wy = _unit(k, x, y, wx, wy)
    d2 = np.sum((xi - eta) ** 2, axis=-1)
    out = green_from_d2(k, d2, wx, wy) * k.geometry.radius ** (2 * k.s - k.N)
    return float(out) if out.ndim == 0 else out


def green_from_d2(k: GreenKernel, d2, wx, wy):
    """Unit-ball ``G_s`` from ``|x-y|^2`` and ``1 - |x|^2``, ``1 - |y|^2``.

    Lets callers that know ``|x-y|`` exactly (polar frames centred at a
    pole) avoid forming it from nearly equal coordinates.
    """
    N, s = k.N, k.s
    d2 = np.asarray(d2, dtype=float)
    wx = np.asarray(wx, dtype=float)
    wy = np.asarray(wy, dtype=float)
    inside = (wx > 0) & (wy > 0)
    if np.any(inside & (d2 == 0)):
        raise ValueError("green_ball is singular at x = y")
    prod = np.where(inside, wx * wy, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = prod / (d2 + prod)
        val = k.normalization * d2 ** (s - N / 2) * special.betainc(s, N / 2 - s, w0) * k.beta_total
    return np.where(inside, val, 0.0)


def green_profile_quad(k: GreenKernel, x, y, cfg: QuadConfig | None = None) -> float:
    """``G_s(x, y)`` with the profile integral done by adaptive quadrature.

    Independent of :func:`green_ball`; the endpoint ``r^{s-1}`` singularity
    is removed by ``r = r0 v^{1/s}``.
    """
    from .quadrature import adaptive_gk

    cfg = cfg or QuadConfig(abs_tol=1e-14, rel_tol=1e-12)
    xi, eta, wx, wy = _unit(k, x, y)
    if wx <= 0 or wy <= 0:
        return 0.0
    N, s = k.N, k.s
    d2 = float(np.sum((xi - eta) ** 2))
    r0 = float(wx * wy) / d2

    def prof(v):
        r = r0 * v ** (1.0 / s)
        return (r0**s / s) * (1.0 + r) ** (-N / 2)

    br = [0.0, 1.0] if r0 < 10 else [0.0] + list(np.geomspace(1.0 / r0 ** s, 1.0, 8))
    out = adaptive_gk(prof, np.unique(br), abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol, max_intervals=2000)
    return k.normalization * d2 ** (s - N / 2) * float(out.value) * k.geometry.radius ** (2 * s - N)


def green_grad(k: GreenKernel, x, y, wx=None, wy=None) -> np.ndarray:
    """Analytic ``∇_x G_s(x, y)`` for interior ``x ≠ y``."""
    xi, eta, wx, wy = _unit(k, x, y, wx, wy)
    N, s = k.N, k.s
    diff = xi - eta
    d2 = np.sum(diff**2, axis=-1)
    r0 = wx * wy / d2
    w0 = wx * wy / (d2 + wx * wy)
    B = special.betainc(s, N / 2 - s, w0) * k.beta_total
    dprof = r0 ** (s - 1.0) * (1.0 + r0) ** (-N / 2)
    grad_r0 = (-2.0 * xi * wy[..., None] - 2.0 * r0[..., None] * diff) / d2[..., None]
    g = k.normalization * ((2 * s - N) * d2[..., None] ** (s - N / 2 - 1) * diff * B[..., None]
                           + d2[..., None] ** (s - N / 2) * dprof[..., None] * grad_r0)
    return g * k.geometry.radius ** (2 * s - N - 1)


def green_slice(k: GreenKernel, y) -> ScalarField:
    """The field ``z -> G_s(z, y)`` with its singularity at ``y`` declared."""
    y = np.asarray(y, dtype=float)
    wy = float(k.geometry.w(y))
    unit = k.geometry.is_unit

    def func(z, w):
        return green_ball(k, z, y, wx=w if unit else None, wy=wy if unit else None)

    return ScalarField(func=func, N=k.N, support_radius=1.0 if unit else math.inf,
                       singular_points=(SingularPoint(tuple(y), k.N - 2 * k.s),),
                       boundary_exponent=k.s, name=f"G_s(., {tuple(np.round(y, 6))})")


# ---------------------------------------------------------------------------
# sampling


def stratified_pairs(n: int, seed: int = 0, N: int = 2, delta_range=(1e-3, 1.0), sep_range=(1e-3, 1.0),
                     exterior: bool = False):
    """Quasi-random pairs ``(x, y)`` in the unit ball stratified by decade.

    Strata are the products of the decades of ``δ(x)`` and ``|x-y|``;
    each stratum draws from its own scrambled Sobol stream. Rows are
    ordered by rank within the stratum, then by stratum, so the first
    ``m`` pairs of any larger sample are the ``m`` sample.

    Returns arrays ``x``, ``y`` of shape ``(n, N)`` and the stratum labels.
    """
    d_dec = _decades(*delta_range)
    s_dec = _decades(*sep_range)
    strata = [(a, b) for a in d_dec for b in s_dec]
    per = [n // len(strata) + (1 if i < n % len(strata) else 0) for i in range(len(strata))]
    xs, ys, lab, rank = [], [], [], []
    for idx, ((dlo, dhi), (slo, shi)) in enumerate(strata):
        want = per[idx]
        if want == 0:
            continue
        eng = qmc.Sobol(d=2 * N, scramble=True, seed=np.random.default_rng([seed, idx]))
        got_x, got_y = [], []
        while sum(len(a) for a in got_x) < want:
            u = eng.random(256)
            delta = 10 ** (np.log10(dlo) + u[:, 0] * (np.log10(dhi) - np.log10(dlo)))
            sep = 10 ** (np.log10(slo) + u[:, 1] * (np.log10(shi) - np.log10(slo)))
            dx = _sphere_from_unit(u[:, 2:2 + (N - 1)], N)
            dy = _sphere_from_unit(u[:, 2 + (N - 1):2 + 2 * (N - 1)], N) if 2 + 2 * (N - 1) <= 2 * N else dx
            x = (1.0 - delta)[:, None] * dx
            y = x + sep[:, None] * dy
            ok = np.linalg.norm(y, axis=1) < 1.0 - 1e-12
            got_x.append(x[ok])
            got_y.append(y[ok])
        X = np.concatenate(got_x)[:want]
        Y = np.concatenate(got_y)[:want]
        xs.append(X)
        ys.append(Y)
        lab += [idx] * want
        rank += range(want)
    order = np.lexsort((lab, rank))
    return np.concatenate(xs)[order], np.concatenate(ys)[order], np.asarray(lab)[order]


def _decades(lo, hi):
    e = np.arange(math.floor(math.log10(lo) + 1e-9), math.ceil(math.log10(hi) - 1e-9))
    return [(10.0 ** a, 10.0 ** (a + 1)) for a in e]


def _sphere_from_unit(u, N):
    if N == 2:
        th = 2 * np.pi * u[:, 0]
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if N == 3:
        z = 2 * u[:, 0] - 1
        ph = 2 * np.pi * u[:, 1] if u.shape[1] > 1 else np.zeros_like(z)
        r = np.sqrt(1 - z * z)
        return np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=-1)
    raise ValueError("stratified_pairs supports N = 2 and N = 3")


def _doubling_change(vals):
    """Relative change of the sup between the first half and the full sample."""
    n = len(vals)
    half = np.nanmax(vals[: max(1, n // 2)])
    full = np.nanmax(vals)
    return full / half - 1.0, half, full


# ---------------------------------------------------------------------------
# kernel bounds


def kernel_bound_check(k: GreenKernel, pairs, t: float | None = None, *, fd_pairs: int = 200) -> EstimateReport:
    """Sup ratios estimating the constants of the kernel upper bound
    ``G <= C1 min{d^{2s-N}, δ(x)^s d^{s-N}, δ(y)^s d^{s-N}}`` and of the
    gradient bound ``|∇_x G| <= C2 G max{1/d, 1/δ(x)}``.

    The analytic gradient is compared with central differences on pairs
    away from the diagonal and the boundary.
    """
    tm = Timer()
    x, y = np.asarray(pairs[0], dtype=float), np.asarray(pairs[1], dtype=float)
    N, s = k.N, k.s
    G = green_ball(k, x, y)
    d = np.linalg.norm(x - y, axis=1)
    dx, dy = k.geometry.delta(x), k.geometry.delta(y)
    m1 = np.minimum(d ** (2 * s - N), np.minimum(dx**s, dy**s) * d ** (s - N))
    r1 = G / m1
    gr = np.linalg.norm(green_grad(k, x, y), axis=1)
    r2 = gr / (G * np.maximum(1.0 / d, 1.0 / dx))
    ch1, _, c1 = _doubling_change(r1)
    ch2, _, c2 = _doubling_change(r2)
    sel = np.flatnonzero((d > 0.05) & (dx > 0.05) & (dy > 0.05))[:fd_pairs]
    worst_fd = 0.0
    for i in sel:
        h = 1e-5 * min(d[i], dx[i])
        fd = np.array([(green_ball(k, x[i] + h * e, y[i]) - green_ball(k, x[i] - h * e, y[i])) / (2 * h)
                       for e in np.eye(N)])
        an = green_grad(k, x[i], y[i])
        worst_fd = max(worst_fd, float(np.linalg.norm(fd - an) / np.linalg.norm(an)))
    finite = bool(np.all(np.isfinite(r1)) and np.all(np.isfinite(r2)) and np.all(r1 >= 0))
    ok = finite and abs(ch1) <= 0.1 and abs(ch2) <= 0.1 and c2 <= 1.1 * N and worst_fd <= 1e-5
    return EstimateReport(
        "green.kernel_bounds", "Green kernel upper bound and gradient bound", "pass" if ok else "fail",
        empirical_C=float(c1), runtime_ms=tm.ms,
        details={"C1": float(c1), "C2": float(c2), "C2_limit": 1.1 * N, "doubling_change_C1": float(ch1),
                 "doubling_change_C2": float(ch2), "fd_worst_rel": worst_fd, "n_pairs": int(len(d)),
                 "fd_pairs": int(len(sel)), "t": t},
    )


# ---------------------------------------------------------------------------
# fractional derivatives of G in x


def green_flap_numeric(k: GreenKernel, t: float, x, y, cfg: QuadConfig | None = None, r_min: float = 1e-3,
                       full: bool = False):
    """``(-Δ)^{t/2}_x G_s(x, y)`` for interior ``x`` as regional + complement parts.

    The singularity of the slice at ``y`` gets a smooth cutoff of radius
    proportional to ``min(|x-y|, δ(y))`` with its own polar frame; the
    symmetrized near field around ``x`` has radius proportional to
    ``min(δ(x), |x-y|)``.
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(x - y) < r_min:
        raise ValueError(f"|x - y| below r_min = {r_min}")
    if k.geometry.delta(x) <= 0 or k.geometry.delta(y) <= 0:
        raise ValueError("x and y must lie inside the ball")
    fld = green_slice(k, y)
    dom = (k.geometry.c, k.geometry.radius)
    req = OperatorRequest(fld, t, x, cfg, domain=dom)
    reg = regional_frac_laplacian(req)
    com = complement_term(req)
    val = reg.value + com.value
    if full:
        return val, reg, com
    return val


def green_riesz_numeric(k: GreenKernel, t: float, x, y, cfg: QuadConfig | None = None, r_min: float = 1e-3):
    """``∇^t_x G_s(x, y)`` for interior ``x``."""
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(x - y) < r_min:
        raise ValueError(f"|x - y| below r_min = {r_min}")
    return riesz_gradient(OperatorRequest(green_slice(k, y), t, x, cfg)).value


def _thm15_rhs(k, t, d, dx):
    s = k.s
    return np.abs(np.log(d)) + np.abs(np.log(dx)) + d ** (t - s) * dx ** (s - t)


def _sup_check(k, t, pairs, cfg, evaluate, check_id, label, r_min):
    tm = Timer()
    x, y = np.asarray(pairs[0], dtype=float), np.asarray(pairs[1], dtype=float)
    if not k.s <= t < min(1.0, 2 * k.s):
        raise ValueError("needs s <= t < min(1, 2s)")
    N, s = k.N, k.s
    d = np.linalg.norm(x - y, axis=1)
    dx = k.geometry.delta(x)
    vals = np.empty(len(d))
    for i in range(len(d)):
        vals[i] = evaluate(k, t, x[i], y[i], cfg, r_min)
    ratio = vals * d ** (N - (2 * s - t)) / _thm15_rhs(k, t, d, dx)
    ch, half, full = _doubling_change(ratio)
    # boundary stratum trend: per δ decade sup ratios
    trend = {}
    for lo in (1e-3, 1e-2, 1e-1):
        m = (dx >= lo) & (dx < 10 * lo)
        if np.any(m):
            trend[f"{lo:g}"] = float(np.max(ratio[m]))
    tv = list(trend.values())
    flat = (max(tv) / min(tv) <= 2.0) if tv else True
    finite = bool(np.all(np.isfinite(ratio)) and np.all(ratio > 0))
    ok = finite and abs(ch) <= 0.1
    return EstimateReport(check_id, label, "pass" if ok else "fail", empirical_C=float(full), runtime_ms=tm.ms,
                          details={"t": t, "s": s, "doubling_change": float(ch), "sup_half": float(half),
                                   "n_pairs": int(len(d)), "delta_decade_sup": trend, "trend_flat_x2": bool(flat),
                                   "r_min": r_min, "min_ratio": float(np.min(ratio))})


def thm15_check(k: GreenKernel, t: float, pairs, cfg: QuadConfig | None = None, r_min: float = 1e-3):
    """Sup of ``|(-Δ)^{t/2}_x G| |x-y|^{N-(2s-t)} / (|log|x-y|| + |log δ(x)| + (|x-y|/δ(x))^{t-s})``.

    The default tolerance is ``rel_tol = 1e-4``; a sup ratio judged at the
    10% level needs only a few digits of each kernel value.
    """
    cfg = cfg or QuadConfig(rel_tol=1e-4, abs_tol=1e-7)

    def ev(k_, t_, x_, y_, c_, rm):
        return abs(green_flap_numeric(k_, t_, x_, y_, c_, rm))

    return _sup_check(k, t, pairs, cfg, ev, "green.flap_bound",
                      "pointwise bound for the t/2-Laplacian of the Green kernel", r_min)


def riesz_gradient_green_check(k: GreenKernel, t: float, pairs, cfg: QuadConfig | None = None,
                               r_min: float = 1e-3):
    """As :func:`thm15_check` for the Riesz ``t``-gradient of ``G_s(·, y)``."""
    cfg = cfg or QuadConfig(rel_tol=1e-4, abs_tol=1e-7)

    def ev(k_, t_, x_, y_, c_, rm):
        return float(np.linalg.norm(green_riesz_numeric(k_, t_, x_, y_, c_, rm)))

    return _sup_check(k, t, pairs, cfg, ev, "green.riesz_bound",
                      "pointwise bound for the Riesz t-gradient of the Green kernel", r_min)


# ---------------------------------------------------------------------------
# exterior points


def exterior_value(k: GreenKernel, t: float, x, y, cfg: QuadConfig | None = None) -> float:
    """``|(-Δ)^{t/2}_x G_s(x, y)| = a_{N,t/2} ∫_Ω G_s(z, y) |x-z|^{-N-t} dz`` for ``x ∉ Ω̄``."""
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if k.geometry.delta(x) >= 0:
        raise ValueError("x must lie outside the closed ball")
    sl = green_slice(k, y)
    N = k.N

    def func(z, w):
        return sl.func(z, w) * np.linalg.norm(z - x, axis=-1) ** (-N - t)

    fld = ScalarField(func=func, N=N, support_radius=sl.support_radius, singular_points=sl.singular_points,
                      boundary_exponent=k.s, name="exterior integrand")
    res = integrate_ball(fld, k.geometry.c, k.geometry.radius, cfg, focus_points=(x,))
    return norm_const_laplacian(N, t / 2) * res.value


def exterior_check(k: GreenKernel, t: float, samples, cfg: QuadConfig | None = None) -> EstimateReport:
    """Sup ratios of the exterior values against the near and far profiles.

    Near (``x`` in ``B_R ∖ Ω̄``): ``|x-y|^{2s-N} (|x-y|^{-t} + δ(x)^{-t})``
    with ``δ(x) = dist(x, Ω)``. Far (``|x| >= R``): ``(1+|x|)^{-N-t}``.
    Also fits the decay exponent of the value against ``log(1+|x|)``.
    """
    tm = Timer()
    cfg = cfg or QuadConfig(rel_tol=1e-7)
    ys, xs = np.asarray(samples[0], dtype=float), np.asarray(samples[1], dtype=float)
    N, s = k.N, k.s
    R = k.geometry.enclosing_R
    near, far = [], []
    for y, x in zip(ys, xs):
        v = exterior_value(k, t, x, y, cfg)
        nx = np.linalg.norm(x)
        if nx < R:
            d = np.linalg.norm(x - y)
            dist = -float(k.geometry.delta(x))
            near.append(v / (d ** (2 * s - N) * (d ** (-t) + dist ** (-t))))
        else:
            far.append(v * (1.0 + nx) ** (N + t))
    near, far = np.asarray(near), np.asarray(far)
    fit = far_field_slope(k, t, cfg=cfg)
    finite = bool(np.all(np.isfinite(np.concatenate([near, far]))) and np.all(np.concatenate([near, far]) > 0))
    ok = finite
    return EstimateReport("green.exterior", "exterior decay of the t/2-Laplacian of the Green kernel",
                          "pass" if ok else "fail",
                          empirical_C=float(max(near.max(initial=0.0), far.max(initial=0.0))), runtime_ms=tm.ms,
                          details={"C_near": float(near.max(initial=0.0)), "C_far": float(far.max(initial=0.0)),
                                   "n_near": int(near.size), "n_far": int(far.size), "R": R, **fit})


def far_field_slope(k: GreenKernel, t: float, y=None, radii=None, cfg: QuadConfig | None = None) -> dict:
    """Log-log slopes of the exterior value along a ray, ``|x|`` in ``[5, 50]``.

    Returns the slope against ``log(1+|x|)`` and, as a diagnostic, the
    slope against ``log|x|``; the predicted value is ``-(N+t)``.
    """
    cfg = cfg or QuadConfig(rel_tol=1e-8)
    N = k.N
    y = np.zeros(N) if y is None else np.asarray(y, dtype=float)
    radii = np.geomspace(5.0, 50.0, 10) if radii is None else np.asarray(radii)
    e = np.zeros(N)
    e[0] = 1.0
    vals = np.array([exterior_value(k, t, r * e, y, cfg) for r in radii])
    s1 = float(np.polyfit(np.log1p(radii), np.log(vals), 1)[0])
    s2 = float(np.polyfit(np.log(radii), np.log(vals), 1)[0])
    return {"slope_log1p": s1, "slope_log": s2, "slope_predicted": -(N + t),
            "radii": radii.tolist(), "values": vals.tolist()}


def alpha_gradient_ratio(k: GreenKernel, t: float, y, n_dirs: int = 16, n_pts: int = 400) -> float:
    """Sup over segments through ``y`` of ``|∇α_y| / (d^{t-1} + d^{t-s} δ^{s-1})``,
    ``α_y(x) = |x-y|^{N-(2s-t)} G_s(x, y)``, ``d = |x-y|``."""
    y = np.asarray(y, dtype=float)
    N, s = k.N, k.s
    q = N - (2 * s - t)
    th = (np.arange(n_dirs) + 0.5) * np.pi / n_dirs
    best = 0.0
    for a in th:
        om = np.zeros(N)
        om[0], om[1] = math.cos(a), math.sin(a)
        b = float(om @ y)
        wy = float(k.geometry.w(y))
        lo = -(wy / (math.sqrt(b * b + wy) - b)) if b < 0 else -(math.sqrt(b * b + wy) + b)
        hi = wy / (b + math.sqrt(b * b + wy)) if b > 0 else math.sqrt(b * b + wy) - b
        u = np.concatenate([np.linspace(lo, 0, n_pts + 2)[1:-1], np.linspace(0, hi, n_pts + 2)[1:-1]])
        x = y[None, :] + u[:, None] * om[None, :]
        diff = x - y
        d = np.linalg.norm(diff, axis=1)
        G = green_ball(k, x, y)
        gG = green_grad(k, x, y)
        ga = q * d[:, None] ** (q - 2) * diff * G[:, None] + d[:, None] ** q * gG
        dx = k.geometry.delta(x)
        ratio = np.linalg.norm(ga, axis=1) / (d ** (t - 1) + d ** (t - s) * dx ** (s - 1))
        best = max(best, float(np.max(ratio)))
    return best
