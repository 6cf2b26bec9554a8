"""The solution map ``u = G_s[f]``, norm scans over dyadic boundary shells,
threshold detection, and the exponent bookkeeping of the regularity theory.

Divergence of a boundary-singular norm is diagnosed from the per-shell
contributions ``c_k = ∫_{δ ∈ [2^{-k-1}, 2^{-k}]} |F|^p``: geometric decay
of ``c_k`` in ``k`` means the norm converges, a flat or growing tail means
it diverges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .green import GreenKernel, green_flap_numeric, green_from_d2, green_slice
from .operators import OperatorRequest, complement_integral, frac_laplacian_pv
from .quadrature import (
    QuadConfig,
    ScalarField,
    SingularPoint,
    _RadialMap,
    ball_exit,
    boundary_features,
    integrate_ball,
    mc_integrate_pairs,
    one_minus_sq,
    polar_integral,
    sphere_rule,
)
from .records import EstimateReport, Timer
from .specfun import FracParams, riesz_potential_const, sphere_area

__all__ = [
    "RegularityExponents",
    "NormEntry",
    "NormScan",
    "exponents",
    "f_beta",
    "smooth_bump",
    "solve_green",
    "flap_field",
    "flap_solution",
    "FlapResult",
    "shell_table",
    "lp_norm",
    "weak_lp",
    "norm_scan",
    "threshold_detect",
    "weighted_field",
    "weighted_norms",
    "hardy_norms",
    "g_functions",
    "lemma51_check",
    "gagliardo_seminorm",
    "delta_of",
]


# ---------------------------------------------------------------------------
# exponents


@dataclass(frozen=True)
class RegularityExponents:
    """Summability thresholds for data ``f ∈ L^m``.

    ``*_open`` flags mark thresholds that are not attained (the admissible
    range is ``[1, value)``); ``inf`` with ``open`` false means ``p = ∞`` is
    admissible.
    """

    m_star: float
    p_star: float
    r_of_m: float
    r_open: bool
    q_of_m: float
    q_open: bool
    thm14_p_threshold: float
    thm14_q_threshold: float
    thm14_open: bool
    high_integrability: bool
    m: float
    N: int
    s: float
    t: float


def _ratio_or_inf(num, den):
    return num / den if den > 0 else math.inf


def exponents(params: FracParams, t: float | None = None) -> RegularityExponents:
    """Fill every threshold for ``(N, s, t, m)``.

    ``p_star`` is the exponent of the low-integrability estimate,
    ``r_of_m``/``q_of_m`` the tables for ``u`` and ``u/δ^s``, and the
    ``thm14`` pair the thresholds of ``|log δ|^{-1}(-Δ)^{s/2}u`` and
    ``δ^{t-s}(-Δ)^{t/2}u``.
    """
    N, s, m, eps = params.N, params.s, params.m, params.eps_star
    t = params.t if t is None else t
    if m < 1:
        raise ValueError("m must be >= 1")
    if not s <= t < min(1.0, 2 * s):
        raise ValueError("needs s <= t < min(1, 2s)")
    m_star = max(1.0, N / (N + s - N * (t - s)) + eps)
    if math.isinf(m):
        p_star = math.inf if t == s else 1.0 / (t - s)
    elif t == s:
        p_star = _ratio_or_inf(m * N, N - m * s)
    else:
        p_star = min(_ratio_or_inf(m * N, N - m * s + m * N * (t - s)), 1.0 / (t - s))

    def table(order):
        crit = N / order
        if m > crit:
            return math.inf, False
        if m == crit:
            return math.inf, True
        if m == 1:
            return N / (N - order), True
        return m * N / (N - m * order), False

    r, r_open = table(2 * s)
    q, q_open = table(s)
    a = 2 * s - t
    crit = N / a
    if m > crit:
        p14, q14, open14 = math.inf, math.inf, False
    elif m == crit:
        p14, q14, open14 = math.inf, math.inf, True
    else:
        p14 = _ratio_or_inf(m * N, N - m * s)
        q14 = m * N / (N - m * a)
        open14 = True
    return RegularityExponents(m_star, p_star, r, r_open, q, q_open, p14, q14, open14, m > crit, m, N, s, t)


# ---------------------------------------------------------------------------
# data families


def delta_of(points, w=None):
    """Distance to the unit sphere, ``(1 - |x|^2)/(1 + |x|)``."""
    pts = np.asarray(points, dtype=float)
    w = one_minus_sq(pts) if w is None else np.asarray(w, dtype=float)
    return w / (1.0 + np.linalg.norm(pts, axis=-1))


def _delta_from_w(w):
    return w / (1.0 + np.sqrt(np.maximum(1.0 - w, 0.0)))


def f_beta(beta: float, N: int = 2) -> ScalarField:
    """``(1 - |y|)^{-β}`` on the unit ball; in ``L^m`` iff ``β m < 1``."""
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    return ScalarField.from_profile(lambda w: _delta_from_w(w) ** (-beta), N=N, boundary_exponent=-beta,
                                    name=f"f_beta({beta:g})")


def smooth_bump(N: int = 2, radius: float = 0.9, height: float = 1.0) -> ScalarField:
    """``height * exp(1 - 1/(1 - |y|^2/radius^2))`` inside ``B_radius``, else 0."""

    def prof(w):
        q = (1.0 - w) / radius**2
        out = np.zeros_like(q)
        m = q < 1.0
        out[m] = height * np.exp(1.0 - 1.0 / (1.0 - q[m]))
        return out

    return ScalarField.from_profile(prof, N=N, boundary_exponent=0.0, name="bump")


# ---------------------------------------------------------------------------
# solution map


def _u_boundary_exponent(f: ScalarField, s: float) -> float:
    b = f.boundary_exponent
    if b is None:
        return s
    return min(s, 2 * s + b)


def _solve_point(f, k, x, cfg):
    if not f.singular_points and k.geometry.is_unit:
        return _solve_point_polar(f, k, x, cfg)
    sl = green_slice(k, x)
    sps = tuple(f.singular_points) + sl.singular_points

    def func(z, w):
        return sl.func(z, w) * f(z, w)

    fld = ScalarField(func=func, N=f.N, support_radius=1.0, singular_points=sps,
                      boundary_exponent=k.s + (f.boundary_exponent or 0.0))
    res = integrate_ball(fld, None, 1.0, cfg)
    return res


def _solve_point_polar(f, k, x, cfg):
    # polar frame at the pole x: |x - y| is the radial variable itself
    x = np.asarray(x, dtype=float)
    N = k.N
    nx = float(np.linalg.norm(x))
    wx = (1.0 - nx) * (1.0 + nx)

    def integrand(pts, w, r, om):
        return green_from_d2(k, r * r, wx, w) * f(pts, w)

    feats = boundary_features(math.atan2(x[1], x[0]), 1.0 - nx, 1.0) if N == 2 and nx > 0 else []
    return polar_integral(integrand, x, lambda om: ball_exit(x, om, None, 1.0, h=wx), cfg, N=N,
                          gamma=N - 2 * k.s, end_exponent=k.s + (f.boundary_exponent or 0.0),
                          theta_features=feats, radial_scale=1.0 - nx, w_origin=wx)


@lru_cache(maxsize=32)
def _radial_solution(f: ScalarField, k: GreenKernel, cfg: QuadConfig, per_decade: int, delta_min: float):
    N, s = k.N, k.s
    e = _u_boundary_exponent(f, s)
    deltas = np.concatenate([np.geomspace(delta_min, 0.5, int(per_decade * math.log10(0.5 / delta_min)) + 1),
                             1.0 - np.linspace(0.5, 0.0, 21)[1:]])
    vals = np.empty(deltas.size)
    conv = True
    for i, d in enumerate(deltas):
        x = np.zeros(N)
        x[0] = 1.0 - d
        res = _solve_point(f, k, x, cfg)
        vals[i] = res.value
        conv &= res.converged
    v = np.log(deltas)
    q = vals * deltas ** (-e)
    spline = CubicSpline(v, q, bc_type=("natural", (1, -e * q[-1])))
    return spline, e, deltas, vals, conv


def solve_green(f: ScalarField, k: GreenKernel, cfg: QuadConfig | None = None, *, per_decade: int = 16,
                delta_min: float = 1e-13, return_info: bool = False):
    """The field ``x -> ∫_{B_1} G_s(x, y) f(y) dy``.

    Radial data are solved at nodes log-spaced in ``δ`` down to
    ``delta_min`` and interpolated by a cubic spline of ``u δ^{-e}`` in
    ``log δ``, with ``e`` the boundary exponent of ``u``; solutions are
    memoized per ``(f, k, cfg)``. Other data are solved pointwise with a
    cache keyed by the point coordinates.

    With ``return_info`` the result is ``(field, info)``; ``info`` holds
    the node distances, node values and the convergence flag of the
    radial solve (empty for pointwise solves).
    """
    cfg = cfg or QuadConfig(rel_tol=1e-9, abs_tol=1e-13)
    if f.N != k.N:
        raise ValueError("dimension mismatch")
    s = k.s
    e = _u_boundary_exponent(f, s)
    if f.radial and k.geometry.is_unit:
        spline, e, deltas, vals, conv = _radial_solution(f, k, cfg, per_decade, delta_min)
        vmin = math.log(deltas[0])

        def func(p, w):
            d = _delta_from_w(w)
            out = np.zeros(np.shape(w))
            m = w > 0
            if np.any(m):
                dm = d[m]
                vv = np.clip(np.log(dm), vmin, 0.0)
                out[m] = spline(vv) * dm**e
            return out

        fld = ScalarField(func=func, N=f.N, support_radius=1.0, boundary_exponent=e, radial=True,
                          name=f"G_s[{f.name}]")
        if return_info:
            return fld, {"converged": bool(conv), "deltas": deltas, "values": vals, "boundary_exponent": e}
        return fld
    cache: dict = {}

    def func_pt(p, w):
        flat = np.asarray(p, dtype=float).reshape(-1, f.N)
        wf = np.asarray(w, dtype=float).reshape(-1)
        out = np.zeros(flat.shape[0])
        for i in range(flat.shape[0]):
            if wf[i] <= 0:
                continue
            key = tuple(flat[i])
            if key not in cache:
                cache[key] = _solve_point(f, k, flat[i], cfg).value
            out[i] = cache[key]
        return out.reshape(np.shape(w))

    fld = ScalarField(func=func_pt, N=f.N, support_radius=1.0, boundary_exponent=e, name=f"G_s[{f.name}]")
    return (fld, {}) if return_info else fld


def flap_field(u: ScalarField, t: float, cfg: QuadConfig | None = None) -> ScalarField:
    """Pointwise ``(-Δ)^{t/2} u`` inside the unit ball via the operator path."""
    cfg = cfg or QuadConfig()

    def func(p, w):
        flat = np.asarray(p, dtype=float).reshape(-1, u.N)
        wf = np.asarray(w, dtype=float).reshape(-1)
        out = np.zeros(flat.shape[0])
        for i in range(flat.shape[0]):
            if wf[i] > 0:
                out[i] = frac_laplacian_pv(OperatorRequest(u, t, flat[i], cfg)).value
        return out.reshape(np.shape(w))

    e = u.boundary_exponent if u.boundary_exponent is not None else 0.0
    return ScalarField(func=func, N=u.N, support_radius=1.0, boundary_exponent=min(0.0, e - t),
                       radial=u.radial, name=f"flap_{t:g}[{u.name}]")


@dataclass(frozen=True)
class FlapResult:
    value: float
    operator_value: float | None
    kernel_value: float | None
    discrepancy: float | None


def _kernel_path(f, k, t, x, cfg, r_min, n_theta, n_r):
    N, s = k.N, k.s
    if N != 2:
        raise ValueError("the kernel path is implemented for N = 2")
    wx = float(one_minus_sq(x))
    fx = float(f(x[None, :], np.array([wx]))[0])
    inner = fx * riesz_potential_const(N, s - t / 2) * sphere_area(N) * r_min ** (2 * s - t) / (2 * s - t)
    e_end = k.s + (f.boundary_exponent or 0.0)
    qe = float(min(12, max(1, math.ceil(3.0 / (1.0 + e_end)))))
    rmap = _RadialMap(r_min, 1.0, qe)
    ug, wg = np.polynomial.legendre.leggauss(n_r)
    ug = 0.5 * (ug + 1.0)
    wg = 0.5 * wg
    th = (np.arange(n_theta) + 0.5) * 2 * np.pi / n_theta
    om = np.stack([np.cos(th), np.sin(th)], axis=-1)
    bb = om @ x
    root = np.sqrt(bb * bb + wx)
    r_out = np.where(bb > 0, wx / (bb + root), root - bb)
    r, dr = rmap.nodes(ug, r_out)
    total = 0.0
    for j in range(n_theta):
        for i in range(n_r):
            y = x + r[i, j] * om[j]
            wy = wx - r[i, j] * (2 * bb[j] + r[i, j])
            if wy <= 0:
                continue
            fy = float(f(y[None, :], np.array([wy]))[0])
            if fy == 0.0:
                continue
            kt = green_flap_numeric(k, t, x, y, cfg, r_min=0.5 * r_min)
            total += wg[i] * dr[i, j] * r[i, j] * kt * fy * (2 * np.pi / n_theta)
    return total + inner


def flap_solution(f: ScalarField, k: GreenKernel, t: float, x, cfg: QuadConfig | None = None, *,
                  path: str = "operator", r_min: float = 1e-3, n_theta: int = 24, n_r: int = 24) -> FlapResult:
    """``(-Δ)^{t/2} u(x)`` for ``u = G_s[f]``.

    ``path="operator"`` applies the principal-value operator to
    :func:`solve_green`'s field. ``path="kernel"`` integrates
    ``(-Δ)^{t/2}_x G_s(x, y) f(y)`` over ``y`` with a polar product rule
    about ``x``, excluding ``B_{r_min}(x)``; the excluded ball contributes
    ``f(x) c_{N,s-t/2} σ r_min^{2s-t}/(2s-t)`` from the leading Riesz
    singularity of the kernel. ``path="both"`` returns both and their
    relative discrepancy.
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    if delta_of(x) <= 0:
        raise ValueError("x must lie inside the unit ball")
    op = ker = None
    if path in ("operator", "both"):
        u = solve_green(f, k)
        op = frac_laplacian_pv(OperatorRequest(u, t, x, cfg)).value
    if path in ("kernel", "both"):
        kcfg = QuadConfig(rel_tol=max(cfg.rel_tol, 1e-6), abs_tol=max(cfg.abs_tol, 1e-9))
        ker = _kernel_path(f, k, t, x, kcfg, r_min, n_theta, n_r)
    if path not in ("operator", "kernel", "both"):
        raise ValueError("path must be 'operator', 'kernel' or 'both'")
    disc = None
    if op is not None and ker is not None:
        disc = abs(op - ker) / max(abs(op), 1e-300)
    return FlapResult(op if op is not None else ker, op, ker, disc)


# ---------------------------------------------------------------------------
# shells and norms


@dataclass
class ShellTable:
    """Quadrature nodes of dyadic boundary shells with field magnitudes.

    ``values[k]`` and ``weights[k]`` hold ``|F|`` and the volume weights of
    shell ``k`` (``δ ∈ [2^{-k-1}, 2^{-k}]``); shell 0 is the inner ball
    ``|x| <= 1/2``. For exterior tables ``δ`` is the distance outside.
    """

    values: list
    weights: list
    deltas: list
    exterior: bool = False

    @property
    def K(self) -> int:
        return len(self.values)


def _gl(n):
    u, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (u + 1.0), 0.5 * w


def shell_table(F: ScalarField, K: int = 40, *, n_gl: int = 6, n_ang: int = 32, exterior: bool = False) -> ShellTable:
    """Evaluate ``|F|`` on Gauss nodes of ``K`` dyadic shells.

    Radial fields are sampled on the first coordinate axis only; other
    fields use ``n_ang`` directions (N = 2) or a product sphere rule.
    Nodes are Gauss-Legendre in ``log δ`` within each shell.
    """
    N = F.N
    if F.radial:
        dirs = np.zeros((1, N))
        dirs[0, 0] = 1.0
        aw = np.array([sphere_area(N)])
    else:
        dirs, aw = sphere_rule(N, n_ang)
    u, wu = _gl(n_gl)
    vals, wts, dls = [], [], []
    for k in range(K):
        lo, hi = 2.0 ** (-k - 1), 2.0 ** (-k)
        d = np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo)))
        jd = d * (np.log(hi) - np.log(lo)) * wu
        if exterior:
            r = 1.0 + d
            w = -d * (2.0 + d)
        else:
            r = 1.0 - d
            w = d * (2.0 - d)
        if k == 0 and not exterior:
            # inner ball |x| <= 1/2 in the radial variable
            rr, wr = _gl(n_gl)
            r = 0.5 * rr
            jd = 0.5 * wr
            w = (1.0 - r) * (1.0 + r)
            d = 1.0 - r
        pts = r[:, None, None] * dirs[None, :, :]
        ww = np.broadcast_to(w[:, None], (r.size, dirs.shape[0]))
        fv = np.abs(F(pts, ww))
        vw = (jd * r ** (N - 1))[:, None] * aw[None, :]
        vals.append(fv.ravel())
        wts.append(vw.ravel())
        dls.append(np.repeat(d, dirs.shape[0]))
    return ShellTable(vals, wts, dls, exterior)


@dataclass
class NormEntry:
    p: float
    norm_estimate: float
    converged: bool
    shell_contributions: np.ndarray
    slope: float
    weak_norm: float | None = None


@dataclass
class NormScan:
    """Norm estimates over an exponent grid with shell diagnostics."""

    exponent_grid: np.ndarray
    norms: list
    detected_threshold: float | None
    shells: list
    label: str = ""
    predicted_threshold: float | None = None

    def entry(self, p) -> NormEntry:
        for e in self.norms:
            if abs(e.p - p) < 1e-12:
                return e
        raise KeyError(p)

    def rows(self):
        """Long-format rows ``(p, norm_estimate, converged, shell_k, shell_contribution)``."""
        out = []
        for e in self.norms:
            for kk, c in enumerate(e.shell_contributions):
                out.append((e.p, e.norm_estimate, e.converged, kk, float(c)))
        return out


def _tail_slope(c, window):
    k = np.arange(c.size)
    sel = slice(max(1, c.size - window), c.size)
    y = np.log2(np.maximum(c[sel], 1e-300))
    if np.all(c[sel] == 0):
        return -math.inf
    return float(np.polyfit(k[sel], y, 1)[0])


def _entry_from_table(tab: ShellTable, p: float, window: int, eta: float) -> NormEntry:
    if math.isinf(p):
        # bounded iff the shell maxima stop growing: relative rise over the window
        sups = np.array([np.max(v) if v.size else 0.0 for v in tab.values])
        kk = np.arange(sups.size)[-window:]
        rise = float(np.polyfit(kk, sups[-window:], 1)[0]) * window / max(float(sups[-1]), 1e-300)
        return NormEntry(p, float(np.max(sups)), bool(rise < 0.01), sups, rise)
    c = np.array([float(np.sum(w * v**p)) for v, w in zip(tab.values, tab.weights)])
    slope = _tail_slope(c, window)
    conv = slope < -eta
    total = float(np.sum(c))
    if conv and c[-1] > 0 and math.isfinite(slope):
        # geometric tail estimate beyond the last shell
        ratio = 2.0**slope
        total += c[-1] * ratio / (1.0 - ratio)
    return NormEntry(p, total ** (1.0 / p), bool(conv), c, slope, weak_lp(tab, p))


def weak_lp(tab: ShellTable, p: float) -> float:
    """``sup_λ λ^p |{|F| >= λ}|`` from the shell samples, as ``[F]_{M^p}``."""
    v = np.concatenate(tab.values)
    w = np.concatenate(tab.weights)
    order = np.argsort(-v, kind="stable")
    mu = np.cumsum(w[order])
    return float(np.max(v[order] ** p * mu))


def norm_scan(F: ScalarField, p_grid, *, K: int = 40, window: int = 8, eta: float = 0.02, label: str = "",
              predicted: float | None = None, table: ShellTable | None = None, exterior: bool = False) -> NormScan:
    """``L^p`` norms of ``F`` over the unit ball (or the exterior shells)
    for every ``p`` in ``p_grid``, with detected threshold."""
    grid = np.asarray(sorted(float(p) for p in p_grid))
    if grid.size == 0:
        raise ValueError("empty exponent grid")
    if np.any(grid < 1):
        raise ValueError("exponents must be >= 1")
    tab = table or shell_table(F, K, exterior=exterior)
    entries = [_entry_from_table(tab, p, window, eta) for p in grid]
    shells = [(kk, 2.0 ** (-kk - 1), 2.0 ** (-kk)) for kk in range(tab.K)]
    scan = NormScan(grid, entries, None, shells, label, predicted)
    scan.detected_threshold = threshold_detect(scan) if tab.K >= 4 else None
    return scan


def threshold_detect(scan: NormScan):
    """Smallest grid exponent from which every larger exponent diverges.

    Returns ``None`` when all exponents converge or all diverge.
    """
    if len(scan.shells) < 4:
        raise ValueError("threshold detection needs at least 4 shells")
    conv = [e.converged for e in scan.norms]
    if all(conv) or not any(conv):
        return None
    last_conv = max(i for i, c in enumerate(conv) if c)
    if last_conv + 1 >= len(conv):
        return None
    return float(scan.norms[last_conv + 1].p)


def lp_norm(F: ScalarField, p: float, region="ball", cfg: QuadConfig | None = None, *, K: int = 40,
            window: int = 8, eta: float = 0.02) -> NormEntry:
    """``‖F‖_{L^p}`` over the unit ball (``"ball"``), the exterior ring
    ``1 < |x| < 2`` (``"exterior"``), or a single shell ``("shell", k)``.

    The returned entry carries per-shell contributions, the fitted tail
    slope of ``log2 c_k``, the convergence verdict and ``[F]_{M^p}``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if region == "ball":
        tab = shell_table(F, K)
    elif region == "exterior":
        tab = shell_table(F, K, exterior=True)
    elif isinstance(region, tuple) and region[0] == "shell":
        full = shell_table(F, int(region[1]) + 1)
        kk = int(region[1])
        tab = ShellTable([full.values[kk]], [full.weights[kk]], [full.deltas[kk]])
        c = float(np.sum(tab.weights[0] * tab.values[0] ** p)) if math.isfinite(p) else float(np.max(tab.values[0]))
        return NormEntry(p, c ** (1.0 / p) if math.isfinite(p) else c, True, np.array([c]), float("nan"))
    else:
        raise ValueError("region must be 'ball', 'exterior' or ('shell', k)")
    return _entry_from_table(tab, p, window, eta)


def weighted_field(F: ScalarField, weight) -> ScalarField:
    def func(p, w):
        return F(p, w) * weight(delta_of(p, w))

    return ScalarField(func=func, N=F.N, support_radius=1.0, radial=F.radial, name=f"weighted[{F.name}]")


def weighted_norms(f: ScalarField, k: GreenKernel, t: float, p_grid, q_grid, cfg: QuadConfig | None = None, *,
                   m: float | None = None, K: int = 40, F_s: ScalarField | None = None,
                   F_t: ScalarField | None = None):
    """Scans of ``‖(1+|log δ|)^{-1}(-Δ)^{s/2}u‖_p`` and ``‖δ^{t-s}(-Δ)^{t/2}u‖_q``.

    The logarithmic weight is taken as ``(1 + |log δ|)^{-1}`` so that it
    stays finite at the center of the ball, where ``δ = 1``.
    Returns ``(scan_p, scan_q)`` with predicted thresholds attached when
    ``m`` is given.
    """
    cfg = cfg or QuadConfig()
    s = k.s
    if F_s is None or F_t is None:
        u = solve_green(f, k)
        F_s = F_s or flap_field(u, s, cfg)
        F_t = F_t or flap_field(u, t, cfg)
    pred_p = pred_q = None
    if m is not None:
        ex = exponents(FracParams(N=k.N, s=s, t=t, m=m), t)
        pred_p, pred_q = ex.thm14_p_threshold, ex.thm14_q_threshold
    Wp = weighted_field(F_s, lambda d: 1.0 / (1.0 + np.abs(np.log(d))))
    Wq = weighted_field(F_t, lambda d: d ** (t - s))
    sp = norm_scan(Wp, p_grid, K=K, label="log-weighted s-Laplacian", predicted=pred_p)
    sq = norm_scan(Wq, q_grid, K=K, label="distance-weighted t-Laplacian", predicted=pred_q)
    return sp, sq


def hardy_norms(f: ScalarField, k: GreenKernel, cfg: QuadConfig | None = None, *, r_grid=None, q_grid=None,
                m: float | None = None, K: int = 40, u: ScalarField | None = None):
    """Scans of ``‖u‖_{L^r}`` and ``‖u/δ^s‖_{L^q}``."""
    s = k.s
    r_grid = np.arange(1.0, 12.0001, 0.25) if r_grid is None else r_grid
    q_grid = np.arange(1.0, 12.0001, 0.25) if q_grid is None else q_grid
    u = u or solve_green(f, k, cfg)
    pr = pq = None
    if m is not None:
        ex = exponents(FracParams(N=k.N, s=s, t=s, m=m), s)
        pr, pq = ex.r_of_m, ex.q_of_m
    su = norm_scan(u, r_grid, K=K, label="u", predicted=pr)
    sh = norm_scan(weighted_field(u, lambda d: d ** (-s)), q_grid, K=K, label="u/delta^s", predicted=pq)
    return su, sh


# ---------------------------------------------------------------------------
# pointwise majorants


def g_functions(f: ScalarField, x, t: float, cfg: QuadConfig | None = None, *, s: float):
    """``(g1, g2, g3)`` at ``x``:
    ``g1 = ∫ |log|x-y|| |x-y|^{-(N-(2s-t))} |f(y)| dy``,
    ``g2 = ∫ |x-y|^{-(N-(2s-t))} |f(y)| dy``,
    ``g3 = ∫ |x-y|^{-(N-s)} |f(y)| dy``.
    """
    cfg = cfg or QuadConfig()
    x = np.asarray(x, dtype=float)
    N = f.N
    a2 = N - (2 * s - t)
    a3 = N - s

    def mk(fn, strength):
        def func(z, w):
            d = np.linalg.norm(z - x, axis=-1)
            with np.errstate(divide="ignore"):
                return np.abs(f(z, w)) * fn(d)

        sp2 = tuple(f.singular_points) + (SingularPoint(tuple(x), strength),)
        return ScalarField(func=func, N=N, support_radius=f.support_radius, singular_points=sp2,
                           boundary_exponent=f.boundary_exponent)

    g1 = integrate_ball(mk(lambda d: np.abs(np.log(d)) * d ** (-a2), a2 + 0.05), None, 1.0, cfg).value
    g2 = integrate_ball(mk(lambda d: d ** (-a2), a2), None, 1.0, cfg).value
    g3 = integrate_ball(mk(lambda d: d ** (-a3), a3), None, 1.0, cfg).value
    return g1, g2, g3


def lemma51_check(f: ScalarField, k: GreenKernel, t: float, points, cfg: QuadConfig | None = None,
                  F: ScalarField | None = None) -> EstimateReport:
    """Sup ratio of ``|(-Δ)^{t/2}u(x)|`` over ``g1 + |log δ| g2 + δ^{s-t} g3``."""
    tm = Timer()
    cfg = cfg or QuadConfig(rel_tol=1e-7)
    s = k.s
    F = F or flap_field(solve_green(f, k), t, cfg)
    pts = np.asarray(points, dtype=float)
    ratios = []
    for x in pts:
        g1, g2, g3 = g_functions(f, x, t, cfg, s=s)
        d = float(delta_of(x))
        rhs = g1 + abs(math.log(d)) * g2 + d ** (s - t) * g3
        ratios.append(abs(float(F(x[None, :])[0])) / rhs)
    ratios = np.asarray(ratios)
    n = len(ratios)
    half = ratios[: max(1, n // 2)].max()
    ch = ratios.max() / half - 1.0
    ok = bool(np.all(np.isfinite(ratios)) and abs(ch) <= 0.1)
    return EstimateReport("poisson.pointwise_majorant", "pointwise majorant of the t/2-Laplacian by g-functions",
                          "pass" if ok else "fail", empirical_C=float(ratios.max()), runtime_ms=tm.ms,
                          details={"doubling_change": float(ch), "n_points": n})


# ---------------------------------------------------------------------------
# Gagliardo seminorm


@lru_cache(maxsize=16)
def _complement_table(N: int, tau: float):
    d = np.concatenate([np.geomspace(1e-12, 0.5, 140), 1.0 - np.linspace(0.5, 0.0, 21)[1:]])
    vals = np.empty(d.size)
    for i, dd in enumerate(d):
        x = np.zeros(N)
        x[0] = 1.0 - dd
        vals[i] = complement_integral(x, tau, N)[0]
    q = vals * d**tau
    return CubicSpline(np.log(d), q, bc_type=("natural", (1, -tau * q[-1]))), math.log(d[0])


def gagliardo_seminorm(u: ScalarField, gamma: float, p: float, cfg: QuadConfig | None = None, *,
                       return_parts: bool = False):
    """``[u]^p_{W^{γ,p}(R^N)} = ∬ |u(x) - u(y)|^p |x-y|^{-N-γp} dx dy``
    for a field supported in the unit ball.

    The pairs in ``B_1 × B_1`` are sampled by Monte Carlo with the diagonal
    importance density; pairs with one point outside the ball reduce to
    ``2 ∫_{B_1} |u(x)|^p E(x) dx`` with ``E(x) = ∫_{B_1^c} |x-y|^{-N-γp} dy``,
    a function of ``|x|`` tabulated once and integrated deterministically.
    That term is infinite when ``b p - γ p <= -1`` for the boundary
    exponent ``b`` of ``u``, unless ``u`` vanishes near the sphere.
    Returns the ``p``-th root; with ``return_parts`` also
    ``(inner, inner_std_err, cross)``.
    """
    cfg = cfg or QuadConfig()
    if not 0 < gamma < 1 or p < 1:
        raise ValueError("needs 0 < gamma < 1 and p >= 1")
    N = u.N
    tau = gamma * p
    sigma = min(max(0.0, N + tau - p), N - 0.05)

    def g(x, y):
        d = np.linalg.norm(x - y, axis=1)
        return np.abs(u(x) - u(y)) ** p * d ** (-N - tau)

    inner, se = mc_integrate_pairs(g, (np.zeros(N), 1.0), cfg, N=N, sigma=sigma)
    spl, vmin = _complement_table(N, tau)

    def cross(z, w):
        d = _delta_from_w(w)
        out = np.zeros(np.shape(w))
        m = w > 0
        dm = d[m]
        E = spl(np.clip(np.log(dm), vmin, 0.0)) * dm ** (-tau)
        out[m] = np.abs(u(z[m], w[m])) ** p * E
        return out

    e = (u.boundary_exponent if u.boundary_exponent is not None else 0.0) * p - tau
    if e > -1.0:
        cr = integrate_ball(ScalarField(func=cross, N=N, support_radius=1.0, boundary_exponent=e,
                                        radial=u.radial), None, 1.0, cfg).value
    else:
        # |u|^p E is not integrable at the sphere unless u vanishes near it
        tab = shell_table(u, 12)
        cr = 0.0 if all(np.all(v == 0) for v in tab.values[6:]) else math.inf
    total = inner + 2.0 * cr
    val = max(total, 0.0) ** (1.0 / p)
    if return_parts:
        return val, (inner, se, 2.0 * cr)
    return val
