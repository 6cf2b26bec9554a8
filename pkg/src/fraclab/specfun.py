"""Special functions and normalization constants.

Gamma-function values come from :mod:`scipy.special`; the Gauss
hypergeometric function is evaluated here with power series and the
``z -> 1 - z`` connection formulas, including the logarithmic cases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "FracParams",
    "ln_gamma",
    "gamma",
    "rgamma",
    "gauss_2f1",
    "norm_const_laplacian",
    "norm_const_gradient",
    "riesz_potential_const",
    "sphere_area",
]

_LOG_CASE_TOL = 1e-9
_SERIES_MAX_TERMS = 4000


@dataclass(frozen=True)
class FracParams:
    """Parameter record shared by every operation.

    Parameters
    ----------
    N : int
        Space dimension, at least 2.
    s : float
        Order of the operator ``(-Δ)^s``, in ``(0, 1)``.
    t : float, optional
        Derivative order, in ``(0, min(1, 2s))``. Defaults to ``s``.
    m : float, optional
        Integrability of the data, ``m >= 1`` (``inf`` allowed).
    eps_star : float, optional
        The small positive slack in ``m_star``.
    """

    N: int
    s: float
    t: float | None = None
    m: float = math.inf
    eps_star: float = 1e-3
    derived: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.t is None:
            object.__setattr__(self, "t", float(self.s))
        N, s, t = self.N, self.s, self.t
        if int(N) != N or N < 2:
            raise ValueError(f"N must be an integer >= 2, got {N}")
        if not 0.0 < s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {s}")
        if not 0.0 < t < min(1.0, 2.0 * s):
            raise ValueError(f"t must lie in (0, min(1, 2s)) = (0, {min(1.0, 2 * s)}), got {t}")
        if not self.m >= 1.0:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.eps_star > 0.0:
            raise ValueError(f"eps_star must be positive, got {self.eps_star}")
        object.__setattr__(self, "N", int(N))
        self.derived.update(
            sphere_area=sphere_area(self.N),
            a_s=norm_const_laplacian(self, s),
            a_t=norm_const_laplacian(self, t / 2.0),
            mu_t=norm_const_gradient(self, t),
        )

    def with_(self, **changes) -> "FracParams":
        kw = dict(N=self.N, s=self.s, t=self.t, m=self.m, eps_star=self.eps_star)
        kw.update(changes)
        return FracParams(**kw)


def ln_gamma(x):
    """Natural logarithm of ``Γ(x)`` for positive ``x``.

    Raises
    ------
    ValueError
        If any ``x <= 0``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise ValueError("ln_gamma requires x > 0")
    out = special.gammaln(xa)
    return float(out) if out.ndim == 0 else out


def gamma(x):
    """Signed ``Γ(x)`` for real ``x`` (``inf`` at the poles)."""
    out = special.gamma(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def rgamma(x):
    """Reciprocal gamma ``1/Γ(x)``, equal to zero at the poles."""
    out = special.rgamma(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _series(a, b, c, z):
    """Plain power series of ``2F1(a, b; c; z)`` for ``|z| <= 1/2``."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(_SERIES_MAX_TERMS):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _terminating(a, b, c, z):
    """Finite sum when ``a`` or ``b`` is a nonpositive integer."""
    n_max = int(round(-min(x for x in (a, b) if _is_nonpos_int(x))))
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(n_max):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total = total + term
    return total


def _log_case(a, b, c, w):
    """Connection formula when ``c - a - b`` is an integer ``m``.

    Uses the classical expansions around ``z = 1`` with digamma terms.
    ``w`` is ``1 - z`` and lies in ``(0, 1/2]``.
    """
    m = int(round(c - a - b))
    w = np.asarray(w, dtype=float)
    lw = np.log(w)
    psi = special.psi
    if m == 0:
        pref = gamma(a + b) * rgamma(a) * rgamma(b)
        total = np.zeros_like(w)
        coef = 1.0
        wn = np.ones_like(w)
        for n in range(_SERIES_MAX_TERMS):
            if n > 0:
                coef *= (a + n - 1) * (b + n - 1) / (n * n)
                wn = wn * w
            term = coef * wn * (2 * psi(n + 1.0) - psi(a + n) - psi(b + n) - lw)
            total = total + term
            if n > 2 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        return pref * total
    if m > 0:
        # c = a + b + m
        finite = np.zeros_like(w)
        coef = 1.0
        wn = np.ones_like(w)
        for n in range(m):
            if n > 0:
                coef *= (a + n - 1) * (b + n - 1) / (n * (1 - m + n - 1))
                wn = wn * w
            finite = finite + coef * wn
        finite = finite * gamma(m) * gamma(a + b + m) * rgamma(a + m) * rgamma(b + m)
        pref = gamma(a + b + m) * rgamma(a) * rgamma(b) * (-1.0) ** m
        total = np.zeros_like(w)
        coef = 1.0 / math.factorial(m)
        wn = np.ones_like(w)
        for n in range(_SERIES_MAX_TERMS):
            if n > 0:
                coef *= (a + m + n - 1) * (b + m + n - 1) / (n * (n + m))
                wn = wn * w
            term = coef * wn * (lw - psi(n + 1.0) - psi(n + m + 1.0) + psi(a + n + m) + psi(b + n + m))
            total = total + term
            if n > 2 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        return finite - pref * w**m * total
    # m < 0: c = a + b - k with k = -m > 0
    k = -m
    finite = np.zeros_like(w)
    coef = 1.0
    wn = np.ones_like(w)
    for n in range(k):
        if n > 0:
            coef *= (a - k + n - 1) * (b - k + n - 1) / (n * (1 - k + n - 1))
            wn = wn * w
        finite = finite + coef * wn
    finite = finite * gamma(k) * gamma(a + b - k) * rgamma(a) * rgamma(b) * w ** (-float(k))
    pref = (-1.0) ** k * gamma(a + b - k) * rgamma(a - k) * rgamma(b - k)
    total = np.zeros_like(w)
    coef = 1.0 / math.factorial(k)
    wn = np.ones_like(w)
    for n in range(_SERIES_MAX_TERMS):
        if n > 0:
            coef *= (a + n - 1) * (b + n - 1) / (n * (n + k))
            wn = wn * w
        term = coef * wn * (lw - psi(n + 1.0) - psi(n + k + 1.0) + psi(a + n) + psi(b + n))
        total = total + term
        if n > 2 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return finite - pref * total


def _connection(a, b, c, w):
    """Non-logarithmic ``z -> 1 - z`` transformation; ``w = 1 - z``."""
    d = c - a - b
    A1 = gamma(c) * gamma(d) * rgamma(c - a) * rgamma(c - b)
    A2 = gamma(c) * gamma(-d) * rgamma(a) * rgamma(b)
    out = np.zeros_like(np.asarray(w, dtype=float))
    if A1 != 0.0:
        out = out + A1 * _series(a, b, 1.0 - d, w)
    if A2 != 0.0:
        out = out + A2 * np.power(w, d) * _series(c - a, c - b, 1.0 + d, w)
    return out


def gauss_2f1(a: float, b: float, c: float, z=None, *, one_minus_z=None):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` on ``[0, 1)``.

    Parameters
    ----------
    a, b, c : float
        Real parameters; ``c`` must not be a nonpositive integer.
    z : float or array_like, optional
        Argument in ``[0, 1)``.
    one_minus_z : float or array_like, optional
        ``1 - z`` given directly. Preferred near ``z = 1``, where forming
        ``1 - z`` from ``z`` loses relative accuracy.

    Returns
    -------
    float or ndarray

    Notes
    -----
    Power series for ``z <= 1/2``. For ``z > 1/2`` the linear
    transformation to ``1 - z`` is used; when ``c - a - b`` is within
    ``1e-9`` of an integer the logarithmic form is used instead.
    """
    a, b, c = float(a), float(b), float(c)
    if _is_nonpos_int(c):
        raise ValueError("c must not be a nonpositive integer")
    if (z is None) == (one_minus_z is None):
        raise ValueError("give exactly one of z or one_minus_z")
    if one_minus_z is not None:
        w = np.asarray(one_minus_z, dtype=float)
        zz = 1.0 - w
    else:
        zz = np.asarray(z, dtype=float)
        w = 1.0 - zz
    scalar = zz.ndim == 0
    zz = np.atleast_1d(zz)
    w = np.atleast_1d(w)
    if np.any(~(zz >= 0)) or np.any(~(w > 0)):
        raise ValueError("z must lie in [0, 1)")
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        out = _terminating(a, b, c, zz)
        return float(out[0]) if scalar else out
    out = np.empty_like(zz)
    lo = zz <= 0.5
    if np.any(lo):
        out[lo] = _series(a, b, c, zz[lo])
    hi = ~lo
    if np.any(hi):
        d = c - a - b
        if abs(d - round(d)) < _LOG_CASE_TOL:
            out[hi] = _log_case(a, b, c, w[hi])
        else:
            out[hi] = _connection(a, b, c, w[hi])
    return float(out[0]) if scalar else out


def _check_order(order: float):
    if not 0.0 < order < 1.0:
        raise ValueError(f"order must lie in (0, 1), got {order}")


def _dim(params) -> int:
    return params if isinstance(params, int) else params.N


def norm_const_laplacian(params, order: float) -> float:
    """Constant ``a_{N,σ}`` of ``(-Δ)^σ`` with ``σ = order``.

    ``a_{N,σ} = 2^{2σ} σ π^{-N/2} Γ(N/2+σ) / Γ(1-σ)``.
    ``params`` is a :class:`FracParams` or the dimension itself.
    """
    _check_order(order)
    N = _dim(params)
    lg = ln_gamma(N / 2 + order) - ln_gamma(1 - order)
    return float(2 ** (2 * order) * order * math.pi ** (-N / 2) * math.exp(lg))


def norm_const_gradient(params, order: float) -> float:
    """Constant ``μ_{N,t}`` of the Riesz fractional gradient of order ``t``.

    ``μ_{N,t} = 2^t π^{-N/2} Γ((N+t+1)/2) / Γ((1-t)/2)``.
    """
    _check_order(order)
    N = _dim(params)
    lg = ln_gamma((N + order + 1) / 2) - ln_gamma((1 - order) / 2)
    return float(2**order * math.pi ** (-N / 2) * math.exp(lg))


def riesz_potential_const(N: int, alpha: float) -> float:
    """Constant of the Riesz kernel ``|x|^{2α-N}`` inverting ``(-Δ)^α``."""
    return float(gamma(N / 2 - alpha) / (2 ** (2 * alpha) * math.pi ** (N / 2) * gamma(alpha)))


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in ``R^N``."""
    return float(2 * math.pi ** (N / 2) / math.exp(ln_gamma(N / 2)))
