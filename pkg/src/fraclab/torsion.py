"""Closed forms for the fractional torsion problem on the unit ball.

``u(x) = P (1 - |x|^2)_+^s`` with ``P = 2^{-2s} Γ(N/2) / (Γ(N/2+s) Γ(1+s))``
solves ``(-Δ)^s u = 1`` in ``B_1`` with ``u = 0`` outside. Its
``t/2``-Laplacian inside the ball is a hypergeometric function of
``|x|^2``; the boundary behaviour follows from the ``z -> 1`` connection
formula.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import ScalarField, one_minus_sq
from .specfun import FracParams, gamma, gauss_2f1, ln_gamma, rgamma

__all__ = [
    "TorsionClosedForm",
    "Integrability",
    "make_torsion",
    "torsion_u",
    "torsion_flap_closed",
    "boundary_rate",
    "integrability_class",
    "torsion_field",
    "torsion_flap_field",
]


class Integrability(str, enum.Enum):
    FiniteOnRN = "FiniteOnRN"
    FiniteOnRN_NotLinfty = "FiniteOnRN_NotLinfty"
    InfiniteOnBall = "InfiniteOnBall"


def _prefactor(N, s):
    return math.exp(-2 * s * math.log(2.0) + ln_gamma(N / 2) - ln_gamma(N / 2 + s) - ln_gamma(1 + s))


def _flap_prefactor(N, s, t):
    # Γ(s + 1 - t/2) is positive for t < 2s + 2; keep the reciprocal form so t = 2s + 2 gives 0
    return 2.0 ** (t - 2 * s) * gamma((N + t) / 2) / gamma(N / 2 + s) * rgamma(s + 1 - t / 2)


@dataclass(frozen=True)
class TorsionClosedForm:
    """Torsion solution data for given ``(N, s)``.

    Attributes
    ----------
    params : FracParams
    prefactor : float
        ``P`` in ``u = P (1 - |x|^2)^s``.
    flap_prefactor : float
        Γ-ratio in front of ``2F1`` in ``(-Δ)^{t/2} u`` at ``t = params.t``.
    sign_convention : int
        Sign multiplying the hypergeometric formula; fixed at construction.
    sign_evidence : dict
        Record of the checks that fixed the sign.
    """

    params: FracParams
    prefactor: float
    flap_prefactor: float
    sign_convention: int = 1
    sign_evidence: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.prefactor > 0:
            raise ValueError("prefactor must be positive")
        if self.sign_convention not in (1, -1):
            raise ValueError("sign_convention must be +1 or -1")

    def flap_prefactor_at(self, t: float) -> float:
        return _flap_prefactor(self.params.N, self.params.s, t)


def make_torsion(params: FracParams, *, pv_oracle: bool = False, cfg=None) -> TorsionClosedForm:
    """Build the closed form and fix the sign of the hypergeometric formula.

    The sign is chosen so that the formula at ``t = 2s`` equals ``+1``,
    which ``(-Δ)^s u = 1`` requires. With ``pv_oracle=True`` the sign is
    also compared against a principal-value quadrature of ``(-Δ)^{t/2} u``
    at the origin, and a disagreement raises.
    """
    N, s = params.N, params.s
    P = _prefactor(N, s)
    raw_2s = _flap_prefactor(N, s, 2 * s) * float(gauss_2f1((N + 2 * s) / 2, 0.0, N / 2, 0.25))
    sign = 1 if raw_2s > 0 else -1
    evidence = {"t_eq_2s_raw_value": raw_2s}
    if pv_oracle:
        from .operators import OperatorRequest, frac_laplacian_pv
        from .quadrature import QuadConfig

        t_chk = min(params.t, 0.9)
        cf0 = TorsionClosedForm(params, P, _flap_prefactor(N, s, params.t), 1)
        req = OperatorRequest(torsion_field(cf0), t_chk, np.zeros(N), cfg or QuadConfig(rel_tol=1e-7))
        pv = frac_laplacian_pv(req).value
        raw = _flap_prefactor(N, s, t_chk) * float(gauss_2f1((N + t_chk) / 2, t_chk / 2 - s, N / 2, 0.0))
        pv_sign = 1 if pv / raw > 0 else -1
        evidence.update({"pv_order": t_chk, "pv_value_at_0": pv, "raw_formula_at_0": raw})
        if pv_sign != sign:
            raise RuntimeError("principal-value oracle contradicts the t = 2s sign check")
    return TorsionClosedForm(params, P, _flap_prefactor(N, s, params.t), sign, evidence)


def torsion_u(cf: TorsionClosedForm, x, w=None) -> np.ndarray | float:
    """``P (1 - |x|^2)^s`` inside the unit ball and 0 outside.

    ``w`` optionally supplies ``1 - |x|^2`` to full relative accuracy.
    """
    x = np.asarray(x, dtype=float)
    w = one_minus_sq(x) if w is None else np.asarray(w, dtype=float)
    out = np.where(w > 0, cf.prefactor * np.maximum(w, 0.0) ** cf.params.s, 0.0)
    return float(out) if out.ndim == 0 else out


def torsion_flap_closed(cf: TorsionClosedForm, t: float, x, w=None):
    """``(-Δ)^{t/2} u`` for ``|x| < 1`` from the hypergeometric formula.

    ``2F1((N+t)/2, t/2 - s; N/2; |x|^2)`` is evaluated with ``1 - |x|^2``
    passed explicitly so the boundary layer keeps full relative accuracy.
    """
    if not 0.0 < t < 2.0:
        raise ValueError("t must lie in (0, 2)")
    x = np.asarray(x, dtype=float)
    w = one_minus_sq(x) if w is None else np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("torsion_flap_closed is defined for |x| < 1 only")
    N, s = cf.params.N, cf.params.s
    hyp = gauss_2f1((N + t) / 2, t / 2 - s, N / 2, one_minus_z=w)
    out = cf.sign_convention * _flap_prefactor(N, s, t) * np.asarray(hyp)
    return float(out) if out.ndim == 0 else out


def boundary_rate(cf: TorsionClosedForm, t: float):
    """Boundary asymptotics of the hypergeometric factor.

    Returns ``(rate_exponent, log_flag, limit_constant)`` such that
    ``2F1((N+t)/2, t/2-s; N/2; |x|^2)`` behaves like
    ``limit_constant * (1-|x|^2)^{rate_exponent}`` for ``t > s`` and like
    ``limit_constant * (-log(1-|x|^2))`` for ``t = s``. Multiply by
    ``sign_convention * flap_prefactor_at(t)`` for the operator itself.
    """
    N, s = cf.params.N, cf.params.s
    if t < s - 1e-14 or not t < min(1.0, 2 * s):
        raise ValueError("boundary_rate needs s <= t < min(1, 2s)")
    if abs(t - s) <= 1e-14:
        return 0.0, True, gamma(N / 2) * rgamma((N + s) / 2) * rgamma(-s / 2)
    const = gamma(N / 2) * gamma(t - s) * rgamma((N + t) / 2) * rgamma(t / 2 - s)
    return s - t, False, const


def integrability_class(params: FracParams, t: float, p: float) -> Integrability:
    """Lebesgue class of ``(-Δ)^{t/2} u`` for the torsion solution."""
    s = params.s
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if t < s:
        return Integrability.FiniteOnRN
    if t == s:
        return Integrability.FiniteOnRN if math.isfinite(p) else Integrability.FiniteOnRN_NotLinfty
    return Integrability.FiniteOnRN if p < 1.0 / (t - s) else Integrability.InfiniteOnBall


def torsion_field(cf: TorsionClosedForm) -> ScalarField:
    """The torsion solution as a ``ScalarField`` on ``R^N``."""
    P, s = cf.prefactor, cf.params.s
    return ScalarField.from_profile(lambda w: P * w**s, N=cf.params.N, boundary_exponent=s,
                                    name=f"torsion(N={cf.params.N},s={s})")


def torsion_flap_field(cf: TorsionClosedForm, t: float) -> ScalarField:
    """Closed-form ``(-Δ)^{t/2} u`` restricted to the open unit ball."""
    N, s = cf.params.N, cf.params.s
    pre = cf.sign_convention * _flap_prefactor(N, s, t)

    def prof(w):
        return pre * np.asarray(gauss_2f1((N + t) / 2, t / 2 - s, N / 2, one_minus_z=w))

    return ScalarField.from_profile(prof, N=N, boundary_exponent=min(0.0, s - t),
                                    name=f"torsion_flap(s={s},t={t})")
