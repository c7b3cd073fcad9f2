"""Closed-form predictions for the transfer regimes and a regime classifier.

Three coherent regimes are covered:

* weak coupling, ``|Ω| > 1``: a two-level Rabi oscillation between A and B
  at the transfer frequency ``2 Λ_L(Ω)``;
* weak coupling, ``Ω`` resonant with a channel mode and ``g√N`` small:
  the impurities hybridize with the resonant pair only;
* strong coupling: fast impurity-site dimer oscillation at ``g`` modulated
  by a slow A-B exchange at ``g / (2 (2g)^L)``.

Predictors report finite-``N`` quantities (from :func:`lambda_sum`) next
to their continuum limits.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .dynamics import Trajectory
from .errors import ParameterError, RegimeError
from .model import ModelParams, channel_energies, mode_grid
from .spectral import lambda_continuum, lambda_sum

WEAK_OFF_RESONANCE = "WeakOffResonance"
WEAK_RESONANT_DISCRETE = "WeakResonantDiscrete"
WEAK_RESONANT_DIFFUSIVE = "WeakResonantDiffusive"
STRONG_COUPLING = "StrongCoupling"
CROSSOVER = "Crossover"

THRESHOLDS_ENV = "QST_CHANNEL_THRESHOLDS"


@dataclass(frozen=True)
class Thresholds:
    """Classifier cut-offs; the underlying criteria are only asymptotic."""

    discrete: float = 0.3
    diffusive: float = 3.0
    strong: float = 3.0
    resonance_tolerance: float = 1e-9

    @classmethod
    def from_env(cls, environ=None) -> "Thresholds":
        """Defaults, overridden by ``QST_CHANNEL_THRESHOLDS=discrete,diffusive,strong``."""
        raw = (os.environ if environ is None else environ).get(THRESHOLDS_ENV)
        if not raw:
            return cls()
        try:
            discrete, diffusive, strong = (float(x) for x in raw.split(","))
        except ValueError as exc:
            raise ParameterError(
                f"{THRESHOLDS_ENV} must be 'discrete,diffusive,strong', got {raw!r}") from exc
        if not 0 < discrete <= diffusive or strong <= 0:
            raise ParameterError(f"inconsistent thresholds in {THRESHOLDS_ENV}: {raw!r}")
        return cls(discrete, diffusive, strong)


class RabiPrediction(NamedTuple):
    """Weak off-resonance prediction.

    ``omega_plus`` is the global phase frequency, ``omega_minus`` the
    transfer frequency; ``*_continuum`` are the ``N -> ∞`` values.
    """

    omega_plus: float
    omega_minus: float
    omega_plus_continuum: float
    omega_minus_continuum: float

    def p_a(self, t):
        return np.cos(0.5 * self.omega_minus * np.asarray(t, dtype=float)) ** 2

    def p_b(self, t):
        return np.sin(0.5 * self.omega_minus * np.asarray(t, dtype=float)) ** 2

    @property
    def period(self) -> float:
        """Full Rabi period ``2π/|ω₋|``."""
        return 2.0 * math.pi / abs(self.omega_minus)


@dataclass(frozen=True)
class ResonantPrediction:
    """Weak resonant prediction built from the split resonant poles.

    ``delta_1`` belongs to the antisymmetric factor (weight ``1 - cos ΓL``)
    and ``delta_2`` to the symmetric one (weight ``1 + cos ΓL``). Each is a
    ``(negative, positive)`` pair of shifts of ``γ`` away from ``Γ``.
    """

    params: ModelParams
    gamma_big: float
    delta_1: tuple
    delta_2: tuple
    delta_1_polished: tuple
    delta_2_polished: tuple
    regime_flag: str
    transfer_time: Optional[float]

    @property
    def delta_roots(self) -> tuple:
        """``(δ₁⁻, δ₁⁺, δ₂⁻, δ₂⁺)`` from the closed forms."""
        return self.delta_1 + self.delta_2

    def _beats(self, t):
        t = np.asarray(t, dtype=float)
        s = math.sin(self.gamma_big)
        sym = np.cos(s * self.delta_2[1] * t)
        anti = np.cos(s * self.delta_1[1] * t)
        return sym, anti

    def p_a(self, t):
        sym, anti = self._beats(t)
        return (0.5 * (sym + anti)) ** 2

    def p_b(self, t):
        sym, anti = self._beats(t)
        return (0.5 * (sym - anti)) ** 2


class StrongPrediction(NamedTuple):
    """Strong-coupling envelopes: fast dimer at ``g``, slow A-B exchange."""

    fast_freq: float
    slow_freq: float

    def p_a(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(self.fast_freq * t) ** 2 * np.cos(self.slow_freq * t) ** 2

    def p_b(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(self.fast_freq * t) ** 2 * np.sin(self.slow_freq * t) ** 2

    def p_chan(self, t):
        return np.sin(self.fast_freq * np.asarray(t, dtype=float)) ** 2


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    g_sqrt_n: float
    band_offset: float
    resonance_offset: float
    resonant: bool
    diagnostics: dict = field(default_factory=dict)


def resonance_offset(params: ModelParams) -> tuple[float, int]:
    """Return ``min_n |Ω - ε_n|`` and the first ``n <= N/2`` attaining it."""
    energies = channel_energies(params.n_modes)[: params.n_modes // 2 + 1]
    gaps = np.abs(params.impurity_energy - energies)
    n = int(np.argmin(gaps))
    return float(gaps[n]), n


def predict_weak_offres(params: ModelParams) -> RabiPrediction:
    """Rabi frequencies for an impurity level outside the band."""
    omega = params.impurity_energy
    if not abs(omega) > 1.0:
        raise RegimeError(
            f"weak off-resonance prediction needs |Omega| > 1, got {omega!r}")
    lam0 = lambda_sum(0, omega, params).real
    lam_l = lambda_sum(params.distance, omega, params).real
    g = params.coupling
    return RabiPrediction(
        omega_plus=2.0 * (omega + lam0),
        omega_minus=2.0 * lam_l,
        omega_plus_continuum=2.0 * (omega + lambda_continuum(0, omega, g)),
        omega_minus_continuum=2.0 * lambda_continuum(params.distance, omega, g),
    )


def expansion_rhs(delta: float, params: ModelParams, parity: str,
                  gamma_big: Optional[float] = None) -> float:
    """Right-hand side of the small-``δ`` expansion around a resonant mode.

    ``g²/sin²Γ [cot(δN/2)(1 ± cos ΓL) ± sin ΓL]``, upper sign for the
    symmetric factor. Its fixed points ``δ = rhs(δ)`` approximate the
    roots of :func:`~qst_channel.spectral.d_pm_gamma` at ``γ = Γ + δ``.
    """
    if gamma_big is None:
        gamma_big = math.acos(-params.impurity_energy)
    sign = 1.0 if parity == "plus" else -1.0
    n_modes, dist = params.n_modes, params.distance
    weight = 1.0 + sign * math.cos(gamma_big * dist)
    sin_g = math.sin(gamma_big)
    bracket = sign * math.sin(gamma_big * dist)
    if weight > 1e-12:
        bracket += weight / math.tan(0.5 * delta * n_modes)
    return params.coupling ** 2 / sin_g ** 2 * bracket


def _polish_delta(params, parity, gamma_big, positive):
    """Solve ``δ = rhs(δ)`` on ``(0, 2π/N)`` or ``(-2π/N, 0)`` by bisection.

    ``δ - rhs(δ)`` increases from ``-∞`` to ``+∞`` across either interval.
    """
    sign = 1.0 if parity == "plus" else -1.0
    weight = 1.0 + sign * math.cos(gamma_big * params.distance)
    if weight <= 1e-12:
        # resonant pair decoupled from this factor: linear equation
        return expansion_rhs(1.0, params, parity, gamma_big)
    width = 2.0 * math.pi / params.n_modes
    lo, hi = (0.0, width) if positive else (-width, 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mid - expansion_rhs(mid, params, parity, gamma_big) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def predict_weak_resonant(params: ModelParams, resonance_tolerance: float = 1e-9,
                          discrete_limit: float = 1.0) -> ResonantPrediction:
    """Split-pole prediction when ``Ω`` sits on a channel mode.

    Parameters
    ----------
    params : ModelParams
    resonance_tolerance : float
        Largest accepted ``min_n |Ω - ε_n|``.
    discrete_limit : float
        ``regime_flag`` is ``"discrete"`` when ``max|δ| N`` stays below this
        value and ``"diffusive"`` otherwise.

    Raises
    ------
    RegimeError
        ``|Ω| >= 1`` or no channel mode within ``resonance_tolerance``.
    """
    omega = params.impurity_energy
    if not abs(omega) < 1.0:
        raise RegimeError(f"resonant prediction needs |Omega| < 1, got {omega!r}")
    offset, n = resonance_offset(params)
    if offset > resonance_tolerance:
        raise RegimeError(
            f"no channel mode within {resonance_tolerance:g} of Omega={omega!r} "
            f"(closest offset {offset:.3g}); the resonant expansion does not apply")
    n_modes, dist, g = params.n_modes, params.distance, params.coupling
    gamma_big = float(mode_grid(params).wavenumbers[n])
    sin_g = math.sin(gamma_big)
    if sin_g < 1e-12:
        raise RegimeError("resonance at a band edge: the expansion around the mode is singular")
    cos_gl = math.cos(gamma_big * dist)
    d1 = g * math.sqrt(max(2.0 * (1.0 - cos_gl), 0.0) / (n_modes * sin_g ** 2))
    d2 = g * math.sqrt(max(2.0 * (1.0 + cos_gl), 0.0) / (n_modes * sin_g ** 2))
    p1 = (_polish_delta(params, "minus", gamma_big, False),
          _polish_delta(params, "minus", gamma_big, True))
    p2 = (_polish_delta(params, "plus", gamma_big, False),
          _polish_delta(params, "plus", gamma_big, True))
    flag = "discrete" if max(d1, d2) * n_modes < discrete_limit else "diffusive"
    small = min(d1, d2)
    big = max(d1, d2)
    transfer = math.pi / (sin_g * big) if big > 0 and small <= 1e-12 * big else None
    return ResonantPrediction(params, gamma_big, (-d1, d1), (-d2, d2), p1, p2, flag,
                              transfer)


def predict_strong(params: ModelParams) -> StrongPrediction:
    """Strong-coupling frequencies ``g`` and ``g / (2 (2g)^L)``."""
    g = params.coupling
    if g <= 0:
        raise RegimeError("strong-coupling prediction needs g > 0")
    return StrongPrediction(fast_freq=g, slow_freq=g / (2.0 * (2.0 * g) ** params.distance))


def classify_regime(params: ModelParams, thresholds: Optional[Thresholds] = None
                    ) -> RegimeReport:
    """Assign exactly one regime from ``g``, ``g√N`` and the resonance offset."""
    th = thresholds or Thresholds()
    g = params.coupling
    g_sqrt_n = g * math.sqrt(params.n_modes)
    band_offset = abs(params.impurity_energy) - 1.0
    offset, n = resonance_offset(params)
    resonant = abs(params.impurity_energy) < 1.0 and offset <= th.resonance_tolerance
    if g >= th.strong:
        regime = STRONG_COUPLING
    elif band_offset > 0:
        regime = WEAK_OFF_RESONANCE
    elif resonant:
        if g_sqrt_n <= th.discrete:
            regime = WEAK_RESONANT_DISCRETE
        elif g_sqrt_n >= th.diffusive:
            regime = WEAK_RESONANT_DIFFUSIVE
        else:
            regime = CROSSOVER
    else:
        regime = CROSSOVER
    diagnostics = {
        "g_sqrt_n": g_sqrt_n,
        "band_offset": band_offset,
        "resonance_offset": offset,
        "resonant_mode": n,
        "splitting_over_spacing": g_sqrt_n,
    }
    return RegimeReport(regime, g_sqrt_n, band_offset, offset, resonant, diagnostics)


def predictor_for(params: ModelParams, report: RegimeReport,
                  thresholds: Optional[Thresholds] = None):
    """The closed-form prediction matching ``report.regime``, or ``None``."""
    th = thresholds or Thresholds()
    if report.regime == STRONG_COUPLING:
        return predict_strong(params)
    if report.regime == WEAK_OFF_RESONANCE:
        return predict_weak_offres(params)
    if report.resonant:
        return predict_weak_resonant(params, th.resonance_tolerance)
    return None


def natural_window(params: ModelParams, thresholds: Optional[Thresholds] = None) -> float:
    """A time span showing one complete transfer cycle for ``params``."""
    th = thresholds or Thresholds()
    report = classify_regime(params, th)
    if params.coupling == 0:
        return 10.0
    pred = predictor_for(params, report, th)
    if isinstance(pred, RabiPrediction) and pred.omega_minus != 0:
        return pred.period
    if isinstance(pred, StrongPrediction):
        return math.pi / pred.slow_freq
    if isinstance(pred, ResonantPrediction):
        if pred.transfer_time is not None:
            return 2.0 * pred.transfer_time
        rate = math.sin(pred.gamma_big) * max(pred.delta_1[1], pred.delta_2[1])
        return 2.0 * math.pi / rate
    return 4.0 * params.n_modes


class TransferMetrics(NamedTuple):
    max_p_b: float
    t_at_max: float
    p_b_at: Callable


def transfer_metrics(traj: Trajectory) -> TransferMetrics:
    """Peak transfer probability and the earliest time it is reached.

    The grid maximum is refined by the vertex of the parabola through it
    and its two neighbours.
    """
    t = np.asarray(traj.times, dtype=float)
    p = np.asarray(traj.p_b, dtype=float)
    if t.size == 0:
        raise ParameterError("transfer metrics need a non-empty trajectory")
    top = p.max()
    i = int(np.flatnonzero(p >= top - 1e-9)[0])
    best_p, best_t = float(p[i]), float(t[i])
    if 0 < i < t.size - 1:
        (t0, t1, t2), (y0, y1, y2) = t[i - 1:i + 2], p[i - 1:i + 2]
        denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
        a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
        b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom
        if a < 0:
            tv = -b / (2 * a)
            if t0 <= tv <= t2:
                c = y1 - a * t1 * t1 - b * t1
                pv = a * tv * tv + b * tv + c
                if pv > best_p:
                    best_p, best_t = min(float(pv), 1.0), float(tv)

    def p_b_at(when):
        return np.interp(when, t, p)

    return TransferMetrics(best_p, best_t, p_b_at)
