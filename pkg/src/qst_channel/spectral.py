r"""Lattice self-energy, parity-resolved spectral function and its poles.

The impurity amplitudes follow from the resolvent projected on ``{A, B}``.
With the self-energy

.. math:: Λ_d(ω) = \frac{g^2}{N} \sum_k \frac{e^{ikd}}{ω - ε_k}

the denominator factorizes as ``D = D_+ D_-`` with
``D_± = ω - Ω - Λ_0 ∓ Λ_L``; ``D_+`` belongs to the symmetric impurity
combination and ``D_-`` to the antisymmetric one. Every real root of
``D_±`` is an eigenvalue of the Hamiltonian with impurity weight, and the
residues ``1/D_±'`` rebuild the impurity amplitudes.

The direct k-sum :func:`lambda_sum` is the reference; the geometric-series
closed form :func:`lambda_closed` and the trigonometric form
:func:`d_pm_gamma` are checked against it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import BracketError, CompletenessError, ParameterError, PoleCollisionError
from .model import ModelParams, channel_energies, coupling_phases

PLUS = "plus"
MINUS = "minus"
PARITIES = (PLUS, MINUS)

_COLLISION = 1e-12
# relative size below which a parity weight counts as decoupled
_DECOUPLED = 1e-10


def _collision_check(omega, energies):
    gap = np.abs(omega - energies)
    j = int(np.argmin(gap))
    if gap[j] < _COLLISION:
        raise PoleCollisionError(
            f"omega={omega!r} coincides with channel energy {energies[j]!r}",
            float(energies[j]))


def lambda_sum(d: int, omega: complex, params: ModelParams) -> complex:
    """Self-energy ``Λ_d(ω)`` by direct summation over the channel modes."""
    n_modes = params.n_modes
    energies = channel_energies(n_modes)
    _collision_check(omega, energies)
    terms = coupling_phases(n_modes, d) / (omega - energies)
    return complex(params.coupling ** 2 / n_modes * terms.sum())


def lambda_sum_derivative(d: int, omega: complex, params: ModelParams) -> complex:
    """``dΛ_d/dω = -(g²/N) Σ_k e^{ikd} / (ω - ε_k)²``."""
    n_modes = params.n_modes
    energies = channel_energies(n_modes)
    _collision_check(omega, energies)
    terms = coupling_phases(n_modes, d) / (omega - energies) ** 2
    return complex(-params.coupling ** 2 / n_modes * terms.sum())


def in_circle_root(omega: float) -> float:
    """Root of ``z² + 2ωz + 1 = 0`` inside the unit circle, ``|ω| > 1``."""
    if not abs(omega) > 1.0:
        raise ParameterError(f"|omega| must exceed the band edge 1, got {omega!r}")
    return -1.0 / (omega + math.copysign(math.sqrt(omega * omega - 1.0), omega))


def lambda_closed(d: int, omega: float, params: ModelParams) -> float:
    """Closed form of ``Λ_d(ω)`` outside the band.

    ``Λ_d = 2g²/(K - 1/K) · (K^{|d|} + K^{N-|d|}) / (1 - K^N)`` with
    ``K`` the in-circle root. The prefactor equals ``g²/√(ω²-1)`` for
    ``ω > 1`` and ``-g²/√(ω²-1)`` for ``ω < -1``.
    """
    n_modes = params.n_modes
    d = abs(int(d))
    if d > n_modes:
        raise ParameterError(f"|d| must not exceed N={n_modes}, got {d}")
    k = in_circle_root(float(omega))
    pref = 2.0 * params.coupling ** 2 / (k - 1.0 / k)
    return pref * (k ** d + k ** (n_modes - d)) / (1.0 - k ** n_modes)


def lambda_continuum(d: int, omega: float, coupling: float) -> float:
    """``N -> ∞`` limit of :func:`lambda_closed`: ``2g² K^{|d|} / (K - 1/K)``."""
    k = in_circle_root(float(omega))
    return 2.0 * coupling ** 2 * k ** abs(int(d)) / (k - 1.0 / k)


def d_pm(omega: float, params: ModelParams) -> tuple[float, float]:
    """Return ``(D_+(ω), D_-(ω)) = ω - Ω - Λ_0 ∓ Λ_L`` on the real axis."""
    lam0 = lambda_sum(0, omega, params).real
    lam_l = lambda_sum(params.distance, omega, params).real
    detuning = omega - params.impurity_energy
    return detuning - (lam0 + lam_l), detuning - (lam0 - lam_l)


def d_pm_gamma(gamma: complex, params: ModelParams) -> tuple[complex, complex]:
    """Spectral factors in the variable ``γ`` with ``ω = -cos γ``.

    ``cos γ - cos Γ + g² [cos(γN/2) ± cos(γ(N/2 - L))] / (sin γ sin(γN/2))``
    where ``Ω = -cos Γ``. On the real band this equals ``-D_±(-cos γ)``.
    """
    gamma = complex(gamma)
    if not -1e-15 <= gamma.real <= math.pi + 1e-15:
        raise ParameterError(f"Re(gamma) must lie in [0, pi], got {gamma!r}")
    n_modes, dist = params.n_modes, params.distance
    half = 0.5 * n_modes
    s = cmath.sin(gamma)
    s_half = cmath.sin(gamma * half)
    if abs(s) < _COLLISION or abs(s_half) < _COLLISION:
        raise PoleCollisionError(
            f"gamma={gamma!r} sits on an unperturbed channel mode",
            float((-cmath.cos(gamma)).real))
    g2 = params.coupling ** 2
    base = cmath.cos(gamma) + params.impurity_energy
    on_site = cmath.cos(gamma * half)
    transfer = cmath.cos(gamma * (half - dist))
    den = s * s_half
    return base + g2 * (on_site + transfer) / den, base + g2 * (on_site - transfer) / den


class ParityWeights(NamedTuple):
    """Pole positions and weights of ``Λ_0 ± Λ_L`` with ``±k`` pairs merged.

    ``D_±(ω) = ω - Ω - Σ_j weights[j] / (ω - energies[j])``.
    """

    energies: np.ndarray
    plus: np.ndarray
    minus: np.ndarray


def parity_weights(params: ModelParams) -> ParityWeights:
    n_modes = params.n_modes
    distinct = np.arange(n_modes // 2 + 1)
    energies = channel_energies(n_modes)[distinct]
    cos_kl = coupling_phases(n_modes, params.distance).real
    mult = np.where((distinct == 0) | (2 * distinct == n_modes), 1.0, 2.0)
    scale = params.coupling ** 2 / n_modes
    plus = scale * mult * (1.0 + cos_kl[distinct])
    minus = scale * mult * (1.0 - cos_kl[distinct])
    return ParityWeights(energies, plus, minus)


class Pole(NamedTuple):
    omega: float
    parity: str
    residue_weight: float


@dataclass(frozen=True)
class PoleSet:
    """Real roots of ``D_+`` and ``D_-`` with residue weights ``1/D_±'``."""

    params: ModelParams
    poles: tuple

    def __len__(self):
        return len(self.poles)

    def __iter__(self):
        return iter(self.poles)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.poles])

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.residue_weight for p in self.poles])

    @property
    def parities(self) -> np.ndarray:
        return np.array([p.parity for p in self.poles])

    def of_parity(self, parity: str) -> tuple[np.ndarray, np.ndarray]:
        sel = [p for p in self.poles if p.parity == parity]
        return np.array([p.omega for p in sel]), np.array([p.residue_weight for p in sel])

    def completeness(self) -> float:
        """``Σ residue_weight / 2``, equal to 1 for a complete set."""
        return 0.5 * float(self.weights.sum())


def _exterior(lo_side, edge, shift, energies, weights, start):
    """Expand an exterior bracket until ``D`` has the required sign."""
    reach = start
    for _ in range(64):
        probe = edge - reach if lo_side else edge + reach
        value, _ = kernels.parity_eval(probe, shift, energies, weights)
        if (value < 0) if lo_side else (value > 0):
            return (probe, edge) if lo_side else (edge, probe)
        reach *= 2.0
    side = "lower" if lo_side else "upper"
    raise BracketError(f"no sign change found on the {side} exterior interval",
                       (edge - reach, edge) if lo_side else (edge, edge + reach))


def _parity_roots(params, energies, weights):
    shift = params.impurity_energy
    g = params.coupling
    keep = weights > _DECOUPLED * 2.0 * g * g / params.n_modes
    e = np.ascontiguousarray(energies[keep])
    w = np.ascontiguousarray(weights[keep])
    reach = 1.0 + abs(shift) + 2.0 * g + 2.0 * g * g
    if e.size == 0:
        lo, _ = _exterior(True, min(shift, 0.0), shift, e, w, reach)
        _, hi = _exterior(False, max(shift, 0.0), shift, e, w, reach)
        brackets = [(lo, hi)]
    else:
        brackets = [_exterior(True, e[0], shift, e, w, reach)]
        brackets += list(zip(e[:-1], e[1:]))
        brackets.append(_exterior(False, e[-1], shift, e, w, reach))
    lo = np.array([b[0] for b in brackets])
    hi = np.array([b[1] for b in brackets])
    roots = np.asarray(kernels.bisect_roots(lo, hi, shift, e, w))
    out = []
    for root, a, b in zip(roots, lo, hi):
        value, slope = kernels.parity_eval(root, shift, e, w)
        # bisection stops at adjacent floats; near a pole that bounds |D|
        resolution = 4.0 * np.spacing(max(abs(root), 1.0)) * slope
        if not (a < root < b) or abs(value) > max(1e-12, resolution):
            raise BracketError(
                f"root polishing failed on ({a!r}, {b!r}): D={value!r}", (a, b))
        out.append((float(root), 1.0 / slope))
    return out


def find_poles(params: ModelParams) -> PoleSet:
    """All real roots of ``D_+`` and ``D_-``.

    One bracket per open interval between consecutive channel energies that
    carry weight in the given parity, plus the two exterior intervals.
    ``D_±`` is strictly increasing between its poles, so each bracket holds
    exactly one root. Channel energies whose weight vanishes for a parity
    (``1 ± cos kL = 0``) are not poles of that factor and are skipped, so
    no spurious or duplicate roots arise.
    """
    if not params.coupling > 0:
        raise ParameterError("find_poles requires coupling g > 0")
    pw = parity_weights(params)
    poles = []
    for parity, weights in ((PLUS, pw.plus), (MINUS, pw.minus)):
        for omega, weight in _parity_roots(params, pw.energies, weights):
            poles.append(Pole(omega, parity, weight))
    poles.sort(key=lambda p: (p.omega, p.parity))
    return PoleSet(params, tuple(poles))


def parity_value(omega: float, parity: str, params: ModelParams) -> tuple[float, float]:
    """``(D_±(ω), D_±'(ω))`` from the merged parity weights."""
    pw = parity_weights(params)
    weights = pw.plus if parity == PLUS else pw.minus
    _collision_check(omega, pw.energies)
    value, slope = kernels.parity_eval(float(omega), params.impurity_energy,
                                       pw.energies, np.ascontiguousarray(weights))
    return float(value), float(slope)


def reconstruct_amplitudes(poles: PoleSet, times) -> tuple[np.ndarray, np.ndarray]:
    """Impurity amplitudes ``<A|psi(t)>``, ``<B|psi(t)>`` from the residues.

    For an excitation starting on A::

        a_A(t) = ½ Σ_+ w e^{-iωt} + ½ Σ_- w e^{-iωt}
        a_B(t) = ½ Σ_+ w e^{-iωt} - ½ Σ_- w e^{-iωt}

    with ``w = 1/D_±'`` at each root.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    om_p, w_p = poles.of_parity(PLUS)
    om_m, w_m = poles.of_parity(MINUS)
    start_a = 0.5 * (w_p.sum() + w_m.sum())
    start_b = 0.5 * (w_p.sum() - w_m.sum())
    if abs(start_a - 1.0) > 1e-6 or abs(start_b) > 1e-6:
        raise CompletenessError(
            f"residues give a_A(0)={start_a!r}, a_B(0)={start_b!r}; pole set incomplete")
    sym = 0.5 * (np.exp(-1j * np.outer(t, om_p)) @ w_p)
    anti = 0.5 * (np.exp(-1j * np.outer(t, om_m)) @ w_m)
    return sym + anti, sym - anti


__all__ = [
    "MINUS", "PARITIES", "PLUS", "ParityWeights", "Pole", "PoleSet",
    "d_pm", "d_pm_gamma", "find_poles", "in_circle_root", "lambda_closed",
    "lambda_continuum", "lambda_sum", "lambda_sum_derivative", "parity_value",
    "parity_weights", "reconstruct_amplitudes",
]
