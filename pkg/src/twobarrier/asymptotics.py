"""Closed-form and asymptotic crossing probabilities.

The building block is the barrier-crossing integral

    i_integral(model, i, lo, hi, w) = int_lo^hi tail(w + m_i * t) dt,

evaluated exactly through the substitution ``u = w + m_i t``, which
reduces it to two tail-integral calls.  Everything else assembles these
blocks:

* ``h_value`` integrates the claim tail along the upper envelope
  ``max(x1 + m1 t, x2 + m2 t)`` of the drift-adjusted lines; it is the
  first-order asymptote for crossing both barriers (simultaneously or
  not, the two agree to first order).
* ``j_value`` integrates along the lower envelope and is the asymptote
  for crossing at least one barrier.
* ``veraverbeke_asymptote`` is the classical one-dimensional ruin
  asymptote ``(1/(m_i mu)) * integrated_tail_complement(x)``, which
  equals ``i_integral(i, 0, inf, x)`` identically.

Algebraic identities tie these together exactly (not merely in the
limit); the test suite and the batch harness verify them at 1e-12
relative tolerance for closed-form families:

* splitting at the line-crossing epoch T:
  ``vera(1, x1) + vera(2, x2) - H = J``;
* ``H + J = i1[0,inf](x1) + i2[0,inf](x2)``;
* the two envelope pieces past T coincide up to the drift ratio:
  ``i1[T,inf](x1) = (m2/m1) * i2[T,inf](x2)``.

Direct quadrature of the max/min envelope forms is provided as an
independent cross-check of the split representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import UnstableModelError
from .model import BarrierInstance, Regime, RiskModel

__all__ = [
    "AsymptoteReport",
    "i_integral",
    "h_value",
    "j_value",
    "h_value_direct",
    "j_value_direct",
    "veraverbeke_asymptote",
    "psi_asymptotes",
    "finite_horizon_max_asymptote",
    "stable_norming_constant",
]


def _require_stable(model: RiskModel) -> None:
    if not model.stable:
        raise UnstableModelError(
            "Unstable: asymptotic formulas need positive drifts (p2 > rho)"
        )


def i_integral(model: RiskModel, walk: int, lo: float, hi: float, w: float) -> float:
    """``int_lo^hi tail(w + m_walk * t) dt`` with ``hi`` possibly inf.

    Exact when the claim tail integral is closed-form; infinity is a
    first-class endpoint, never a silent truncation.
    """
    _require_stable(model)
    if lo < 0 or w < 0:
        raise ValueError(f"need lo >= 0 and w >= 0, got lo={lo}, w={w}")
    if hi < lo:
        raise ValueError(f"need lo <= hi, got [{lo}, {hi}]")
    m = model.drift(walk)
    upper = 0.0 if math.isinf(hi) else model.claim.tail_integral(w + m * hi)
    return (model.claim.tail_integral(w + m * lo) - upper) / m


def h_value(model: RiskModel, instance: BarrierInstance) -> float:
    """Tail integral along the upper envelope of the two drift lines.

    For ``a < 1`` the envelope is the line of walk 2 up to the crossing
    epoch T and the line of walk 1 after it; for ``a >= 1`` the lines
    never cross and the value degenerates to ``i1[0, inf](x1)``.
    """
    if instance.regime is Regime.ONE_DIM:
        return i_integral(model, 1, 0.0, math.inf, instance.x1)
    return (
        i_integral(model, 2, 0.0, instance.T, instance.x2)
        + i_integral(model, 1, instance.T, math.inf, instance.x1)
    )


def j_value(model: RiskModel, instance: BarrierInstance) -> float:
    """Tail integral along the lower envelope; mirrors :func:`h_value`."""
    if instance.regime is Regime.ONE_DIM:
        return i_integral(model, 2, 0.0, math.inf, instance.x2)
    return (
        i_integral(model, 1, 0.0, instance.T, instance.x1)
        + i_integral(model, 2, instance.T, math.inf, instance.x2)
    )


def _envelope_quadrature(model: RiskModel, instance: BarrierInstance, upper: bool) -> float:
    """Adaptive quadrature of tail(max/min of the two drift lines)."""
    _require_stable(model)
    pick = max if upper else min
    tail = model.claim.tail

    def integrand(t: float) -> float:
        return float(tail(pick(instance.x1 + model.m1 * t, instance.x2 + model.m2 * t)))

    t_split = instance.T if instance.regime is Regime.TWO_DIM else 1.0
    finite, _ = integrate.quad(
        integrand, 0.0, t_split, epsabs=1e-13, epsrel=1e-11, limit=400
    )
    rest, _ = integrate.quad(
        integrand, t_split, math.inf, epsabs=1e-13, epsrel=1e-11, limit=400
    )
    return finite + rest


def h_value_direct(model: RiskModel, instance: BarrierInstance) -> float:
    """Quadrature of the upper-envelope form; cross-check for
    :func:`h_value` (the split at T is used only as a breakpoint)."""
    return _envelope_quadrature(model, instance, upper=True)


def j_value_direct(model: RiskModel, instance: BarrierInstance) -> float:
    """Quadrature of the lower-envelope form; cross-check for
    :func:`j_value`."""
    return _envelope_quadrature(model, instance, upper=False)


def veraverbeke_asymptote(model: RiskModel, walk: int, x: float) -> float:
    """One-dimensional ruin asymptote for walk ``i`` at level ``x``:
    ``(1/(m_i * mu)) * integrated_tail_complement(x)``, computed as
    ``tail_integral(x) / m_i`` (the two forms agree identically)."""
    _require_stable(model)
    if x <= 0:
        raise ValueError(f"barrier level must be positive, got {x}")
    return model.claim.tail_integral(x) / model.drift(walk)


def finite_horizon_max_asymptote(
    model: RiskModel, walk: int, x: float, horizon: float
) -> float:
    """First-order probability that walk ``i`` exceeds ``x`` within the
    first ``horizon`` drift-time units: ``i_integral(i, 0, horizon, x)``.
    Recovers :func:`veraverbeke_asymptote` as horizon -> inf."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    return i_integral(model, walk, 0.0, horizon, x)


@dataclass(frozen=True)
class AsymptoteReport:
    """First-order asymptotes for the three crossing probabilities.

    ``psi_wedge_asym`` covers crossing at least one barrier,
    ``psi_vee_asym`` simultaneous crossing, ``psi_times_asym`` crossing
    both barriers at possibly different times; the latter two coincide
    to first order.  ``components`` holds the envelope pieces the
    asymptotes are assembled from.
    """

    psi_wedge_asym: float
    psi_vee_asym: float
    psi_times_asym: float
    regime: Regime
    components: dict[str, float]


def psi_asymptotes(model: RiskModel, instance: BarrierInstance) -> AsymptoteReport:
    """Assemble the three crossing asymptotes for an instance.

    In both regimes the at-least-one asymptote is the lower-envelope
    integral J and the both-barrier asymptotes are the upper-envelope
    integral H; for ``a >= 1`` these degenerate to the one-dimensional
    values ``vera(2, x2)`` and ``vera(1, x1)``.  The equivalent
    three-term form ``vera1 + vera2 - H`` is reported alongside J (they
    agree identically; J avoids the cancellation at large K).
    """
    h = h_value(model, instance)
    j = j_value(model, instance)
    vera1 = veraverbeke_asymptote(model, 1, instance.x1)
    vera2 = veraverbeke_asymptote(model, 2, instance.x2)
    components = {
        "h": h,
        "j": j,
        "veraverbeke_1_x1": vera1,
        "veraverbeke_2_x2": vera2,
        "wedge_three_term": vera1 + vera2 - h,
    }
    if instance.regime is Regime.TWO_DIM:
        components.update(
            {
                "i1_0_T_x1": i_integral(model, 1, 0.0, instance.T, instance.x1),
                "i2_0_T_x2": i_integral(model, 2, 0.0, instance.T, instance.x2),
                "i1_T_inf_x1": i_integral(model, 1, instance.T, math.inf, instance.x1),
                "i2_T_inf_x2": i_integral(model, 2, instance.T, math.inf, instance.x2),
            }
        )
    return AsymptoteReport(
        psi_wedge_asym=j,
        psi_vee_asym=h,
        psi_times_asym=h,
        regime=instance.regime,
        components=components,
    )


def stable_norming_constant(alpha: float) -> float:
    """Norming constant of the one-sided alpha-stable law that the
    centered claim sums converge to: ``(1-a)/(Gamma(2-a) cos(pi a/2))``
    for ``1 < a < 2``.  Diagnostic only."""
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"index must lie strictly inside (1, 2), got {alpha}")
    return (1.0 - alpha) / (math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))
