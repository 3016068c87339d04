"""Two-company risk model and barrier geometry.

Two companies share one claim stream.  Company i holds initial reserve
``x_i`` and collects premium at rate ``p_i``, so its reserve crosses
zero exactly when the aggregate claim process exceeds the line
``b_i(t) = x_i + p_i * t``.  The embedded random walks
``S_i(n) = claims(n) - p_i * arrivals(n)`` have per-step drift ``-m_i``
with ``m_i = p_i * E[interarrival] - E[claim]``; the safety-loading
condition ``p2 > rho = E[claim]/E[interarrival]`` makes both drifts
strictly negative so that reserves grow without bound.

With reserves on the ray ``(x1, x2) = (a*K, K)`` and ``a < 1`` the two
barriers cross at time ``T_tilde`` and the drift-adjusted lines at
``T = c*K``; those epochs split every path into the segment where the
lower barrier is ``b1`` and the segment where it is ``b2``.  For
``a >= 1`` the barriers never cross and both crossing problems are
one-dimensional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .distributions import HeavyTailDistribution
from .errors import UnorderedPremiumsError, UnstableModelError

__all__ = ["Regime", "RiskModel", "BarrierInstance", "build_model", "make_instance"]


class Regime(Enum):
    TWO_DIM = "two_dim"
    ONE_DIM = "one_dim"


@dataclass(frozen=True)
class RiskModel:
    """Claim law, inter-arrival law and the two premium rates.

    Derived fields: ``lam`` and ``mu`` are the reciprocal means of the
    inter-arrival and claim laws, ``rho = lam/mu`` is the loading, and
    ``m1 > m2`` are the per-step drifts of the embedded walks.
    ``stable`` records whether the safety-loading condition holds;
    :func:`build_model` refuses unstable models, the
    :meth:`diagnostic` constructor admits them for simulation-only test
    instances.
    """

    claim: HeavyTailDistribution
    interarrival: HeavyTailDistribution
    p1: float
    p2: float
    stable: bool = field(init=False)
    interarrival_third_moment_finite: bool = field(init=False)
    _checked: bool = True

    def __post_init__(self):
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError(f"premium rates must be positive, got ({self.p1}, {self.p2})")
        if self.p1 <= self.p2:
            raise UnorderedPremiumsError(
                f"premium rates must satisfy p1 > p2, got p1={self.p1}, p2={self.p2}"
            )
        mean_claim = self.claim.mean()
        mean_inter = self.interarrival.mean()
        if not (math.isfinite(mean_inter) and mean_inter > 0):
            raise ValueError("inter-arrival law must have a positive finite mean")
        stable = self.p2 * mean_inter > mean_claim
        object.__setattr__(self, "stable", stable)
        object.__setattr__(
            self,
            "interarrival_third_moment_finite",
            math.isfinite(self.interarrival.third_moment()),
        )
        if self._checked:
            if not (math.isfinite(mean_claim) and mean_claim > 0):
                raise ValueError("claim law must have a positive finite mean")
            if not stable:
                raise UnstableModelError(
                    f"Unstable: p2={self.p2} must exceed rho={self.rho} "
                    "(safety loading) so that reserves drift to infinity"
                )

    @classmethod
    def diagnostic(cls, claim, interarrival, p1, p2) -> "RiskModel":
        """Build a model without the stability or claim-mean checks.

        Only the premium ordering is enforced.  Intended for
        finite-horizon simulation oracles; the asymptotics layer
        refuses unstable models.
        """
        return cls(claim, interarrival, float(p1), float(p2), _checked=False)

    @property
    def lam(self) -> float:
        """Arrival rate 1/E[interarrival]."""
        return 1.0 / self.interarrival.mean()

    @property
    def mu(self) -> float:
        """Reciprocal mean claim 1/E[claim]."""
        return 1.0 / self.claim.mean()

    @property
    def rho(self) -> float:
        """Loading E[claim]/E[interarrival] = lam/mu."""
        return self.claim.mean() / self.interarrival.mean()

    @property
    def m1(self) -> float:
        return self.p1 * self.interarrival.mean() - self.claim.mean()

    @property
    def m2(self) -> float:
        return self.p2 * self.interarrival.mean() - self.claim.mean()

    def drift(self, walk: int) -> float:
        if walk == 1:
            return self.m1
        if walk == 2:
            return self.m2
        raise ValueError(f"walk must be 1 or 2, got {walk}")

    def premium(self, walk: int) -> float:
        if walk == 1:
            return self.p1
        if walk == 2:
            return self.p2
        raise ValueError(f"walk must be 1 or 2, got {walk}")

    def make_instance(self, a: float, K: float) -> "BarrierInstance":
        return make_instance(self, a, K)


@dataclass(frozen=True)
class BarrierInstance:
    """A concrete barrier problem: reserves ``(x1, x2) = (a*K, K)``.

    ``T_tilde`` is where the barriers themselves cross, ``T`` where the
    drift-adjusted lines cross; ``T = c*K`` with
    ``c = (1-a)/(m1-m2)`` and ``T_tilde = T / lam``.  Both are negative
    when ``a > 1`` (the lines crossed in the past) and the instance is
    one-dimensional.
    """

    a: float
    K: float
    x1: float
    x2: float
    T: float
    T_tilde: float
    c: float
    regime: Regime
    p1: float
    p2: float

    def barrier_value(self, which: int, t: float) -> float:
        """Barrier height ``x_i + p_i * t`` at time t >= 0."""
        if t < 0:
            raise ValueError(f"barrier defined for t >= 0, got {t}")
        if which == 1:
            return self.x1 + self.p1 * t
        if which == 2:
            return self.x2 + self.p2 * t
        raise ValueError(f"barrier index must be 1 or 2, got {which}")


def build_model(
    claim: HeavyTailDistribution,
    interarrival: HeavyTailDistribution,
    p1: float,
    p2: float,
) -> RiskModel:
    """Validate and build a :class:`RiskModel`.

    Raises :class:`UnorderedPremiumsError` unless ``p1 > p2`` and
    :class:`UnstableModelError` unless ``p2`` strictly exceeds the
    loading ``rho`` (equality is rejected: zero drift makes the
    crossing epochs and every asymptote degenerate).  Whether
    ``E[interarrival^3]`` is finite is recorded on the model as a
    warning flag, not enforced.
    """
    return RiskModel(claim, interarrival, float(p1), float(p2))


def make_instance(model: RiskModel, a: float, K: float) -> BarrierInstance:
    """Build the barrier instance with reserves ``(a*K, K)``."""
    a = float(a)
    K = float(K)
    if a <= 0 or K <= 0:
        raise ValueError(f"need a > 0 and K > 0, got a={a}, K={K}")
    x1 = a * K
    x2 = K
    dm = model.m1 - model.m2  # = (p1 - p2) * E[interarrival] > 0
    T = (x2 - x1) / dm
    T_tilde = (x2 - x1) / (model.p1 - model.p2)
    c = (1.0 - a) / dm
    regime = Regime.TWO_DIM if a < 1.0 else Regime.ONE_DIM
    return BarrierInstance(
        a=a, K=K, x1=x1, x2=x2, T=T, T_tilde=T_tilde, c=c,
        regime=regime, p1=model.p1, p2=model.p2,
    )
