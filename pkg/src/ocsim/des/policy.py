"""Continuous-review (Q, R) inventory policy and transport mode choice."""

from __future__ import annotations

import math
import statistics
from collections.abc import Sequence
from dataclasses import dataclass, replace
from enum import Enum

from ..network import Mode, Route, TransportConstants

_EPS = 1e-9


class PolicyMode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class TransportStrategy(str, Enum):
    GROUND_ONLY = "ground_only"
    AIR_OVER_500 = "air_over_500"


def z_alpha(alpha: float) -> float:
    """Standard normal quantile for service level ``alpha``."""
    if not 0.5 <= alpha < 1.0:
        raise ValueError(f"service level must be in [0.5, 1), got {alpha}")
    return statistics.NormalDist().inv_cdf(alpha)


def _ceil(x: float) -> int:
    return int(math.ceil(x - _EPS))


def qr_parameters(
    mu_D: float, sigma_D: float, T: float, mu_LT: float, sigma_LT: float, alpha: float
) -> tuple[int, int]:
    """Order quantity and reorder point.

    Q covers one cycle of mean demand; R covers mean lead-time demand plus
    safety stock against both demand and lead-time variability.
    """
    if min(mu_D, T, mu_LT) < 0 or min(sigma_D, sigma_LT) < 0:
        raise ValueError("demand, cycle and lead-time statistics must be non-negative")
    z = z_alpha(alpha)
    q = max(1, _ceil(mu_D * T))
    safety = z * math.sqrt(mu_LT * sigma_D ** 2 + mu_D ** 2 * sigma_LT ** 2)
    r = max(0, _ceil(mu_D * mu_LT + safety))
    return q, r


@dataclass(frozen=True)
class InventoryPolicy:
    mu_D: float
    sigma_D: float
    T: float
    mu_LT: float
    sigma_LT: float
    alpha: float = 0.95
    mode: PolicyMode = PolicyMode.STATIC
    Q: int = 1
    R: int = 0

    @classmethod
    def build(cls, mu_D: float, sigma_D: float, T: float, mu_LT: float, sigma_LT: float,
              alpha: float = 0.95, mode: PolicyMode = PolicyMode.STATIC) -> InventoryPolicy:
        q, r = qr_parameters(mu_D, sigma_D, T, mu_LT, sigma_LT, alpha)
        return cls(mu_D, sigma_D, T, mu_LT, sigma_LT, alpha, PolicyMode(mode), q, r)

    @property
    def z_alpha(self) -> float:
        return z_alpha(self.alpha)

    @property
    def order_up_to(self) -> int:
        return self.R + self.Q


def reorder_check(position: int, policy: InventoryPolicy) -> int:
    """Quantity to order now, 0 if none.

    Below R, order the smallest multiple of Q that lifts the position back to
    at least R, as a single order (a single demand can exceed Q).
    """
    if position >= policy.R:
        return 0
    batches = -(-(policy.R - position) // policy.Q)
    return batches * policy.Q


def dynamic_policy_update(
    policy: InventoryPolicy, trailing_week_demand: Sequence[float]
) -> InventoryPolicy:
    """Re-estimate demand from the last week's daily totals and recompute (Q, R)."""
    if policy.mode is not PolicyMode.DYNAMIC:
        raise ValueError("policy is not dynamic")
    if not trailing_week_demand:
        return policy
    mu = statistics.fmean(trailing_week_demand)
    sigma = statistics.pstdev(trailing_week_demand)
    q, r = qr_parameters(mu, sigma, policy.T, policy.mu_LT, policy.sigma_LT, policy.alpha)
    return replace(policy, mu_D=mu, sigma_D=sigma, Q=q, R=r)


def select_mode(route: Route, strategy: TransportStrategy | str,
                constants: TransportConstants = TransportConstants()) -> Mode:
    strategy = TransportStrategy(strategy)
    if strategy is TransportStrategy.AIR_OVER_500 and route.distance > constants.air_threshold_miles:
        return Mode.AIR
    return Mode.GROUND
