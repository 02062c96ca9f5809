"""CES Fisher markets: demand, potential, and multiplicative price updates.

Each buyer j has budget w_j and a CES utility <a_j, x^rho_j>^(1/rho_j) with
elasticity rho_j in (0, 1) (the gross-substitutes regime).  Each seller i
holds one unit of good i and knows only an upper bound rho_hat_i on the
buyers' elasticities.  Updated prices move by p_i <- p_i * x(p)_i^(1-rho_hat_i)
where x is total demand; sellers may update asynchronously, and the distance
to the equilibrium price vector contracts by max_i rho_hat_i per epoch (a
stretch of rounds in which every seller updates at least once).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NonFinite
from .linalg import thompson_metric_vec


@dataclass(frozen=True)
class FisherMarket:
    """Market data: valuations (n, d), budgets (n,), elasticities, seller bounds."""

    valuations: np.ndarray
    budgets: np.ndarray
    elasticities: np.ndarray  # rho_j per buyer, in (0, 1)
    seller_bounds: np.ndarray  # rho_hat_i per good, in [max_j rho_j, 1)

    @classmethod
    def create(cls, valuations, budgets, elasticities, seller_bounds) -> "FisherMarket":
        a = np.asarray(valuations, dtype=float)
        if a.ndim != 2:
            raise InvalidInput("valuations must be a 2-D array (buyers x goods)")
        n, d = a.shape
        if np.any(a < 0):
            raise InvalidInput("valuations must be nonnegative")
        if np.abs(a.sum(axis=1) - 1.0).max() > 1e-12:
            raise InvalidInput("each valuation row must sum to 1 within 1e-12")
        if not np.all(a.sum(axis=0) > 0):
            raise InvalidInput("every good needs positive total valuation")
        w = np.asarray(budgets, dtype=float)
        if w.shape != (n,) or not np.all(w > 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInput("budgets must be positive and sum to 1 within 1e-12")
        rho = np.asarray(elasticities, dtype=float)
        if rho.shape != (n,) or not np.all((rho > 0) & (rho < 1)):
            raise InvalidInput("elasticities must lie strictly inside (0, 1)")
        rho_hat = np.asarray(seller_bounds, dtype=float)
        if rho_hat.shape != (d,):
            raise InvalidInput(f"expected {d} seller bounds, got shape {rho_hat.shape}")
        if np.any(rho_hat < rho.max()) or np.any(rho_hat >= 1):
            raise InvalidInput("seller bounds must lie in [max elasticity, 1)")
        return cls(valuations=a, budgets=w, elasticities=rho, seller_bounds=rho_hat)

    @property
    def n_buyers(self) -> int:
        return self.valuations.shape[0]

    @property
    def d_goods(self) -> int:
        return self.valuations.shape[1]

    @property
    def rho_hat_max(self) -> float:
        return float(self.seller_bounds.max())

    def to_json(self) -> dict:
        return {
            "valuations": self.valuations.tolist(),
            "budgets": self.budgets.tolist(),
            "rho": self.elasticities.tolist(),
            "rho_hat": self.seller_bounds.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FisherMarket":
        return cls.create(obj["valuations"], obj["budgets"], obj["rho"], obj["rho_hat"])


def _check_prices(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not np.all(p > 0) or not np.all(np.isfinite(p)):
        raise InvalidInput("prices must be strictly positive and finite")
    return p


def buyer_demand(market: FisherMarket, j: int, p) -> np.ndarray:
    """Utility-maximizing demand of buyer j at prices p (budget exhausted)."""
    p = _check_prices(p)
    rho = market.elasticities[j]
    e = 1.0 / (1.0 - rho)
    av = market.valuations[j] ** e
    numer = av * p ** (-e)
    denom = float(av @ p ** (-rho * e))
    return market.budgets[j] * numer / denom


def total_demand(market: FisherMarket, p) -> np.ndarray:
    """Sum of buyer demands; satisfies <p, x(p)> = 1."""
    p = _check_prices(p)
    out = np.zeros(market.d_goods)
    for j in range(market.n_buyers):
        out += buyer_demand(market, j, p)
    return out


def potential(market: FisherMarket, p) -> float:
    """Convex potential whose minimizer is the equilibrium price vector.

    Its gradient is exactly 1 - x(p) coordinatewise.
    """
    p = _check_prices(p)
    total = float(p.sum())
    for j in range(market.n_buyers):
        rho = market.elasticities[j]
        e = 1.0 / (1.0 - rho)
        av = market.valuations[j] ** e
        total += market.budgets[j] * (1.0 - rho) / rho * math.log(float(av @ p ** (-rho * e)))
    return total


@dataclass(frozen=True)
class PriceState:
    """Prices after ``step`` rounds plus per-good update counts."""

    step: int
    p: np.ndarray
    update_counts: np.ndarray  # how many times each good's price was updated

    @classmethod
    def start(cls, p) -> "PriceState":
        p = _check_prices(p)
        return cls(step=0, p=p, update_counts=np.zeros(p.shape[0], dtype=int))


def tatonnement_step(market: FisherMarket, state: PriceState, indices) -> PriceState:
    """One round: sellers in ``indices`` reprice by their own excess demand.

    With all goods selected and a common bound equal to the shared elasticity
    this reproduces the synchronous multiplicative rule.
    """
    idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
    if idx.size == 0:
        raise InvalidInput("update set must be non-empty")
    if idx.min() < 0 or idx.max() >= market.d_goods:
        raise InvalidInput("update set contains an out-of-range good index")
    x = total_demand(market, state.p)
    p_new = state.p.copy()
    p_new[idx] = state.p[idx] * x[idx] ** (1.0 - market.seller_bounds[idx])
    if np.any(p_new <= 0) or not np.all(np.isfinite(p_new)):
        # positivity is preserved analytically; reaching zero is a hard error
        raise NonFinite("price update underflowed to a non-positive value")
    counts = state.update_counts.copy()
    counts[idx] += 1
    return PriceState(step=state.step + 1, p=p_new, update_counts=counts)


@dataclass(frozen=True)
class UpdateSchedule:
    """Explicit per-round subsets of goods whose sellers update."""

    rounds: tuple

    @classmethod
    def create(cls, rounds) -> "UpdateSchedule":
        cleaned = []
        for r, subset in enumerate(rounds):
            s = tuple(sorted(set(int(i) for i in subset)))
            if not s:
                raise InvalidInput(f"round {r} has an empty update set")
            cleaned.append(s)
        return cls(rounds=tuple(cleaned))

    @classmethod
    def synchronous(cls, d: int, rounds: int) -> "UpdateSchedule":
        return cls.create([tuple(range(d))] * rounds)

    @classmethod
    def round_robin(cls, d: int, rounds: int) -> "UpdateSchedule":
        return cls.create([(t % d,) for t in range(rounds)])

    @classmethod
    def random_coverage(cls, d: int, epochs: int, seed: int, extra: int = 2) -> "UpdateSchedule":
        """Random subsets arranged so every good updates at least once per epoch."""
        rng = np.random.default_rng(seed)
        rounds = []
        for _ in range(epochs):
            perm = rng.permutation(d)
            cut = rng.integers(1, d + 1)
            rounds.append(tuple(perm[:cut]))
            leftover = [i for i in range(d) if i not in rounds[-1]]
            if leftover:
                rounds.append(tuple(leftover))
            for _ in range(int(rng.integers(0, extra + 1))):
                size = int(rng.integers(1, d + 1))
                rounds.append(tuple(rng.choice(d, size=size, replace=False)))
        return cls.create(rounds)

    def to_json(self) -> dict:
        return {"rounds": [list(r) for r in self.rounds]}

    @classmethod
    def from_json(cls, obj: dict) -> "UpdateSchedule":
        return cls.create(obj["rounds"])

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def epoch_boundaries(schedule: UpdateSchedule, d: int) -> list[int]:
    """Rounds N(1), N(2), ... by which every good has updated at least t times.

    Only complete epochs are reported; a schedule that never covers some good
    yields an empty list (one unbounded epoch, no contraction claim).
    """
    counts = np.zeros(d, dtype=int)
    boundaries = []
    target = 1
    for r, subset in enumerate(schedule.rounds, start=1):
        counts[list(subset)] += 1
        while counts.min() >= target:
            boundaries.append(r)
            target += 1
    return boundaries


def run_schedule(
    market: FisherMarket, p1, schedule: UpdateSchedule
) -> tuple[list[PriceState], list[int]]:
    """Apply a schedule round by round; return all states and epoch boundaries."""
    state = PriceState.start(p1)
    states = [state]
    for subset in schedule.rounds:
        state = tatonnement_step(market, state, subset)
        states.append(state)
    return states, epoch_boundaries(schedule, market.d_goods)


def equilibrium_prices(
    market: FisherMarket, *, max_rounds: int = 2000, tol: float = 1e-10
) -> np.ndarray:
    """Long-run equilibrium oracle: synchronous updates until excess demand
    is below ``tol`` in sup norm."""
    state = PriceState.start(np.full(market.d_goods, 1.0 / market.d_goods))
    everyone = tuple(range(market.d_goods))
    for _ in range(max_rounds):
        x = total_demand(market, state.p)
        if np.abs(x - 1.0).max() <= tol:
            return state.p
        state = tatonnement_step(market, state, everyone)
    x = total_demand(market, state.p)
    if np.abs(x - 1.0).max() <= tol:
        return state.p
    raise NonFinite(
        f"equilibrium not reached within {max_rounds} rounds (residual {np.abs(x - 1.0).max():.3e})"
    )


def cheung_baseline_step(market: FisherMarket, p) -> np.ndarray:
    """Proportional-response style update p <- p * x(p) for common-elasticity markets."""
    rho = market.elasticities
    if np.abs(rho - rho[0]).max() > 0:
        raise InvalidInput("baseline update requires a common elasticity across buyers")
    p = _check_prices(p)
    return p * total_demand(market, p)


def metric_comparability_check(u, v) -> tuple[float, float, bool]:
    """Thompson distance vs the relative sup deviation max_i |1 - u_i/v_i|.

    Whenever the distance is below log 3, each quantity bounds the other
    within a factor of three; ``holds`` reports that two-sided bound.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d_t = thompson_metric_vec(u, v)
    ratio = float(np.abs(1.0 - u / v).max())
    slack = 1e-15 * (1.0 + ratio + d_t)
    holds = (ratio / 3.0 <= d_t + slack) and (d_t <= 3.0 * ratio + slack)
    return d_t, ratio, holds
