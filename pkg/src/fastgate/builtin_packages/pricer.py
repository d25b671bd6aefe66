"""European call pricing with zero rates and dividends, plus Greeks.

All functions are pure: same inputs, same outputs, no state anywhere.
"""

from __future__ import annotations

import math

from ..errors import DomainError, NoSolution

VOL_LO = 1e-6
VOL_HI = 10.0
MAX_TIME = 100.0
BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200


def _norm_cdf(x: float) -> float:
    # erfc keeps full double precision in the tails
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _require_number(name: str, x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DomainError(f"{name} must be a number, got {type(x).__name__}")
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite")
    return float(x)


def _check_params(strike, time, spot, vol) -> tuple[float, float, float, float]:
    strike = _require_number("strike", strike)
    time = _require_number("time", time)
    spot = _require_number("spot", spot)
    vol = _require_number("vol", vol)
    if strike <= 0 or time <= 0 or spot <= 0 or vol <= 0:
        raise DomainError("strike, time, spot and vol must all be strictly positive")
    if vol > VOL_HI:
        raise DomainError(f"vol must be at most {VOL_HI}")
    if time > MAX_TIME:
        raise DomainError(f"time must be at most {MAX_TIME} years")
    return strike, time, spot, vol


def _d1_d2(strike, time, spot, vol):
    sqrt_t = math.sqrt(time)
    d1 = (math.log(spot / strike) + 0.5 * vol * vol * time) / (vol * sqrt_t)
    return d1, d1 - vol * sqrt_t


def price(strike, time, spot, vol):
    """Call value: spot*N(d1) - strike*N(d2)."""
    strike, time, spot, vol = _check_params(strike, time, spot, vol)
    d1, d2 = _d1_d2(strike, time, spot, vol)
    return spot * _norm_cdf(d1) - strike * _norm_cdf(d2)


def delta(strike, time, spot, vol):
    """Sensitivity to spot: N(d1)."""
    strike, time, spot, vol = _check_params(strike, time, spot, vol)
    d1, _ = _d1_d2(strike, time, spot, vol)
    return _norm_cdf(d1)


def gamma(strike, time, spot, vol):
    """Second sensitivity to spot: n(d1) / (spot * vol * sqrt(time))."""
    strike, time, spot, vol = _check_params(strike, time, spot, vol)
    d1, _ = _d1_d2(strike, time, spot, vol)
    return _norm_pdf(d1) / (spot * vol * math.sqrt(time))


def vega(strike, time, spot, vol):
    """Sensitivity to volatility: spot * n(d1) * sqrt(time)."""
    strike, time, spot, vol = _check_params(strike, time, spot, vol)
    d1, _ = _d1_d2(strike, time, spot, vol)
    return spot * _norm_pdf(d1) * math.sqrt(time)


def implied_vol(strike, time, spot, price):
    """The unique vol in (1e-6, 10) that reproduces the given call price.

    Bisection until the re-priced value is within 1e-10 of the target.
    The price must lie strictly inside the arbitrage bounds
    max(spot - strike, 0) < price < spot.
    """
    target = _require_number("price", price)
    strike = _require_number("strike", strike)
    time = _require_number("time", time)
    spot = _require_number("spot", spot)
    if strike <= 0 or time <= 0 or spot <= 0:
        raise DomainError("strike, time and spot must all be strictly positive")
    intrinsic = max(spot - strike, 0.0)
    if not (intrinsic < target < spot):
        raise NoSolution(
            f"price {target} violates the arbitrage bounds "
            f"({intrinsic} < price < {spot})"
        )

    def value_at(vol: float) -> float:
        d1, d2 = _d1_d2(strike, time, spot, vol)
        return spot * _norm_cdf(d1) - strike * _norm_cdf(d2)

    lo, hi = VOL_LO, VOL_HI
    if value_at(lo) > target or value_at(hi) < target:
        raise NoSolution(f"no vol in ({VOL_LO}, {VOL_HI}) prices to {target}")
    mid = 0.5 * (lo + hi)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        diff = value_at(mid) - target
        if abs(diff) < BISECT_TOL:
            return mid
        if diff < 0:
            lo = mid
        else:
            hi = mid
    return mid


def get_value(stock_portfolio):
    """Book value of a portfolio: the summed call value over its rows.

    Each row is either a positional [strike, time, spot, vol] array or an
    object with those parameter names.
    """
    if not isinstance(stock_portfolio, list):
        raise DomainError("stock_portfolio must be an array of parameter sets")
    total = 0.0
    for i, row in enumerate(stock_portfolio):
        if isinstance(row, list):
            if len(row) != 4:
                raise DomainError(f"portfolio row {i} must have 4 entries, got {len(row)}")
            total += price(*row)
        elif isinstance(row, dict):
            try:
                total += price(**row)
            except TypeError:
                raise DomainError(
                    f"portfolio row {i} must carry strike, time, spot and vol"
                ) from None
        else:
            raise DomainError(f"portfolio row {i} must be an array or object")
    return total


FUNCTIONS = {
    "price": price,
    "delta": delta,
    "gamma": gamma,
    "vega": vega,
    "implied_vol": implied_vol,
    "get_value": get_value,
}
