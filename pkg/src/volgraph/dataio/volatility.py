"""Return and volatility arithmetic on adjusted close series.

Two windowing conventions coexist deliberately:

* :func:`volatility` anchors at a day index — the window [t, t+tau]
  holds tau+1 return terms and the divisor is tau.
* Labels and the trailing baseline use :func:`windowed_volatility` over
  explicit index bounds, keeping the same "terms minus one" divisor.

The regression target is the natural log of volatility, floored at 1e-8
so an all-equal window maps to a finite value.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from ..errors import InsufficientDataError
from .records import PriceSeries

LOG_FLOOR = 1e-8


def adjusted_return(series: PriceSeries, t: int) -> float:
    """Day-over-day adjusted return p_t/p_{t-1} - 1 at trading-day index t."""
    if t < 1 or t >= len(series):
        raise InsufficientDataError(
            f"{series.company_id}: return index {t} outside 1..{len(series) - 1}"
        )
    return float(series.closes[t] / series.closes[t - 1] - 1.0)


def returns_slice(series: PriceSeries, a: int, b: int) -> np.ndarray:
    """Returns for trading-day indices a..b inclusive."""
    if a < 1 or b >= len(series) or a > b:
        raise InsufficientDataError(
            f"{series.company_id}: return window [{a},{b}] outside series of length {len(series)}"
        )
    closes = series.closes
    return closes[a : b + 1] / closes[a - 1 : b] - 1.0


def volatility(series: PriceSeries, t: int, tau: int) -> float:
    """Dispersion of the tau+1 returns at indices t..t+tau, divisor tau."""
    if tau < 1:
        raise InsufficientDataError(f"window length tau={tau} must be >= 1")
    r = returns_slice(series, t, t + tau)
    return float(np.sqrt(np.sum((r - r.mean()) ** 2) / tau))


def windowed_volatility(series: PriceSeries, a: int, b: int) -> float:
    """Dispersion of returns at indices a..b inclusive, divisor (b-a)."""
    if b <= a:
        raise InsufficientDataError(f"window [{a},{b}] needs at least two returns")
    r = returns_slice(series, a, b)
    return float(np.sqrt(np.sum((r - r.mean()) ** 2) / (b - a)))


def log_volatility(vol: float) -> float:
    return float(np.log(max(vol, LOG_FLOOR)))


def anchor_index(series: PriceSeries, call_date: dt.date) -> int:
    """Trading-day index t for a call: first trading day on/after the call."""
    return series.index_on_or_after(call_date)


def label(
    series: PriceSeries, call_date: dt.date, tau: int, calendar_days: bool = False
) -> float:
    """Log-volatility of the window starting the day after the call's anchor day.

    Trading-day mode (default) uses return indices [t+1, t+tau]. Calendar
    mode instead takes every trading day dated within (anchor, anchor+tau]
    calendar days and needs at least two of them.
    """
    t = anchor_index(series, call_date)
    if calendar_days:
        return _calendar_window_logvol(series, series.dates[t], tau, forward=True)
    if t + tau >= len(series):
        raise InsufficientDataError(
            f"{series.company_id}: needs trading days through index {t + tau}, "
            f"series ends at {len(series) - 1}"
        )
    return log_volatility(windowed_volatility(series, t + 1, t + tau))


def v_past_prediction(
    series: PriceSeries, call_date: dt.date, tau: int, calendar_days: bool = False
) -> float:
    """Log-volatility of the trailing window ending the day before the anchor day."""
    t = anchor_index(series, call_date)
    if calendar_days:
        return _calendar_window_logvol(series, series.dates[t], tau, forward=False)
    if t - tau < 1:
        raise InsufficientDataError(
            f"{series.company_id}: trailing window needs index {t - tau - 1} >= 0"
        )
    return log_volatility(windowed_volatility(series, t - tau, t - 1))


def _calendar_window_logvol(
    series: PriceSeries, anchor: dt.date, tau: int, forward: bool
) -> float:
    if forward:
        lo, hi = anchor + dt.timedelta(days=1), anchor + dt.timedelta(days=tau)
    else:
        lo, hi = anchor - dt.timedelta(days=tau), anchor - dt.timedelta(days=1)
    # trading dates are increasing, so the window's indices are contiguous
    idx = [i for i, d in enumerate(series.dates) if lo <= d <= hi]
    if len(idx) < 2 or idx[0] < 1:
        raise InsufficientDataError(
            f"{series.company_id}: calendar window [{lo},{hi}] has too few trading days"
        )
    r = returns_slice(series, idx[0], idx[-1])
    vol = float(np.sqrt(np.sum((r - r.mean()) ** 2) / (len(r) - 1)))
    return log_volatility(vol)
