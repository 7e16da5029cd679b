"""Invariant checks shared by every profile producer.

A profile here is anything that can hand over its extrema and zeros: the
sampled shooting output and the exact piecewise-cubic limit profiles both
qualify.  Checks report measured values next to their thresholds; a strict
inequality that holds by less than 1e-6 is reported as "marginal" rather than
silently passing.
"""

from dataclasses import dataclass, field
from math import inf, isnan, nan

import numpy as np

from .errors import InsufficientExtrema, TooFewPoints

MARGINAL = 1e-6


@dataclass
class Check:
    name: str
    status: str           # "pass" | "marginal" | "fail"
    measured: float
    threshold: float

    @property
    def ok(self):
        return self.status in ("pass", "marginal")


@dataclass
class DiagnosticsReport:
    checks: list = field(default_factory=list)
    envelope: tuple = None    # (coefficient, exponent, fit_residual)

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def add(self, name, measured, threshold, larger_is_pass=True):
        m = measured - threshold if larger_is_pass else threshold - measured
        scale = abs(threshold) if threshold != 0 else 1.0
        if isnan(m) or m <= 0:
            status = "fail"
        elif m/scale < MARGINAL:
            status = "marginal"
        else:
            status = "pass"
        self.checks.append(Check(name, status, measured, threshold))
        return self.checks[-1]

    def as_dict(self):
        d = {"checks": [{"name": c.name, "status": c.status,
                         "measured": c.measured, "threshold": c.threshold}
                        for c in self.checks]}
        if self.envelope is not None:
            d["envelope"] = {"coefficient": self.envelope[0],
                             "exponent": self.envelope[1],
                             "fit_residual": self.envelope[2]}
        return d


def _extrema_of(profile):
    """Extrema as an (m, 2) array of (y, Y).  Duck-typed accessor."""
    ex = getattr(profile, "extrema", None)
    if callable(ex):
        ex = ex()
    if ex is None:
        raise TypeError("profile %r exposes no extrema" % (type(profile).__name__,))
    arr = np.asarray(ex, float)
    return arr.reshape(0, 2) if arr.size == 0 else arr


def _zeros_of(profile):
    z = getattr(profile, "zeros", None)
    if callable(z):
        z = z()
    if z is None:
        raise TypeError("profile %r exposes no zeros" % (type(profile).__name__,))
    return np.asarray(z, float)


def _n_of(profile):
    meta = getattr(profile, "meta", None)
    n = getattr(meta, "n", None) if meta is not None else None
    if n is None:
        n = getattr(profile, "n", None)
    return inf if n is None else float(n)


def oscillation_bound(profile, l):
    """Amplitude decay bound between consecutive extrema at positive y.

    For each consecutive extremum pair y1 < y2 (both > 0) the profile must
    satisfy (|Y(y2)|/|Y(y1)|)^((n+2)/(n+1)) > (y1/y2)^(l+1) strictly; the
    n -> infinity limit profiles use exponent 1 on the left.  Reports the
    minimum margin over all pairs.
    """
    ex = _extrema_of(profile)
    ex = ex[ex[:, 0] > 0]
    if len(ex) < 2:
        raise InsufficientExtrema("need >= 2 extrema at y > 0, found %d" % len(ex))
    n = _n_of(profile)
    expo = 1.0 if n == inf else (n + 2.0)/(n + 1.0)
    rep = DiagnosticsReport()
    worst, worst_pair = inf, None
    for (y1, v1), (y2, v2) in zip(ex[:-1], ex[1:]):
        if abs(v1) == 0:
            continue
        lhs = (abs(v2)/abs(v1))**expo
        rhs = (y1/y2)**(l + 1)
        if lhs - rhs < worst:
            worst, worst_pair = lhs - rhs, (y1, y2)
    rep.add("oscillation_bound l=%d (worst pair y=%.4g..%.4g)"
            % (l, worst_pair[0], worst_pair[1]), worst, 0.0)
    return rep


def envelope_fit(extrema, y_window):
    """Log-log least-squares power-law fit |Y| ~ coeff * y^exponent.

    `extrema` is a sequence of (y, Y) with y > 0; only entries inside
    y_window are used and at least 5 are required.  Callers drop transient
    extrema (the first two after the main hump) before fitting.
    """
    arr = np.asarray(list(extrema), float)
    if arr.size:
        lo, hi = y_window
        arr = arr[(arr[:, 0] >= lo) & (arr[:, 0] <= hi) & (np.abs(arr[:, 1]) > 0)]
    if len(arr) < 5:
        raise TooFewPoints("need >= 5 extrema in window [%g, %g], found %d"
                           % (y_window[0], y_window[1], len(arr)))
    lx, ly = np.log(arr[:, 0]), np.log(np.abs(arr[:, 1]))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope*lx + intercept))**2)))
    return float(np.exp(intercept)), float(slope), resid


def sign_alternation(profile):
    """Signs of Y on consecutive inter-zero intervals must alternate."""
    zeros = _zeros_of(profile)
    rep = DiagnosticsReport()
    if len(zeros) < 2:
        rep.add("sign_alternation (needs >= 2 zeros, found %d)" % len(zeros),
                nan, 0.0)
        return rep
    signs = []
    for a, b in zip(zeros[:-1], zeros[1:]):
        mid = 0.5*(a + b)
        v = _value_at(profile, mid)
        signs.append(1 if v > 0 else (-1 if v < 0 else 0))
    first_bad = nan
    ok = 1.0
    for i in range(1, len(signs)):
        if signs[i] == 0 or signs[i] == signs[i - 1]:
            first_bad = zeros[i]
            ok = -1.0
            break
    rep.add("sign_alternation%s"
            % ("" if isnan(first_bad) else " (violated at y=%.6g)" % first_bad),
            ok, 0.0)
    return rep


def _value_at(profile, y):
    call = getattr(profile, "__call__", None)
    if call is not None and not isinstance(profile, np.ndarray):
        try:
            return float(np.asarray(call(y)).ravel()[0])
        except TypeError:
            pass
    grid = np.asarray(profile.grid, float)
    Y = np.asarray(profile.Y, float)
    return float(np.interp(y, grid, Y))
