"""Exact piecewise-cubic profiles of the infinite-nonlinearity limit (k=1).

Between consecutive transversal zeros the limit ODE reduces to a cubic with a
structural constraint that depends on the family index l: no quadratic term
(l=0), no linear term (l=1), no constant term (l=2).  Zero sequences come
from three independent routes (closed recurrence, numeric piece continuation,
direct integration) whose agreement is itself a test target.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import inf

import numpy as np
from mpmath import mp

from .errors import (MatchingFailure, NegativeDiscriminant, NoRootAbove)
from .diagnostics import DiagnosticsReport
from .ivp import integrate
from .quadfield import QuadExt

_DPS = 30
# leading cubic coefficient magnitude per family
_C3_MAG = {0: 1.0/6.0, 1: 1.0/3.0, 2: 0.5}


def scaling_constant(n, k):
    """Amplitude factor ((2k+1)+n)^(-(n+1)/n) linking finite-n and limit profiles."""
    if n <= 0:
        raise ValueError("n > 0 required")
    return ((2*k + 1) + n)**(-(n + 1.0)/n)


@dataclass
class ZeroSequence:
    l: int
    zeros: list                # exact objects where available, mpf/float beyond
    source: str                # "Recurrence" | "MatchingOracle" | "Integration"

    def as_floats(self):
        return np.array([float(z) for z in self.zeros])

    def __len__(self):
        return len(self.zeros)


def zeros_l0(N):
    """Zeros of the first limit profile: -1, 2, 3*sqrt(2)-1, then the
    square-root recurrence y_next = (sqrt(17b^2-4ab-4a^2) - b)/2."""
    if N < 2:
        raise ValueError("N >= 2 required")
    zs = [QuadExt(-1), QuadExt(2), QuadExt(-1, 3, 2)]
    with mp.workdps(_DPS):
        vals = [mp.mpf(-1), mp.mpf(2), 3*mp.sqrt(2) - 1]
        while len(vals) < N + 1:
            a, b = vals[-2], vals[-1]
            disc = 17*b*b - 4*a*b - 4*a*a
            if disc < 0:
                raise NegativeDiscriminant(
                    "discriminant %s < 0 at index %d" % (disc, len(vals)))
            vals.append((mp.sqrt(disc) - b)/2)
    return ZeroSequence(l=0, zeros=zs[:N + 1] + vals[len(zs):N + 1],
                        source="Recurrence")


def zeros_l1(N):
    """Zeros of the second limit profile: -1, 1/2, (5+3*sqrt(5))/4, then the
    root > y_i of the derivative-matching quadratic
    (a+b) c^2 + (a^2-ab-b^2) c - b(ab+b^2-a^2) = 0."""
    if N < 2:
        raise ValueError("N >= 2 required")
    zs = [QuadExt(-1, 0, 5), QuadExt(Fraction(1, 2), 0, 5),
          QuadExt(Fraction(5, 4), Fraction(3, 4), 5)]
    with mp.workdps(_DPS):
        vals = [mp.mpf(-1), mp.mpf("0.5"), (5 + 3*mp.sqrt(5))/4]
        while len(vals) < N + 1:
            a, b = vals[-2], vals[-1]
            A = a + b
            B = a*a - a*b - b*b
            C = -b*(a*b + b*b - a*a)
            disc = B*B - 4*A*C
            if disc < 0:
                raise NoRootAbove("matching quadratic has complex roots at index %d"
                                  % len(vals))
            r = (-B + mp.sqrt(disc))/(2*A)
            if not r > b:
                raise NoRootAbove("no matching root above %s at index %d"
                                  % (b, len(vals)))
            vals.append(r)
    return ZeroSequence(l=1, zeros=zs[:N + 1] + vals[len(zs):N + 1],
                        source="Recurrence")


def zeros_l2(N):
    """Zeros of the third limit profile: -1, 0, then exactly arithmetic with
    gap 2*sqrt(2): y_i = (1-3*sqrt(2)) + 2*sqrt(2)*i for i >= 2."""
    if N < 2:
        raise ValueError("N >= 2 required")
    zs = [QuadExt(-1), QuadExt(0)]
    for i in range(2, N + 1):
        zs.append(QuadExt(1, -3, 2) + QuadExt(0, 2*i, 2))
    return ZeroSequence(l=2, zeros=zs, source="Recurrence")


def _first_piece(l):
    """Polynomial coefficients (c3, c2, c1, c0) of the positive first piece."""
    if l == 0:
        # -(1/6)(y+1)^2 (y-2) = -(1/6) y^3 + (1/2) y + 1/3
        return (-1.0/6.0, 0.0, 0.5, 1.0/3.0)
    if l == 1:
        # -(1/3)(y+1)^2 (y-1/2) = -(1/3) y^3 - (1/2) y^2 + 1/6
        return (-1.0/3.0, -0.5, 0.0, 1.0/6.0)
    # -(1/2) y (y+1)^2
    return (-0.5, -1.0, -0.5, 0.0)


def matching_oracle_zeros(l, N):
    """Continue the piecewise cubic numerically: linear-solve each next piece
    from C^1 matching plus the family's structural zero coefficient, then take
    the smallest real cubic root above the current zero.  Independent of the
    closed recurrences."""
    if l not in (0, 1):
        raise ValueError("matching oracle implemented for l = 0, 1")
    coeffs = np.array(_first_piece(l))
    b = 2.0 if l == 0 else 0.5
    zeros = [-1.0, b]
    sign = 1
    while len(zeros) < N + 1:
        sign = -sign
        c3 = -sign*_C3_MAG[l]
        slope = np.polyval(np.polyder(coeffs), b)
        if l == 0:
            # unknowns (c1, c0): value 0 at b, derivative match; c2 = 0
            c1 = slope - 3*c3*b*b
            c0 = -(c3*b**3 + c1*b)
            nxt = np.array([c3, 0.0, c1, c0])
        else:
            # unknowns (c2, c0): derivative match gives c2; value 0 gives c0
            c2 = (slope - 3*c3*b*b)/(2*b)
            c0 = -(c3*b**3 + c2*b*b)
            nxt = np.array([c3, c2, 0.0, c0])
        roots = np.roots(nxt)
        real = sorted(r.real for r in roots
                      if abs(r.imag) < 1e-9*max(1.0, abs(r.real)) and r.real > b + 1e-9)
        if not real:
            raise NoRootAbove("no cubic root above %g at piece %d" % (b, len(zeros)))
        b = real[0]
        zeros.append(b)
        coeffs = nxt
    return ZeroSequence(l=l, zeros=zeros[:N + 1], source="MatchingOracle")


@dataclass
class PiecewiseCubic:
    """Exact limit profile: cubic coefficients per inter-zero interval."""
    intervals: list            # (lo, hi, c3, c2, c1, c0)
    signs: list                # +1 / -1 per interval
    l: int = 0
    n: float = inf

    def _locate(self, y):
        los = np.array([iv[0] for iv in self.intervals])
        idx = np.searchsorted(los, y, side="right") - 1
        return np.clip(idx, 0, len(self.intervals) - 1)

    def _horner(self, y, which):
        y = np.asarray(y, float)
        idx = self._locate(y)
        out = np.zeros_like(y, dtype=float)
        for i, iv in enumerate(self.intervals):
            m = idx == i
            if not np.any(m):
                continue
            c3, c2, c1, c0 = iv[2:]
            if which == 0:
                out[m] = ((c3*y[m] + c2)*y[m] + c1)*y[m] + c0
            elif which == 1:
                out[m] = (3*c3*y[m] + 2*c2)*y[m] + c1
            else:
                out[m] = 6*c3*y[m] + 2*c2
        inside = (y >= self.intervals[0][0]) & (y <= self.intervals[-1][1])
        out[~inside] = 0.0
        return out

    def __call__(self, y):
        return self._horner(y, 0)

    def deriv(self, y):
        return self._horner(y, 1)

    def second_deriv(self, y):
        return self._horner(y, 2)

    def zeros(self):
        return np.array([iv[0] for iv in self.intervals] + [self.intervals[-1][1]])

    def extrema(self):
        """Interior critical points per piece as (y, Y) rows."""
        pts = []
        for lo, hi, c3, c2, c1, c0 in self.intervals:
            disc = 4*c2*c2 - 12*c3*c1
            if disc < 0 or c3 == 0:
                continue
            for r in ((-2*c2 + np.sqrt(disc))/(6*c3), (-2*c2 - np.sqrt(disc))/(6*c3)):
                if lo < r < hi:
                    pts.append((r, ((c3*r + c2)*r + c1)*r + c0))
        pts.sort()
        return np.array(pts) if pts else np.empty((0, 2))


def build_piecewise(l, N):
    """Assemble the first N pieces from the zero sequence and closed factored
    forms, then verify every continuity condition to 1e-12 (relative)."""
    if l == 0:
        seq = zeros_l0(N)
    elif l == 1:
        seq = zeros_l1(N)
    elif l == 2:
        seq = zeros_l2(N)
    else:
        raise ValueError("l must be 0, 1, or 2")
    z = seq.as_floats()
    intervals, signs = [], []
    intervals.append((z[0], z[1]) + _first_piece(l))
    signs.append(1)
    for i in range(1, N):
        sign = -signs[-1]
        a, b = z[i], z[i + 1]
        c3 = -sign*_C3_MAG[l]
        if l == 0:
            # roots a, b, -(a+b):  c2 = 0
            cs = (c3, 0.0, -c3*(a*a + a*b + b*b), c3*a*b*(a + b))
        elif l == 1:
            # roots a, b, -ab/(a+b):  c1 = 0
            e = a*b/(a + b)
            cs = (c3, c3*(e - a - b), 0.0, c3*a*b*e)
        else:
            if i == 1:
                # piece on [0, z2]: roots 0, z2, -1/z2 (second-derivative
                # continuity at the origin fixes the third root)
                cs = (c3, c3*(1.0/b - b), -c3, 0.0)
            else:
                # roots 0, a, b
                cs = (c3, -c3*(a + b), c3*a*b, 0.0)
        intervals.append((a, b) + cs)
        signs.append(sign)
    prof = PiecewiseCubic(intervals=intervals, signs=signs, l=l)
    _check_matching(prof, l)
    return prof


def _check_matching(prof, l):
    worst = 0.0
    for i in range(len(prof.intervals) - 1):
        lo, hi, c3, c2, c1, c0 = prof.intervals[i]
        lo2, hi2, d3, d2, d1, d0 = prof.intervals[i + 1]
        b = hi
        va = ((c3*b + c2)*b + c1)*b + c0
        vb = ((d3*b + d2)*b + d1)*b + d0
        sa = (3*c3*b + 2*c2)*b + c1
        sb = (3*d3*b + 2*d2)*b + d1
        scale = max(1.0, abs(sa), abs(b)**3)
        worst = max(worst, abs(va - vb)/scale, abs(sa - sb)/scale)
        if l == 2 and abs(b) < 1e-14:
            worst = max(worst, abs(2*c2 - 2*d2)/max(1.0, abs(2*c2)))
    if worst > 1e-12:
        raise MatchingFailure("continuity jump %.3e exceeds 1e-12" % worst, worst)


def limit_rhs(l):
    """Right-hand side of the limit ODE in regularized variables.

    l=0: state (Y, Y');  l=1: state (Y, v=Y'/y);  l=2: state (Y, w=Y/y, w').
    The branch sign sigma is threaded through a one-element list so the
    flip-restart driver can toggle it.
    """
    if l == 0:
        def rhs(y, s, sigma):
            return [s[1], -sigma[0]*y]
    elif l == 1:
        def rhs(y, s, sigma):
            return [s[1]*y, -sigma[0]]
    else:
        def rhs(y, s, sigma):
            return [s[1] + s[2]*y, s[2], -sigma[0]]
    return rhs


def integrate_limit_zeros(l, nzeros, delta=1e-6, rel_tol=1e-11, abs_tol=1e-13,
                          keep_trajectories=False):
    """Flip-restart integration of the limit ODE from the interface at -1.

    Returns (zeros ndarray, trajectories or None).  The quadratic-contact
    launch uses Y = delta^2/2, Y' = delta; the branch sign starts positive and
    flips at every transversal zero (for l=2 the crossing at the origin flips
    the sign through the regular factor w = Y/y).
    """
    y0 = -1.0
    y = y0 + delta
    if l == 0:
        state = [0.5*delta**2, delta]
    elif l == 1:
        state = [0.5*delta**2, delta/y]
    elif l == 2:
        Yv, Ypv = 0.5*delta**2, delta
        w = Yv/y
        state = [Yv, w, (Ypv - w)/y]
    else:
        raise ValueError("l must be 0, 1, or 2")
    sigma = [1.0]
    rhs_core = limit_rhs(l)
    rhs = lambda t, s: rhs_core(t, s, sigma)
    zeros = []
    trajs = [] if keep_trajectories else None
    span_cap = y0 + 40.0 + 4.0*nzeros
    while len(zeros) < nzeros and y < span_cap:
        traj = integrate(rhs, y, state, span_cap, rel_tol=rel_tol,
                         abs_tol=abs_tol, max_step=0.1, stop_at_zero=True)
        if keep_trajectories:
            trajs.append(traj)
        zero_events = [e for e in traj.events if e.kind == "Zero"]
        if not zero_events:
            break
        yz = traj.y_final
        s_end = list(traj.state_final)
        zeros.append(yz)
        sigma[0] = -sigma[0]
        if l == 0:
            state = [0.0, s_end[1]]
        elif l == 1:
            state = [0.0, s_end[1]]
        else:
            if abs(yz) < 1e-9:
                state = [0.0, s_end[1], s_end[2]]   # crossing the origin: w != 0
            else:
                state = [0.0, 0.0, s_end[2]]        # ordinary zero: Y = w = 0
        y = yz
    return np.array(zeros), trajs


def verify_by_integration(l, N, tol=1e-6):
    """Cross-check the algebraic construction against direct integration."""
    if N > 50:
        raise ValueError("N <= 50 (desk scale)")
    prof = build_piecewise(l, N)
    exact = prof.zeros()[1:]
    detected, trajs = integrate_limit_zeros(l, N, keep_trajectories=True)
    m = min(len(detected), len(exact))
    zero_diff = float(np.max(np.abs(detected[:m] - exact[:m]))) if m else np.nan

    # sup deviation of the integrated Y from the piecewise cubic
    sup_dev = 0.0
    for traj in trajs:
        lo, hi = traj.nodes[0][0], traj.y_final
        if hi <= lo:
            continue
        ys = np.linspace(lo, hi, 40)
        Yv = traj.sample(ys)[:, 0]
        sup_dev = max(sup_dev, float(np.max(np.abs(Yv - prof(ys)))))

    rep = DiagnosticsReport()
    rep.add("limit l=%d zeros: integration vs recurrence (first %d)" % (l, m),
            zero_diff, tol, larger_is_pass=False)
    rep.add("limit l=%d profile sup deviation" % l, sup_dev, max(10*tol, 1e-5),
            larger_is_pass=False)
    return rep


def lambda_roots(zeros, N_trunc=25, lambda_range=(0.0, 10.0), grid=100000):
    """Roots of the truncated spectral sum over a uniform grid in sqrt(|lambda|).

    The sum is S(s) = sum_{i=1..N_trunc} (-1)^i y_i sin(s (y_i - y_0)); roots
    are bracketed by sign change and bisected; returned as negative lambda
    values.  Exploratory: the truncation level is reported by the caller.
    """
    z = zeros.as_floats() if isinstance(zeros, ZeroSequence) else np.asarray(zeros, float)
    if len(z) < N_trunc + 1:
        raise ValueError("need at least N_trunc+1 zeros, have %d" % len(z))
    y0 = z[0]
    yi = z[1:N_trunc + 1]
    signs = np.array([(-1.0)**i for i in range(1, N_trunc + 1)])

    def S(s):
        return np.sum(signs*yi*np.sin(np.multiply.outer(np.atleast_1d(s), yi - y0)),
                      axis=1)

    lo, hi = lambda_range
    ss = np.linspace(lo, hi, grid + 1)[1:]   # exclude s=0 (trivial root)
    vals = S(ss)
    roots = []
    for i in range(len(ss) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(ss[i])
        elif a*b < 0:
            x1, x2 = ss[i], ss[i + 1]
            for _ in range(80):
                xm = 0.5*(x1 + x2)
                vm = S(xm)[0]
                if vm == 0.0:
                    break
                if (vm > 0) == (a > 0):
                    x1 = xm
                else:
                    x2 = xm
            roots.append(0.5*(x1 + x2))
    return [-r*r for r in roots]


def scale_family(profile, a, flip=False):
    """Exact invariance map: new(y) = (+/-) a^3 * old(y/a)."""
    if a <= 0:
        raise ValueError("a > 0 required")
    s = -1.0 if flip else 1.0
    ivs = []
    for lo, hi, c3, c2, c1, c0 in profile.intervals:
        ivs.append((a*lo, a*hi, s*c3, s*a*c2, s*a*a*c1, s*a**3*c0))
    sg = [int(s*x) for x in profile.signs]
    return PiecewiseCubic(intervals=ivs, signs=sg, l=profile.l, n=profile.n)
