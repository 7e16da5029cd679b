"""Finite-n oscillatory profiles launched from the interface expansion (k=1).

The second-order reduced equations carry 1/y and 1/y**2 coefficients for
l=1,2; integration runs in regularized variables (v = Y'/y, respectively
w = Y/y) that stay smooth through the origin, so no excision or restart is
needed.  Also hosts the local inverse-function iteration that provides an
independent check of the interface expansion.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadDelta, NoContraction, SingularCrossing
from .ivp import ZERO, EXTREMUM, integrate, refine_event


def _denominator_factor(n, l):
    return 3.0 + (l + 1)*n


@dataclass
class InterfaceSeries:
    """Leading-order behaviour Y ~ C0 (y-y0)^a_tilde at a left interface y0."""
    y0: float
    a_tilde: float
    C0: float
    denominator_factor: float
    n: float
    l: int

    @classmethod
    def build(cls, n, l, y0):
        if not n > 0:
            raise ValueError("n > 0 required")
        if not y0 < 0:
            raise ValueError("interface must sit at y0 < 0")
        if l not in (0, 1, 2):
            raise ValueError("l must be 0, 1, or 2")
        df = _denominator_factor(n, l)
        a_tilde = 2.0*(n + 1.0)/n
        C0 = (n*n*abs(y0)/(2.0*(n + 1.0)*(n + 2.0)*df))**((n + 1.0)/n)
        return cls(y0=float(y0), a_tilde=a_tilde, C0=C0,
                   denominator_factor=df, n=float(n), l=l)

    def eval(self, delta):
        """Leading-order (Y, Y') at y0 + delta."""
        if delta == 0.0:
            return 0.0, 0.0
        Y = self.C0*delta**self.a_tilde
        return Y, self.a_tilde*self.C0*delta**(self.a_tilde - 1.0)


def series_launch(n, l, y0, delta):
    """Launch values (Y, Y') a distance delta past the interface."""
    ser = InterfaceSeries.build(n, l, y0)
    if delta < 0 or delta > 1e-2*abs(y0):
        raise BadDelta("delta=%g outside (0, %g]" % (delta, 1e-2*abs(y0)))
    return ser.eval(delta)


@dataclass
class ProfileMeta:
    n: float
    k: int
    l: int
    y0: float
    delta: float
    termination: str


@dataclass
class Profile:
    grid: np.ndarray
    Y: np.ndarray
    Yp: np.ndarray
    meta: ProfileMeta
    zeros: np.ndarray      # refined transversal zero locations
    extrema: np.ndarray    # rows (y, Y) at refined critical points

    def __call__(self, y):
        return np.interp(y, self.grid, self.Y)


def _rhs_for(n, l):
    """Right-hand side in the regularized state for family l.

    l=0: (Y, Y');  l=1: (Y, v=Y'/y);  l=2: (Y, w=Y/y, w').  In every case the
    nonlinearity enters through sign(Y)|Y|^(1/(n+1)).
    """
    coef = 1.0/_denominator_factor(n, l)
    q = 1.0/(n + 1.0)

    def g(Y):
        return np.sign(Y)*abs(Y)**q if Y != 0.0 else 0.0

    if l == 0:
        def rhs(y, s):
            return [s[1], -coef*g(s[0])*y]
    elif l == 1:
        def rhs(y, s):
            return [s[1]*y, -coef*g(s[0])]
    else:
        def rhs(y, s):
            return [s[1] + s[2]*y, s[2], -coef*g(s[0])]
    return rhs


def _pack_state(l, y, Y, Yp):
    if l == 0:
        return [Y, Yp]
    if l == 1:
        return [Y, Yp/y]
    w = Y/y
    return [Y, w, (Yp - w)/y]


def _unpack_Yp(l, ys, states):
    if l == 0:
        return states[:, 1]
    if l == 1:
        return states[:, 1]*ys
    return states[:, 1] + states[:, 2]*ys


def shoot(n, l, y0, delta=None, y_max=100.0, tol=1e-10, samples=2000):
    """Integrate the family-l profile from the interface out to y_max.

    Returns a Profile with a uniform sample grid, refined zeros and extrema,
    and the integrator's termination status in meta.  delta defaults to
    1e-3 * |y0|.
    """
    if delta is None:
        delta = 1e-3*abs(y0)
    Y0, Yp0 = series_launch(n, l, y0, delta)
    y_start = y0 + delta
    if not y_start < y_max:
        raise ValueError("y_max must exceed y0 + delta")
    state0 = _pack_state(l, y_start, Y0, Yp0)
    traj = integrate(_rhs_for(n, l), y_start, state0, y_max,
                     rel_tol=tol, abs_tol=min(1e-12, tol), max_step=0.25)

    if l in (1, 2) and traj.y_final > 0 > y_start:
        at0 = traj.sample(np.array([0.0]))[0]
        if not np.all(np.isfinite(at0)):
            raise SingularCrossing("non-finite regularized state at y=0: %r" % (at0,))

    ys = np.linspace(y_start, traj.y_final, samples)
    states = traj.sample(ys)
    zeros, extrema = [], []
    for i, ev in enumerate(traj.events):
        yr, val = refine_event(traj, i)
        if ev.kind == ZERO:
            zeros.append(yr)
        elif ev.kind == EXTREMUM:
            extrema.append((yr, val))
    meta = ProfileMeta(n=float(n), k=1, l=l, y0=float(y0), delta=float(delta),
                       termination=traj.termination)
    return Profile(grid=ys, Y=states[:, 0], Yp=_unpack_Yp(l, ys, states),
                   meta=meta, zeros=np.array(zeros),
                   extrema=np.array(extrema) if extrema else np.empty((0, 2)))


def rescale_profile(profile, a):
    """Exact invariance of the family equations: Y -> a^(3(n+1)/n) Y(y/a).

    Maps a computed profile to the one launched from a * y0; used to check
    scaling coherence between independently shot profiles.
    """
    if a <= 0:
        raise ValueError("a > 0 required")
    n = profile.meta.n
    c = a**(3.0*(n + 1.0)/n)
    meta = ProfileMeta(n=n, k=profile.meta.k, l=profile.meta.l,
                       y0=a*profile.meta.y0, delta=a*profile.meta.delta,
                       termination=profile.meta.termination)
    ext = profile.extrema.copy()
    if len(ext):
        ext[:, 0] *= a
        ext[:, 1] *= c
    return Profile(grid=a*profile.grid, Y=c*profile.Y, Yp=(c/a)*profile.Yp,
                   meta=meta, zeros=a*profile.zeros, extrema=ext)


@dataclass
class PicardTable:
    """Inverse-function table y(Y) from the contraction-mapping construction."""
    Y: np.ndarray
    y: np.ndarray
    contraction: float      # worst successive-iterate ratio observed
    iterations: int


def picard_local(n, y0, Y_cap, iters=40, points=400):
    """Fixed point of the local inverse-function integral map near y0.

    y(Y) = y0 + integral_0^Y sqrt((n+3) / (2 * integral_0^r |y(s)| s^(1/(n+1)) ds)) dr

    computed on a uniform Y grid.  The inner integrand uses |y(s)|: the
    construction lives left of the origin where y < 0 and only the distance
    scale enters.  Divergence of the outer integrand at r=0 (power
    -(n+2)/(2(n+1)), integrable) is handled in closed form on the first cell.
    """
    if not (n > 0 and y0 < 0 and Y_cap > 0):
        raise ValueError("need n > 0, y0 < 0, Y_cap > 0")
    q = 1.0/(n + 1.0)
    Yg = np.linspace(0.0, Y_cap, points)
    h = Yg[1] - Yg[0]
    zeta = np.full(points, float(y0))
    worst_ratio = 0.0
    prev_diff = None
    used = 0
    for m in range(iters):
        used = m + 1
        inner_integrand = np.abs(zeta)*Yg**q
        inner = np.concatenate(([0.0], np.cumsum(
            0.5*(inner_integrand[1:] + inner_integrand[:-1])*h)))
        # replace the first cell by the closed form with zeta ~ zeta(0)
        inner += np.abs(zeta[0])*h**(1.0 + q)/(1.0 + q) - 0.5*inner_integrand[1]*h
        outer_integrand = np.zeros(points)
        outer_integrand[1:] = np.sqrt((n + 3.0)/(2.0*inner[1:]))
        outer = np.concatenate(([0.0], np.cumsum(
            0.5*(outer_integrand[2:] + outer_integrand[1:-1])*h)))
        # first outer cell: integrand ~ c * r^(-(1+q)/2), integrated exactly
        c0 = np.sqrt((n + 3.0)*(1.0 + q)/(2.0*np.abs(zeta[0])))
        first = c0*h**((1.0 - q)/2.0)*2.0/(1.0 - q)
        new = y0 + np.concatenate(([0.0], first + outer))
        diff = float(np.max(np.abs(new - zeta)))
        zeta = new
        if np.max(np.abs(zeta - y0)) > 0.5*abs(y0):
            raise NoContraction(
                "iterate left the half-interface neighbourhood; shrink Y_cap")
        if prev_diff is not None and prev_diff > 0:
            ratio = diff/prev_diff
            worst_ratio = max(worst_ratio, ratio)
            if m >= 2 and ratio >= 1.0:
                raise NoContraction("successive-iterate ratio %.3f >= 1" % ratio)
        if diff <= 1e-10:
            break
        prev_diff = diff
    return PicardTable(Y=Yg, y=zeta, contraction=worst_ratio, iterations=used)
