"""Adaptive explicit Runge-Kutta integrator with dense output and events.

A Dormand-Prince 5(4) pair with PI step-size control drives every initial
value problem in the package.  The trajectory records, per accepted step, the
quartic interpolant needed for event refinement, and watches the first state
component for sign changes (Zero events) and for sign changes of its
derivative (Extremum events).  Discontinuous right-hand sides are handled by
the callers through terminal-at-zero restarts.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoBracket

# Dormand-Prince tableau.
_C = np.array([0.0, 1/5, 3/10, 4/5, 8/9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1/5]),
    np.array([3/40, 9/40]),
    np.array([44/45, -56/15, 32/9]),
    np.array([19372/6561, -25360/2187, 64448/6561, -212/729]),
    np.array([9017/3168, -355/33, 46732/5247, 49/176, -5103/18656]),
    np.array([35/384, 0.0, 500/1113, 125/192, -2187/6784, 11/84]),
]
_B5 = np.array([35/384, 0.0, 500/1113, 125/192, -2187/6784, 11/84, 0.0])
_E = np.array([71/57600, 0.0, -71/16695, 71/1920, -17253/339200, 22/525, -1/40])

# Quartic dense-output coefficients (Shampine); row j, column m gives the
# contribution of stage j to theta^(m+1).
_P = np.array([
    [1.0, -8048581381/2820520608, 8663915743/2820520608, -12715105075/11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200/32700410799, -68118460800/10900136933, 87487479700/32700410799],
    [0.0, -1754552775/470086768, 14199869525/1410260304, -10690763975/1880347072],
    [0.0, 127303824393/49829197408, -318862633887/49829197408, 701980252875/199316789632],
    [0.0, -282668133/205662961, 2019193451/616988883, -1453857185/822651844],
    [0.0, 40617522/29380423, -110615467/29380423, 69997945/29380423],
])

_EPS = np.finfo(float).eps

ZERO = "Zero"
EXTREMUM = "Extremum"
REACHED_END = "ReachedEnd"
STEP_UNDERFLOW = "StepUnderflow"
STATE_OVERFLOW = "StateOverflow"


@dataclass
class Event:
    y: float
    kind: str
    value: float


@dataclass
class _Segment:
    """One accepted step: interpolant state_a + sum_m Q[:, m] * theta^(m+1)."""
    ya: float
    h: float
    state_a: np.ndarray
    Q: np.ndarray  # (ncomp, 4)

    def eval(self, theta):
        th = np.array([theta, theta**2, theta**3, theta**4])
        return self.state_a + self.Q @ th

    def eval_deriv(self, theta):
        """d(state)/dy at theta (interpolant derivative divided by h)."""
        th = np.array([1.0, 2*theta, 3*theta**2, 4*theta**3])
        return (self.Q @ th)/self.h


@dataclass
class Trajectory:
    nodes: list = field(default_factory=list)       # (y, state ndarray)
    events: list = field(default_factory=list)      # Event
    termination: str = REACHED_END
    segments: list = field(default_factory=list)    # _Segment, parallel to steps

    @property
    def y_final(self):
        return self.nodes[-1][0]

    @property
    def state_final(self):
        return self.nodes[-1][1]

    def amplitude(self):
        """Largest |first component| over the nodes (event scale)."""
        a = max(abs(s[0]) for _, s in self.nodes)
        return a if a > 0 else 1.0

    def sample(self, ys):
        """Dense-output evaluation of the full state at sorted locations ys."""
        ys = np.atleast_1d(np.asarray(ys, float))
        out = np.empty((len(ys), len(self.nodes[0][1])))
        seg_idx = 0
        for i, yv in enumerate(ys):
            while (seg_idx + 1 < len(self.segments)
                   and yv > self.segments[seg_idx].ya + self.segments[seg_idx].h):
                seg_idx += 1
            seg = self.segments[seg_idx]
            theta = np.clip((yv - seg.ya)/seg.h, 0.0, 1.0)
            out[i] = seg.eval(theta)
        return out


def _error_norm(delta, s0, s1, rel_tol, abs_tol):
    sc = abs_tol + rel_tol*np.maximum(np.abs(s0), np.abs(s1))
    return float(np.sqrt(np.mean((delta/sc)**2)))


def _initial_step(rhs, y0, s0, f0, y_end, rel_tol, abs_tol):
    sc = abs_tol + rel_tol*np.abs(s0)
    d0 = np.sqrt(np.mean((s0/sc)**2))
    d1 = np.sqrt(np.mean((f0/sc)**2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01*d0/d1
    h0 = min(h0, y_end - y0)
    s1 = s0 + h0*f0
    f1 = np.asarray(rhs(y0 + h0, s1), float)
    d2 = np.sqrt(np.mean(((f1 - f0)/sc)**2))/h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0*1e-3) if dm <= 1e-15 else (0.01/dm)**0.2
    return min(100*h0, h1, y_end - y0)


def _sign(x):
    return 0 if x == 0.0 else (1 if x > 0 else -1)


def _bisect(g, lo, hi, iters=80):
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(iters):
        mid = 0.5*(lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if _sign(gm) == _sign(glo):
            lo = mid
        else:
            hi = mid
    return 0.5*(lo + hi)


def integrate(rhs, y_start, state0, y_end, rel_tol=1e-10, abs_tol=1e-12,
              max_step=None, state_cap=None, stop_at_zero=False):
    """Integrate state' = rhs(y, state) from y_start to y_end.

    Returns a Trajectory whose termination is ReachedEnd, StepUnderflow, or
    StateOverflow.  Zero events mark sign changes of state[0] across a step;
    Extremum events mark sign changes of rhs[0].  With stop_at_zero the run
    terminates at the first Zero event (used for branch-flipping restarts on
    sign-discontinuous equations), and the final node sits at that event.
    """
    if not y_start < y_end:
        raise ValueError("need y_start < y_end")
    if not (0 < rel_tol < 1 and 0 < abs_tol < 1):
        raise ValueError("tolerances must lie in (0, 1)")
    s = np.array(state0, dtype=float)
    y = float(y_start)
    span = y_end - y_start
    if max_step is None:
        max_step = span
    if state_cap is None:
        state_cap = 1e12*max(1.0, float(np.max(np.abs(s))))

    traj = Trajectory()
    traj.nodes.append((y, s.copy()))

    f = np.asarray(rhs(y, s), float)
    h = min(_initial_step(rhs, y, s, f, y_end, rel_tol, abs_tol), max_step)

    # PI controller constants (standard fifth-order choices)
    beta = 0.04
    expo1 = 0.2 - 0.75*beta
    facold = 1e-4
    rejected = False
    K = np.empty((7, len(s)))

    while y < y_end:
        h = min(h, y_end - y)
        hmin = 100*_EPS*max(abs(y), 1e-3*span)
        if h < hmin:
            traj.termination = STEP_UNDERFLOW
            return traj

        K[0] = f
        for i in range(1, 7):
            K[i] = np.asarray(rhs(y + _C[i]*h, s + h*(_A[i] @ K[:i])), float)
        s_new = s + h*(_B5 @ K)
        err = _error_norm(h*(_E @ K), s, s_new, rel_tol, abs_tol)

        fac11 = err**expo1 if err > 0 else 1e-10
        fac = fac11/facold**beta
        fac = max(0.1, min(5.0, fac/0.9))
        h_next = h/fac

        if err > 1.0:
            h = h/min(5.0, fac11/0.9)
            rejected = True
            continue

        # accepted
        f_new = np.asarray(rhs(y + h, s_new), float)
        Q = (K.T @ _P)*h
        seg = _Segment(ya=y, h=h, state_a=s.copy(), Q=Q)
        traj.segments.append(seg)

        terminal_hit = None
        sa, sb = _sign(s[0]), _sign(s_new[0])
        if sa != 0 and sb != 0 and sa != sb:
            theta = _bisect(lambda t: seg.eval(t)[0], 0.0, 1.0)
            yz = y + theta*h
            traj.events.append(Event(y=yz, kind=ZERO, value=float(seg.eval(theta)[0])))
            if stop_at_zero:
                terminal_hit = (yz, seg.eval(theta))
        da, db = _sign(f[0]), _sign(f_new[0])
        if da != 0 and db != 0 and da != db:
            theta = _bisect(lambda t: seg.eval_deriv(t)[0], 0.0, 1.0)
            ye = y + theta*h
            traj.events.append(Event(y=ye, kind=EXTREMUM,
                                     value=float(seg.eval(theta)[0])))
        if len(traj.events) >= 2:
            traj.events.sort(key=lambda e: e.y)

        if terminal_hit is not None:
            yz, sz = terminal_hit
            traj.nodes.append((yz, np.asarray(sz, float)))
            traj.termination = REACHED_END
            return traj

        y += h
        s = s_new
        f = f_new
        traj.nodes.append((y, s.copy()))

        if np.max(np.abs(s)) > state_cap:
            traj.termination = STATE_OVERFLOW
            return traj

        facold = max(err, 1e-4)
        if rejected:
            h_next = min(h_next, h)
            rejected = False
        h = min(h_next, max_step)

    traj.termination = REACHED_END
    return traj


def refine_event(traj, index):
    """Re-polish an event against the stored dense output.

    Returns (y, value) where value is the first component at the refined
    location.  Zeros are refined until |Y| <= 1e-12 * amplitude, extrema until
    |dY/dy| <= 1e-12 * amplitude; NoBracket if the dense output does not
    actually change sign around the recorded event.
    """
    ev = traj.events[index]
    seg = None
    for sg in traj.segments:
        if sg.ya - 1e-14 <= ev.y <= sg.ya + sg.h + 1e-14:
            seg = sg
            break
    if seg is None:
        raise NoBracket("no dense segment covers event at y=%g" % ev.y)

    if ev.kind == ZERO:
        g = lambda t: seg.eval(t)[0]
    else:
        g = lambda t: seg.eval_deriv(t)[0]
    glo, ghi = g(0.0), g(1.0)
    if glo == 0.0:
        theta = 0.0
    elif ghi == 0.0:
        theta = 1.0
    elif _sign(glo) == _sign(ghi):
        raise NoBracket("dense output does not change sign across event at y=%g" % ev.y)
    else:
        theta = _bisect(g, 0.0, 1.0, iters=100)
    yref = seg.ya + theta*seg.h
    return yref, float(seg.eval(theta)[0])
