"""Very-singular profiles with absorption (k=1): relaxation BVP and the
infinite-nonlinearity limit equation.

Shooting is hopeless for this third-order problem, so the solver relaxes a
collocation discretization with damped Newton steps, continuing in p from
well above the target when the direct solve stalls.  Non-convergence is a
first-class outcome: the best iterate and its honest residual are always
surfaced, never patched over.
"""

import logging
import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .errors import InvalidExponents, NoConvergence
from .ivp import integrate
from .params import SimilarityParams, p_crit
from .shooting import Profile, ProfileMeta, shoot

log = logging.getLogger(__name__)

CLOSURES = ("antisym", "dirichlet", "penalty")
_CRIT_MARGIN = 0.05


def _crit_distance(n, p):
    return min(abs(p - float(p_crit(n, 1, l))) for l in (0, 1, 2))


@dataclass
class VssProblem:
    n: float
    p: float
    y0: float
    L: float
    mesh: int
    params: SimilarityParams
    closure: str = "antisym"

    @classmethod
    def build(cls, n, p, y0=-15.0, L=30.0, mesh=2251, closure="antisym"):
        if not n > 0:
            raise InvalidExponents("n must be positive, got %g" % n)
        if not p > n + 1:
            raise InvalidExponents("p=%g must exceed n+1=%g for decaying scaling"
                                   % (p, n + 1))
        if not (y0 < 0 < L):
            raise ValueError("need y0 < 0 < L")
        if closure not in CLOSURES:
            raise ValueError("closure must be one of %s" % (CLOSURES,))
        d = _crit_distance(n, p)
        if d < _CRIT_MARGIN:
            warnings.warn("p=%g sits %.3f from a bifurcation value; "
                          "results are untrustworthy this close" % (p, d))
        return cls(n=float(n), p=float(p), y0=float(y0), L=float(L),
                   mesh=int(mesh), params=SimilarityParams.vss(n, 1, p),
                   closure=closure)


def _stencil(offsets, order):
    """Finite-difference weights for the given derivative order (unit spacing)."""
    m = len(offsets)
    V = np.vander(np.asarray(offsets, float), m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(factorial(order))
    return np.linalg.solve(V, rhs)


_T3_CENTRAL = _stencil((-2, -1, 0, 1, 2), 3)    # [-1/2, 1, 0, -1, 1/2]
_T3_SKEWED = _stencil((-3, -2, -1, 0, 1), 3)


def _amp_scale(n, p):
    # amplitude where the reaction and absorption terms balance
    return (p - 1.0)**(-(n + 1.0)/(p - 1.0))


def _ode_pieces(n, p):
    A = (p - (n + 1.0))/(3.0*(p - 1.0)*(n + 1.0))
    B = 1.0/(p - 1.0)
    q = n/(n + 1.0)
    return A, B, q


def _interp_row(mesh, x):
    """Index pair and weights placing a linear sample at x on the mesh."""
    j = int(np.clip(np.searchsorted(mesh, x) - 1, 0, len(mesh) - 2))
    t = (x - mesh[j])/(mesh[j + 1] - mesh[j])
    return j, 1.0 - t, t


def vss_residual_rows(n, p, mesh, Y):
    """Pointwise discrete residual of the third-order profile equation.

    Plain loop over collocation rows (indices 2..len-2), deliberately coded
    apart from the solver's vectorized assembly so the two can be compared.
    """
    A, B, q = _ode_pieces(n, p)
    h = mesh[1] - mesh[0]
    npts = len(mesh)
    out = np.zeros(npts)
    for i in range(2, npts - 1):
        if i <= npts - 3:
            t3 = (-Y[i-2] + 2*Y[i-1] - 2*Y[i+1] + Y[i+2])/(2*h**3)
        else:
            t3 = sum(w*Y[i + o] for w, o in zip(_T3_SKEWED, (-3, -2, -1, 0, 1)))/h**3
        d1 = (Y[i+1] - Y[i-1])/(2*h)
        a = max(abs(Y[i]), 1e-300)
        s = 1.0 if Y[i] >= 0 else -1.0
        out[i] = (t3 + A*a**(-q)*d1*mesh[i] + B*s*a**(1.0/(n + 1.0))
                  - s*a**(p/(n + 1.0)))
    return out


def _assemble(n, p, mesh, Y, h_half, closure, floor):
    """Equilibrated residual, its sparse Jacobian, and the raw residual norm.

    Each collocation row of the profile equation is multiplied by |Y_i|^q
    (q = n/(n+1)), which removes the singular |Y|^(-q) factor and leaves every
    term smooth in the unknowns; the roots are unchanged.  The raw (spec-form)
    residual is returned alongside for convergence reporting.
    """
    A, B, q = _ode_pieces(n, p)
    h = mesh[1] - mesh[0]
    npts = len(mesh)
    R = np.zeros(npts)
    rows, cols, vals = [], [], []

    def put(i, j, v):
        rows.append(i); cols.append(j); vals.append(v)

    # contact order 2 at the interface
    R[0] = Y[0]
    put(0, 0, 1.0)
    R[1] = (-3*Y[0] + 4*Y[1] - Y[2])/(2*h)
    put(1, 0, -1.5/h); put(1, 1, 2.0/h); put(1, 2, -0.5/h)

    idx = np.arange(2, npts - 1)
    a = np.maximum(np.abs(Y[idx]), 1e-300)
    a_flr = np.maximum(a, floor)
    s = np.where(Y[idx] >= 0, 1.0, -1.0)
    d1 = (Y[idx + 1] - Y[idx - 1])/(2*h)
    central = idx <= npts - 3
    t3 = np.empty(len(idx))
    t3[central] = (-Y[idx[central] - 2] + 2*Y[idx[central] - 1]
                   - 2*Y[idx[central] + 1] + Y[idx[central] + 2])/(2*h**3)
    for ii in idx[~central]:
        t3[ii - 2] = sum(w*Y[ii + o]
                         for w, o in zip(_T3_SKEWED, (-3, -2, -1, 0, 1)))/h**3
    aq = a**q
    R[idx] = (aq*t3 + A*d1*mesh[idx] + B*Y[idx] - s*a**((p + n)/(n + 1.0)))
    raw = float(np.max(np.abs(R[idx]/aq))) if len(idx) else 0.0

    diag = (q*s*a_flr**(q - 1.0)*t3 + B
            - (p + n)/(n + 1.0)*a**((p - 1.0)/(n + 1.0)))
    for row_pos, i in enumerate(idx):
        if central[row_pos]:
            for w, o in zip(_T3_CENTRAL, (-2, -1, 0, 1, 2)):
                if w != 0.0:
                    put(i, i + o, aq[row_pos]*w/h**3)
        else:
            for w, o in zip(_T3_SKEWED, (-3, -2, -1, 0, 1)):
                put(i, i + o, aq[row_pos]*w/h**3)
        put(i, i + 1, A*mesh[i]/(2*h))
        put(i, i - 1, -A*mesh[i]/(2*h))
        put(i, i, diag[row_pos])

    last = npts - 1
    if closure == "dirichlet":
        R[last] = Y[last]
        put(last, last, 1.0)
    elif closure == "antisym":
        j, wa, wb = _interp_row(mesh, mesh[-1] - h_half)
        R[last] = Y[last] + wa*Y[j] + wb*Y[j + 1]
        put(last, last, 1.0)
        put(last, j, wa)
        put(last, j + 1, wb)
    else:   # penalty: pin the tail rms at a small fraction of the hump scale
        tail = mesh >= mesh[-1] - 5.0
        m = np.count_nonzero(tail)
        rms = float(np.sqrt(np.mean(Y[tail]**2)))
        target = 1e-2*_amp_scale(n, p)
        R[last] = rms - target
        denom = max(rms, 1e-12)*m
        for j in np.nonzero(tail)[0]:
            put(last, j, Y[j]/denom)

    J = csc_matrix((vals, (rows, cols)), shape=(npts, npts))
    bc = max(abs(R[0]), abs(R[1]), abs(R[last]))
    return R, J, max(raw, bc)


def _newton(n, p, mesh, Y, h_half, closure, tol, max_iter=60):
    """Damped Newton relaxation; returns (Y, raw_residual_norm, converged)."""
    amp = max(np.max(np.abs(Y)), _amp_scale(n, p))
    floor = 1e-9*amp
    best, best_r = Y.copy(), np.inf
    for _ in range(max_iter):
        R, J, raw = _assemble(n, p, mesh, Y, h_half, closure, floor)
        if not np.isfinite(raw):
            raise NoConvergence("non-finite residual during relaxation",
                                best_state=best, residual_norm=best_r)
        if raw < best_r:
            best, best_r = Y.copy(), raw
        if raw <= tol:
            return Y, raw, True
        rnorm = float(np.max(np.abs(R)))
        try:
            step = splu(J).solve(-R)
        except RuntimeError as exc:
            raise NoConvergence("singular Jacobian: %s" % exc,
                                best_state=best, residual_norm=best_r)
        lam, improved = 1.0, False
        for _ in range(10):
            cand = Y + lam*step
            Rc, _, _ = _assemble(n, p, mesh, cand, h_half, closure, floor)
            rc = float(np.max(np.abs(Rc)))
            if np.isfinite(rc) and rc < rnorm*(1.0 - 0.25*lam):
                Y, improved = cand, True
                break
            lam *= 0.5
        if not improved:
            return best, best_r, False
    return best, best_r, False


def _estimate_h_half(mesh, Y):
    """Half-oscillation length from the last two sign changes of the iterate."""
    sgn = np.sign(Y)
    flips = np.nonzero(sgn[:-1]*sgn[1:] < 0)[0]
    if len(flips) >= 2:
        za = mesh[flips[-2]]
        zb = mesh[flips[-1]]
        if 0.1 < zb - za < 0.5*(mesh[-1] - mesh[0]):
            return float(zb - za)
    return 1.5


def _initial_guess(prob):
    """Absorption-free profile at the same n, rescaled to the balance amplitude."""
    nde = shoot(prob.n, 0, prob.y0, y_max=prob.L, tol=1e-9)
    mesh = np.linspace(prob.y0, prob.L, prob.mesh)
    Y = nde(mesh)
    peak = np.max(np.abs(Y))
    if peak > 0:
        Y = Y*(_amp_scale(prob.n, prob.p)/peak)
    return mesh, Y


def _continuation_path(n, p_target):
    """Values of p walked downward to the target, nudged off bifurcations."""
    p_hi = max(p_target + 6.0, n + 5.0)
    path = list(np.linspace(p_hi, p_target, 7))
    out = []
    for pv in path[:-1]:
        while _crit_distance(n, pv) < _CRIT_MARGIN:
            pv += 0.06
        out.append(pv)
    out.append(p_target)
    return out


def solve_vss(prob, tol=1e-8):
    """Relax the collocation system; returns (Profile, residual_norm).

    The residual norm is the max pointwise residual of the profile equation
    on the returned mesh (closure rows excluded), re-evaluated independently
    of the Newton assembly.  An unconverged best iterate is returned with its
    honest residual; NoConvergence is raised only on structural breakdown
    (non-finite iterates or collapse to the trivial solution).
    """
    mesh, Y = _initial_guess(prob)
    h_half = _estimate_h_half(mesh, Y)
    Y_cur, converged = Y, False
    res = np.inf
    Y_try, res_try, ok = _newton(prob.n, prob.p, mesh, Y, h_half,
                                 prob.closure, tol)
    if ok:
        Y_cur, res, converged = Y_try, res_try, True
    else:
        log.info("direct solve stalled at residual %.3e; continuing in p", res_try)
        Y_cont = Y.copy()
        for pv in _continuation_path(prob.n, prob.p):
            Y_cont, res, converged = _newton(prob.n, pv, mesh, Y_cont,
                                             h_half, prob.closure, tol)
            h_half = _estimate_h_half(mesh, Y_cont)
            if not converged:
                log.info("continuation stalled at p=%.3f residual %.3e", pv, res)
                break
        Y_cur = Y_cont

    if converged:
        # refresh the half-oscillation estimate once and re-relax
        h2 = _estimate_h_half(mesh, Y_cur)
        if abs(h2 - h_half) > 1e-3*h_half:
            Y_cur, res, converged = _newton(prob.n, prob.p, mesh, Y_cur, h2,
                                            prob.closure, tol)

    if np.max(np.abs(Y_cur)) < 1e-3*_amp_scale(prob.n, prob.p):
        raise NoConvergence("collapsed to the trivial solution",
                            best_state=Y_cur, residual_norm=res)

    rows = vss_residual_rows(prob.n, prob.p, mesh, Y_cur)
    res_norm = float(np.max(np.abs(rows)))
    h = mesh[1] - mesh[0]
    Yp = np.gradient(Y_cur, h)
    sgn = np.sign(Y_cur)
    flips = np.nonzero(sgn[:-1]*sgn[1:] < 0)[0]
    zeros = mesh[flips] - Y_cur[flips]*h/(Y_cur[flips + 1] - Y_cur[flips])
    ext = []
    for i in range(1, len(mesh) - 1):
        if (Y_cur[i] - Y_cur[i-1])*(Y_cur[i+1] - Y_cur[i]) < 0:
            denom = Y_cur[i-1] - 2*Y_cur[i] + Y_cur[i+1]
            off = 0.5*(Y_cur[i-1] - Y_cur[i+1])/denom if denom != 0 else 0.0
            ext.append((mesh[i] + off*h,
                        Y_cur[i] - 0.25*(Y_cur[i-1] - Y_cur[i+1])*off))
    meta = ProfileMeta(n=prob.n, k=1, l=-1, y0=prob.y0, delta=0.0,
                       termination="Converged" if converged else "Unconverged")
    prof = Profile(grid=mesh, Y=Y_cur, Yp=Yp, meta=meta, zeros=zeros,
                   extrema=np.array(ext) if ext else np.empty((0, 2)))
    return prof, res_norm


def hump_amplitude(profile):
    """Value of the first positive hump past the interface."""
    pos = profile.extrema[profile.extrema[:, 1] > 0] if len(profile.extrema) else []
    if len(pos):
        return float(pos[0, 1])
    return float(np.max(profile.Y))


def hump_stability(prob, L_list, tol=1e-8, gate=1e-6):
    """Max relative spread of the first-hump amplitude across tail lengths.

    Each length gets its own solve at matched mesh density; any residual
    above the gate aborts with NoConvergence (a diverged tail must not be
    averaged into a stability number).
    """
    if not L_list:
        raise ValueError("L_list must be non-empty")
    density = prob.mesh/(prob.L - prob.y0)
    amps = []
    for L in L_list:
        sub = VssProblem.build(prob.n, prob.p, y0=prob.y0, L=L,
                               mesh=int(round(density*(L - prob.y0))),
                               closure=prob.closure)
        prof, res = solve_vss(sub, tol=tol)
        if res > gate:
            raise NoConvergence("residual %.3e above gate %.3e at L=%g"
                                % (res, gate, L),
                                best_state=prof, residual_norm=res)
        amps.append(hump_amplitude(prof))
    ref = amps[0]
    return max(abs(a - ref)/ref for a in amps)


def limit_vss_integrate(y0, y_max, tol=1e-10, contact=1.0, delta=1e-4):
    """Branch-restart integration of the infinite-n limit of the VSS equation.

    Between zeros the equation reads D3 Y = -sign(Y) + Y; crossing a zero at
    y_i flips the sign term and jumps Y'' by 2 * sigma_before * y_i.  The
    launch is a quadratic contact at y0 with free curvature `contact`
    (exploratory: no selection principle is imposed).
    """
    if not y0 < 0:
        raise ValueError("y0 < 0 required")
    sigma = 1.0
    y = y0 + delta
    state = [contact*delta**2 - delta**3/6.0,
             2*contact*delta - delta**2/2.0,
             2*contact - delta]
    grids, vals, derivs, zeros = [], [], [], []
    termination = "ReachedEnd"
    while y < y_max:
        sg = sigma

        def rhs(t, s):
            return [s[1], s[2], -sg + s[0]]

        traj = integrate(rhs, y, state, y_max, rel_tol=tol, abs_tol=1e-13,
                         max_step=0.05, state_cap=1e8, stop_at_zero=True)
        ys = np.linspace(y, traj.y_final, 200)
        st = traj.sample(ys)
        grids.append(ys)
        vals.append(st[:, 0])
        derivs.append(st[:, 1])
        termination = traj.termination
        hit = [e for e in traj.events if e.kind == "Zero"]
        if traj.termination != "ReachedEnd" or not hit:
            break
        yz = traj.y_final
        send = traj.state_final
        zeros.append(yz)
        state = [0.0, send[1], send[2] + 2.0*sigma*yz]
        sigma = -sigma
        y = yz
        if y >= y_max:
            break
    grid = np.concatenate(grids)
    meta = ProfileMeta(n=float("inf"), k=1, l=-1, y0=float(y0), delta=delta,
                       termination=termination)
    return Profile(grid=grid, Y=np.concatenate(vals), Yp=np.concatenate(derivs),
                   meta=meta, zeros=np.array(zeros), extrema=np.empty((0, 2)))
