"""Similarity exponents, critical absorption exponents, and pointwise ODE residuals.

The scaled solution ansatz u(x,t) = t^(-alpha) f(x/t^beta) turns the dispersion
PDE u_t = (-1)^(k+1) D^(2k+1) (|u|^n u) into a one-dimensional ODE for the
profile f, or equivalently for Y = |f|^n f.  Everything here is closed-form:
eigenvalue formulas are evaluated in exact rational arithmetic whenever the
inputs are rational (floats are a projection), and `residual` evaluates the
left-hand side of any of the supported ODE forms at a point.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import isfinite

from .errors import IndexOutOfRange, InvalidScaling, SingularPoint

# ODE forms and their orders.  The second-order forms are the k=1 moment
# reductions; the two third-order forms belong to the absorption problem.
FORM_ORDERS = {
    "PureF": None,          # 2k+1, depends on params.k
    "GeneralY": None,       # 2k+1
    "IntegratedY_l0": 2,
    "IntegratedY_l1": 2,
    "IntegratedY_l2": 2,
    "VssY": 3,
    "LimitL0": 2,
    "LimitL1": 2,
    "LimitL2": 2,
    "LimitVss": 3,
}


def _as_exact(x):
    """Return x as Fraction when it is exactly representable as one."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return None


def alpha_l(n, k, l):
    """Similarity exponent alpha for the l-th conservation-law eigenvalue.

    alpha = (l+1) / ((2k+1) + (l+1)n), valid for l < 2k+1.  Exact when n is
    int or Fraction, floating otherwise.
    """
    if not (isinstance(k, int) and k >= 1 and isinstance(l, int) and l >= 0):
        raise ValueError("need integer k >= 1 and integer l >= 0")
    if l >= 2*k + 1:
        raise IndexOutOfRange(
            "l=%d is outside the conservation-law range l < 2k+1 = %d" % (l, 2*k + 1))
    ne = _as_exact(n)
    if ne is not None:
        if ne < 0:
            raise ValueError("n must be >= 0")
        return Fraction(l + 1, 1) / ((2*k + 1) + (l + 1)*ne)
    if n < 0:
        raise ValueError("n must be >= 0")
    return (l + 1.0) / ((2*k + 1) + (l + 1)*n)


def beta_of(alpha, n, k):
    """Spatial scaling exponent beta = (1 - alpha*n) / (2k+1); needs alpha*n < 1."""
    ae, ne = _as_exact(alpha), _as_exact(n)
    if ae is not None and ne is not None:
        if ae*ne >= 1:
            raise InvalidScaling("alpha*n = %s >= 1" % (ae*ne,))
        return (1 - ae*ne) / (2*k + 1)
    an = float(alpha)*float(n)
    if an >= 1:
        raise InvalidScaling("alpha*n = %g >= 1" % an)
    return (1.0 - an) / (2*k + 1)


def p_crit(n, k, l):
    """Critical absorption exponent p_l(n) = 1 + 1/alpha_l(n)."""
    a = alpha_l(n, k, l)
    if isinstance(a, Fraction):
        return 1 + 1/a
    return 1.0 + 1.0/a


@dataclass
class SimilarityParams:
    """The exponent bundle (n, k, l, alpha, beta) plus optional absorption p."""
    n: float
    k: int
    l: int
    alpha: float
    beta: float
    p: float = None

    @classmethod
    def eigenfunction(cls, n, k, l):
        a = alpha_l(n, k, l)
        return cls(n=n, k=k, l=l, alpha=a, beta=beta_of(a, n, k))

    @classmethod
    def vss(cls, n, k, p):
        """Absorption scaling: alpha = 1/(p-1), beta = (p-(n+1))/((p-1)(2k+1))."""
        if not p > n + 1:
            raise InvalidScaling("need p > n+1, got p=%g, n=%g" % (p, n))
        a = 1.0/(p - 1.0)
        b = (p - (n + 1.0))/((p - 1.0)*(2*k + 1))
        return cls(n=n, k=k, l=0, alpha=a, beta=b, p=p)


@dataclass
class OdeForm:
    """A named ODE form together with its parameter bundle."""
    kind: str
    params: SimilarityParams

    def __post_init__(self):
        if self.kind not in FORM_ORDERS:
            raise ValueError("unknown ODE form %r" % (self.kind,))

    @property
    def order(self):
        fixed = FORM_ORDERS[self.kind]
        return fixed if fixed is not None else 2*self.params.k + 1


def signed_root(Y, n):
    """sign(Y) * |Y|^(1/(n+1)), the continuous inverse of Y = |f|^n f; 0 at 0."""
    if Y == 0.0:
        return 0.0
    a = abs(Y)**(1.0/(n + 1.0))
    return a if Y > 0 else -a


def _f_prime(Y, Yp, n):
    # d/dy of sign(Y)|Y|^{1/(n+1)} = |Y|^{-n/(n+1)} Y' / (n+1); singular at Y=0
    if Y == 0.0:
        if Yp == 0.0:
            return 0.0
        raise SingularPoint("f' undefined at Y=0 with Y' != 0")
    return abs(Y)**(-n/(n + 1.0))*Yp/(n + 1.0)


def residual(form, point, state):
    """Left-hand side of the form's ODE at y=point given state=(Y, Y', ...).

    The state must supply derivatives up to the form's order.  Forms whose
    printed coefficients carry 1/y or 1/y^2 (the l=1,2 reductions and their
    limit counterparts) raise SingularPoint at y=0; integrators cross that
    point in regularized variables instead.
    """
    p = form.params
    n, k = float(p.n), p.k
    y = float(point)
    if len(state) < form.order + 1:
        raise ValueError("state supplies %d derivatives, form needs %d"
                         % (len(state) - 1, form.order))
    Y = float(state[0])
    Yp = float(state[1])
    kind = form.kind

    if kind in ("PureF", "GeneralY"):
        # (-1)^(k+1) Y^(2k+1) + beta*y*f' + alpha*f, with f = sign(Y)|Y|^{1/(n+1)}.
        # The f-form and the Y-form are the same expression after substituting
        # Y = |f|^n f, so both kinds share this evaluator.
        top = float(state[2*k + 1])
        sgn = -1.0 if k % 2 == 0 else 1.0  # (-1)^(k+1)
        return sgn*top + float(p.beta)*y*_f_prime(Y, Yp, n) + float(p.alpha)*signed_root(Y, n)

    if kind == "IntegratedY_l0":
        if k != 1:
            raise ValueError("the integrated second-order forms assume k=1")
        return float(state[2]) + y*signed_root(Y, n)/(3.0 + n)

    if kind == "IntegratedY_l1":
        if k != 1:
            raise ValueError("the integrated second-order forms assume k=1")
        if y == 0.0:
            raise SingularPoint("IntegratedY_l1 coefficient 1/y singular at y=0")
        return float(state[2]) - Yp/y + y*signed_root(Y, n)/(3.0 + 2.0*n)

    if kind == "IntegratedY_l2":
        if k != 1:
            raise ValueError("the integrated second-order forms assume k=1")
        if y == 0.0:
            raise SingularPoint("IntegratedY_l2 coefficients 1/y, 1/y^2 singular at y=0")
        return (float(state[2]) - 2.0*Yp/y + 2.0*Y/y**2
                + y*signed_root(Y, n)/(3.0 + 3.0*n))

    if kind == "VssY":
        pa = float(p.p)
        A = (pa - (n + 1.0))/(3.0*(pa - 1.0)*(n + 1.0))
        B = 1.0/(pa - 1.0)
        if Y == 0.0:
            grad = 0.0 if Yp == 0.0 else None
            if grad is None:
                raise SingularPoint("|Y|^{-n/(n+1)}Y' undefined at Y=0 with Y' != 0")
            absorb = 0.0
        else:
            grad = abs(Y)**(-n/(n + 1.0))*Yp
            absorb = abs(Y)**((pa - (n + 1.0))/(n + 1.0))*Y
        return float(state[3]) + A*grad*y + B*signed_root(Y, n) - absorb

    sgnY = 0.0 if Y == 0.0 else (1.0 if Y > 0 else -1.0)

    if kind == "LimitL0":
        return float(state[2]) + sgnY*y
    if kind == "LimitL1":
        if y == 0.0:
            raise SingularPoint("LimitL1 weight singular at y=0")
        return float(state[2])*y - Yp + sgnY*y**2
    if kind == "LimitL2":
        if y == 0.0:
            raise SingularPoint("LimitL2 weight singular at y=0")
        return float(state[2])*y**2 - 2.0*Yp*y + 2.0*Y + sgnY*y**3
    if kind == "LimitVss":
        return float(state[3]) + sgnY - Y

    raise ValueError("unhandled form %r" % (kind,))


def growth_bundle(k, n):
    """Non-oscillatory algebraic bundle Y ~ +/- A y^m for even k; None for odd k.

    m = 2k + (n+2)/(n+1) and |A|^{-n/(n+1)} = m(m-1)...(m-2k+1) * ((2k+1)+n).
    """
    if k < 1:
        raise ValueError("k >= 1 required")
    if k % 2 == 1:
        return None
    m = 2*k + (n + 2.0)/(n + 1.0)
    prod = 1.0
    for j in range(2*k):
        prod *= (m - j)
    rhs = prod*((2*k + 1) + n)
    A = rhs**(-(n + 1.0)/n)
    if not isfinite(A):
        raise ValueError("growth amplitude overflowed for k=%d, n=%g" % (k, n))
    return m, A


def oscillation_exponent(k, n):
    """Envelope growth exponent gamma = (2k+1)(n+1)/n for n > 0."""
    if n <= 0:
        raise ValueError("n > 0 required")
    return (2*k + 1)*(n + 1.0)/n
