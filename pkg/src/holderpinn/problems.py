"""The four benchmark Dirichlet problems, as manufactured solutions.

Every problem bundles the operator (applied to a spatial jet on the tape),
the analytically derived source f = L u*, the boundary trace g, the exact
solution u*, and the boundary lift u0 used by the penalty-free ansatz.

The source terms were derived by hand from the closed-form exact solutions;
the test suite cross-checks each against a finite-difference application of
the operator before anything downstream is trusted.  The lifts are the
transfinite (Coons) interpolants of the boundary data, evaluated
symbolically — the generic Coons formula collapses to the short closed
forms below because each g vanishes or loses its x-dependence on the
relevant edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .network import SmoothField, zero_field

TWO_PI = 2.0 * np.pi
PI2 = np.pi ** 2


@dataclass
class Problem:
    """A second-order elliptic Dirichlet problem L u = f on a box.

    op_apply(jet, x) applies L to the ansatz jet at the batch x and returns
    a tape node of shape (N,); f/g/u_exact are plain vectorized closures.
    """

    name: str
    dim: int
    box: np.ndarray
    op_apply: callable
    f: callable
    g: callable
    u_exact: callable
    lift: SmoothField = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# 1D ODE:  −u'' = f  on (−π, π),  u(±π) = 0
# ---------------------------------------------------------------------------

_ODE_KS = (1.0, 3.0, 5.0, 7.0)


def _ode_u(x):
    t = x[:, 0]
    return sum(np.sin(k * t) / k for k in _ODE_KS)


def _ode_f(x):
    t = x[:, 0]
    return sum(k * np.sin(k * t) for k in _ODE_KS)


def ode_problem():
    def op_apply(jet, x):
        return ad.neg(jet.lap_terms[0])

    return Problem(
        name="ode",
        dim=1,
        box=np.array([[-np.pi, np.pi]]),
        op_apply=op_apply,
        f=_ode_f,
        g=lambda x: np.zeros(np.atleast_2d(x).shape[0]),
        u_exact=_ode_u,
        lift=zero_field(1),
    )


# ---------------------------------------------------------------------------
# 2D Poisson:  −Δu = f  on (−1,1)²,  u* = (0.1 sin 2πx + tanh 10x) sin 2πy
# ---------------------------------------------------------------------------

def _phi(t):
    return 0.1 * np.sin(TWO_PI * t) + np.tanh(10.0 * t)


def _phi_d1(t):
    return 0.2 * np.pi * np.cos(TWO_PI * t) + 10.0 / np.cosh(10.0 * t) ** 2


def _phi_d2(t):
    sech2 = 1.0 / np.cosh(10.0 * t) ** 2
    return -0.4 * PI2 * np.sin(TWO_PI * t) - 200.0 * np.tanh(10.0 * t) * sech2


def _poisson_u(x):
    return _phi(x[:, 0]) * np.sin(TWO_PI * x[:, 1])


def _poisson_f(x):
    t, y = x[:, 0], x[:, 1]
    psi = np.sin(TWO_PI * y)
    # f = −Δu* = −φ''ψ + 4π² φψ   (since ψ'' = −4π²ψ)
    return -_phi_d2(t) * psi + 4.0 * PI2 * _phi(t) * psi


def _tanh_lift():
    """Coons patch of the Poisson/Helmholtz boundary data.

    g vanishes on the y = ±1 edges and equals ±tanh(10)·sin(2πy) on the
    x = ±1 edges, so the interpolant is u0 = tanh(10)·x·sin(2πy).
    """
    c = np.tanh(10.0)

    def vfn(x):
        return c * x[:, 0] * np.sin(TWO_PI * x[:, 1])

    def gfn(x):
        return np.stack([
            c * np.sin(TWO_PI * x[:, 1]),
            c * TWO_PI * x[:, 0] * np.cos(TWO_PI * x[:, 1]),
        ])

    def lfn(x):
        return np.stack([
            np.zeros(x.shape[0]),
            -4.0 * PI2 * c * x[:, 0] * np.sin(TWO_PI * x[:, 1]),
        ])

    return SmoothField(vfn=vfn, gfn=gfn, lfn=lfn)


def poisson_problem():
    def op_apply(jet, x):
        return ad.neg(ad.add(jet.lap_terms[0], jet.lap_terms[1]))

    return Problem(
        name="poisson",
        dim=2,
        box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
        op_apply=op_apply,
        f=_poisson_f,
        g=_poisson_u,
        u_exact=_poisson_u,
        lift=_tanh_lift(),
    )


# ---------------------------------------------------------------------------
# 2D variable coefficients:  c1 u_xx + c2 u_yy = f  on (−1,1)²
# (printed without a leading minus; the manufactured f uses the same sign)
# ---------------------------------------------------------------------------

def _c1(x):
    return 3.0 + 2.0 * np.cos(np.pi * (x[:, 0] + x[:, 1]))


def _c2(x):
    return 3.0 + 2.0 * np.sin(np.pi * (x[:, 0] + x[:, 1]))


def _varcoef_u(x):
    return np.exp(0.5 * x[:, 0] ** 2) * np.cos(TWO_PI * x[:, 1])


def _varcoef_uxx(x):
    t = x[:, 0]
    return (1.0 + t * t) * np.exp(0.5 * t * t) * np.cos(TWO_PI * x[:, 1])


def _varcoef_f(x):
    return _c1(x) * _varcoef_uxx(x) + _c2(x) * (-4.0 * PI2) * _varcoef_u(x)


def _exp_lift():
    """Coons patch for u* = e^{x²/2} cos 2πy.

    Both x = ±1 edges carry e^{1/2} cos 2πy and both y = ±1 edges carry
    e^{x²/2}; the patch collapses to u0 = e^{1/2} cos 2πy + e^{x²/2} − e^{1/2}.
    """
    r = np.exp(0.5)

    def vfn(x):
        return r * np.cos(TWO_PI * x[:, 1]) + np.exp(0.5 * x[:, 0] ** 2) - r

    def gfn(x):
        t = x[:, 0]
        return np.stack([
            t * np.exp(0.5 * t * t),
            -TWO_PI * r * np.sin(TWO_PI * x[:, 1]),
        ])

    def lfn(x):
        t = x[:, 0]
        return np.stack([
            (1.0 + t * t) * np.exp(0.5 * t * t),
            -4.0 * PI2 * r * np.cos(TWO_PI * x[:, 1]),
        ])

    return SmoothField(vfn=vfn, gfn=gfn, lfn=lfn)


def varcoef_problem():
    def op_apply(jet, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return ad.add(
            ad.mul(jet.lap_terms[0], _c1(x)),
            ad.mul(jet.lap_terms[1], _c2(x)),
        )

    return Problem(
        name="varcoef",
        dim=2,
        box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
        op_apply=op_apply,
        f=_varcoef_f,
        g=_varcoef_u,
        u_exact=_varcoef_u,
        lift=_exp_lift(),
    )


# ---------------------------------------------------------------------------
# 2D Helmholtz with k = π:  −(Δu + π²u) = f, same u* as the Poisson case
# ---------------------------------------------------------------------------

def _helmholtz_f(x):
    return _poisson_f(x) - PI2 * _poisson_u(x)


def helmholtz_problem():
    def op_apply(jet, x):
        lap = ad.add(jet.lap_terms[0], jet.lap_terms[1])
        return ad.neg(ad.add(lap, ad.mul(jet.value, PI2)))

    return Problem(
        name="helmholtz",
        dim=2,
        box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
        op_apply=op_apply,
        f=_helmholtz_f,
        g=_poisson_u,
        u_exact=_poisson_u,
        lift=_tanh_lift(),
    )


# ---------------------------------------------------------------------------
# registry and geometry helpers
# ---------------------------------------------------------------------------

_REGISTRY = {
    "ode": ode_problem,
    "poisson": poisson_problem,
    "varcoef": varcoef_problem,
    "helmholtz": helmholtz_problem,
}


def problem_names():
    return sorted(_REGISTRY)


def get_problem(name):
    try:
        factory = _REGISTRY[str(name).lower()]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose one of {', '.join(problem_names())}"
        ) from None
    return factory()


def boundary_points(problem, total=400):
    """Uniformly spaced points lying exactly on ∂Ω.

    1D: the two endpoints.  2D: total//4 points per edge, walked
    counterclockwise with endpoint=False so each corner appears once, and
    the on-face coordinate assigned as the exact box constant.
    """
    box = np.asarray(problem.box, dtype=np.float64)
    if problem.dim == 1:
        return box.reshape(2, 1)
    (a, b), (c, d) = box
    m = max(1, total // 4)
    sx = np.linspace(a, b, m, endpoint=False)
    sy = np.linspace(c, d, m, endpoint=False)
    bottom = np.column_stack([sx, np.full(m, c)])
    right = np.column_stack([np.full(m, b), sy])
    top = np.column_stack([a + b - sx, np.full(m, d)])
    left = np.column_stack([np.full(m, a), c + d - sy])
    return np.vstack([bottom, right, top, left])


def exact_jet_tables(name, x):
    """(u*, ∂u*/∂x_i, ∂²u*/∂x_i²) in closed form, for oracle checks only.

    Never used by training code: the ansatz must learn the interior from f
    and the boundary data alone.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    name = str(name).lower()
    if name == "ode":
        t = x[:, 0]
        v = sum(np.sin(k * t) / k for k in _ODE_KS)
        g = sum(np.cos(k * t) for k in _ODE_KS)
        l = sum(-k * np.sin(k * t) for k in _ODE_KS)
        return v, g[None, :], l[None, :]
    if name in ("poisson", "helmholtz"):
        t, y = x[:, 0], x[:, 1]
        psi = np.sin(TWO_PI * y)
        dpsi = TWO_PI * np.cos(TWO_PI * y)
        v = _phi(t) * psi
        g = np.stack([_phi_d1(t) * psi, _phi(t) * dpsi])
        l = np.stack([_phi_d2(t) * psi, -4.0 * PI2 * v])
        return v, g, l
    if name == "varcoef":
        t, y = x[:, 0], x[:, 1]
        e = np.exp(0.5 * t * t)
        cy = np.cos(TWO_PI * y)
        v = e * cy
        g = np.stack([t * e * cy, -TWO_PI * e * np.sin(TWO_PI * y)])
        l = np.stack([_varcoef_uxx(x), -4.0 * PI2 * v])
        return v, g, l
    raise ValueError(f"unknown problem {name!r}")
