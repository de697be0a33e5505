"""Computable norms and seminorms, plus majorants for the dual norms that the
continuous-dependence bound consumes.

Dual norms are never evaluated as suprema over test-function spaces; the
majorant routes (anisotropic-norm minima, primitive-based L^2 bounds and the
L^1 route scaled by the declared data bound) stand in for them, up to
absorbed constants.  Rate checks are insensitive to those constants.

Exponents live in [1, inf]; pass float('inf') (or the string 'inf' in
configs) for the essential-sup slots, which on grids are sample maxima.
"""

import numpy as np

from .calculus import i_bracket, mean_omega, time_primitive
from .grid import du_centers, dw_edges_interior, edges_to_centers

INF = float("inf")

# exponent pairs sampled for the [V2]* majorant: (q, r) with 1/(2q) + 1/r <= 5/4
V2STAR_PAIRS = ((2.0, 1.0), (1.0, 4.0 / 3.0), (1.2, 1.2))


class BadExponent(ValueError):
    pass


class NonpositiveFloor(ValueError):
    pass


def _check_exponent(q):
    q = float(q)
    if not q >= 1.0:
        raise BadExponent(f"exponent must be in [1, inf], got {q}")
    return q


def space_lq(grid, y, q):
    """L^q(Omega) norm of a center or edge field (last axis)."""
    q = _check_exponent(q)
    y = np.abs(np.asarray(y, dtype=float))
    if q == INF:
        return y.max(axis=-1)
    if y.shape[-1] == grid.nx:
        return (grid.X * (y ** q).mean(axis=-1)) ** (1.0 / q)
    if y.shape[-1] == grid.nx + 1:
        w = np.ones(grid.nx + 1)
        w[0] = w[-1] = 0.5
        return (grid.X * ((y ** q) * w).sum(axis=-1) / grid.nx) ** (1.0 / q)
    raise ValueError(f"field of length {y.shape[-1]} fits neither centers nor edges")


def time_lr(s, times, r):
    """L^r(0,T) norm of a scalar time series sampled at `times` (trapezoid)."""
    r = _check_exponent(r)
    s = np.abs(np.asarray(s, dtype=float))
    if r == INF:
        return s.max()
    return np.trapezoid(s ** r, np.asarray(times)) ** (1.0 / r)


def lqr_norm(grid, w, q, r, times=None):
    """Anisotropic norm || ||w(.,t)||_{L^q(Omega)} ||_{L^r(0,T)}.

    w has shape (ntimes, nx[+1]); a 1D field is treated as constant in time.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[None, :]
        times = np.array([0.0, grid.T]) if times is None else times
        w = np.repeat(w, len(np.atleast_1d(times)), axis=0)
    if times is None:
        times = np.linspace(0.0, grid.T, w.shape[0])
    inner = space_lq(grid, w, q)
    return float(time_lr(inner, times, r))


def c0l2_norm(grid, w, times=None):
    """C(0,T; L^2(Omega)) norm: max over stored times of the spatial L^2 norm."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        return float(space_lq(grid, w, 2.0))
    return float(space_lq(grid, w, 2.0).max())


def h_minus_one(grid, y, m):
    """Negative-order norm through primitives: ||I^<m> y||_{L^2} for m = 1, 2 and
    ||Iy||_{L^2} + X |<y>| for m = 3.  Edge fields are averaged to centers first."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] == grid.nx + 1:
        y = edges_to_centers(y)
    if m in (1, 2):
        return float(space_lq(grid, i_bracket(grid, y, m), 2.0))
    if m == 3:
        return float(space_lq(grid, i_bracket(grid, y, 2), 2.0)
                     + grid.X * abs(mean_omega(grid, y)))
    raise ValueError(f"m must be 1, 2 or 3, got {m}")


def sup_t_h_minus_one(grid, w, m):
    """max over stored times of the H^{-1;m} norm of each slice."""
    w = np.asarray(w, dtype=float)
    return max(h_minus_one(grid, w[n], m) for n in range(w.shape[0]))


def _dx_field(grid, w):
    """Spatial derivative samples at all nx+1 edges.

    Edge fields differentiate to centers (then back to edges by one-sided
    extension); center fields differentiate to interior edges with linear
    extrapolation at the boundary edges.  Keeps the L^2(Q) quadrature of Dw
    second-order for smooth w.
    """
    w = np.asarray(w, dtype=float)
    if w.shape[-1] == grid.nx + 1:
        d = du_centers(grid, w)
    else:
        d = dw_edges_interior(grid, w)
    out = np.empty(w.shape[:-1] + (d.shape[-1] + 2,))
    out[..., 1:-1] = d
    out[..., 0] = 2 * d[..., 0] - d[..., 1]
    out[..., -1] = 2 * d[..., -1] - d[..., -2]
    return out


def v2_norm(grid, w, times=None):
    """||w||_{L^{2,inf}(Q)} + ||Dw||_{L^2(Q)} with Dw from the scheme stencil."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[None, :]
    if times is None:
        times = np.linspace(0.0, grid.T, w.shape[0])
    dw = _dx_field(grid, w)
    # edge-located derivative samples but only nx+1-2 interior are second
    # order; the extrapolated ends keep the trapezoid weights consistent
    lv = lqr_norm(grid, w, 2.0, INF, times)
    ld = lqr_norm(grid, dw, 2.0, 2.0, times)
    return float(lv + ld)


def _shift_ladder(nx):
    js = list(range(1, min(17, nx)))
    j = 32
    while j < nx:
        js.append(j)
        j *= 2
    return js


def wh_seminorm(grid, y, xi_weights=None):
    """Bounded-variation style norm: L^{1,inf} term plus the sup over shifts of
    the L^1 norm of the difference quotient in x.

    y is (nx,) for plain fields or (n_xi, nx) for two-scale samples; in the
    two-scale case xi_weights (summing to 1) weight the xi quadrature and the
    first term takes sup over xi before the x integral.
    """
    y = np.asarray(y, dtype=float)
    two_scale = y.ndim == 2
    if two_scale:
        if xi_weights is None:
            xi_weights = np.full(y.shape[0], 1.0 / y.shape[0])
        sup_xi = np.abs(y).max(axis=0)
        term1 = grid.X * sup_xi.mean()
    else:
        term1 = grid.X * np.abs(y).mean()

    term2 = 0.0
    for j in _shift_ladder(grid.nx):
        d = np.abs(y[..., j:] - y[..., :-j]) / (j * grid.dx)
        # truncated domain (0, X - j dx): nx - j cells of width dx
        if two_scale:
            val = grid.dx * (xi_weights @ d).sum()
        else:
            val = grid.dx * d.sum()
        term2 = max(term2, float(val))
    return float(term1 + term2)


def wh_spacetime_seminorm(grid, w, times, r=1.0, xi_weights=None):
    """Space-time variant of the bounded-variation norm: the x-roles of
    wh_seminorm with an outer L^r(0,T) norm riding on top.

    w is (ntimes, nx) or (n_xi, ntimes, nx); the difference quotient acts in
    x only.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        w = w[None, :, :]
    if xi_weights is None:
        xi_weights = np.full(w.shape[0], 1.0 / w.shape[0])
    sup_xi = np.abs(w).max(axis=0)                  # (ntimes, nx)
    term1 = time_lr(grid.X * sup_xi.mean(axis=-1), times, r)

    term2 = 0.0
    for j in _shift_ladder(grid.nx):
        d = np.abs(w[..., j:] - w[..., :-j]) / (j * grid.dx)
        slab = grid.dx * np.einsum("i,itx->t", xi_weights, d)
        term2 = max(term2, float(time_lr(slab, times, r)))
    return float(term1 + term2)


def v2star_majorant(grid, w, times=None):
    """Computable stand-in for the [V2(Q)]* norm: min over the sampled
    anisotropic exponent pairs."""
    return min(lqr_norm(grid, w, q, r, times) for q, r in V2STAR_PAIRS)


def h21star_majorant(grid, F, m, kappa_floor, times=None):
    """Majorant for the dual norm of the space used in the energy bound.

    Two routes, minimum taken: the L^1(Q) route scaled by N = 1/kappa_floor,
    and the primitive route N ||I^<m> F||_{L^{2,1}} plus, for m = 3, the
    sqrt(X) ||I_t <F>||_{L^2(0,T)} term.
    """
    if kappa_floor <= 0:
        raise NonpositiveFloor("kappa_floor must be positive")
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[None, :].repeat(2, axis=0)
    if times is None:
        times = np.linspace(0.0, grid.T, F.shape[0])
    N = 1.0 / kappa_floor
    route_l1 = N * lqr_norm(grid, F, 1.0, 1.0, times)
    ibf = i_bracket(grid, F, m)
    route_prim = N * lqr_norm(grid, ibf, 2.0, 1.0, times)
    if m == 3:
        it_mean = time_primitive(mean_omega(grid, F), times)
        route_prim += np.sqrt(grid.X) * time_lr(it_mean, times, 2.0)
    return float(min(route_l1, route_prim))


def w11_time_norm(b, times):
    """W^{1,1}(0,T) norm of a sampled time series: L^1 plus the total variation
    of the linear interpolant (== L^1 of its derivative)."""
    b = np.asarray(b, dtype=float)
    return float(np.trapezoid(np.abs(b), times) + np.abs(np.diff(b)).sum())


NAMED_NORMS = {
    "Lq": lambda grid, w, times=None, q=2.0, **_: float(space_lq(grid, np.asarray(w), q)) if np.ndim(w) == 1 else lqr_norm(grid, w, q, q, times),
    "Lqr": lambda grid, w, times=None, q=2.0, r=2.0, **_: lqr_norm(grid, w, q, r, times),
    "V2": lambda grid, w, times=None, **_: v2_norm(grid, w, times),
    "Hm1": lambda grid, w, times=None, m=3, **_: h_minus_one(
        grid, np.asarray(w)[0] if np.ndim(w) == 2 else w, m),
    "C0L2": lambda grid, w, times=None, **_: c0l2_norm(grid, w, times),
    "LqInfty": lambda grid, w, times=None, q=2.0, **_: lqr_norm(grid, w, q, INF, times),
    "WH": lambda grid, w, times=None, **_: wh_seminorm(grid, np.asarray(w)[0] if np.ndim(w) == 2 else w),
    "WHst": lambda grid, w, times=None, r=1.0, **_: wh_spacetime_seminorm(grid, w, times, r),
    "V2star": lambda grid, w, times=None, **_: v2star_majorant(grid, w, times),
    "H21star": lambda grid, w, times=None, m=3, kappa_floor=1.0, **_: h21star_majorant(grid, w, m, kappa_floor, times),
}
