"""Semi-implicit time stepper for the 1D viscous heat-conducting gas system in
Lagrangian mass coordinates, with the perturbed variant (mass-equation term
beta, heat-flux term gamma, shifted initial Eulerian coordinate).

Unknowns per step: velocity u (edges, implicit viscous flux), specific volume
eta (centers, exact linear update), temperature theta (centers, implicit
conduction).  Pressure and transport coefficients are lagged inside a Picard
loop iterated to a tight tolerance, so the converged step satisfies the fully
coupled backward-Euler (or theta-weighted) system.

The mass update is exactly conservative: summing cells telescopes the
velocity differences, so for m = 1 the gas-volume identity holds to round-off
at every step (with the beta contribution when perturbed).

Discontinuous initial eta is run as-is: the mass equation is linear in eta
and discontinuities persist by design.  No limiting or regularization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .calculus import primitive_at_edges, time_primitive, i_bracket, mean_omega
from .grid import du_centers, dw_edges_interior, edges_to_centers, integrate_edge, \
    integrate_center
from .norms import space_lq
from .problem import SolutionBundle, zero_perturbation


class PositivityLoss(RuntimeError):
    def __init__(self, t, variable):
        self.t = t
        self.variable = variable
        super().__init__(f"{variable} lost positivity near t={t:.6g} "
                         "after exhausting the step-halving budget")


class NonlinearDivergence(RuntimeError):
    def __init__(self, step):
        self.step = step
        super().__init__(f"Picard iteration did not converge at step {step}")


class _Retry(Exception):
    def __init__(self, kind, t):
        self.kind = kind
        self.t = t


@dataclass(frozen=True)
class SchemeParams:
    theta_implicitness: float = 1.0   # 1 = backward Euler diffusion, 1/2 = CN
    max_picard: int = 50
    tol: float = 1e-10
    dt_safety: int = 10               # max halvings of a nominal step
    positivity_floor: float = 1e-10
    store_stride: int = 1
    dense_steps: int = 0              # additionally store the first K steps

    def __post_init__(self):
        if not 0.5 <= self.theta_implicitness <= 1.0:
            raise ValueError("theta_implicitness must lie in [1/2, 1]")
        if self.tol <= 0 or self.positivity_floor <= 0:
            raise ValueError("tolerance and positivity floor must be positive")


def _eval_g(fn, chi, x, t):
    if fn is None:
        return np.zeros_like(x)
    return np.asarray(fn(chi, x, t), dtype=float) * np.ones_like(x)


class _Stepper:
    def __init__(self, spec, scheme):
        self.spec = spec
        self.scheme = scheme
        self.grid = spec.grid
        self.gas = spec.gas
        self.bc = spec.bc
        self.pert = spec.perturbation if spec.perturbation is not None \
            else zero_perturbation(spec.grid)
        self.xc = self.grid.centers()
        self.xe = self.grid.edges()
        self.dx = self.grid.dx

    # -- instantaneous derived fields ------------------------------------

    def stress(self, eta, u, theta, t):
        rho = 1.0 / eta
        beta = self.pert.beta_at(self.xc, t)
        return self.gas.nu * rho * (du_centers(self.grid, u) + beta) \
            - self.gas.k * rho * theta

    def heat_flux(self, eta, theta, t):
        pi = np.empty(self.grid.nx + 1)
        rho_e = 2.0 / (eta[:-1] + eta[1:])
        gamma = self.pert.gamma_at(self.xe, t)
        pi[1:-1] = self.gas.lam * rho_e[:] * (dw_edges_interior(self.grid, theta)
                                              + gamma[1:-1])
        b = self.bc.at(self.grid, t)
        pi[0] = b["pi0"]
        pi[-1] = b["piX"]
        return pi

    # -- one substep of size h -------------------------------------------

    def substep(self, state, t0, h):
        eta_n, u_n, theta_n, x_e_n = state
        g = self.grid
        gas = self.gas
        sch = self.scheme
        th = sch.theta_implicitness
        t1 = t0 + h
        nx, dx = g.nx, self.dx

        b1 = self.bc.at(g, t1)
        beta_n = self.pert.beta_at(self.xc, t0)
        beta_1 = self.pert.beta_at(self.xc, t1)
        beta_avg = th * beta_1 + (1.0 - th) * beta_n
        gamma_1 = self.pert.gamma_at(self.xe, t1)
        du_n = du_centers(g, u_n)
        dth_n = dw_edges_interior(g, theta_n)

        eta_s, u_s, theta_s = eta_n, u_n, theta_n
        x_e_s = x_e_n + h * u_n

        for _ in range(sch.max_picard):
            rho_s = 1.0 / eta_s
            p_s = gas.k * rho_s * theta_s

            # momentum: implicit viscous flux, lagged pressure/coefficients
            a = gas.nu * th * rho_s                      # per center
            S = gas.nu * rho_s * ((1.0 - th) * du_n + beta_avg) - p_s
            g_edge = _eval_g(self.spec.g, x_e_s, self.xe, t1)

            diag = np.empty(nx + 1)
            lower = np.zeros(nx + 1)
            upper = np.zeros(nx + 1)
            rhs = np.empty(nx + 1)

            diag[1:-1] = 1.0 / h + (a[1:] + a[:-1]) / dx ** 2
            upper[1:-1] = -a[1:] / dx ** 2
            lower[1:-1] = -a[:-1] / dx ** 2
            rhs[1:-1] = u_n[1:-1] / h + (S[1:] - S[:-1]) / dx + g_edge[1:-1]

            if self.bc.m == 1:
                diag[0] = 1.0
                upper[0] = 0.0
                rhs[0] = b1["u0"]
            else:
                diag[0] = 1.0 / h + 2.0 * a[0] / dx ** 2
                upper[0] = -2.0 * a[0] / dx ** 2
                rhs[0] = u_n[0] / h + (2.0 / dx) * (S[0] + b1["p0"]) + g_edge[0]
            if self.bc.m in (1, 2):
                diag[-1] = 1.0
                lower[-1] = 0.0
                rhs[-1] = b1["uX"]
            else:
                diag[-1] = 1.0 / h + 2.0 * a[-1] / dx ** 2
                lower[-1] = -2.0 * a[-1] / dx ** 2
                rhs[-1] = u_n[-1] / h + (2.0 / dx) * (-b1["pX"] - S[-1]) + g_edge[-1]

            ab = np.zeros((3, nx + 1))
            ab[0, 1:] = upper[:-1]
            ab[1, :] = diag
            ab[2, :-1] = lower[1:]
            u_new = solve_banded((1, 1), ab, rhs)

            du_new = du_centers(g, u_new)
            du_avg = th * du_new + (1.0 - th) * du_n
            eta_new = eta_n + h * (du_avg + beta_avg)
            if eta_new.min() <= sch.positivity_floor:
                raise _Retry("eta", t1)
            rho_new = 1.0 / eta_new
            x_e_new = x_e_n + 0.5 * h * (u_n + u_new)

            # energy: implicit conduction with the fresh density, source with
            # the freshly updated velocity, pressure lagged one Picard sweep
            sigma_src = gas.nu * rho_new * (du_avg + beta_avg) \
                - gas.k * rho_new * theta_s
            f_cell = _eval_g(self.spec.f, edges_to_centers(x_e_new), self.xc, t1)
            source = sigma_src * du_avg + f_cell

            b_e = gas.lam * 2.0 / (eta_new[:-1] + eta_new[1:])   # interior edges
            pi_expl = b_e * ((1.0 - th) * dth_n + gamma_1[1:-1])

            diag_t = np.full(nx, gas.cV / h)
            lower_t = np.zeros(nx)
            upper_t = np.zeros(nx)
            diag_t[:-1] += th * b_e / dx ** 2
            diag_t[1:] += th * b_e / dx ** 2
            upper_t[:-1] = -th * b_e / dx ** 2
            lower_t[1:] = -th * b_e / dx ** 2

            rhs_t = gas.cV * theta_n / h + source
            rhs_t[:-1] += pi_expl / dx
            rhs_t[1:] -= pi_expl / dx
            rhs_t[0] -= b1["pi0"] / dx
            rhs_t[-1] += b1["piX"] / dx

            ab_t = np.zeros((3, nx))
            ab_t[0, 1:] = upper_t[:-1]
            ab_t[1, :] = diag_t
            ab_t[2, :-1] = lower_t[1:]
            theta_new = solve_banded((1, 1), ab_t, rhs_t)
            if theta_new.min() <= sch.positivity_floor:
                raise _Retry("theta", t1)

            change = max(np.abs(u_new - u_s).max(),
                         np.abs(eta_new - eta_s).max(),
                         np.abs(theta_new - theta_s).max())
            eta_s, u_s, theta_s, x_e_s = eta_new, u_new, theta_new, x_e_new
            if change < sch.tol:
                break
        else:
            raise _Retry("picard", t1)

        return (eta_s, u_s, theta_s, x_e_s), beta_avg


def _snapshot_indices(nt, stride, dense):
    keep = {0, nt}
    keep.update(range(1, min(dense, nt) + 1))
    keep.update(range(0, nt + 1, max(1, stride)))
    return sorted(keep)


def solve(spec, scheme=None):
    """Run the time stepper over (0, T); returns a SolutionBundle.

    Caller is responsible for spec admissibility (see problem.validate).
    Raises PositivityLoss or NonlinearDivergence when adaptive step halving
    is exhausted.
    """
    if scheme is None:
        scheme = SchemeParams()
    stepper = _Stepper(spec, scheme)
    g = spec.grid
    gas = spec.gas
    nt = g.nt
    dt = g.dt
    pert = stepper.pert

    eta = np.asarray(spec.eta0, dtype=float).copy()
    u = np.asarray(spec.u0, dtype=float).copy()
    theta = np.asarray(spec.theta0, dtype=float).copy()
    beta_e = pert.beta_e if pert.beta_e is not None else np.zeros(g.nx + 1)
    x_e = primitive_at_edges(g, eta) + beta_e
    if eta.min() <= 0 or theta.min() <= 0:
        raise PositivityLoss(0.0, "eta" if eta.min() <= 0 else "theta")

    keep = _snapshot_indices(nt, scheme.store_stride, scheme.dense_steps)
    keep_set = set(keep)
    ns = len(keep)
    times = g.times()[keep]

    snap = {name: np.empty((ns, g.nx)) for name in
            ("eta", "theta", "sigma", "it_sigma", "it_p", "beta_c")}
    snap.update({name: np.empty((ns, g.nx + 1)) for name in
                 ("u", "x_e", "pi", "it_g")})

    it_sigma = np.zeros(g.nx)
    it_p = np.zeros(g.nx)
    it_g = np.zeros(g.nx + 1)

    volume = np.empty(nt + 1)
    it_bdu = np.zeros(nt + 1)
    it_bvol = np.zeros(nt + 1)
    substeps = np.ones(nt, dtype=int)
    kinetic = np.empty(nt + 1)
    internal = np.empty(nt + 1)
    it_work = np.zeros(nt + 1)

    sig_prev = stepper.stress(eta, u, theta, 0.0)
    p_prev = gas.k * theta / eta
    g_prev = _eval_g(spec.g, x_e, stepper.xe, 0.0)
    pi_prev = stepper.heat_flux(eta, theta, 0.0)

    min_eta = eta.min()
    min_theta = theta.min()
    volume[0] = integrate_center(g, eta)
    kinetic[0] = integrate_edge(g, 0.5 * u ** 2)
    internal[0] = integrate_center(g, gas.cV * theta)

    def work_rate(sig, pi, uu, t):
        b = spec.bc.at(g, t)
        s0 = -b["p0"] if spec.bc.m in (2, 3) else sig[0]
        sX = -b["pX"] if spec.bc.m == 3 else sig[-1]
        return sX * uu[-1] - s0 * uu[0] + pi[-1] - pi[0]

    wr_prev = work_rate(sig_prev, pi_prev, u, 0.0)

    isnap = 0
    if 0 in keep_set:
        for name, arr in (("eta", eta), ("theta", theta), ("u", u), ("x_e", x_e),
                          ("sigma", sig_prev), ("pi", pi_prev),
                          ("it_sigma", it_sigma), ("it_p", it_p), ("it_g", it_g),
                          ("beta_c", pert.beta_at(stepper.xc, 0.0))):
            snap[name][isnap] = arr
        isnap += 1

    state = (eta, u, theta, x_e)
    for n in range(nt):
        t0 = n * dt
        committed = None
        for level in range(scheme.dt_safety + 1):
            m_sub = 2 ** level
            h = dt / m_sub
            try:
                st = state
                acc_s = it_sigma.copy()
                acc_p = it_p.copy()
                acc_g = it_g.copy()
                acc_bdu = 0.0
                acc_bvol = 0.0
                acc_work = 0.0
                sp, pp, gp, pip, wrp = sig_prev, p_prev, g_prev, pi_prev, wr_prev
                loc_min_eta, loc_min_theta = np.inf, np.inf
                for ksub in range(m_sub):
                    ts = t0 + ksub * h
                    st_old = st
                    st, beta_avg = stepper.substep(st, ts, h)
                    e1, u1, th1, xe1 = st
                    t1 = ts + h
                    sig1 = stepper.stress(e1, u1, th1, t1)
                    p1 = gas.k * th1 / e1
                    g1 = _eval_g(spec.g, xe1, stepper.xe, t1)
                    pi1 = stepper.heat_flux(e1, th1, t1)
                    acc_s += 0.5 * h * (sp + sig1)
                    acc_p += 0.5 * h * (pp + p1)
                    acc_g += 0.5 * h * (gp + g1)
                    thi = scheme.theta_implicitness
                    u_old = st_old[1]
                    acc_bdu += h * (thi * (u1[-1] - u1[0])
                                    + (1.0 - thi) * (u_old[-1] - u_old[0]))
                    acc_bvol += h * integrate_center(g, beta_avg)
                    wr1 = work_rate(sig1, pi1, u1, t1)
                    acc_work += 0.5 * h * (wrp + wr1)
                    sp, pp, gp, pip, wrp = sig1, p1, g1, pi1, wr1
                    loc_min_eta = min(loc_min_eta, e1.min())
                    loc_min_theta = min(loc_min_theta, th1.min())
                committed = (st, acc_s, acc_p, acc_g, acc_bdu, acc_bvol, acc_work,
                             sp, pp, gp, pip, wrp, loc_min_eta, loc_min_theta)
                substeps[n] = m_sub
                break
            except _Retry as r:
                last_retry = r
                continue
        if committed is None:
            if last_retry.kind == "picard":
                raise NonlinearDivergence(n + 1)
            raise PositivityLoss(last_retry.t, last_retry.kind)

        (state, it_sigma, it_p, it_g, dbdu, dbvol, dwork,
         sig_prev, p_prev, g_prev, pi_prev, wr_prev, le, lt) = committed
        it_bdu[n + 1] = it_bdu[n] + dbdu
        it_bvol[n + 1] = it_bvol[n] + dbvol
        it_work[n + 1] = it_work[n] + dwork
        min_eta = min(min_eta, le)
        min_theta = min(min_theta, lt)
        eta, u, theta, x_e = state
        volume[n + 1] = integrate_center(g, eta)
        kinetic[n + 1] = integrate_edge(g, 0.5 * u ** 2)
        internal[n + 1] = integrate_center(g, gas.cV * theta)

        if (n + 1) in keep_set:
            t1 = (n + 1) * dt
            for name, arr in (("eta", eta), ("theta", theta), ("u", u),
                              ("x_e", x_e), ("sigma", sig_prev), ("pi", pi_prev),
                              ("it_sigma", it_sigma), ("it_p", it_p),
                              ("it_g", it_g),
                              ("beta_c", pert.beta_at(stepper.xc, t1))):
                snap[name][isnap] = arr
            isnap += 1

    energy = {
        "kinetic": kinetic,
        "internal": internal,
        "total": kinetic + internal,
        "boundary_and_source_work": it_work,
    }
    return SolutionBundle(
        grid=g, times=times,
        eta=snap["eta"], u=snap["u"], theta=snap["theta"], x_e=snap["x_e"],
        sigma=snap["sigma"], pi=snap["pi"],
        it_sigma=snap["it_sigma"], it_p=snap["it_p"], it_g=snap["it_g"],
        beta_c=snap["beta_c"],
        step_times=g.times(), volume=volume,
        it_boundary_du=it_bdu, it_beta_volume=it_bvol,
        min_eta=float(min_eta), min_theta=float(min_theta),
        substeps=substeps, gas_k=gas.k, energy=energy)


@dataclass
class DiagnosticsReport:
    """Residuals of the exact identities a weak solution satisfies, evaluated
    on the discrete trajectory.  All entries are nonnegative."""

    volume_residual: float
    logvol_residual: float
    stress_repr_residual: float
    positivity_margins: tuple
    energy_ledger: dict


def diagnostics(sol, spec):
    """Exact-identity residuals for a solve of `spec`.

    volume_residual: gas-volume identity (m = 1 families; 0.0 otherwise),
    checked at every step with the perturbation contribution included.
    logvol_residual: C(0,T;L2) residual of nu*ln(eta) - nu*ln(eta0) - I_t(sigma+p).
    stress_repr_residual: C(0,T;L2) residual of the primitive-stress
    representation through I^<m> of (u - u0 - I_t g).
    """
    g = sol.grid
    gas = spec.gas

    if spec.bc.m == 1:
        res_vol = float(np.abs(sol.volume - sol.volume[0]
                               - sol.it_boundary_du - sol.it_beta_volume).max())
    else:
        res_vol = 0.0

    lhs = gas.nu * np.log(sol.eta) - gas.nu * np.log(sol.eta[0])[None, :] \
        - sol.it_sigma - sol.it_p
    res_logvol = float(space_lq(g, lhs, 2.0).max())

    u_dev = edges_to_centers(sol.u - sol.u[0][None, :] - sol.it_g)
    m = spec.bc.m
    tt = g.times()
    if m == 1:
        rhs = i_bracket(g, u_dev, 1) + mean_omega(g, sol.it_sigma)[:, None]
    else:
        rhs = i_bracket(g, u_dev, m)
        it_p0 = time_primitive(spec.bc.p0_t, tt)
        it_pX = time_primitive(spec.bc.pX_t, tt)
        idx = np.rint(sol.times / g.dt).astype(int)
        if m == 2:
            rhs = rhs - it_p0[idx][:, None]
        else:
            xc = g.centers()
            prof0 = (1.0 - xc / g.X)[None, :]
            profX = (xc / g.X)[None, :]
            rhs = rhs - it_p0[idx][:, None] * prof0 - it_pX[idx][:, None] * profX
    res_stress = float(space_lq(g, sol.it_sigma - rhs, 2.0).max())

    report = DiagnosticsReport(
        volume_residual=res_vol,
        logvol_residual=res_logvol,
        stress_repr_residual=res_stress,
        positivity_margins=(sol.min_eta, sol.min_theta),
        energy_ledger=sol.energy,
    )
    sol.diagnostics = report
    return report


def linf_velocity_check(sol, spec=None):
    """Sup-norm of the stored velocity trajectory; monitored for boundedness
    under refinement, never asserted against a specific constant."""
    return float(np.abs(sol.u).max())
