"""Problem data model: boundary data, perturbations, full problem spec and the
solution container, plus validation of the admissibility conditions on data.

Boundary-condition families:
    m = 1  velocities prescribed at both ends
    m = 2  stress (outer pressure) at x = 0, velocity at x = X
    m = 3  stress at both ends
Heat-flux data are prescribed at both ends for every family.  Entries not
demanded by the family are kept identically zero.

Everything is value-semantic and immutable after construction; solver runs
never mutate a spec, so specs can be shared across concurrent solves.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import dsl
from .grid import Grid, GasParams, integrate_center, edges_to_centers
from .norms import space_lq, time_lr, w11_time_norm


def _series(value, times):
    """Boundary entry -> samples at step times.  Accepts a scalar, an array of
    matching length, a callable of t, or an expression string in t."""
    if value is None:
        return np.zeros(len(times))
    if isinstance(value, str):
        _, fn = dsl.compile_expr(value, ("t",))
        return np.asarray([float(fn(t=tv)) for tv in times])
    if callable(value):
        return np.asarray([float(value(t)) for t in times])
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(len(times), float(arr))
    if len(arr) != len(times):
        raise ValueError(f"boundary series has {len(arr)} samples, expected {len(times)}")
    return arr


@dataclass(frozen=True)
class BoundaryData:
    """Time series at step times; intermediate values by linear interpolation."""

    m: int
    u0_t: np.ndarray
    uX_t: np.ndarray
    p0_t: np.ndarray
    pX_t: np.ndarray
    pi0_t: np.ndarray
    piX_t: np.ndarray

    @classmethod
    def build(cls, grid, m, u0=None, uX=None, p0=None, pX=None, pi0=None, piX=None):
        t = grid.times()
        if m not in (1, 2, 3):
            raise ValueError(f"bc family m must be 1, 2 or 3, got {m}")
        active = {
            1: ("u0", "uX", "pi0", "piX"),
            2: ("p0", "uX", "pi0", "piX"),
            3: ("p0", "pX", "pi0", "piX"),
        }[m]
        given = {"u0": u0, "uX": uX, "p0": p0, "pX": pX, "pi0": pi0, "piX": piX}
        series = {}
        for name, value in given.items():
            series[name] = _series(value if name in active else None, t)
        return cls(m=m, u0_t=series["u0"], uX_t=series["uX"], p0_t=series["p0"],
                   pX_t=series["pX"], pi0_t=series["pi0"], piX_t=series["piX"])

    def active_names(self):
        return {
            1: ("u0", "uX", "pi0", "piX"),
            2: ("p0", "uX", "pi0", "piX"),
            3: ("p0", "pX", "pi0", "piX"),
        }[self.m]

    def at(self, grid, t):
        """Interpolated boundary values at an arbitrary time (substeps)."""
        tt = grid.times()
        return {
            "u0": float(np.interp(t, tt, self.u0_t)),
            "uX": float(np.interp(t, tt, self.uX_t)),
            "p0": float(np.interp(t, tt, self.p0_t)),
            "pX": float(np.interp(t, tt, self.pX_t)),
            "pi0": float(np.interp(t, tt, self.pi0_t)),
            "piX": float(np.interp(t, tt, self.piX_t)),
        }


@dataclass(frozen=True)
class PerturbationSpec:
    """Extra terms of the perturbed system: beta enters the mass equation and
    the stress, gamma the heat flux, beta_e shifts the initial Eulerian
    coordinate.  beta/gamma are callables (x, t) -> array; splits are optional
    callables used only when itemizing the continuous-dependence bound."""

    beta: object = None            # (x, t) -> array, cell centers
    gamma: object = None           # (x, t) -> array, cell edges
    beta_e: np.ndarray = None      # (nx+1,) edge field
    beta1: object = None
    beta2: object = None
    g1: object = None              # (chi, x, t) -> array
    g2: object = None

    def beta_at(self, x, t):
        if self.beta is None:
            return np.zeros_like(x)
        return np.asarray(self.beta(x, t), dtype=float) * np.ones_like(x)

    def gamma_at(self, x, t):
        if self.gamma is None:
            return np.zeros_like(x)
        return np.asarray(self.gamma(x, t), dtype=float) * np.ones_like(x)


def zero_perturbation(grid):
    return PerturbationSpec(beta=None, gamma=None, beta_e=np.zeros(grid.nx + 1))


@dataclass(frozen=True)
class ProblemSpec:
    grid: Grid
    gas: GasParams
    bc: BoundaryData
    eta0: np.ndarray               # (nx,) cell centers
    u0: np.ndarray                 # (nx+1,) cell edges
    theta0: np.ndarray             # (nx,) cell centers
    g: object = None               # (chi, x, t) -> array, or None for zero
    f: object = None               # (chi, x, t) -> array, or None for zero
    perturbation: PerturbationSpec = None
    N: float = 10.0
    source: dict = None            # config tree this spec was built from, if any

    def with_perturbation(self, pert):
        return replace(self, perturbation=pert)


def _eval_force(fn, chi, x, t):
    if fn is None:
        return np.zeros_like(x)
    return np.asarray(fn(chi, x, t), dtype=float) * np.ones_like(x)


def validate(spec):
    """Check the admissibility conditions on the data; returns a list of
    violation strings (empty means valid).  Never raises."""
    out = []
    grid, N = spec.grid, spec.N
    eta0 = np.asarray(spec.eta0, dtype=float)
    u0 = np.asarray(spec.u0, dtype=float)
    theta0 = np.asarray(spec.theta0, dtype=float)

    if eta0.shape != (grid.nx,):
        out.append(f"eta0 must have {grid.nx} center samples, got {eta0.shape}")
        return out
    if u0.shape != (grid.nx + 1,):
        out.append(f"u0 must have {grid.nx + 1} edge samples, got {u0.shape}")
        return out
    if theta0.shape != (grid.nx,):
        out.append(f"theta0 must have {grid.nx} center samples, got {theta0.shape}")
        return out

    # (C1)
    if eta0.min() < 1.0 / N:
        out.append("eta0 must satisfy eta0 >= 1/N everywhere (C1)")
    if theta0.min() <= 0.0:
        out.append("theta0 must be strictly positive (C1)")
    else:
        size = (np.abs(eta0).max() + np.abs(u0).max()
                + space_lq(grid, theta0, 2.0)
                + integrate_center(grid, np.abs(np.log(theta0))))
        if size > N:
            out.append(f"data magnitude {size:.3g} exceeds declared N={N:g} (C1)")

    # (C2): sample the force terms on a probe set
    tt = grid.times()
    probe_t = tt[:: max(1, len(tt) // 32)]
    xc = grid.centers()
    xe = grid.edges()
    chi_probe = np.linspace(-grid.X, 2 * grid.X, len(xc))
    for t in probe_t:
        fv = _eval_force(spec.f, chi_probe, xc, t)
        if fv.min() < 0.0:
            out.append(f"f must be nonnegative, found {fv.min():.3g} at t={t:g} (C2)")
            break
    for t in probe_t:
        gv = _eval_force(spec.g, np.linspace(-grid.X, 2 * grid.X, len(xe)), xe, t)
        if not np.all(np.isfinite(gv)):
            out.append(f"g must be finite on the probe set, failed at t={t:g} (C2)")
            break

    # (C3)
    bc = spec.bc
    active = bc.active_names()
    for name in ("u0", "uX", "p0", "pX"):
        series = getattr(bc, name + "_t")
        if name not in active and np.any(series != 0.0):
            out.append(f"boundary entry {name} is not used by family m={bc.m} "
                       "and must be identically zero")
    for name in ("p0", "pX"):
        if name in active and getattr(bc, name + "_t").min() < 1.0 / N:
            out.append(f"outer pressure {name} must satisfy {name} >= 1/N (C3)")
    for name in ("pi0", "piX"):
        if getattr(bc, name + "_t").min() < 0.0:
            out.append(f"heat-flux datum {name} must be nonnegative (C3)")
    bsize = (w11_time_norm(bc.u0_t, tt) + w11_time_norm(bc.uX_t, tt)
             + w11_time_norm(bc.p0_t, tt) + w11_time_norm(bc.pX_t, tt)
             + time_lr(bc.pi0_t, tt, 4.0 / 3.0) + time_lr(bc.piX_t, tt, 4.0 / 3.0))
    if bsize > N:
        out.append(f"boundary data magnitude {bsize:.3g} exceeds declared N={N:g} (C3)")

    if bc.m == 1:
        vol0 = integrate_center(grid, eta0)
        it_du = np.concatenate(([0.0], np.cumsum(
            0.5 * grid.dt * ((bc.uX_t - bc.u0_t)[1:] + (bc.uX_t - bc.u0_t)[:-1]))))
        vol = vol0 + it_du
        if vol.min() < 1.0 / N:
            n_bad = int(np.argmax(vol < 1.0 / N))
            out.append(f"gas volume drops below 1/N at t={tt[n_bad]:g} (gas volume, m=1)")

    # perturbation split consistency
    pert = spec.perturbation
    if pert is not None and pert.beta1 is not None and pert.beta2 is not None \
            and pert.beta is not None:
        worst = 0.0
        for t in probe_t:
            b = pert.beta_at(xc, t)
            b12 = (np.asarray(pert.beta1(xc, t), dtype=float) * np.ones_like(xc)
                   + np.asarray(pert.beta2(xc, t), dtype=float) * np.ones_like(xc))
            worst = max(worst, float(np.abs(b - b12).max()))
        scale = max(1.0, max(float(np.abs(pert.beta_at(xc, t)).max()) for t in probe_t))
        if worst > 1e-12 * scale:
            out.append("beta1 + beta2 does not reproduce beta on the grid")

    return out


@dataclass
class SolutionBundle:
    """Trajectories stored at the snapshot times `times` (a subset of step
    times), plus per-step scalar tracks at full step resolution.

    it_sigma / it_p / it_g are trapezoid accumulations over every step,
    snapshotted together with the fields, so time primitives of the stress
    stay exact regardless of the snapshot stride.
    """

    grid: Grid
    times: np.ndarray              # (ns,) snapshot times
    eta: np.ndarray                # (ns, nx)
    u: np.ndarray                  # (ns, nx+1)
    theta: np.ndarray              # (ns, nx)
    x_e: np.ndarray                # (ns, nx+1)
    sigma: np.ndarray              # (ns, nx)
    pi: np.ndarray                 # (ns, nx+1)
    it_sigma: np.ndarray           # (ns, nx)
    it_p: np.ndarray               # (ns, nx)
    it_g: np.ndarray               # (ns, nx+1)
    beta_c: np.ndarray             # (ns, nx) sampled mass perturbation
    step_times: np.ndarray         # (nt+1,)
    volume: np.ndarray             # (nt+1,)
    it_boundary_du: np.ndarray     # (nt+1,) scheme-consistent I_t(uX - u0)
    it_beta_volume: np.ndarray     # (nt+1,) scheme-consistent I_t int(beta)
    min_eta: float
    min_theta: float
    substeps: np.ndarray           # (nt,) effective substeps per nominal step
    gas_k: float = 1.0             # gas constant, for the derived pressure
    energy: dict = field(default_factory=dict)
    diagnostics: object = None

    @property
    def rho(self):
        return 1.0 / self.eta

    @property
    def p(self):
        return self.gas_k * self.theta / self.eta

    def slice_fields(self):
        return {"eta": self.eta, "u": self.u, "theta": self.theta,
                "x_e": self.x_e, "sigma": self.sigma, "pi": self.pi}
