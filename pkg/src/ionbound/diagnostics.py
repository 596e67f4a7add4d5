"""Observables along a run and the finite-time excess-charge certificate.

For a weight g_R with gradient g_R'(r) r_hat, g_R'(r) = r^2/(1 + r^2/R^2),
pairing the kinetic equation with w_R = g_R'(r) w gives, per unit time,

    d/dt int w_R f = int xi.Hess(g_R).xi f - Z M_R + C_R - (outflow),

where M_R = int rho/(1 + r^2/R^2) and C_R is the sphere-averaged pair
term, C_R >= M_R^2/2 for radial densities.  Averaging over [0, T] leaves
Z<M_R> - <M_R>^2/2 >= -(a(T) - a(0))/T, which the certificate checks with
the run's own boundary term a = int w_R f.  The fluid version pairs the
phi equation with rho grad g_R . grad and has the same structure.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .field import RadialDensity, RadialGrid, coulomb_energy
from .kernel import InequalityMargin, WeightParams, g_prime, hess_eigs, laplacian_gR, sphere_averaged_kernel

DEFAULT_R = (5.0, 10.0, 20.0, 40.0)
DEFAULT_BALL = 10.0
SIGN_TOL = 1e-12


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy parts.  ``includes_internal`` says whether the Thomas-Fermi
    internal energy belongs to the total (fluid) or is only reported
    alongside it (kinetic model, where T_V already holds it)."""

    kinetic: float
    tf_internal: float
    attraction: float
    repulsion: float
    nuclear: float = 0.0
    includes_internal: bool = False

    @property
    def total(self):
        t = self.kinetic + self.attraction + self.repulsion + self.nuclear
        return t + self.tf_internal if self.includes_internal else t


@dataclass(frozen=True)
class VirialBreakdown:
    """Virial terms for one R; entries that do not apply to a model are NaN."""

    R: float
    b_term: float = math.nan
    c_attract: float = math.nan
    c_repulse: float = math.nan
    a_boundary: float = math.nan
    r1_residual: float = math.nan
    r2: float = math.nan
    r3: float = math.nan
    r4: float = math.nan
    hessian_transport: float = math.nan
    M_R: float = math.nan

    def signs(self, tol=SIGN_TOL):
        """Sign conditions that must hold at every record (NaN terms pass)."""
        scale = max(1.0, abs(self.c_attract) if np.isfinite(self.c_attract) else 1.0)

        def ok(x):
            return not np.isfinite(x) or x <= tol * scale

        return {
            "b_term<=0": ok(self.b_term),
            "r2<=0": ok(self.r2),
            "hessian_transport>=0": ok(-self.hessian_transport),
            "c_repulse>=M^2/2": ok(0.5 * self.M_R**2 - self.c_repulse),
            "r1_residual=0": ok(abs(self.r1_residual)),
        }


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    N: float
    N_in_B: float
    escaped: float
    energy: EnergyBreakdown
    M: tuple
    virial: tuple
    max_f: float = math.nan
    rearrangement_margin: float = math.nan
    norm_lhs: float = math.nan
    dt_bound: float = math.nan

    @property
    def R_values(self):
        return tuple(v.R for v in self.virial)


class TimeAverager:
    """Running trapezoid averages (1/T) int_0^T of named observables."""

    def __init__(self):
        self._t0 = None
        self._last_t = None
        self._last = {}
        self._integral = {}

    def add(self, t, values):
        values = {k: float(v) for k, v in values.items()}
        if self._t0 is None:
            self._t0 = float(t)
            self._integral = {k: 0.0 for k in values}
        else:
            if t < self._last_t:
                raise ValueError("samples must be added in time order")
            dt = t - self._last_t
            for k, v in values.items():
                self._integral[k] += 0.5 * dt * (v + self._last[k])
        self._last_t = float(t)
        self._last = values

    @property
    def elapsed(self):
        return 0.0 if self._t0 is None else self._last_t - self._t0

    def average(self, key):
        """<key>_T; at T = 0 the current value."""
        if self._t0 is None:
            raise ValueError("no samples")
        T = self.elapsed
        return self._last[key] if T == 0 else self._integral[key] / T

    def averages(self):
        return {k: self.average(k) for k in self._last}


# --- scalar observables --------------------------------------------------------

def moment_M_R(rho: RadialDensity, R):
    if not R > 0:
        raise ValueError("R must be positive")
    return float(np.dot(rho.masses, 1.0 / (1.0 + (rho.grid.r / R) ** 2)))


def _cell_fraction_below(grid: RadialGrid, D):
    lo = grid.edges[:-1] ** 3
    if grid.inner_cap:
        lo = lo.copy()
        lo[0] = 0.0
    hi = grid.edges[1:] ** 3
    return np.clip((D**3 - lo) / (hi - lo), 0.0, 1.0)


def particle_count(rho: RadialDensity, D):
    """Particles inside the ball of radius D, cut cells counted by volume."""
    if not D > 0:
        raise ValueError("ball radius must be positive")
    return float(np.dot(rho.masses, _cell_fraction_below(rho.grid, D)))


def _grad_weight(r, R):
    """|grad g_R| = R^2 g'(r/R) = r^2/(1 + r^2/R^2)."""
    return R**2 * g_prime(np.asarray(r) / R)


_KERNEL_CACHE: dict = {}


def kernel_table(r, R, order=64):
    """Sphere-averaged pair kernel K_R(r_i, r_j), cached per (nodes, R)."""
    r = np.asarray(r, dtype=float)
    key = (r.tobytes(), float(R), int(order))
    table = _KERNEL_CACHE.get(key)
    if table is None:
        params = WeightParams(R)
        table = np.empty((r.size, r.size))
        for i in range(r.size):
            # symmetric; fill the upper triangle row by row
            table[i, i:] = sphere_averaged_kernel(r[i], r[i:], order, params)
            table[i:, i] = table[i, i:]
        if len(_KERNEL_CACHE) > 32:
            _KERNEL_CACHE.clear()
        _KERNEL_CACHE[key] = table
    return table


def pair_term(rho: RadialDensity, R, order=64):
    """1/2 sum_ij K_R(r_i, r_j) m_i m_j."""
    m = rho.masses
    return 0.5 * float(m @ kernel_table(rho.grid.r, R, order) @ m)


# --- kinetic model ---------------------------------------------------------------

def vlasov_energy(state) -> EnergyBreakdown:
    from .vlasov import density_from_f, kinetic_energy

    dens = density_from_f(state)
    grid = state.grid
    return EnergyBreakdown(
        kinetic=kinetic_energy(state),
        tf_internal=0.3 * state.constants.gamma_tf * grid.integrate(dens.values ** (5 / 3)),
        attraction=-state.Z * float(np.dot(dens.masses, 1.0 / grid.r)),
        repulsion=coulomb_energy(dens),
    )


def rearrangement_check(state) -> InequalityMargin:
    """T_V(f) against (3/10) gamma int rho^(5/3), its value after rearrangement."""
    from .vlasov import density_from_f, kinetic_energy

    dens = density_from_f(state)
    rhs = 0.3 * state.constants.gamma_tf * state.grid.integrate(dens.values ** (5 / 3))
    return InequalityMargin.of(kinetic_energy(state), rhs)


def vlasov_virial(state, field, params: WeightParams, order=64) -> VirialBreakdown:
    from .vlasov import density_from_f

    R = params.R
    dens = density_from_f(state)
    r = state.r
    mass = state.cell_mass()                          # (n_l, n_r, n_w)
    lam_r, lam_t = hess_eigs(r, params)
    w_part = np.einsum("kij,j->i", mass, state.w2)
    l_part = np.einsum("kij,k->i", mass, state.l2) / r**2
    shell = float(np.dot(lam_r, w_part) + np.dot(lam_t, l_part))
    nc = state.n_core
    core = 0.0
    if nc:
        core_grid = state.grid
        core = float(np.dot(core_grid.vol[:nc] * state.constants.gamma_tf / 5 * state.core_rho ** (5 / 3),
                            laplacian_gR(core_grid.r[:nc], params)))
    M = moment_M_R(dens, R)
    flux = np.einsum("kij,j->i", mass, state.w)
    a = float(np.dot(_grad_weight(r, R), flux)) + float(_grad_weight(state.r_max, R)) * state.escaped_momentum
    return VirialBreakdown(R=R, b_term=-(shell + core), c_attract=state.Z * M,
                           c_repulse=pair_term(dens, R, order), a_boundary=a, M_R=M)


def vlasov_record(state, R_values=DEFAULT_R, D=DEFAULT_BALL, dt_bound=math.nan) -> DiagnosticsRecord:
    from .vlasov import density_from_f

    dens = density_from_f(state)
    energy = vlasov_energy(state)
    vir = tuple(vlasov_virial(state, None, WeightParams(R)) for R in R_values)
    return DiagnosticsRecord(
        t=state.t, N=dens.total, N_in_B=particle_count(dens, D), escaped=state.escaped,
        energy=energy, M=tuple(v.M_R for v in vir), virial=vir, max_f=float(state.f.max()),
        rearrangement_margin=energy.kinetic - energy.tf_internal,
        norm_lhs=energy.kinetic + energy.repulsion, dt_bound=dt_bound,
    )


# --- fluid model -------------------------------------------------------------------

def _node_gradients(state):
    """Face gradients p = d_r phi either side of every cell (zero at walls
    and throughout the core) and the widths between those faces."""
    p = -state.velocity_faces()
    n = state.grid.size
    nc = state.n_core
    lo = np.zeros(n)
    hi = np.zeros(n)
    lo[nc:] = p[:-1]
    hi[nc:] = p[1:]
    return lo, hi, state.grid.dr


def tf_virial(state, field, params: WeightParams, order=64) -> VirialBreakdown:
    R = params.R
    grid = state.grid
    dens = state.density
    m = dens.masses
    gw = _grad_weight(grid.r, R)
    lo, hi, width = _node_gradients(state)
    # d_r(p^2/2) and p d_r p over the same stencil: equal up to rounding
    r1 = float(np.dot(m * gw, 0.5 * (hi**2 - lo**2) / width))
    transport = float(np.dot(m * gw, 0.5 * (hi + lo) * (hi - lo) / width))
    lam_r, _ = hess_eigs(grid.r, params)
    hess = float(np.dot(m * lam_r, 0.5 * (hi**2 + lo**2)))
    r2 = -state.constants.gamma_tf / 5 * float(np.dot(grid.vol * state.rho ** (5 / 3), laplacian_gR(grid.r, params)))
    M = moment_M_R(dens, R)
    crep = pair_term(dens, R, order)
    a = float(np.dot(m * gw, 0.5 * (hi + lo)))
    return VirialBreakdown(R=R, c_attract=state.Z * M, c_repulse=crep, a_boundary=a,
                           r1_residual=r1 - transport, r2=r2, r3=state.Z * M, r4=-crep,
                           hessian_transport=hess, M_R=M)


def hydro_record(state, R_values=DEFAULT_R, D=DEFAULT_BALL) -> DiagnosticsRecord:
    from .hydro import admissible_dt, hydro_energy

    energy = hydro_energy(state)
    dens = state.density
    vir = tuple(tf_virial(state, None, WeightParams(R)) for R in R_values)
    return DiagnosticsRecord(
        t=state.t, N=dens.total, N_in_B=particle_count(dens, D), escaped=state.escaped,
        energy=energy, M=tuple(v.M_R for v in vir), virial=vir,
        rearrangement_margin=energy.kinetic,
        norm_lhs=energy.kinetic + energy.tf_internal + energy.repulsion,
        dt_bound=admissible_dt(state),
    )


# --- certificate -----------------------------------------------------------------------

def a_term_exponent(t, a, T_values, floor=0.0):
    """Slope of log|A(T)| against log T, A(T) = (a(T) - a(0))/T, using the
    samples nearest to each T.  NaN when |A| stays below ``floor``."""
    t = np.asarray(t, float)
    a = np.asarray(a, float)
    idx = sorted({int(np.argmin(np.abs(t - T))) for T in T_values})
    idx = [i for i in idx if t[i] > 0]
    if len(idx) < 2:
        return math.nan, None
    Ts = t[idx]
    A = np.abs(a[idx] - a[0]) / Ts
    if np.all(A <= floor):
        return math.nan, A
    A = np.maximum(A, 1e-300)
    return float(np.polyfit(np.log(Ts), np.log(A), 1)[0]), A


@dataclass
class RCertificate:
    R: float
    avg_M: list
    margins: list
    decay_constant: float
    inequality_holds: bool
    bound_holds: bool
    a_exponent: float
    a_exponent_ok: bool | None
    ball_average: float
    ball_bound: float
    ball_holds: bool


@dataclass
class Certificate:
    Z: float
    c: float
    T: float
    verdict: str
    per_R: list = field(default_factory=list)

    def to_json(self):
        return {"Z": self.Z, "c": self.c, "T": self.T, "verdict": self.verdict,
                "per_R": [asdict(p) for p in self.per_R]}


def certificate(records, Z, radial=True, D=DEFAULT_BALL, T_min=10.0, tol=1e-9,
                a_fit_T=None) -> Certificate:
    """Finite-time check of Z<M_R>_T - c<M_R>_T^2 >= -decay(T).

    decay(T) = C sqrt(N) R^2 / T with C fitted from the run's own boundary
    term, C = 2 max|a| / (sqrt(N) R^2), which is the size the Schwarz
    estimate allows for |a(T) - a(0)|.  The verdict ("consistent up to T",
    "violated", or "inconclusive" for runs shorter than T_min) rests on that
    inequality alone.  The large-T consequence <M_R>_T <= Z/c and the ball
    count are reported per R but do not enter the verdict: a run started
    far above 2Z only approaches them as the slack decays.
    """
    c = 0.5 if radial else 0.25
    t = np.array([rec.t for rec in records])
    T_end = float(t[-1] - t[0])
    N0 = records[0].N
    per = []
    for j, R in enumerate(records[0].R_values):
        avg = TimeAverager()
        ball = TimeAverager()
        traj = []
        a = np.array([rec.virial[j].a_boundary for rec in records])
        C = 2 * float(np.abs(a).max()) / (math.sqrt(max(N0, 1e-300)) * R**2)
        margins = []
        for rec in records:
            avg.add(rec.t, {"M": rec.M[j]})
            ball.add(rec.t, {"NB": rec.N_in_B})
            Mbar = avg.average("M")
            traj.append(Mbar)
            T = avg.elapsed
            decay = C * math.sqrt(max(N0, 0.0)) * R**2 / T if T > 0 else math.inf
            margins.append(Z * Mbar - c * Mbar**2 + decay)
        late = t - t[0] >= T_min
        ineq = bool(np.all(np.array(margins)[late] >= -tol)) if late.any() else False
        bound = bool(np.all(np.array(traj)[late] <= Z / c + 1e-3 * Z)) if late.any() else False
        if a_fit_T is None:
            fit_T = [T_end / 8, T_end / 4, T_end / 2, T_end]
        else:
            fit_T = list(a_fit_T)
        floor = 1e-10 * math.sqrt(max(N0, 0.0)) * R**2
        expo, _ = a_term_exponent(t - t[0], a, fit_T, floor) if T_end > 0 else (math.nan, None)
        expo_ok = None if not np.isfinite(expo) else bool(abs(expo + 1) <= 0.2)
        ball_bound = Z / c * (1 + (D / R) ** 2)
        ball_avg = ball.average("NB")
        per.append(RCertificate(
            R=float(R), avg_M=traj, margins=margins, decay_constant=C, inequality_holds=ineq,
            bound_holds=bound, a_exponent=expo, a_exponent_ok=expo_ok, ball_average=ball_avg,
            ball_bound=ball_bound, ball_holds=bool(ball_avg <= ball_bound + tol),
        ))
    if T_end < T_min:
        verdict = "inconclusive"
    elif all(p.inequality_holds for p in per):
        verdict = f"consistent up to T={T_end:g}"
    else:
        verdict = "violated"
    return Certificate(Z=float(Z), c=c, T=T_end, verdict=verdict, per_R=per)


# --- flat rows ---------------------------------------------------------------------------

BASE_COLUMNS = ["t", "N", "N_in_B", "escaped", "E_total", "T_kin", "E_tf_internal", "E_attr",
                "E_rep", "maxf"]
EXTRA_COLUMNS = ["E_nuc", "includes_internal", "rearrangement_margin", "norm_lhs", "dt_bound"]
VIRIAL_FIELDS = [f.name for f in fields(VirialBreakdown) if f.name not in ("R", "M_R")]


def _rtag(R):
    return f"{R:g}"


def columns(R_values):
    cols = list(BASE_COLUMNS)
    for R in R_values:
        cols += [f"M_{_rtag(R)}", f"avgM_{_rtag(R)}", f"cert_margin_{_rtag(R)}"]
    cols += EXTRA_COLUMNS
    for R in R_values:
        cols += [f"{name}_{_rtag(R)}" for name in VIRIAL_FIELDS]
    return cols


def to_row(rec: DiagnosticsRecord, avg_M=None, margins=None):
    e = rec.energy
    row = {"t": rec.t, "N": rec.N, "N_in_B": rec.N_in_B, "escaped": rec.escaped,
           "E_total": e.total, "T_kin": e.kinetic, "E_tf_internal": e.tf_internal,
           "E_attr": e.attraction, "E_rep": e.repulsion, "maxf": rec.max_f}
    for j, v in enumerate(rec.virial):
        tag = _rtag(v.R)
        row[f"M_{tag}"] = rec.M[j]
        row[f"avgM_{tag}"] = math.nan if avg_M is None else avg_M[j]
        row[f"cert_margin_{tag}"] = math.nan if margins is None else margins[j]
    row.update({"E_nuc": e.nuclear, "includes_internal": float(e.includes_internal),
                "rearrangement_margin": rec.rearrangement_margin, "norm_lhs": rec.norm_lhs,
                "dt_bound": rec.dt_bound})
    for v in rec.virial:
        for name in VIRIAL_FIELDS:
            row[f"{name}_{_rtag(v.R)}"] = getattr(v, name)
    return row


def from_row(row, R_values) -> DiagnosticsRecord:
    x = {k: float(v) for k, v in row.items()}
    energy = EnergyBreakdown(kinetic=x["T_kin"], tf_internal=x["E_tf_internal"],
                             attraction=x["E_attr"], repulsion=x["E_rep"], nuclear=x["E_nuc"],
                             includes_internal=bool(x["includes_internal"]))
    vir = []
    for R in R_values:
        tag = _rtag(R)
        vir.append(VirialBreakdown(R=float(R), M_R=x[f"M_{tag}"],
                                   **{name: x[f"{name}_{tag}"] for name in VIRIAL_FIELDS}))
    return DiagnosticsRecord(
        t=x["t"], N=x["N"], N_in_B=x["N_in_B"], escaped=x["escaped"], energy=energy,
        M=tuple(v.M_R for v in vir), virial=tuple(vir), max_f=x["maxf"],
        rearrangement_margin=x["rearrangement_margin"], norm_lhs=x["norm_lhs"],
        dt_bound=x["dt_bound"],
    )
