"""Explicit time stepping for the graphical flow u_t = a^{ij}(Du) u_ij
with a = sqrt(1+|Du|^2) times the horizontal second-derivative block of
the surface integrand, under either a prescribed contact angle or a
prescribed normal derivative on the boundary.

Sign conventions, with N the outward unit normal of the domain and
v = sqrt(1+|Du|^2):

    contact angle:  D_N u =  cos(theta) * v
    normal data:    D_N u = -phi

Boundary data vary along a disk boundary as trigonometric polynomials in
the boundary angle; on the interval they are a (left, right) pair.
"""

from dataclasses import dataclass, field
import math
import numpy as np

from . import anisotropy as aniso
from . import geometry as geo


class UnstableStep(FloatingPointError):
    pass


CONTACT = "contact_angle"
NEUMANN = "neumann"


@dataclass(frozen=True)
class BoundaryData:
    """Scalar data on the boundary: constant plus an optional trigonometric
    polynomial sum_m (a_m cos(m t) + b_m sin(m t)) in the boundary angle t.
    On the interval only the values at the two endpoints matter; they are
    the angles t = pi (left) and t = 0 (right)."""
    const: float = 0.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def on_angles(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.const)
        for m, a in enumerate(self.cos_coeffs, start=1):
            out += a * np.cos(m * t)
        for m, b in enumerate(self.sin_coeffs, start=1):
            out += b * np.sin(m * t)
        return out

    @property
    def endpoints(self):
        lo, hi = self.on_angles(np.array([math.pi, 0.0]))
        return float(lo), float(hi)

    def sup(self):
        return abs(self.const) + sum(abs(a) for a in self.cos_coeffs) \
            + sum(abs(b) for b in self.sin_coeffs)

    def extended(self, grid):
        """Smooth extension to all grid nodes.

        Disk: each angular mode m is scaled by (r/R)^m, which makes the
        extension a polynomial in the Cartesian coordinates (harmonic),
        smooth across the pole.  Interval: linear interpolation.
        """
        if isinstance(grid, geo.IntervalGrid):
            lo, hi = self.endpoints
            L = grid.domain.size
            return lo + (hi - lo) * (grid.x + L) / (2 * L)
        R = grid.domain.size
        rr = (grid.r / R)[:, None]
        t = grid.theta[None, :]
        out = np.full(grid.shape, self.const)
        for m, a in enumerate(self.cos_coeffs, start=1):
            out += a * rr**m * np.cos(m * t)
        for m, b in enumerate(self.sin_coeffs, start=1):
            out += b * rr**m * np.sin(m * t)
        return out


def as_boundary_data(data):
    if isinstance(data, BoundaryData):
        return data
    if np.ndim(data) == 0:
        return BoundaryData(const=float(data))
    lo, hi = (float(x) for x in data)
    # constant + cos matches the requested endpoints exactly
    return BoundaryData(const=(lo + hi) / 2, cos_coeffs=((hi - lo) / 2,))


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    data: BoundaryData             # cos(theta) for contact, phi for normal data

    def __post_init__(self):
        if self.kind not in (CONTACT, NEUMANN):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        object.__setattr__(self, "data", as_boundary_data(self.data))
        if self.kind == CONTACT and self.data.sup() >= 1.0:
            raise ValueError("contact data needs |cos(theta)| < 1")


def contact_angle(cos_theta):
    return BoundaryCondition(CONTACT, cos_theta)


def neumann(phi):
    return BoundaryCondition(NEUMANN, phi)


def _outer_tangential_slope(grid, values):
    """u_theta / R on the outermost ring, band-limited like the grid."""
    vh = np.fft.rfft(values[-1])
    k = np.arange(grid.ntheta // 2 + 1)
    vh *= k <= grid.kmax[-2]
    dh = 1j * k * vh
    dh[-1] = 0.0
    return np.fft.irfft(dh, n=grid.ntheta) / grid.domain.size


def close_ghosts(grid, fld, bc):
    """Fill the ghost values so central differences realize the boundary
    condition at the boundary itself (midway between the last physical
    layer and the ghost layer on the disk; at the endpoint nodes on the
    interval)."""
    if isinstance(grid, geo.IntervalGrid):
        lo, hi = bc.data.endpoints
        if bc.kind == CONTACT:
            slope_hi = hi / math.sqrt(1.0 - hi * hi)
            slope_lo = -lo / math.sqrt(1.0 - lo * lo)
        else:
            slope_hi = -hi
            slope_lo = lo
        dx = grid.dx
        fld.ghosts = np.array([fld.values[1] - 2 * dx * slope_lo,
                               fld.values[-2] + 2 * dx * slope_hi])
        return fld
    data = bc.data.on_angles(grid.theta)
    if bc.kind == CONTACT:
        t = _outer_tangential_slope(grid, fld.values)
        u_r = data * np.sqrt(1.0 + t * t) / np.sqrt(1.0 - data * data)
    else:
        u_r = -data
    fld.ghosts = fld.values[-1] + grid.dr * u_r
    return fld


def flow_arrays(model, grid, fld, bc):
    """(u_t, Du, D2u) on the full grid; closes ghosts first."""
    close_ghosts(grid, fld, bc)
    Du, D2u = geo.derivative_arrays(grid, fld)
    a = aniso.coefficient_matrix(model, Du)
    ut = np.einsum("...ij,...ij->...", a, D2u)
    return ut, Du, D2u


def rhs(model, grid, fld, bc):
    return flow_arrays(model, grid, fld, bc)[0]


def stable_dt(model, grid, fld, bc, sigma):
    """sigma * Delta_min^2 / (2 n Lambda), Lambda the largest operator
    coefficient on the current state."""
    close_ghosts(grid, fld, bc)
    Du, _ = geo.derivative_arrays(grid, fld)
    a = aniso.coefficient_matrix(model, Du)
    diag = np.einsum("...ii->...i", a)
    lam = float(diag.max())
    n = Du.shape[-1]
    return sigma * grid.min_spacing**2 / (2.0 * n * max(lam, 1e-30))


def step(model, grid, fld, bc, dt):
    """One forward Euler step; on the disk the updated field is projected
    back onto each ring's retained modes."""
    fld.check_finite()
    ut = rhs(model, grid, fld, bc)
    vals = fld.values + dt * ut
    if isinstance(grid, geo.DiskGrid):
        vals = grid.smooth(vals)
    out = geo.Field(vals, fld.time + dt)
    out.check_finite()
    return out


@dataclass(frozen=True)
class SolverConfig:
    sigma: float = 0.5             # CFL safety factor
    t_end: float = 1.0
    record_every: float = 0.1      # diagnostic sampling interval
    steady_tol: float = 0.0        # stop early once osc(u_t) drops below
    settle_steps: int = 20         # tiny initial steps absorbing any
                                   # data/boundary incompatibility


@dataclass
class FlowRecord:
    time: float
    sup_grad: float
    sup_ut: float
    lambda_hat: float
    energy: float


@dataclass
class FlowResult:
    final: geo.Field
    records: list
    steps: int
    dt: float
    reached_steady: bool


def reference_value(grid, arr):
    """Value at the reference location: the middle node of the interval,
    the innermost-ring average on the disk."""
    if isinstance(grid, geo.IntervalGrid):
        return float(arr[len(arr) // 2])
    return float(arr[0].mean())


def mean_value(grid, arr):
    """Domain average of a node array."""
    if isinstance(grid, geo.IntervalGrid):
        return grid.integrate(arr) / (2.0 * grid.domain.size)
    return grid.integrate(arr) / (math.pi * grid.domain.size**2)


def energy(model, grid, fld, bc):
    """Surface energy of the graph plus the boundary work term.  Under the
    isotropic flow with constant contact angle this is non-increasing; in
    general it is recorded as a diagnostic."""
    close_ghosts(grid, fld, bc)
    Du, _ = geo.derivative_arrays(grid, fld)
    area = grid.integrate(aniso.eval_F(model, aniso.extend(Du)))
    data = bc.data
    if isinstance(grid, geo.IntervalGrid):
        lo, hi = data.endpoints
        u_lo, u_hi = fld.values[0], fld.values[-1]
        if bc.kind == CONTACT:
            return area - hi * u_hi - lo * u_lo
        return area + hi * u_hi + lo * u_lo
    R = grid.domain.size
    vals = data.on_angles(grid.theta)
    ring = fld.values[-1]
    line = float(np.sum(vals * ring)) * R * grid.dtheta
    return area - line if bc.kind == CONTACT else area + line


def observe(model, grid, fld, bc):
    ut, Du, _ = flow_arrays(model, grid, fld, bc)
    return FlowRecord(
        time=fld.time,
        sup_grad=float(np.linalg.norm(Du, axis=-1).max()),
        sup_ut=float(np.abs(ut).max()),
        lambda_hat=mean_value(grid, ut),
        energy=energy(model, grid, fld, bc),
    )


def run(model, grid, initial, bc, config, observer=None):
    """Evolve to config.t_end (or to steadiness) and sample diagnostics
    every config.record_every time units.

    initial may be a Field or a plain value array.  observer, if given, is
    called as observer(record, field) at every sample.
    """
    fld = initial if isinstance(initial, geo.Field) else grid.new_field(initial)
    fld = fld.copy()
    dt = stable_dt(model, grid, fld, bc, config.sigma)
    # settle phase: the initial data need not satisfy the boundary
    # condition to discretization accuracy, so a few very small steps keep
    # the first full step from overshooting
    for _ in range(config.settle_steps):
        fld = step(model, grid, fld, bc, dt / 100.0)
    steps = config.settle_steps
    reached_steady = False

    def sample():
        rec = observe(model, grid, fld, bc)
        records.append(rec)
        if observer is not None:
            observer(rec, fld)
        return rec

    records = []
    sample()
    next_record = fld.time + config.record_every
    while fld.time < config.t_end - 1e-12:
        this_dt = min(dt, config.t_end - fld.time)
        fld = step(model, grid, fld, bc, this_dt)
        steps += 1
        if fld.time >= next_record - 1e-12 or fld.time >= config.t_end - 1e-12:
            rec = sample()
            next_record += config.record_every
            if config.steady_tol > 0:
                ut = rhs(model, grid, fld, bc)
                if float(ut.max() - ut.min()) < config.steady_tol:
                    reached_steady = True
                    break
    return FlowResult(final=fld, records=records, steps=steps, dt=dt,
                      reached_steady=reached_steady)
