"""Convex domains, their grids, the boundary-distance-like auxiliary
function h, and discrete derivative operators in Cartesian components.

Supported domains: a symmetric interval [-L, L] (n=1) and a disk of
radius R (n=2).  The disk uses a polar grid with radially staggered nodes
r_j = (j - 1/2) dr, so the coordinate origin is never a node, plus one
ghost ring outside r = R.  Azimuthal derivatives are spectral (FFT per
ring) with a per-ring low-pass cap on the retained wavenumbers near the
pole: ring j keeps modes k <= kmax_j ~ pi r_j / dr.  Smooth fields carry
only O((r^k)) energy in mode k near the origin, so the cap costs O(dr^2)
accuracy at worst while keeping the explicit time-step bound proportional
to dr^2 instead of the raw arc spacing squared.
"""

from dataclasses import dataclass, field
import math
import numpy as np


class OutsideDomain(ValueError):
    pass


class GhostNotClosed(RuntimeError):
    pass


INTERVAL = "interval"
DISK = "disk"


@dataclass(frozen=True)
class ConvexDomain:
    kind: str
    size: float                      # half-length L or radius R

    def __post_init__(self):
        if self.kind not in (INTERVAL, DISK):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.size <= 0:
            raise ValueError("domain size must be positive")

    @property
    def k0(self):
        """Boundary curvature lower bound (sentinel inf for the interval)."""
        return 1.0 / self.size if self.kind == DISK else math.inf

    @property
    def h_params(self):
        """(k1, M1, M2) bounds satisfied by the closed-form h below."""
        return (1.0 / self.size, 1.0 / self.size, 0.0)


def interval(half_length):
    return ConvexDomain(INTERVAL, float(half_length))


def disk(radius):
    return ConvexDomain(DISK, float(radius))


def h_function(domain, point):
    """Auxiliary convex function: zero on the boundary with unit inward
    normal derivative -1, strictly negative inside, |Dh| <= 1 and
    D2h = I/size.  Closed form (|x|^2 - size^2) / (2 size).

    Returns (h, Dh, D2h) with Dh/D2h in Cartesian components.
    """
    R = domain.size
    if domain.kind == INTERVAL:
        x = float(point) if np.ndim(point) == 0 else float(np.asarray(point)[0])
        if abs(x) > R + 1e-12:
            raise OutsideDomain(f"x={x} outside [-{R}, {R}]")
        return ((x * x - R * R) / (2 * R), np.array([x / R]),
                np.array([[1.0 / R]]))
    x = np.asarray(point, dtype=float)
    r2 = float(x @ x)
    if r2 > (R + 1e-12) ** 2:
        raise OutsideDomain(f"|x|={np.sqrt(r2)} outside disk of radius {R}")
    return ((r2 - R * R) / (2 * R), x / R, np.eye(2) / R)


@dataclass
class Field:
    """Scalar graph height per physical grid node plus ghost values.

    ghosts is None until a boundary closure fills it; derivative operators
    refuse to run on stale ghosts.
    """
    values: np.ndarray
    time: float = 0.0
    ghosts: np.ndarray = None

    def copy(self):
        g = None if self.ghosts is None else self.ghosts.copy()
        return Field(self.values.copy(), self.time, g)

    def check_finite(self):
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise FloatingPointError(f"non-finite field value at node {tuple(bad)}")


@dataclass(frozen=True)
class IntervalGrid:
    domain: ConvexDomain
    n_nodes: int
    x: np.ndarray = field(init=False, repr=False)
    dx: float = field(init=False)

    def __post_init__(self):
        L = self.domain.size
        x = np.linspace(-L, L, self.n_nodes)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "dx", float(x[1] - x[0]))

    @property
    def shape(self):
        return (self.n_nodes,)

    @property
    def min_spacing(self):
        return self.dx

    def new_field(self, values=None):
        v = np.zeros(self.n_nodes) if values is None else np.asarray(values, float)
        return Field(v.copy())

    def integrate(self, values):
        return float(np.trapezoid(values, dx=self.dx))


@dataclass(frozen=True)
class DiskGrid:
    domain: ConvexDomain
    nr: int
    ntheta: int
    dr: float = field(init=False)
    dtheta: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    theta: np.ndarray = field(init=False, repr=False)
    kmax: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.ntheta % 2:
            raise ValueError("ntheta must be even (pole coupling pairs "
                             "opposite angles)")
        R = self.domain.size
        dr = R / self.nr
        dtheta = 2.0 * math.pi / self.ntheta
        r = (np.arange(self.nr) + 0.5) * dr
        theta = np.arange(self.ntheta) * dtheta
        # retained azimuthal wavenumbers per extended ring (index 0 is the
        # pole-reflected ring at radius dr/2, then nr physical rings, then
        # the ghost ring): kmax ~ pi r / dr.  The floor of 2 keeps the
        # dropped modes at O(dr^2) in the gradient: mode k at radius r
        # carries O(r^k) amplitude, so losing k >= 3 at r ~ dr costs
        # O(r^{k-1}) = O(dr^2) there.
        r_ext = np.concatenate([[r[0]], r, [R + dr / 2]])
        kmax = np.clip(np.floor(math.pi * r_ext / dr).astype(int),
                       2, self.ntheta // 2)
        object.__setattr__(self, "dr", dr)
        object.__setattr__(self, "dtheta", dtheta)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "kmax", kmax)
        # cached chain-rule factors for the derivative operators
        ct = np.cos(theta)[None, :]
        st = np.sin(theta)[None, :]
        rinv = (1.0 / r)[:, None]
        object.__setattr__(self, "_trig", (ct, st, ct * ct, st * st,
                                           st * ct, rinv))

    @property
    def shape(self):
        return (self.nr, self.ntheta)

    @property
    def r_ghost(self):
        return self.domain.size + self.dr / 2

    @property
    def min_spacing(self):
        """Effective smallest stencil spacing: the largest spectral second
        derivative on ring j is (kmax_j / r_j)^2, which behaves like a
        grid with arc spacing 2 r_j / kmax_j."""
        arc = 2.0 * self.r / self.kmax[1:-1]
        return float(min(self.dr, arc.min()))

    def smooth(self, values):
        """Project each physical ring onto its retained azimuthal modes.

        The flow update applies this after every step so aliased content
        the derivative operators cannot see never accumulates."""
        vh = np.fft.rfft(values, axis=1)
        k = np.arange(self.ntheta // 2 + 1)
        vh *= k[None, :] <= self.kmax[1:-1, None]
        return np.fft.irfft(vh, n=self.ntheta, axis=1)

    def new_field(self, values=None):
        v = np.zeros(self.shape) if values is None else np.asarray(values, float)
        return Field(v.copy())

    def nodes_xy(self):
        rr = self.r[:, None]
        tt = self.theta[None, :]
        return rr * np.cos(tt), rr * np.sin(tt)

    def integrate(self, values):
        # midpoint rule in r (nodes are cell centers) and theta
        return float(np.sum(values * self.r[:, None]) * self.dr * self.dtheta)

    def extended(self, fld):
        """Stack pole-reflected ring, physical rings and ghost ring into a
        (nr+2, ntheta) array whose row radii are uniformly spaced by dr."""
        if fld.ghosts is None:
            raise GhostNotClosed("boundary ghosts are stale")
        half = self.ntheta // 2
        pole = np.roll(fld.values[0], half)
        return np.vstack([pole[None, :], fld.values, fld.ghosts[None, :]])


def make_grid(domain, resolution):
    """resolution: n_nodes for the interval, (nr, ntheta) for the disk."""
    if domain.kind == INTERVAL:
        return IntervalGrid(domain, int(resolution))
    nr, ntheta = resolution
    return DiskGrid(domain, int(nr), int(ntheta))


def derivative_arrays(grid, fld):
    """Gradient (..., n) and Hessian (..., n, n) in Cartesian components at
    every physical node.  Radial and interval stencils are second-order
    central differences; azimuthal derivatives on the disk are spectral
    with the grid's per-ring mode cap.

    Requires closed ghosts.
    """
    if isinstance(grid, IntervalGrid):
        if fld.ghosts is None:
            raise GhostNotClosed("boundary ghosts are stale")
        u = np.concatenate([[fld.ghosts[0]], fld.values, [fld.ghosts[1]]])
        dx = grid.dx
        ux = (u[2:] - u[:-2]) / (2 * dx)
        uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / (dx * dx)
        return ux[:, None], uxx[:, None, None]

    ext = grid.extended(fld)
    dr = grid.dr
    k = np.arange(grid.ntheta // 2 + 1)
    uh = np.fft.rfft(ext, axis=1)
    uh *= k[None, :] <= grid.kmax[:, None]
    ext = np.fft.irfft(uh, n=grid.ntheta, axis=1)
    # the Nyquist mode of a real signal has no representable first
    # derivative; drop it from the differentiation spectrum
    dh = 1j * k * uh
    dh[:, -1] = 0.0
    ut_ext = np.fft.irfft(dh, n=grid.ntheta, axis=1)
    u_tt = np.fft.irfft(-(k * k) * uh, n=grid.ntheta, axis=1)[1:-1]
    u_r = (ext[2:] - ext[:-2]) / (2 * dr)
    u_rr = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / (dr * dr)
    u_t = ut_ext[1:-1]
    u_rt = (ut_ext[2:] - ut_ext[:-2]) / (2 * dr)

    ct, st, ct2, st2, stct, rinv = grid._trig
    ut_r = u_t * rinv
    urt_r = u_rt * rinv
    utt_rr = u_tt * rinv * rinv
    ur_r = u_r * rinv
    ut_rr = ut_r * rinv
    ux = u_r * ct - ut_r * st
    uy = u_r * st + ut_r * ct
    uxx = (u_rr * ct2 - 2 * urt_r * stct + utt_rr * st2
           + ur_r * st2 + 2 * ut_rr * stct)
    uyy = (u_rr * st2 + 2 * urt_r * stct + utt_rr * ct2
           + ur_r * ct2 - 2 * ut_rr * stct)
    uxy = (u_rr * stct + urt_r * (ct2 - st2)
           - utt_rr * stct - ur_r * stct
           + ut_rr * (st2 - ct2))
    Du = np.stack([ux, uy], axis=-1)
    D2u = np.empty(grid.shape + (2, 2))
    D2u[..., 0, 0] = uxx
    D2u[..., 0, 1] = uxy
    D2u[..., 1, 0] = uxy
    D2u[..., 1, 1] = uyy
    return Du, D2u


def discrete_derivatives(grid, fld, node):
    """(Du, D2u) at one node; see derivative_arrays for conventions."""
    Du, D2u = derivative_arrays(grid, fld)
    return Du[node], D2u[node]
