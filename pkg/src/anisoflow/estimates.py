"""Diagnostics that evaluate the gradient-bound proof apparatus on live
solver states: the auxiliary function Psi and its maximizer, the frame
coordinates rho/eta/gamma, the bilinear-form matrix B whose
semi-definiteness drives the estimate, and scenario assumption checks.

Everything here is a pure function of a state snapshot; nothing feeds
back into the evolution.
"""

from dataclasses import dataclass
import math
import numpy as np

from . import anisotropy as aniso
from . import evolve as ev
from . import geometry as geo


class NonPositiveW(ValueError):
    pass


class GroupMismatch(AssertionError):
    pass


SQ2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# geometric helper arrays


def h_arrays(grid):
    """(h, Dh) of the convex auxiliary function at every physical node."""
    dom = grid.domain
    R = dom.size
    if isinstance(grid, geo.IntervalGrid):
        h = (grid.x**2 - R * R) / (2 * R)
        return h, (grid.x / R)[:, None]
    X, Y = grid.nodes_xy()
    h = (X * X + Y * Y - R * R) / (2 * R)
    return h, np.stack([X / R, Y / R], axis=-1)


def _h_ghost(grid):
    R = grid.domain.size
    if isinstance(grid, geo.IntervalGrid):
        x = R + grid.dx
        return (x * x - R * R) / (2 * R)
    rg = grid.r_ghost
    return (rg * rg - R * R) / (2 * R)


def _data_ghost(grid, data):
    """Boundary data extension evaluated on the ghost layer."""
    if isinstance(grid, geo.IntervalGrid):
        lo, hi = data.endpoints
        L = grid.domain.size
        xg = L + grid.dx
        slope = (hi - lo) / (2 * L)
        mid = (hi + lo) / 2
        return np.array([mid - slope * xg, mid + slope * xg])
    R = grid.domain.size
    rr = grid.r_ghost / R
    t = grid.theta
    out = np.full(grid.ntheta, data.const)
    for m, a in enumerate(data.cos_coeffs, start=1):
        out += a * rr**m * np.cos(m * t)
    for m, b in enumerate(data.sin_coeffs, start=1):
        out += b * rr**m * np.sin(m * t)
    return out


def q_field(grid, bc):
    """The comparison function Q = -phi_ext * h for the normal-data mode,
    as a Field with ghosts filled from the closed forms so its discrete
    gradient is available everywhere."""
    phi = bc.data.extended(grid)
    h, _ = h_arrays(grid)
    fld = grid.new_field(-phi * h)
    hg = _h_ghost(grid)
    phig = _data_ghost(grid, bc.data)
    if isinstance(grid, geo.IntervalGrid):
        fld.ghosts = np.array([-phig[0] * hg, -phig[1] * hg])
    else:
        fld.ghosts = -phig * hg
    return fld


def dq_arrays(grid, bc):
    """Discrete gradient of Q at every physical node."""
    DQ, _ = geo.derivative_arrays(grid, q_field(grid, bc))
    return DQ


def default_a0(domain, mode):
    k1, _, _ = domain.h_params
    if mode == ev.CONTACT:
        return min(k1 / 2.0, domain.k0 / 3.0, 1.0)
    if not math.isfinite(domain.k0):
        return k1
    return domain.k0


# ---------------------------------------------------------------------------
# the auxiliary function Psi


@dataclass
class PsiSnapshot:
    values: np.ndarray
    max_value: float
    argmax: tuple
    argmax_on_boundary: bool
    a0: float
    skipped: int                # nodes where |DW| was too small to log


def _argmax_info(grid, values):
    flat = int(np.nanargmax(values))
    idx = np.unravel_index(flat, values.shape)
    if isinstance(grid, geo.IntervalGrid):
        on_boundary = idx[0] in (0, grid.n_nodes - 1)
    else:
        on_boundary = idx[0] == grid.nr - 1
    return tuple(int(i) for i in idx), on_boundary


def psi(model, grid, fld, bc, a0=None):
    """Auxiliary function per node.

    Contact mode: Psi = log W + a0 h with W = v - <Du, Dh> cos(theta).
    Normal-data mode: Psi = log|DW|^2 + a0 h with W = u - Q, Q = -phi h.
    """
    mode = bc.kind
    if a0 is None:
        a0 = default_a0(grid.domain, mode)
    ev.close_ghosts(grid, fld, bc)
    Du, _ = geo.derivative_arrays(grid, fld)
    h, Dh = h_arrays(grid)
    skipped = 0
    if mode == ev.CONTACT:
        cos_t = bc.data.extended(grid)
        v = np.sqrt(1.0 + np.einsum("...i,...i->...", Du, Du))
        W = v - np.einsum("...i,...i->...", Du, Dh) * cos_t
        if W.min() <= 0:
            raise NonPositiveW(f"min W = {W.min():.3e}")
        vals = np.log(W) + a0 * h
    else:
        DW = Du - dq_arrays(grid, bc)
        mag2 = np.einsum("...i,...i->...", DW, DW)
        small = mag2 < 1e-20
        skipped = int(small.sum())
        with np.errstate(divide="ignore"):
            vals = np.log(mag2) + a0 * h
        vals = np.where(small, -np.inf, vals)
    idx, on_b = _argmax_info(grid, vals)
    return PsiSnapshot(values=vals, max_value=float(vals[idx]),
                       argmax=idx, argmax_on_boundary=on_b,
                       a0=a0, skipped=skipped)


# ---------------------------------------------------------------------------
# frame coordinates rho / eta and the T3 contraction


@dataclass(frozen=True)
class PointData:
    """Boundary-condition quantities at a single node, feeding rho."""
    mode: str
    Dh: np.ndarray = None        # contact mode
    cos_theta: float = 0.0       # contact mode
    DQ: np.ndarray = None        # normal-data mode


def rho_components(frame, point):
    """Frame components of S = Du/v - Dh cos(theta) (contact) or of
    DW = Du - DQ (normal data)."""
    Du = frame.p_prime
    if point.mode == ev.CONTACT:
        vec = Du / frame.v - np.asarray(point.Dh) * point.cos_theta
    else:
        vec = Du - np.asarray(point.DQ)
    return frame.basis.T @ vec


def eta_from_rho(frame, rho):
    """eta^b = gamma^{bb} rho^b + gamma^{bn} rho^n / sqrt2;
    eta^n = sum_d gamma^{dn} rho^d / sqrt2 + gamma^{nn} rho^n."""
    g = frame.gamma
    n = len(rho)
    N = n - 1
    eta = np.empty(n)
    for b in range(N):
        eta[b] = g[b, b] * rho[b] + g[b, N] * rho[N] / SQ2
    eta[N] = sum(g[d, N] * rho[d] for d in range(N)) / SQ2 \
        + g[N, N] * rho[N]
    return eta


def t3_contract(frame, eta, tol=1e-10):
    """Contraction of the coefficient-sensitivity tensor with the Hessian
    and the vector with frame components eta.

    Computed twice: as a plain triple index contraction and through the
    seven-group decomposition; disagreement raises GroupMismatch.
    """
    T = frame.t3
    g = frame.gamma
    n = T.shape[0]
    N = n - 1
    # Hessian frame components: diagonal gamma^{aa}, off-diagonal
    # gamma^{ab}/sqrt2
    Hf = g / SQ2
    np.fill_diagonal(Hf, np.diag(g))
    direct = float(np.einsum("abc,ab,c->", T, Hf, eta))

    t1 = sum(g[a, a] * eta[b] * T[a, a, b]
             for a in range(N) for b in range(N))
    t2 = sum(g[a, a] * eta[N] * T[a, a, N] for a in range(N))
    t3 = sum(SQ2 * g[a, N] * eta[a] * T[a, N, a] for a in range(N))
    t4 = sum(SQ2 * g[a, N] * eta[b] * T[a, N, b]
             for a in range(N) for b in range(N) if a != b)
    t5 = sum(SQ2 * g[a, N] * eta[N] * T[a, N, N] for a in range(N))
    t6 = sum(g[N, N] * eta[b] * T[N, N, b] for b in range(N))
    t7 = g[N, N] * eta[N] * T[N, N, N]
    grouped = float(t1 + t2 + t3 + t4 + t5 + t6 + t7)

    scale = max(1.0, abs(direct), abs(grouped))
    if abs(direct - grouped) > tol * scale:
        raise GroupMismatch(
            f"direct {direct!r} vs grouped {grouped!r}")
    return direct


# ---------------------------------------------------------------------------
# the bilinear form B


@dataclass
class BAssembly:
    frame: object
    rho: np.ndarray
    eta: np.ndarray
    matrix: np.ndarray
    min_eigenvalue: float
    a0: float
    mode: str


def _index_maps(n):
    N = n - 1
    aa = lambda a: a
    an = lambda a: N + a
    nn = 2 * n - 2
    return aa, an, nn


def assemble_B(model, p_prime, hess_u, point, a0, mode=None):
    """Assemble the symmetric matrix of the quadratic form on
    (gamma^{11}..gamma^{n-1,n-1}, gamma^{1n}..gamma^{n-1,n}, gamma^{nn})
    whose non-negativity underlies the gradient bound.

    Every coefficient follows the displayed form verbatim; ordered cross
    coefficients are split evenly onto the two symmetric entries.
    """
    if mode is None:
        mode = point.mode
    fr = aniso.build_frame(model, np.asarray(p_prime, float),
                           hess_u=np.asarray(hess_u, float))
    rho = rho_components(fr, point)
    eta = eta_from_rho(fr, rho)
    n = len(rho)
    N = n - 1
    tau, T, v = fr.tau, fr.t3, fr.v
    dim = 2 * n - 1
    M = np.zeros((dim, dim))
    aa, an, nn = _index_maps(n)

    def add(i, j, c):
        if i == j:
            M[i, i] += c
        else:
            M[i, j] += c / 2.0
            M[j, i] += c / 2.0

    contact = mode == ev.CONTACT
    iv = 1.0 / v if contact else 1.0        # the A-part weight
    iv3 = 1.0 / v**3 if contact else 1.0

    for a in range(N):
        add(aa(a), aa(a), 0.9 * iv * tau[a, a] + rho[a] * T[a, a, a])
        add(an(a), an(a), rho[N] * T[a, N, a] + rho[a] * T[a, N, N]
            + 0.5 * iv3 * tau[a, a] + 0.5 * iv * tau[N, N])
        add(aa(a), an(a), SQ2 * iv * tau[a, N]
            + rho[N] * T[a, a, a] / SQ2 + rho[a] * T[a, a, N] / SQ2
            + SQ2 * rho[a] * T[a, N, a])
        add(an(a), nn, SQ2 * rho[N] * T[a, N, N]
            + rho[N] * T[N, N, a] / SQ2 + rho[a] * T[N, N, N] / SQ2
            + SQ2 * tau[a, N])
        add(aa(a), nn, rho[N] * T[a, a, N] + rho[a] * T[N, N, a])
        for b in range(N):
            if b == a:
                continue
            add(aa(a), aa(b), rho[b] * T[a, a, b])
            add(an(a), an(b), rho[N] * T[a, N, b] + rho[b] * T[a, N, N]
                + 0.5 * iv3 * tau[a, b])
            add(aa(a), an(b), rho[N] * T[a, a, b] / SQ2
                + rho[b] * T[a, a, N] / SQ2 + SQ2 * rho[a] * T[b, N, a])
    add(nn, nn, rho[N] * T[N, N, N] + iv3 * tau[N, N])

    return BAssembly(frame=fr, rho=rho, eta=eta, matrix=M,
                     min_eigenvalue=float(np.linalg.eigvalsh(M).min()),
                     a0=a0, mode=mode)


def form_value(assembly, gamma_vec):
    """Independent term-by-term evaluation of the displayed quadratic form
    on an arbitrary coordinate vector; oracle for the assembled matrix."""
    fr = assembly.frame
    rho = assembly.rho
    tau, T, v = fr.tau, fr.t3, fr.v
    n = len(rho)
    N = n - 1
    aa, an, nn = _index_maps(n)
    g = np.asarray(gamma_vec, float)
    contact = assembly.mode == ev.CONTACT
    iv = 1.0 / v if contact else 1.0
    iv3 = 1.0 / v**3 if contact else 1.0

    total = (rho[N] * T[N, N, N] + iv3 * tau[N, N]) * g[nn] ** 2
    for a in range(N):
        total += (0.9 * iv * tau[a, a] + rho[a] * T[a, a, a]) * g[aa(a)] ** 2
        total += (rho[N] * T[a, N, a] + rho[a] * T[a, N, N]
                  + 0.5 * iv3 * tau[a, a]
                  + 0.5 * iv * tau[N, N]) * g[an(a)] ** 2
        total += (SQ2 * iv * tau[a, N] + rho[N] * T[a, a, a] / SQ2
                  + rho[a] * T[a, a, N] / SQ2
                  + SQ2 * rho[a] * T[a, N, a]) * g[aa(a)] * g[an(a)]
        total += (SQ2 * rho[N] * T[a, N, N] + rho[N] * T[N, N, a] / SQ2
                  + rho[a] * T[N, N, N] / SQ2
                  + SQ2 * tau[a, N]) * g[an(a)] * g[nn]
        total += (rho[N] * T[a, a, N]
                  + rho[a] * T[N, N, a]) * g[aa(a)] * g[nn]
        for b in range(N):
            if b == a:
                continue
            total += rho[b] * T[a, a, b] * g[aa(a)] * g[aa(b)]
            total += (rho[N] * T[a, N, b] + rho[b] * T[a, N, N]
                      + 0.5 * iv3 * tau[a, b]) * g[an(a)] * g[an(b)]
            total += (rho[N] * T[a, a, b] / SQ2 + rho[b] * T[a, a, N] / SQ2
                      + SQ2 * rho[a] * T[b, N, a]) * g[aa(a)] * g[an(b)]
    return float(total)


# ---------------------------------------------------------------------------
# state sampling for the eigenvalue diagnostic


def eigmin_over_state(model, grid, fld, bc, a0=None, sample_count=32,
                      grad_floor=1e-6):
    """Minimum eigenvalue of the bilinear form over the sample_count nodes
    of largest gradient (nan when no node clears the degeneracy floor)."""
    mode = bc.kind
    if a0 is None:
        a0 = default_a0(grid.domain, mode)
    ev.close_ghosts(grid, fld, bc)
    Du, D2u = geo.derivative_arrays(grid, fld)
    s = np.linalg.norm(Du, axis=-1)
    _, Dh = h_arrays(grid)
    cos_t = bc.data.extended(grid) if mode == ev.CONTACT else None
    DQ = dq_arrays(grid, bc) if mode == ev.NEUMANN else None
    order = np.argsort(s, axis=None)[::-1][:sample_count]
    worst = math.inf
    taken = 0
    for flat in order:
        idx = np.unravel_index(flat, s.shape)
        if s[idx] < grad_floor:
            break
        point = (PointData(mode, Dh=Dh[idx], cos_theta=float(cos_t[idx]))
                 if mode == ev.CONTACT else PointData(mode, DQ=DQ[idx]))
        asm = assemble_B(model, Du[idx], D2u[idx], point, a0, mode)
        worst = min(worst, asm.min_eigenvalue)
        taken += 1
    return worst if taken else math.nan


# ---------------------------------------------------------------------------
# scenario assumption report


@dataclass
class AssumptionReport:
    k0_measured: float
    epsilon1_measured: float
    epsilon2_measured: float
    compatibility_residual: float
    passes: dict


def _data_c1_norm(data):
    """sup of the boundary data plus its first two angular derivatives."""
    sup = data.sup()
    d1 = sum(m * abs(a) for m, a in enumerate(data.cos_coeffs, 1)) \
        + sum(m * abs(b) for m, b in enumerate(data.sin_coeffs, 1))
    d2 = sum(m * m * abs(a) for m, a in enumerate(data.cos_coeffs, 1)) \
        + sum(m * m * abs(b) for m, b in enumerate(data.sin_coeffs, 1))
    return max(sup, d1, d2)


def compatibility_residual(model, grid, fld, bc):
    """Sup over the boundary of the mismatch between the one-sided normal
    derivative of the field and the one the boundary condition demands."""
    if isinstance(grid, geo.IntervalGrid):
        dx = grid.dx
        got_hi = (fld.values[-1] - fld.values[-2]) / dx
        got_lo = (fld.values[1] - fld.values[0]) / dx
        lo, hi = bc.data.endpoints
        if bc.kind == ev.CONTACT:
            want_hi = hi / math.sqrt(1 - hi * hi)
            want_lo = -lo / math.sqrt(1 - lo * lo)
        else:
            want_hi = -hi
            want_lo = lo
        return max(abs(got_hi - want_hi), abs(got_lo - want_lo))
    got = (fld.values[-1] - fld.values[-2]) / grid.dr
    data = bc.data.on_angles(grid.theta)
    if bc.kind == ev.CONTACT:
        t = ev._outer_tangential_slope(grid, fld.values)
        want = data * np.sqrt(1 + t * t) / np.sqrt(1 - data * data)
    else:
        want = -data
    return float(np.abs(got - want).max())


def check_assumptions(model, domain, bc, grid=None, u0=None,
                      eps1_threshold=0.1, eps2_threshold=0.05,
                      decay_report=None):
    """Measure every scenario assumption and flag it against thresholds.

    Reports only; never raises."""
    k0 = domain.k0
    eps1 = _data_c1_norm(bc.data)
    if decay_report is None:
        decay_report = aniso.verify_decay(model)
    eps2 = decay_report.epsilon2
    compat = math.nan
    if grid is not None and u0 is not None:
        fld = u0 if isinstance(u0, geo.Field) else grid.new_field(u0)
        compat = compatibility_residual(model, grid, fld.copy(), bc)
    passes = {
        "domain_convex": k0 > 0,
        "eps1": eps1 <= eps1_threshold,
        "eps2": eps2 <= eps2_threshold,
        "contact_nondegenerate": bc.kind != ev.CONTACT or bc.data.sup() < 1.0,
    }
    return AssumptionReport(k0_measured=k0, epsilon1_measured=eps1,
                            epsilon2_measured=eps2,
                            compatibility_residual=compat, passes=passes)
