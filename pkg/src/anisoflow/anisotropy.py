"""Convex 1-homogeneous surface-energy integrands and their tensor calculus.

An integrand F lives on R^(n+1), is positive away from 0, convex,
positively 1-homogeneous and symmetric under flipping the last (vertical)
coordinate.  Three closed-form families are provided.  All evaluation
routines are vectorized over leading axes: p may have shape (..., n+1).
"""

from dataclasses import dataclass, field
import numpy as np


class ZeroVector(ValueError):
    pass


class StepUnderflow(ValueError):
    pass


class DegenerateGradient(ValueError):
    pass


class IdentityViolation(AssertionError):
    """A structural identity failed beyond tolerance; carries the worst sample."""

    def __init__(self, name, value, tol, sample):
        super().__init__(f"{name}: violation {value:.3e} > tol {tol:.1e} at p={sample}")
        self.name = name
        self.value = value
        self.sample = sample


class SymmetryViolation(IdentityViolation):
    pass


class SlopeMismatch(AssertionError):
    pass


ISOTROPIC = "isotropic"
ELLIPSOID = "ellipsoid"
QUARTIC_BLEND = "quartic_blend"


@dataclass(frozen=True)
class AnisotropyModel:
    family: str
    dim: int                      # spatial dimension n; integrand lives on R^(n+1)
    M: np.ndarray = None          # ellipsoid quadratic form, (n+1)x(n+1)
    beta: float = 0.0             # quartic-blend strength
    fd_step: float = 1e-4         # relative step for third derivatives

    def __post_init__(self):
        if self.family not in (ISOTROPIC, ELLIPSOID, QUARTIC_BLEND):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == ELLIPSOID:
            M = np.asarray(self.M, dtype=float)
            if M.shape != (self.dim + 1, self.dim + 1):
                raise ValueError("ellipsoid matrix must be (n+1)x(n+1)")
            if not np.allclose(M, M.T, atol=1e-12):
                raise ValueError("ellipsoid matrix must be symmetric")
            if np.linalg.eigvalsh(M).min() <= 0:
                raise ValueError("ellipsoid matrix must be positive definite")
            object.__setattr__(self, "M", M)
        if self.family == QUARTIC_BLEND and self.beta < 0:
            raise ValueError("beta must be >= 0")


def isotropic(dim, fd_step=1e-4):
    return AnisotropyModel(ISOTROPIC, dim, fd_step=fd_step)


def ellipsoid(M, fd_step=1e-4):
    M = np.asarray(M, dtype=float)
    return AnisotropyModel(ELLIPSOID, M.shape[0] - 1, M=M, fd_step=fd_step)


def quartic_blend(dim, beta, fd_step=1e-4):
    return AnisotropyModel(QUARTIC_BLEND, dim, beta=beta, fd_step=fd_step)


def _check_nonzero(p):
    norms = np.linalg.norm(p, axis=-1)
    if np.any(norms < 1e-300):
        raise ZeroVector("integrand undefined at the zero vector")
    return norms


def eval_F(model, p):
    """Value of the integrand; p has shape (..., n+1)."""
    p = np.asarray(p, dtype=float)
    norm = _check_nonzero(p)
    if model.family == ISOTROPIC:
        return norm
    if model.family == ELLIPSOID:
        return np.sqrt(np.einsum("...i,ij,...j->...", p, model.M, p))
    p2 = p * p
    n2 = norm * norm
    g4 = n2 * n2 + model.beta * np.sum(p2 * p2, axis=-1)
    return np.sqrt(np.sqrt(g4))


def grad_F(model, p):
    p = np.asarray(p, dtype=float)
    norm = _check_nonzero(p)
    if model.family == ISOTROPIC:
        return p / norm[..., None]
    if model.family == ELLIPSOID:
        Mp = np.einsum("ij,...j->...i", model.M, p)
        F = np.sqrt(np.einsum("...i,...i->...", p, Mp))
        return Mp / F[..., None]
    F = eval_F(model, p)
    n2 = (norm * norm)[..., None]
    g = 4.0 * n2 * p + 4.0 * model.beta * (p * p * p)
    F3 = F * F * F
    return g / (4.0 * F3[..., None])


def hess_F(model, p):
    p = np.asarray(p, dtype=float)
    norm = _check_nonzero(p)
    m = p.shape[-1]
    eye = np.eye(m)
    if model.family == ISOTROPIC:
        phat = p / norm[..., None]
        return (eye - phat[..., :, None] * phat[..., None, :]) / norm[..., None, None]
    if model.family == ELLIPSOID:
        Mp = np.einsum("ij,...j->...i", model.M, p)
        F = np.sqrt(np.einsum("...i,...i->...", p, Mp))
        return (model.M / F[..., None, None]
                - Mp[..., :, None] * Mp[..., None, :] / F[..., None, None] ** 3)
    F = eval_F(model, p)
    p2 = p * p
    n2 = norm * norm
    g = 4.0 * n2[..., None] * p + 4.0 * model.beta * (p2 * p)
    h = (8.0 * p[..., :, None] * p[..., None, :]
         + 4.0 * n2[..., None, None] * eye
         + 12.0 * model.beta * p2[..., :, None] * eye)
    F3 = F * F * F
    F7 = F3 * F3 * F
    return (h / (4.0 * F3[..., None, None])
            - 0.1875 * g[..., :, None] * g[..., None, :] / F7[..., None, None])


def third_F(model, p):
    """Third derivative tensor by central differencing of the closed-form
    Hessian with one Richardson refinement."""
    p = np.asarray(p, dtype=float)
    norm = float(np.linalg.norm(p))
    if norm < 1e-300:
        raise ZeroVector("integrand undefined at the zero vector")
    if model.fd_step * norm < 1e-12:
        raise StepUnderflow("finite-difference step underflow")
    h = model.fd_step * max(1.0, norm)
    m = p.shape[-1]

    def fd(step):
        shifts = step * np.eye(m)
        Hp = hess_F(model, p[None, :] + shifts)
        Hm = hess_F(model, p[None, :] - shifts)
        # index layout: D3[i, j, l] = d_l H_ij
        return np.moveaxis((Hp - Hm) / (2.0 * step), 0, -1)

    coarse = fd(h)
    fine = fd(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def derivatives(model, p, order):
    if order == 1:
        return grad_F(model, p)
    if order == 2:
        return hess_F(model, p)
    if order == 3:
        return third_F(model, p)
    raise ValueError("order must be 1, 2 or 3")


def extend(p_prime):
    """Append the vertical component -1: Du -> (Du, -1)."""
    p_prime = np.asarray(p_prime, dtype=float)
    out = np.empty(p_prime.shape[:-1] + (p_prime.shape[-1] + 1,))
    out[..., :-1] = p_prime
    out[..., -1] = -1.0
    return out


def coefficient_matrix(model, p_prime):
    """Operator coefficients a = v * [D2F]_{first n x n block} at (Du, -1).

    Evaluates the n x n block directly from the closed forms; building the
    full (n+1)-dimensional Hessian here would triple the work in the
    solver's inner loop."""
    q = np.asarray(p_prime, dtype=float)
    n = q.shape[-1]
    eye = np.eye(n)
    s2 = np.einsum("...i,...i->...", q, q)
    v2 = 1.0 + s2
    if model.family == ISOTROPIC:
        return eye - q[..., :, None] * q[..., None, :] / v2[..., None, None]
    v = np.sqrt(v2)
    if model.family == ELLIPSOID:
        p = extend(q)
        Mp = np.einsum("ij,...j->...i", model.M, p)
        F = np.sqrt(np.einsum("...i,...i->...", p, Mp))
        F3 = F * F * F
        mq = Mp[..., :-1]
        block = (model.M[:-1, :-1] / F[..., None, None]
                 - mq[..., :, None] * mq[..., None, :] / F3[..., None, None])
        return v[..., None, None] * block
    q2 = q * q
    g4 = v2 * v2 + model.beta * (np.sum(q2 * q2, axis=-1) + 1.0)
    F = np.sqrt(np.sqrt(g4))
    F3 = F * F * F
    F7 = F3 * F3 * F
    g = 4.0 * v2[..., None] * q + 4.0 * model.beta * (q2 * q)
    h = (8.0 * q[..., :, None] * q[..., None, :]
         + 4.0 * v2[..., None, None] * eye
         + 12.0 * model.beta * q2[..., :, None] * eye)
    block = (h / (4.0 * F3[..., None, None])
             - 0.1875 * g[..., :, None] * g[..., None, :] / F7[..., None, None])
    return v[..., None, None] * block


def t3_tensor(model, p_prime):
    """Gradient sensitivity of the operator coefficients:
    T3_ijl = -d_{p_l}(|p| D2F_ij) at (Du, -1), Cartesian indices 1..n."""
    p = extend(p_prime)
    v = float(np.linalg.norm(p))
    H = hess_F(model, p)
    D3 = third_F(model, p)
    n = p.shape[-1] - 1
    return (-v * D3[:n, :n, :n]
            - H[:n, :n, None] * p[None, None, :n] / v)


@dataclass
class TensorFrame:
    basis: np.ndarray          # columns phi^1..phi^n, basis[:, -1] along Du
    p_prime: np.ndarray
    v: float
    tau: np.ndarray            # |p| * D2F on basis pairs
    t3: np.ndarray             # T3 on basis triples
    gamma: np.ndarray = None   # Hessian coordinates in the induced matrix basis
    hess_eigvals: np.ndarray = None

    @property
    def n(self):
        return self.basis.shape[0]


def _complete_basis(direction):
    """Deterministic orthonormal completion: Gram-Schmidt on coordinate axes,
    skipping the axis most parallel to the given unit direction."""
    n = direction.shape[0]
    skip = int(np.argmax(np.abs(direction)))
    vecs = [direction]
    for i in range(n):
        if i == skip:
            continue
        e = np.zeros(n)
        e[i] = 1.0
        for w in vecs:
            e = e - np.dot(e, w) * w
        nrm = np.linalg.norm(e)
        e /= nrm
        vecs.append(e)
    # order: phi^1..phi^{n-1}, then phi^n = direction
    return np.column_stack(vecs[1:] + [direction])


def _fix_sign(vec):
    k = int(np.argmax(np.abs(vec)))
    return vec if vec[k] >= 0 else -vec


def build_frame(model, p_prime, hess_u=None):
    """Adapted orthonormal frame with the last vector along Du, plus the
    tau matrix and T3 components on it.  If hess_u is given, the first n-1
    vectors are eigenvectors of hess_u restricted to the orthogonal
    complement (ascending eigenvalue) and the Hessian coordinates gamma in
    the induced symmetric-matrix basis are populated."""
    p_prime = np.asarray(p_prime, dtype=float)
    n = p_prime.shape[0]
    s = np.linalg.norm(p_prime)
    if s < 1e-8:
        raise DegenerateGradient("frame undefined for |Du| < 1e-8")
    phin = p_prime / s
    B = _complete_basis(phin)
    eigvals = None
    if hess_u is not None and n > 1:
        hess_u = np.asarray(hess_u, dtype=float)
        Q = B[:, :-1]                       # complement of phi^n
        sub = Q.T @ hess_u @ Q
        w, V = np.linalg.eigh(sub)          # ascending eigenvalues
        cols = [_fix_sign(Q @ V[:, k]) for k in range(n - 1)]
        B = np.column_stack(cols + [phin])
        eigvals = w
    p = extend(p_prime)
    v = float(np.linalg.norm(p))
    H = hess_F(model, p)
    tau = v * (B.T @ H[:-1, :-1] @ B)
    T3 = t3_tensor(model, p_prime)
    t3f = np.einsum("ijl,ia,jb,lc->abc", T3, B, B, B)
    gamma = None
    if hess_u is not None:
        G = B.T @ np.asarray(hess_u, dtype=float) @ B
        gamma = G.copy()
        off = ~np.eye(n, dtype=bool)
        gamma[off] = np.sqrt(2.0) * G[off]
    return TensorFrame(basis=B, p_prime=p_prime, v=v, tau=tau, t3=t3f,
                       gamma=gamma, hess_eigvals=eigvals)


def _rng_points(model, rng, count, scale_lo=0.3, scale_hi=8.0):
    n = model.dim
    dirs = rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    mags = np.exp(rng.uniform(np.log(scale_lo), np.log(scale_hi), count))
    return dirs * mags[:, None]


def check_structure(model, sample_count=100, rng_seed=0, tolerances=None,
                    raise_on_violation=True):
    """Max violation of the structural identities over random samples.

    Identities: positive 1-homogeneity, the three Euler relations,
    positive semi-definiteness of D2F, vertical symmetry of F and the
    first/second-derivative consequences of that symmetry at (p', 0).
    """
    tol = {
        "homogeneity": 1e-12,
        "euler1": 1e-9,
        "euler2": 1e-9,
        "euler3": 1e-5,
        "psd": 1e-9,
        "sym_value": 1e-9,
        "sym_grad": 1e-9,
        "sym_hess": 1e-9,
    }
    if tolerances:
        tol.update(tolerances)
    rng = np.random.default_rng(rng_seed)
    worst = {k: (0.0, None) for k in tol}

    def note(name, val, sample):
        if val > worst[name][0]:
            worst[name] = (float(val), np.array(sample))

    for p_prime in _rng_points(model, rng, sample_count):
        p = extend(p_prime)
        F = float(eval_F(model, p))
        DF = grad_F(model, p)
        H = hess_F(model, p)
        scaleH = max(np.abs(H).max(), 1e-30)
        for lam in (0.5, 2.0, 10.0):
            note("homogeneity", abs(eval_F(model, lam * p) - lam * F) / (lam * F), p)
        note("euler1", abs(np.dot(DF, p) - F) / F, p)
        note("euler2", np.abs(H @ p).max() / scaleH, p)
        D3 = third_F(model, p)
        note("euler3", np.abs(np.einsum("ijl,i->jl", D3, p) + H).max() / scaleH, p)
        note("psd", max(0.0, -np.linalg.eigvalsh(H).min()), p)

        # vertical-symmetry consequences, probed at (p', 0) and (p', +-1)
        note("sym_value",
             abs(eval_F(model, p) - eval_F(model, np.append(p_prime, 1.0)))
             / F, p)
        p0 = np.append(p_prime, 0.0)
        DF0 = grad_F(model, p0)
        note("sym_grad", abs(DF0[-1]) / max(np.abs(DF0).max(), 1e-30), p0)
        H0 = hess_F(model, p0)
        note("sym_hess",
             np.abs(H0[-1, :-1]).max() / max(np.abs(H0).max(), 1e-30), p0)

    report = {k: v[0] for k, v in worst.items()}
    if raise_on_violation:
        for k, (val, sample) in worst.items():
            if val > tol[k]:
                cls = SymmetryViolation if k.startswith("sym") else IdentityViolation
                raise cls(k, val, tol[k], sample)
    return report


@dataclass
class ConstantsReport:
    c1: float
    c2: float
    c3: float
    epsilon2: float
    lemma_constants: dict
    slope_fits: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "epsilon2": self.epsilon2,
            "lemma_constants": dict(self.lemma_constants),
            "slope_fits": {k: list(v) for k, v in self.slope_fits.items()},
        }


def _loglog_slope(s, vals):
    vals = np.maximum(np.abs(vals), 1e-300)
    coef, res = np.polyfit(np.log(s), np.log(vals), 1, full=True)[:2]
    resid = float(res[0]) if len(res) else 0.0
    return float(coef[0]), resid


def verify_decay(model, directions=None, s_grid=None, slope_tol=0.3,
                 rng_seed=0):
    """Fit the gradient-direction decay rates of the second/third derivative
    quantities, estimate their constants, and extremize tau to produce the
    operator-coefficient bounds c1, c2, c3 and the anisotropy ratio c2/c1.

    Targets: the mixed second-derivative quantity decays like s^-2; the
    vertical third-derivative quantities like s^-3; the scaled frame
    contractions of T3 stay pinched between positive constants.
    """
    n = model.dim
    if s_grid is None:
        s_grid = np.array([4.0, 8.0, 16.0, 32.0])
    s_grid = np.asarray(s_grid, dtype=float)
    if len(s_grid) < 4 or s_grid.min() < 2.0:
        raise ValueError("s_grid must be geometric with >= 4 points, min >= 2")
    if directions is None:
        rng = np.random.default_rng(rng_seed)
        dirs = rng.standard_normal((6, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        directions = list(dirs)
    qdirs = list(directions)

    slope_fits = {}
    lemma = {}

    # decay quantities along each gradient direction, maxed over probes
    mixed2 = np.zeros(len(s_grid))       # D2F((p',0),(q',0)), target -2
    vert3 = np.zeros(len(s_grid))        # D3F((0,1),(q',0),(r',0)), target -3
    vert3n = np.zeros(len(s_grid))       # D3F((0,1),(0,1),(0,1)), target -3
    up = np.zeros(3)                     # C4-type scaled sups
    lo_ana = np.full(2, np.inf)          # C5-type scaled infs
    hi_ana = np.zeros(2)                 # C6-type scaled sups
    ez = np.append(np.zeros(n), 1.0)
    for k, s in enumerate(s_grid):
        for e in directions:
            p_prime = s * np.asarray(e)
            p = extend(p_prime)
            H = hess_F(model, p)
            D3 = third_F(model, p)
            u = np.append(p_prime, 0.0)
            for q in qdirs:
                qt = np.append(q, 0.0)
                mixed2[k] = max(mixed2[k], abs(u @ H @ qt))
                for r in qdirs:
                    rt = np.append(r, 0.0)
                    vert3[k] = max(vert3[k],
                                   abs(np.einsum("ijl,i,j,l", D3, ez, qt, rt)))
            vert3n[k] = max(vert3n[k], abs(np.einsum("ijl,i,j,l", D3, ez, ez, ez)))

            fr = build_frame(model, p_prime)
            v = fr.v
            T = fr.t3
            # measurement floor: T3 entries below the finite-difference noise
            # level are indistinguishable from zero and must not inflate the
            # constant estimates (the degenerate entries are exactly zero for
            # the rotationally symmetric family)
            noise = (40.0 * np.finfo(float).eps * np.abs(H).max() * v
                     / (model.fd_step * max(1.0, v)))

            def _sig(x):
                return abs(x) if abs(x) > noise else 0.0

            if n >= 2:
                for a in range(n - 1):
                    up[0] = max(up[0], v**3 * _sig(T[a, a, n - 1]),
                                v**3 * _sig(T[a, n - 1, n - 1]),
                                v**3 * _sig(T[n - 1, n - 1, a]))
                    for b in range(n - 1):
                        if b != a:
                            up[1] = max(up[1], v * _sig(T[a, a, b]),
                                        v * _sig(T[a, n - 1, b]))
                    lo_ana[0] = min(lo_ana[0], v * T[a, n - 1, a])
                    hi_ana[0] = max(hi_ana[0], v * T[a, n - 1, a])
            lo_ana[1] = min(lo_ana[1], v**3 * T[n - 1, n - 1, n - 1])
            hi_ana[1] = max(hi_ana[1], v**3 * T[n - 1, n - 1, n - 1])

    for name, vals, target in (("mixed_second", mixed2, -2.0),
                               ("vertical_third", vert3, -3.0),
                               ("vertical_third_diag", vert3n, -3.0)):
        if np.max(np.abs(vals)) < 1e-13:
            # identically degenerate (e.g. isotropic cross terms): record flat
            slope_fits[name] = (target, target, 0.0, 0.0)
            continue
        slope, resid = _loglog_slope(s_grid, vals)
        const = float(np.max(np.abs(vals) * s_grid ** (-target)))
        slope_fits[name] = (slope, target, resid, const)
        if abs(slope - target) > slope_tol:
            raise SlopeMismatch(
                f"{name}: fitted slope {slope:.3f}, target {target:.1f}")

    lemma["C1"] = slope_fits["mixed_second"][3]
    lemma["C2"] = slope_fits["vertical_third"][3]
    lemma["C3"] = slope_fits["vertical_third_diag"][3]
    lemma["C4"] = float(up.max())
    lemma["C5"] = float(lo_ana.min())
    lemma["C6"] = float(hi_ana.max())

    # tau extremization over sampled frames (moderate and large gradients)
    rng = np.random.default_rng(rng_seed + 1)
    c1 = np.inf
    c3 = 0.0
    c2 = 0.0
    mags = np.concatenate([np.geomspace(1.0, s_grid.max(), 8),
                           np.exp(rng.uniform(0.0, np.log(s_grid.max()), 24))])
    for mag in mags:
        for e in directions:
            fr = build_frame(model, mag * np.asarray(e))
            v = fr.v
            tau = fr.tau
            diag = np.append(np.diag(tau)[:-1], v**2 * tau[-1, -1])
            c1 = min(c1, diag.min())
            c3 = max(c3, diag.max())
            if n >= 2:
                c2 = max(c2, (v**2 * np.abs(tau[:-1, -1])).max())
            if n >= 3:
                off = np.abs(tau[:-1, :-1])[~np.eye(n - 1, dtype=bool)]
                c2 = max(c2, off.max())
    # the ratio convention pins c1 under the lower T3 constant and c2 over
    # the upper cross-term constant
    c1 = min(c1, lemma["C5"])
    c2 = max(c2, lemma["C4"])
    eps2 = c2 / c1 if c1 > 0 else np.inf
    return ConstantsReport(c1=float(c1), c2=float(c2), c3=float(c3),
                           epsilon2=float(eps2), lemma_constants=lemma,
                           slope_fits=slope_fits)
