import math

import numpy as np
import pytest

from anisoflow import anisotropy as aniso
from anisoflow import estimates as est
from anisoflow import evolve as ev
from anisoflow import geometry as geo


def random_point(rng, mode, n):
    if mode == ev.CONTACT:
        Dh = rng.uniform(-0.6, 0.6, n)
        return est.PointData(mode, Dh=Dh, cos_theta=float(rng.uniform(-0.4, 0.4)))
    return est.PointData(mode, DQ=rng.uniform(-0.1, 0.1, n))


class TestPsi:
    def test_right_angle_reduces_to_log_v(self):
        grid = geo.DiskGrid(geo.disk(1.0), 16, 32)
        model = aniso.isotropic(2)
        X, _ = grid.nodes_xy()
        fld = grid.new_field(0.2 * X)
        bc = ev.contact_angle(0.0)
        snap = est.psi(model, grid, fld, bc, a0=0.5)
        ev.close_ghosts(grid, fld, bc)
        Du, _ = geo.derivative_arrays(grid, fld)
        v = np.sqrt(1 + np.einsum("...i,...i->...", Du, Du))
        h, _ = est.h_arrays(grid)
        assert np.allclose(snap.values, np.log(v) + 0.5 * h, atol=1e-12)
        assert snap.max_value == pytest.approx(snap.values[snap.argmax])

    def test_constant_field_neumann_finite(self):
        grid = geo.DiskGrid(geo.disk(1.0), 16, 32)
        model = aniso.isotropic(2)
        fld = grid.new_field(np.full(grid.shape, 3.0))
        snap = est.psi(model, grid, fld, ev.neumann(0.1), a0=1.0)
        finite = np.isfinite(snap.values)
        assert finite.sum() > 0.9 * snap.values.size
        assert np.isfinite(snap.max_value)

    def test_interval_boundary_flag(self):
        grid = geo.IntervalGrid(geo.interval(1.0), 21)
        model = aniso.isotropic(1)
        fld = grid.new_field(grid.x**2)
        snap = est.psi(model, grid, fld, ev.contact_angle(0.2), a0=0.3)
        assert snap.argmax_on_boundary == (snap.argmax[0] in (0, 20))

    def test_default_a0(self):
        disk = geo.disk(1.0)
        assert est.default_a0(disk, ev.CONTACT) == pytest.approx(1.0 / 3.0)
        assert est.default_a0(disk, ev.NEUMANN) == pytest.approx(1.0)
        line = geo.interval(2.0)
        assert est.default_a0(line, ev.CONTACT) == pytest.approx(0.25)
        assert est.default_a0(line, ev.NEUMANN) == pytest.approx(0.5)


class TestRho:
    def test_contact_bounds(self):
        # tangential components stay below |cos theta|; the gradient
        # component is pinched once |Du| >= 1
        rng = np.random.default_rng(0)
        model = aniso.quartic_blend(2, 0.1)
        for _ in range(40):
            Du = rng.standard_normal(2)
            Du *= (1.0 + rng.uniform(0, 4)) / np.linalg.norm(Du)
            point = random_point(rng, ev.CONTACT, 2)
            fr = aniso.build_frame(model, Du, hess_u=np.eye(2))
            rho = est.rho_components(fr, point)
            assert abs(rho[0]) <= abs(point.cos_theta) * 1.0001
            assert 0.25 <= rho[1] <= 2.0

    def test_neumann_pinch(self):
        rng = np.random.default_rng(1)
        model = aniso.isotropic(2)
        for _ in range(40):
            Du = rng.standard_normal(2)
            s = rng.uniform(2.0, 8.0)
            Du *= s / np.linalg.norm(Du)
            point = random_point(rng, ev.NEUMANN, 2)
            fr = aniso.build_frame(model, Du, hess_u=np.eye(2))
            rho = est.rho_components(fr, point)
            assert 0.75 * s <= rho[1] <= 1.25 * s

    def test_eta_matches_matrix_action(self):
        # eta are the frame components of D2u applied to the rho vector
        rng = np.random.default_rng(2)
        model = aniso.quartic_blend(3, 0.1)
        A = rng.standard_normal((3, 3))
        hess = A + A.T
        Du = rng.standard_normal(3)
        fr = aniso.build_frame(model, Du, hess_u=hess)
        rho = rng.standard_normal(3)
        eta = est.eta_from_rho(fr, rho)
        vec = fr.basis @ rho
        expect = fr.basis.T @ (hess @ vec)
        assert np.allclose(eta, expect, atol=1e-10)


class TestT3Contract:
    def test_dual_path_random(self):
        rng = np.random.default_rng(3)
        for model in (aniso.quartic_blend(2, 0.2), aniso.quartic_blend(3, 0.1),
                      aniso.ellipsoid(np.diag([1.0, 2.0, 1.0]))):
            for _ in range(30):
                A = rng.standard_normal((model.dim, model.dim))
                fr = aniso.build_frame(model, rng.standard_normal(model.dim),
                                       hess_u=A + A.T)
                eta = rng.standard_normal(model.dim)
                est.t3_contract(fr, eta)  # raises GroupMismatch on any bug

    def test_zero_vector(self):
        fr = aniso.build_frame(aniso.isotropic(2), np.array([1.0, 0.5]),
                               hess_u=np.eye(2))
        assert est.t3_contract(fr, np.zeros(2)) == 0.0

    def test_isotropic_identity_hessian(self):
        # closed-form check with gamma = I: only the alpha-diagonal and
        # nn groups survive and use the known isotropic tensor values
        s = 2.0
        fr = aniso.build_frame(aniso.isotropic(2), np.array([s, 0.0]),
                               hess_u=np.eye(2))
        rho = np.array([0.0, 1.0])
        eta = est.eta_from_rho(fr, rho)
        got = est.t3_contract(fr, eta)
        v2 = 1 + s * s
        expect = 1.0 * fr.t3[0, 0, 1] + 1.0 * (2 * s / v2**2)
        assert got == pytest.approx(expect, abs=1e-10)


class TestAssembleB:
    @pytest.mark.parametrize("mode", [ev.CONTACT, ev.NEUMANN])
    def test_matrix_symmetric_and_consistent(self, mode):
        rng = np.random.default_rng(4)
        for model in (aniso.quartic_blend(2, 0.1), aniso.quartic_blend(3, 0.05)):
            n = model.dim
            A = rng.standard_normal((n, n))
            Du = rng.standard_normal(n) * 2.0
            point = random_point(rng, mode, n)
            asm = est.assemble_B(model, Du, A + A.T, point, a0=0.3, mode=mode)
            M = asm.matrix
            assert np.allclose(M, M.T, atol=1e-14)
            assert M.shape == (2 * n - 1, 2 * n - 1)
            for _ in range(50):
                g = rng.standard_normal(2 * n - 1)
                direct = float(g @ M @ g)
                terms = est.form_value(asm, g)
                assert direct == pytest.approx(terms, rel=1e-10, abs=1e-12)

    def test_isotropic_semidefinite_state(self):
        # right angle, slope 2, diagonal Hessian
        point = est.PointData(ev.CONTACT, Dh=np.array([0.5, 0.0]),
                              cos_theta=0.0)
        asm = est.assemble_B(aniso.isotropic(2), np.array([2.0, 0.0]),
                             np.diag([0.7, -0.2]), point, a0=0.3)
        assert asm.min_eigenvalue >= -1e-8

    def test_interval_mode(self):
        point = est.PointData(ev.NEUMANN, DQ=np.array([0.05]))
        asm = est.assemble_B(aniso.isotropic(1), np.array([1.5]),
                             np.array([[0.4]]), point, a0=0.5)
        assert asm.matrix.shape == (1, 1)
        assert asm.min_eigenvalue >= -1e-8


class TestStateSampling:
    def test_disk_eigmin(self):
        model = aniso.quartic_blend(2, 0.05)
        grid = geo.DiskGrid(geo.disk(1.0), 24, 48)
        X, Y = grid.nodes_xy()
        fld = grid.new_field(0.25 * X + 0.1 * X * Y)
        bc = ev.neumann(0.1)
        worst = est.eigmin_over_state(model, grid, fld, bc)
        assert math.isfinite(worst)
        assert worst >= -1e-8

    def test_flat_state_is_nan(self):
        model = aniso.isotropic(2)
        grid = geo.DiskGrid(geo.disk(1.0), 8, 16)
        fld = grid.new_field(np.zeros(grid.shape))
        worst = est.eigmin_over_state(model, grid, fld, ev.neumann(0.0))
        assert math.isnan(worst)


class TestAssumptions:
    def test_trivial_scenario_passes(self):
        rep = est.check_assumptions(aniso.isotropic(2), geo.disk(1.0),
                                    ev.contact_angle(0.0))
        assert rep.k0_measured == pytest.approx(1.0)
        assert rep.epsilon1_measured == 0.0
        assert rep.epsilon2_measured < 1e-8
        assert all(rep.passes.values())

    def test_large_angle_flagged(self):
        rep = est.check_assumptions(aniso.isotropic(2), geo.disk(1.0),
                                    ev.contact_angle(0.5))
        assert rep.epsilon1_measured == pytest.approx(0.5)
        assert not rep.passes["eps1"]

    def test_compatibility_residual(self):
        model = aniso.isotropic(1)
        grid = geo.IntervalGrid(geo.interval(1.0), 41)
        bc = ev.neumann(0.1)
        rep = est.check_assumptions(model, grid.domain, bc, grid=grid,
                                    u0=np.zeros(grid.shape))
        assert rep.compatibility_residual == pytest.approx(0.1, rel=1e-12)
        # after the flow settles, the residual shrinks to stencil size
        cfg = ev.SolverConfig(sigma=0.8, t_end=1.0, record_every=0.5)
        res = ev.run(model, grid, np.zeros(grid.shape), bc, cfg)
        rep2 = est.check_assumptions(model, grid.domain, bc, grid=grid,
                                     u0=res.final)
        assert rep2.compatibility_residual < 0.02
