import math

import numpy as np
import pytest

from anisoflow import geometry as geo


class TestDomain:
    def test_validation(self):
        with pytest.raises(ValueError):
            geo.ConvexDomain("triangle", 1.0)
        with pytest.raises(ValueError):
            geo.interval(-2.0)

    def test_curvature_bounds(self):
        d = geo.disk(2.0)
        assert d.k0 == pytest.approx(0.5)
        assert d.h_params == (0.5, 0.5, 0.0)
        assert geo.interval(1.0).k0 == math.inf


class TestHFunction:
    def test_disk_invariants(self):
        dom = geo.disk(1.5)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.uniform(-1, 1, 2) * 1.05
            if x @ x >= dom.size**2:
                continue
            h, Dh, D2h = geo.h_function(dom, x)
            assert h < 0
            assert np.linalg.norm(Dh) <= 1.0 + 1e-12
            assert np.allclose(D2h, np.eye(2) / 1.5, atol=1e-15)
        # boundary values: h = 0, outward normal derivative 1
        b = np.array([1.5, 0.0])
        h, Dh, _ = geo.h_function(dom, b)
        assert h == pytest.approx(0.0, abs=1e-15)
        assert np.dot(Dh, b / 1.5) == pytest.approx(1.0, abs=1e-15)

    def test_interval_invariants(self):
        dom = geo.interval(2.0)
        h, Dh, D2h = geo.h_function(dom, 2.0)
        assert h == pytest.approx(0.0, abs=1e-15)
        assert Dh[0] == pytest.approx(1.0)
        assert D2h[0, 0] == pytest.approx(0.5)
        h0, Dh0, _ = geo.h_function(dom, 0.0)
        assert h0 == pytest.approx(-1.0)
        assert Dh0[0] == 0.0

    def test_outside_rejected(self):
        with pytest.raises(geo.OutsideDomain):
            geo.h_function(geo.disk(1.0), [1.2, 0.3])
        with pytest.raises(geo.OutsideDomain):
            geo.h_function(geo.interval(1.0), 1.5)

    def test_fd_consistency(self):
        # closed-form Dh, D2h against finite differences of h
        dom = geo.disk(2.0)
        x0 = np.array([0.4, -0.9])
        h, Dh, D2h = geo.h_function(dom, x0)
        eps = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = eps
            hp = geo.h_function(dom, x0 + e)[0]
            hm = geo.h_function(dom, x0 - e)[0]
            assert (hp - hm) / (2 * eps) == pytest.approx(Dh[i], abs=1e-9)
            assert (hp - 2 * h + hm) / eps**2 == pytest.approx(
                D2h[i, i], abs=1e-3)


class TestGrids:
    def test_interval_nodes(self):
        g = geo.make_grid(geo.interval(1.0), 11)
        assert g.x[0] == -1.0 and g.x[-1] == 1.0
        assert g.dx == pytest.approx(0.2)
        assert g.shape == (11,)

    def test_disk_staggered(self):
        g = geo.make_grid(geo.disk(1.0), (8, 16))
        assert g.r[0] == pytest.approx(g.dr / 2)
        assert g.r[-1] == pytest.approx(1.0 - g.dr / 2)
        assert g.r_ghost == pytest.approx(1.0 + g.dr / 2)
        assert g.shape == (8, 16)

    def test_odd_ntheta_rejected(self):
        with pytest.raises(ValueError):
            geo.DiskGrid(geo.disk(1.0), 8, 15)

    def test_mode_caps(self):
        g = geo.DiskGrid(geo.disk(1.0), 32, 64)
        # outer rings keep the full spectrum, inner rings are band-limited
        assert g.kmax[-2] == g.ntheta // 2
        assert g.kmax[1] == 2
        assert np.all(np.diff(g.kmax[1:-1]) >= 0)
        assert g.min_spacing > 0.3 * g.dr

    def test_smooth_idempotent(self):
        g = geo.DiskGrid(geo.disk(1.0), 8, 16)
        rng = np.random.default_rng(2)
        v = rng.standard_normal(g.shape)
        s1 = g.smooth(v)
        assert np.allclose(g.smooth(s1), s1, atol=1e-13)
        # band-limited fields pass through untouched
        low = np.cos(g.theta)[None, :] * g.r[:, None]
        assert np.allclose(g.smooth(low), low, atol=1e-13)

    def test_integrate(self):
        g = geo.DiskGrid(geo.disk(1.0), 64, 64)
        area = g.integrate(np.ones(g.shape))
        assert area == pytest.approx(math.pi, rel=1e-3)
        gi = geo.IntervalGrid(geo.interval(1.0), 101)
        assert gi.integrate(gi.x**2) == pytest.approx(2.0 / 3.0, rel=1e-3)


class TestGhosts:
    def test_stale_ghosts_refused(self):
        g = geo.IntervalGrid(geo.interval(1.0), 9)
        with pytest.raises(geo.GhostNotClosed):
            geo.derivative_arrays(g, g.new_field())
        gd = geo.DiskGrid(geo.disk(1.0), 4, 8)
        with pytest.raises(geo.GhostNotClosed):
            geo.derivative_arrays(gd, gd.new_field())

    def test_pole_coupling(self):
        # the row below the innermost ring is the same ring half a turn away
        g = geo.DiskGrid(geo.disk(1.0), 4, 8)
        f = g.new_field(np.arange(32, dtype=float).reshape(4, 8))
        f.ghosts = np.zeros(8)
        ext = g.extended(f)
        assert ext[0, 0] == f.values[0, 4]
        assert ext[0, 5] == f.values[0, 1]


def close_exact(grid, fld, func):
    """Fill ghosts with exact values of func for manufactured-solution
    tests (func takes Cartesian coordinates)."""
    if isinstance(grid, geo.IntervalGrid):
        L = grid.domain.size
        dx = grid.dx
        fld.ghosts = np.array([func(-L - dx, 0.0), func(L + dx, 0.0)])
    else:
        rg = grid.r_ghost
        fld.ghosts = np.array([func(rg * math.cos(t), rg * math.sin(t))
                               for t in grid.theta])


def fill(grid, func):
    if isinstance(grid, geo.IntervalGrid):
        f = grid.new_field(np.array([func(x, 0.0) for x in grid.x]))
    else:
        X, Y = grid.nodes_xy()
        f = grid.new_field(np.vectorize(func)(X, Y))
    close_exact(grid, f, func)
    return f


class TestDerivatives:
    def test_linear_exact(self):
        lin = lambda x, y: 0.7 * x - 0.3 * y + 2.0
        for grid in (geo.IntervalGrid(geo.interval(1.0), 17),
                     geo.DiskGrid(geo.disk(1.0), 12, 24)):
            f = fill(grid, lin)
            Du, D2u = geo.derivative_arrays(grid, f)
            if isinstance(grid, geo.IntervalGrid):
                assert np.abs(Du[:, 0] - 0.7).max() < 1e-12
            else:
                assert np.abs(Du[..., 0] - 0.7).max() < 1e-11
                assert np.abs(Du[..., 1] + 0.3).max() < 1e-11
            assert np.abs(D2u).max() < 1e-9

    def test_paraboloid_hessian(self):
        grid = geo.DiskGrid(geo.disk(1.0), 24, 48)
        f = fill(grid, lambda x, y: x * x + y * y)
        Du, D2u = geo.derivative_arrays(grid, f)
        X, Y = grid.nodes_xy()
        assert np.abs(Du[..., 0] - 2 * X).max() < 5e-2
        assert np.abs(D2u[..., 0, 0] - 2.0).max() < 5e-2
        assert np.abs(D2u[..., 1, 1] - 2.0).max() < 5e-2
        assert np.abs(D2u[..., 0, 1]).max() < 5e-2

    def test_single_node_wrapper(self):
        grid = geo.IntervalGrid(geo.interval(1.0), 21)
        f = fill(grid, lambda x, y: math.sin(x))
        Du, D2u = geo.discrete_derivatives(grid, f, 10)
        assert Du[0] == pytest.approx(math.cos(grid.x[10]), abs=2e-3)
        assert D2u[0, 0] == pytest.approx(-math.sin(grid.x[10]), abs=1e-3)

    @pytest.mark.parametrize("which", ["interval", "disk"])
    def test_second_order(self, which):
        # halving the mesh should cut the error by about four
        func = lambda x, y: math.sin(1.3 * x) * math.cos(0.7 * y) + 0.2 * x * y

        def err(res):
            if which == "interval":
                grid = geo.IntervalGrid(geo.interval(1.0), res + 1)
            else:
                grid = geo.DiskGrid(geo.disk(1.0), res, 2 * res)
            f = fill(grid, func)
            Du, D2u = geo.derivative_arrays(grid, f)
            if which == "interval":
                exact = np.array([1.3 * math.cos(1.3 * x) for x in grid.x])
                return np.abs(Du[:, 0] - exact).max()
            X, Y = grid.nodes_xy()
            exact = (1.3 * np.cos(1.3 * X) * np.cos(0.7 * Y) + 0.2 * Y)
            return np.abs(Du[..., 0] - exact).max()

        e1, e2 = err(16), err(32)
        order = math.log2(e1 / e2)
        assert abs(order - 2.0) <= 0.2

    def test_pole_consistency(self):
        # a smooth field has accurate derivatives even at the innermost ring
        grid = geo.DiskGrid(geo.disk(1.0), 32, 64)
        f = fill(grid, lambda x, y: np.exp(0.3 * x) + 0.5 * y * y)
        Du, D2u = geo.derivative_arrays(grid, f)
        X, Y = grid.nodes_xy()
        inner = np.abs(Du[0, :, 0] - 0.3 * np.exp(0.3 * X[0]))
        assert inner.max() < 5e-2
        assert np.all(np.isfinite(D2u[0]))

    def test_check_finite(self):
        g = geo.IntervalGrid(geo.interval(1.0), 5)
        f = g.new_field(np.array([0.0, 1.0, np.nan, 0.0, 0.0]))
        with pytest.raises(FloatingPointError):
            f.check_finite()
