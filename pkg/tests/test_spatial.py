import math

import numpy as np
import pytest

from fraxolve.spatial import (
    BoundaryCondition,
    BoundarySpec,
    CoefficientField,
    Grid,
    assemble,
    check_max_principle,
    m_matrix_report,
)


def const(v):
    return lambda pts, t: np.full(pts.shape[0], v)


class TestGrid:
    def test_basic(self):
        g = Grid(2, 4, math.pi)
        assert g.h == pytest.approx(math.pi / 4)
        assert g.shape == (5, 5)
        assert g.n_nodes == 25
        pts = g.points()
        assert pts.shape == (25, 2)
        assert pts[0].tolist() == [0.0, 0.0]
        np.testing.assert_allclose(pts[-1], [math.pi, math.pi])

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(3, 4, 1.0)
        with pytest.raises(ValueError):
            Grid(1, 1, 1.0)
        with pytest.raises(ValueError):
            Grid(1, 4, -1.0)


class TestAssemble1D:
    def test_interior_row_frozen(self):
        # a=1, b=1, c=2, h=0.1: row is [-1/h^2 - 1/(2h), 2/h^2 + 2, -1/h^2 + 1/(2h)]
        # = [-105, 202, -95]
        grid = Grid(1, 10, 1.0)
        cf = CoefficientField(a=(1.0,), b=(1.0,), c=2.0)
        op = assemble(grid, cf, 0.0, BoundarySpec.dirichlet0(1))
        A = op.matrix.toarray()
        np.testing.assert_allclose(A[4, 3:6], [-105.0, 202.0, -95.0], rtol=1e-12)

    def test_robin_end_row_frozen(self):
        # a=1, mu=1, h=0.1 at the right face: ghost elimination gives
        # diagonal 2/h^2 + 2 mu/h = 220 and inner coefficient -2/h^2 = -200
        grid = Grid(1, 10, 1.0)
        bs = BoundarySpec(
            {
                "x-": BoundaryCondition("dirichlet", 0.0),
                "x+": BoundaryCondition("robin", 1.0),
            },
            1,
        )
        op = assemble(grid, CoefficientField(a=(1.0,)), 0.0, bs)
        A = op.matrix.toarray()
        np.testing.assert_allclose(A[-1, -2:], [-200.0, 220.0], rtol=1e-12)

    def test_eigenvector_identity(self):
        # -u'' on (0, pi) with Dirichlet: sin(x) is an exact eigenvector of
        # the FD matrix with discrete eigenvalue (2 - 2 cos h)/h^2
        grid = Grid(1, 64, math.pi)
        op = assemble(grid, CoefficientField(a=(1.0,)), 0.0, BoundarySpec.dirichlet0(1))
        x = grid.points()[op.unknown_flat, 0]
        v = np.sin(x)
        lam = (2.0 - 2.0 * math.cos(grid.h)) / grid.h**2
        np.testing.assert_allclose(op.matrix @ v, lam * v, rtol=0, atol=1e-12)

    def test_second_order_constant_coefficients(self):
        # truncation error of -u'' + u' + u at u = sin(x) decays like h^2
        def exact_L(x):
            return np.sin(x) + np.cos(x) + np.sin(x)

        errs = []
        for N in (16, 32, 64):
            grid = Grid(1, N, math.pi)
            cf = CoefficientField(a=(1.0,), b=(1.0,), c=1.0)
            op = assemble(grid, cf, 0.0, BoundarySpec.dirichlet0(1))
            x = grid.points()[op.unknown_flat, 0]
            got = op.matrix @ np.sin(x) + op.data_vector()
            errs.append(float(np.max(np.abs(got - exact_L(x)))))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)
        assert math.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.1)

    def test_second_order_variable_diffusion(self):
        # a(x) = 1 + x/2: L u = -(a u')' with u = sin x has
        # L u = a sin x - a' cos x = (1 + x/2) sin x - cos(x)/2
        errs = []
        for N in (16, 32, 64):
            grid = Grid(1, N, math.pi)
            cf = CoefficientField(a=(lambda pts, t: 1.0 + pts[:, 0] / 2.0,))
            op = assemble(grid, cf, 0.0, BoundarySpec.dirichlet0(1))
            x = grid.points()[op.unknown_flat, 0]
            want = (1.0 + x / 2.0) * np.sin(x) - 0.5 * np.cos(x)
            got = op.matrix @ np.sin(x) + op.data_vector()
            errs.append(float(np.max(np.abs(got - want))))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)
        assert math.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.1)

    def test_dirichlet_data_vector(self):
        # u = x is in the FD kernel of -u''; boundary data must close the stencil
        grid = Grid(1, 8, 1.0)
        bs = BoundarySpec(
            {
                "x-": BoundaryCondition("dirichlet", 0.0),
                "x+": BoundaryCondition("dirichlet", 1.0),
            },
            1,
        )
        op = assemble(grid, CoefficientField(a=(1.0,)), 0.0, bs)
        x = grid.points()[op.unknown_flat, 0]
        res = op.matrix @ x + op.data_vector()
        np.testing.assert_allclose(res, 0.0, atol=1e-11)

    def test_periodic_constant_in_kernel(self):
        grid = Grid(1, 16, 1.0)
        op = assemble(grid, CoefficientField(a=(1.0,)), 0.0, BoundarySpec.all_periodic(1))
        n = op.matrix.shape[0]
        assert n == 16  # node N is a duplicate of node 0
        np.testing.assert_allclose(op.matrix @ np.ones(n), 0.0, atol=1e-12)

    def test_periodic_scatter_duplicates(self):
        grid = Grid(1, 8, 1.0)
        op = assemble(grid, CoefficientField(a=(1.0,)), 0.0, BoundarySpec.all_periodic(1))
        u = np.arange(8.0)
        full = op.scatter(u)
        assert full[8] == full[0]


class TestAssemble2D:
    def test_five_point_laplacian_row(self):
        grid = Grid(2, 4, 1.0)
        op = assemble(grid, CoefficientField(a=(1.0, 1.0)), 0.0, BoundarySpec.dirichlet0(2))
        A = op.matrix.toarray()
        h2 = grid.h**2
        # 3x3 interior unknowns; center row has 4/h^2 diag and four -1/h^2
        center = 4  # middle of the 3x3 block
        assert A[center, center] == pytest.approx(4.0 / h2)
        off = np.delete(A[center], center)
        assert sorted(off)[:4] == pytest.approx([-1.0 / h2] * 4)
        assert np.sum(A[center] != 0.0) == 5

    def test_eigenvector_identity_2d(self):
        grid = Grid(2, 16, math.pi)
        op = assemble(grid, CoefficientField(a=(1.0, 1.0)), 0.0, BoundarySpec.dirichlet0(2))
        pts = grid.points()[op.unknown_flat]
        v = np.sin(pts[:, 0]) * np.sin(pts[:, 1])
        lam = 2.0 * (2.0 - 2.0 * math.cos(grid.h)) / grid.h**2
        np.testing.assert_allclose(op.matrix @ v, lam * v, rtol=0, atol=1e-11)

    def test_m_matrix_pattern_large(self):
        grid = Grid(2, 128, math.pi)
        cf = CoefficientField(
            a=(lambda p, t: 1.0 + 0.5 * np.sin(p[:, 0]), 1.0),
            b=(0.5, lambda p, t: 0.3 * np.cos(p[:, 1])),
            c=lambda p, t: 0.1 * p[:, 0],
        )
        op = assemble(grid, cf, 0.0, BoundarySpec.dirichlet0(2))
        rep = m_matrix_report(op.matrix)
        assert rep["diag_positive"]
        assert rep["offdiag_nonpositive"]

    def test_symmetry_pure_constant_diffusion(self):
        grid = Grid(2, 12, 1.0)
        op = assemble(grid, CoefficientField(a=(2.0, 3.0)), 0.0, BoundarySpec.dirichlet0(2))
        diff = (op.matrix - op.matrix.T).toarray()
        assert np.max(np.abs(diff)) < 1e-12

    def test_mixed_bc_corner_dirichlet_wins(self):
        # x faces periodic, y faces Dirichlet: the corner rows belong to
        # the Dirichlet set, and unknown count is N * (N - 1)
        grid = Grid(2, 8, 1.0)
        bs = BoundarySpec(
            {
                "x-": BoundaryCondition("periodic"),
                "x+": BoundaryCondition("periodic"),
                "y-": BoundaryCondition("dirichlet", 0.0),
                "y+": BoundaryCondition("dirichlet", 0.0),
            },
            2,
        )
        op = assemble(grid, CoefficientField(a=(1.0, 1.0)), 0.0, bs)
        assert op.n_unknown == 8 * 7
        # constants are not in the kernel (Dirichlet faces pin them)
        v = op.matrix @ np.ones(op.n_unknown)
        assert np.max(v) > 0

    def test_apply_matches_matrix(self):
        grid = Grid(2, 6, 1.0)
        cf = CoefficientField(a=(1.0, 1.0), c=1.0)
        op = assemble(grid, cf, 0.0, BoundarySpec.dirichlet0(2))
        rng = np.random.default_rng(0)
        u = rng.standard_normal(op.n_unknown)
        full = op.scatter(u)
        act = op.apply(full)
        np.testing.assert_allclose(
            act[op.unknown_flat], op.matrix @ u + op.data_vector(), rtol=1e-12, atol=1e-12
        )


class TestMaxPrinciple:
    def test_pure_diffusion_always_passes(self):
        rep = check_max_principle(Grid(1, 4, 1.0), CoefficientField(a=(1.0,)))
        assert rep.passed
        assert rep.required_h == math.inf

    def test_convection_threshold(self):
        # |b| = 4, a = 1: need h <= 1/2
        cf = CoefficientField(a=(1.0,), b=(4.0,))
        ok = check_max_principle(Grid(1, 4, 1.0), cf)  # h = 0.25
        bad = check_max_principle(Grid(1, 2, 2.0), cf)  # h = 1.0
        assert ok.passed
        assert not bad.passed
        assert bad.required_h == pytest.approx(0.5)

    def test_nonpositive_diffusion_rejected(self):
        cf = CoefficientField(a=(lambda p, t: p[:, 0] - 0.5,))
        with pytest.raises(ValueError):
            check_max_principle(Grid(1, 4, 1.0), cf)


class TestBoundarySpec:
    def test_unpaired_periodic_rejected(self):
        with pytest.raises(ValueError):
            BoundarySpec(
                {
                    "x-": BoundaryCondition("periodic"),
                    "x+": BoundaryCondition("dirichlet", 0.0),
                },
                1,
            )

    def test_unknown_face_rejected(self):
        with pytest.raises(ValueError):
            BoundarySpec({"z-": BoundaryCondition("periodic")}, 1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCondition("neumann", 0.0)
