"""
子流形與 coisotropy 測試

範圍：
- Submanifold：Gauss–Newton 投影、切空間、正則性驗證
- grid_on_submanifold：只動自由座標的投影網格
- is_coisotropic_at：witness pair / value
- characteristic_data / trace_characteristic_leaf
- vanishing_ideal_bracket_check
- 定義函數重組 A(p)·F 不改變 coisotropy
"""

from __future__ import annotations

import numpy as np
import pytest

XYZ = ("x", "y", "z")


def _setup():
    from poissonlab.coiso import Submanifold
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
    structure = PoissonStructure.from_entries(chart, [("x", "y", parse("1", XYZ))])
    cubic = Submanifold.create(chart, [parse("z - x^3", XYZ)], name="C")
    return structure, cubic


class TestSubmanifold:
    """正則 level set"""

    def test_projection_lands_on_the_graph(self):
        _, cubic = _setup()
        q = cubic.project_to((0.5, 0.0, 0.9))
        assert cubic.residual(q) <= 1e-10
        assert cubic.dim == 2
        assert cubic.codim == 1

    def test_projection_with_fixed_coordinates(self):
        _, cubic = _setup()
        q = cubic.project_to((0.5, 0.3, 0.9), free=[2])
        assert np.allclose(q, [0.5, 0.3, 0.125], atol=1e-10)

    def test_tangent_basis_is_orthonormal_kernel(self):
        _, cubic = _setup()
        p = (0.5, 0.2, 0.125)
        basis = cubic.tangent_basis(p)
        assert basis.shape == (3, 2)
        assert np.allclose(cubic.jacobian(p) @ basis, 0.0, atol=1e-12)
        assert np.allclose(basis.T @ basis, np.eye(2), atol=1e-12)

    def test_point_off_the_submanifold_is_rejected(self):
        from poissonlab.core.errors import NotOnSubmanifoldError

        _, cubic = _setup()
        with pytest.raises(NotOnSubmanifoldError) as info:
            cubic.tangent_basis((0.5, 0.0, 0.5))
        assert info.value.residual == pytest.approx(0.375)

    def test_dependent_defining_functions_are_irregular(self):
        from poissonlab.coiso import Submanifold
        from poissonlab.core.errors import IrregularSubmanifoldError
        from poissonlab.exprcore import parse

        structure, _ = _setup()
        with pytest.raises(IrregularSubmanifoldError):
            Submanifold.create(structure.chart, [parse("z - x^3", XYZ), parse("2*z - 2*x^3", XYZ)])

    def test_defining_functions_must_use_chart_coordinates(self):
        from poissonlab.coiso import Submanifold
        from poissonlab.exprcore import parse

        structure, _ = _setup()
        with pytest.raises(ValueError):
            Submanifold(structure.chart, [parse("x - y", ("x", "y"))])
        with pytest.raises(ValueError):
            Submanifold(structure.chart, [])

    def test_grid_on_submanifold(self):
        from poissonlab.coiso import grid_on_submanifold

        _, cubic = _setup()
        mgrid = grid_on_submanifold(cubic, ("x", "y"), 5)
        assert mgrid.shape == (5, 5)
        assert mgrid.mask.all()
        points = mgrid.converged
        assert np.allclose(points[:, 2], points[:, 0] ** 3, atol=1e-10)

    def test_grid_on_submanifold_inside_a_window(self):
        from poissonlab.coiso import grid_on_submanifold
        from poissonlab.poisson import Chart

        _, cubic = _setup()
        window = Chart(XYZ, (0.0, -0.5, -1.0), (0.5, 0.5, 1.0))
        mgrid = grid_on_submanifold(cubic, ("x", "y"), 3, window=window)
        assert mgrid.mask.all()
        assert np.allclose(mgrid.grid.axis_values[0], [0.0, 0.25, 0.5])
        assert np.allclose(mgrid.converged[:, 2], mgrid.converged[:, 0] ** 3, atol=1e-10)

    def test_window_must_share_the_coordinates(self):
        from poissonlab.coiso import grid_on_submanifold
        from poissonlab.poisson import Chart

        _, cubic = _setup()
        with pytest.raises(ValueError):
            grid_on_submanifold(cubic, ("x", "y"), 3, window=Chart(("a", "b", "c"), (0, 0, 0), (1, 1, 1)))

    def test_grid_needs_a_free_coordinate(self):
        from poissonlab.coiso import grid_on_submanifold

        _, cubic = _setup()
        with pytest.raises(ValueError):
            grid_on_submanifold(cubic, ("x", "y", "z"), 3)


class TestCoisotropy:
    """coisotropy 判定"""

    def test_hypersurfaces_are_coisotropic(self):
        from poissonlab.coiso import is_coisotropic_at

        structure, cubic = _setup()
        result = is_coisotropic_at(structure, cubic, (0.5, 0.1, 0.125))
        assert result
        assert result.value == 0.0

    def test_axis_is_not_coisotropic(self):
        from poissonlab.coiso import Submanifold, is_coisotropic_at
        from poissonlab.exprcore import parse

        structure, _ = _setup()
        axis = Submanifold.create(structure.chart, [parse("x", XYZ), parse("y", XYZ)])
        result = is_coisotropic_at(structure, axis, (0.0, 0.0, 0.3))
        assert not result
        assert result.pair == (0, 1)
        assert result.value == pytest.approx(1.0)

    def test_characteristic_dimension_drops_at_the_origin(self):
        from poissonlab.coiso import characteristic_data

        structure, cubic = _setup()
        assert characteristic_data(structure, cubic, (0.5, 0.0, 0.125)).dim == 1
        assert characteristic_data(structure, cubic, (0.0, 0.0, 0.0)).dim == 0


class TestCharacteristicLeaf:
    """特徵葉追蹤"""

    def test_trace_follows_the_y_direction(self):
        from poissonlab.coiso import trace_characteristic_leaf

        structure, cubic = _setup()
        trajectory = trace_characteristic_leaf(structure, cubic, (0.5, 0.0, 0.125), arc_budget=1.0)
        assert trajectory.times[0] == pytest.approx(-0.5)
        assert trajectory.times[-1] == pytest.approx(0.5)
        assert np.allclose(trajectory.points[:, 0], 0.5, atol=1e-10)
        assert np.allclose(trajectory.points[:, 2], 0.125, atol=1e-10)
        ys = trajectory.points[:, 1]
        assert ys.max() - ys.min() == pytest.approx(1.0, abs=1e-9)
        assert trajectory.drift <= 1e-8

    def test_trace_stays_put_where_the_characteristic_vanishes(self):
        from poissonlab.coiso import trace_characteristic_leaf

        structure, cubic = _setup()
        trajectory = trace_characteristic_leaf(structure, cubic, (0.0, 0.0, 0.0))
        assert len(trajectory) == 1

    def test_leaving_the_chart_keeps_the_partial_trace(self):
        from poissonlab.coiso import trace_characteristic_leaf
        from poissonlab.core.errors import LeftDomainError

        structure, cubic = _setup()
        with pytest.raises(LeftDomainError) as info:
            trace_characteristic_leaf(structure, cubic, (0.5, 0.9, 0.125), arc_budget=1.0)
        assert len(info.value.partial) > 0


class TestVanishingIdeal:
    """消失理想對 bracket 封閉"""

    def test_products_with_the_defining_function(self):
        from poissonlab.coiso import vanishing_ideal_bracket_check
        from poissonlab.exprcore import parse

        structure, cubic = _setup()
        f = parse("(z - x^3)*x", XYZ)
        g = parse("(z - x^3)*(y + 2)", XYZ)
        probes = [(x, y, x**3) for x in (-0.8, -0.3, 0.0, 0.4, 0.9) for y in (-0.5, 0.5)]
        assert vanishing_ideal_bracket_check(structure, cubic, f, g, probes) <= 1e-9

    def test_non_vanishing_function_is_rejected(self):
        from poissonlab.coiso import vanishing_ideal_bracket_check
        from poissonlab.core.errors import NotVanishingError
        from poissonlab.exprcore import parse

        structure, cubic = _setup()
        with pytest.raises(NotVanishingError):
            vanishing_ideal_bracket_check(
                structure, cubic, parse("x", XYZ), parse("z - x^3", XYZ), [(0.5, 0.0, 0.125)]
            )


XYZW = ("x", "y", "z", "w")


def _symplectic_four():
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZW, (-1.0,) * 4, (1.0,) * 4)
    one = parse("1", XYZW)
    return PoissonStructure.from_entries(chart, [("x", "y", one), ("z", "w", one)])


class TestRecombination:
    """coisotropy 與定義函數的選取無關：G = A(p)·F（A 可逆）"""

    def test_coisotropic_pair_stays_coisotropic(self):
        from poissonlab.coiso import Submanifold, is_coisotropic_at
        from poissonlab.exprcore import parse

        structure = _symplectic_four()
        x, z = parse("x", XYZW), parse("z", XYZW)
        original = Submanifold.create(structure.chart, [x, z])
        # A = [[1 + y^2, w], [x, 2]]，在 C = {x = z = 0} 上 det A = 2(1 + y^2) > 0
        recombined = Submanifold.create(
            structure.chart,
            [parse("1 + y^2", XYZW) * x + parse("w", XYZW) * z, x * x + 2.0 * z],
        )
        rng = np.random.default_rng(31)
        for y, w in rng.uniform(-0.9, 0.9, size=(200, 2)):
            p = (0.0, y, 0.0, w)
            assert is_coisotropic_at(structure, original, p)
            result = is_coisotropic_at(structure, recombined, p)
            assert result
            assert result.value <= 1e-12

    def test_non_coisotropic_pair_stays_non_coisotropic(self):
        from poissonlab.coiso import Submanifold, is_coisotropic_at
        from poissonlab.exprcore import parse

        structure = _symplectic_four()
        x, y = parse("x", XYZW), parse("y", XYZW)
        # A = [[1 + z^2, w], [z, 2]]：{G_1, G_2} = det A · {x, y} = 2(1 + z^2) − w z
        recombined = Submanifold.create(
            structure.chart,
            [parse("1 + z^2", XYZW) * x + parse("w", XYZW) * y, parse("z", XYZW) * x + 2.0 * y],
        )
        rng = np.random.default_rng(32)
        for z, w in rng.uniform(-0.9, 0.9, size=(200, 2)):
            result = is_coisotropic_at(structure, recombined, (0.0, 0.0, z, w))
            assert not result
            assert result.value == pytest.approx(abs(2.0 * (1.0 + z * z) - w * z), rel=1e-12)
