"""
Hamiltonian flow 測試

範圍：
- integrate：RK4 / 自適應、反向積分、離開定義域
- flow_map / FlowMap：封閉形式的 shear 與差分 Jacobian
- leaf_dim_map：網格上的葉維度（含平行版本）
- same_leaf_probe：same / different / inconclusive
- flow 是 Poisson 映射、葉的 invariants 沿 flow 守恆
"""

from __future__ import annotations

import math

import numpy as np
import pytest

XYZ = ("x", "y", "z")


def _symplectic_plane(bound: float = 1.0):
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-bound,) * 3, (bound,) * 3)
    return PoissonStructure.from_entries(chart, [("x", "y", parse("1", XYZ))])


class TestIntegrate:
    """積分器"""

    def test_rotation_matches_closed_form(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        H = parse("x^2 + y^2", XYZ)
        # X_H = (−2y, 2x, 0)：角速度 2
        trajectory = integrate(structure, FlowSpec(H, (0.0, 0.5)), (0.5, 0.0, 0.0))
        expected = [0.5 * math.cos(1.0), 0.5 * math.sin(1.0), 0.0]
        assert np.allclose(trajectory.final, expected, atol=1e-10)
        assert trajectory.times[0] == 0.0
        assert trajectory.times[-1] == pytest.approx(0.5)

    def test_energy_is_conserved(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        H = parse("x^2 + y^4 + x*z", XYZ)
        trajectory = integrate(structure, FlowSpec(H, (0.0, 1.0)), (0.3, 0.2, 0.1))
        energies = [H.eval(p) for p in trajectory.points]
        assert max(energies) - min(energies) <= 1e-9

    def test_adaptive_agrees_with_rk4(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        H = parse("x^2 + y^2", XYZ)
        fixed = integrate(structure, FlowSpec(H, (0.0, 0.5)), (0.5, 0.0, 0.0)).final
        adaptive = integrate(structure, FlowSpec(H, (0.0, 0.5), step=0.1, method="adaptive"), (0.5, 0.0, 0.0))
        assert np.allclose(adaptive.final, fixed, atol=1e-8)
        assert len(adaptive) < 500

    def test_backward_flow_inverts_forward_flow(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import flow_map

        structure = _symplectic_plane()
        H = parse("x*y + z*y^2", XYZ)
        p = np.array([0.2, -0.1, 0.4])
        q = flow_map(structure, H, 0.3, p)
        assert np.allclose(flow_map(structure, H, -0.3, q), p, atol=1e-10)

    def test_time_dependent_hamiltonian(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        H = parse("t*y", XYZ, ("t",))
        # ẋ = −t，x(1) = x0 − 1/2
        spec = FlowSpec(H, (0.0, 1.0), time_param="t")
        assert integrate(structure, spec, (0.6, 0.0, 0.0)).final[0] == pytest.approx(0.1, abs=1e-12)

    def test_leaving_the_box_keeps_the_partial_trajectory(self):
        from poissonlab.core.errors import LeftDomainError
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        H = parse("-y", XYZ)
        # ẋ = 1：t = 0.5 時離開 x ≤ 1
        with pytest.raises(LeftDomainError) as info:
            integrate(structure, FlowSpec(H, (0.0, 2.0), step=0.01), (0.5, 0.0, 0.0))
        partial = info.value.partial
        assert 0 < len(partial) < 201
        assert partial.final[0] <= 1.0

    def test_start_outside_the_chart_is_rejected(self):
        from poissonlab.core.errors import OutOfDomainError
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, integrate

        structure = _symplectic_plane()
        with pytest.raises(OutOfDomainError):
            integrate(structure, FlowSpec(parse("x", XYZ), (0.0, 1.0)), (3.0, 0.0, 0.0))

    def test_invalid_span_is_rejected(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec

        with pytest.raises(ValueError):
            FlowSpec(parse("x", XYZ), (1.0, 0.0))
        with pytest.raises(ValueError):
            FlowSpec(parse("x", XYZ), (0.0, 1.0), method="euler")

    def test_compose_flows_applies_in_order(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowSpec, compose_flows

        structure = _symplectic_plane()
        move_x = FlowSpec(parse("-y", XYZ), (0.0, 0.25))
        move_y = FlowSpec(parse("x", XYZ), (0.0, 0.5))
        end = compose_flows(structure, [move_x, move_y], (0.0, 0.0, 0.3))
        assert np.allclose(end, [0.25, 0.5, 0.3], atol=1e-12)
        assert np.allclose(compose_flows(structure, [], (0.1, 0.2, 0.3)), [0.1, 0.2, 0.3])


class TestFlowMap:
    """flow 作為映射"""

    def test_shear_closed_form(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import flow_map

        structure = _symplectic_plane()
        H = parse("y*z^2", XYZ)
        # X_H = (−z², 0, 0)
        assert np.allclose(flow_map(structure, H, 1.0, (0.2, 0.1, 0.5)), [-0.05, 0.1, 0.5], atol=1e-12)

    def test_jacobian_by_central_differences(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowMap

        structure = _symplectic_plane()
        phi = FlowMap(structure, parse("y*z^2", XYZ), 1.0)
        expected = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(phi.jacobian((0.2, 0.1, 0.5)), expected, atol=1e-6)
        assert phi.t == 1.0
        assert FlowMap(structure, parse("y", XYZ), -0.5).t == -0.5


class TestLeafDimMap:
    """網格上的葉維度"""

    def test_quadratic_structure_drops_at_the_axis(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import leaf_dim_map
        from poissonlab.poisson import Chart, PoissonStructure

        chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
        structure = PoissonStructure.from_entries(chart, [("x", "y", parse("x^2 + y^2", XYZ))])
        grid = chart.grid(5, axes=("x", "y"), fixed={"z": 0.3})
        dims = leaf_dim_map(structure, grid)
        assert dims.shape == (5, 5)
        assert dims[2, 2] == 0
        assert int((dims == 2).sum()) == 24

    def test_threads_do_not_change_the_result(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import leaf_dim_map
        from poissonlab.poisson import Chart, PoissonStructure

        chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
        structure = PoissonStructure.from_entries(chart, [("x", "y", parse("x", XYZ))])
        grid = chart.grid(7, axes=("x", "z"), fixed={"y": 0.0})
        assert np.array_equal(leaf_dim_map(structure, grid, threads=1), leaf_dim_map(structure, grid, threads=4))


class TestSameLeafProbe:
    """同葉判定"""

    def _atlas(self, structure):
        from poissonlab.clean import LeafAtlas, LeafRegion
        from poissonlab.exprcore import parse

        return LeafAtlas(structure, [LeafRegion("leaves", (parse("z", XYZ),), rank=2)])

    def test_points_on_one_plane_are_reached(self):
        from poissonlab.flows import same_leaf_probe

        structure = _symplectic_plane()
        probe = same_leaf_probe(structure, self._atlas(structure), (0.0, 0.0, 0.2), (0.5, 0.3, 0.2))
        assert probe.verdict == "same"
        assert probe.distance <= 1e-4
        assert probe.evaluations > 0

    def test_different_invariants_mean_different_leaves(self):
        from poissonlab.flows import same_leaf_probe

        structure = _symplectic_plane()
        probe = same_leaf_probe(structure, self._atlas(structure), (0.0, 0.0, 0.2), (0.5, 0.3, 0.4))
        assert probe.verdict == "different"

    def test_small_budget_is_inconclusive(self):
        from poissonlab.flows import same_leaf_probe

        structure = _symplectic_plane()
        probe = same_leaf_probe(structure, self._atlas(structure), (0.0, 0.0, 0.2), (0.5, 0.3, 0.2), budget=10)
        assert probe.verdict == "inconclusive"
        assert probe.evaluations <= 10

    def test_point_outside_the_chart_is_inconclusive(self):
        from poissonlab.flows import same_leaf_probe

        structure = _symplectic_plane()
        probe = same_leaf_probe(structure, self._atlas(structure), (0.0, 0.0, 0.2), (5.0, 0.0, 0.2))
        assert probe.verdict == "inconclusive"


class TestFlowProperties:
    """flow 的幾何性質（隨機取樣）"""

    def test_flow_is_a_poisson_map(self):
        from poissonlab.exprcore import parse
        from poissonlab.flows import FlowMap
        from poissonlab.poisson import Chart, PoissonStructure, poisson_map_check

        chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
        structure = PoissonStructure.from_entries(chart, [("x", "y", parse("x^2 + y^2", XYZ))])
        # X_H = (x^2 + y^2)(2y, −2x, 0)：半徑守恆，不會離開 chart
        phi = FlowMap(structure, parse("x^2 + y^2 + z", XYZ), t=0.5, step=0.01)
        rng = np.random.default_rng(21)
        worst = max(poisson_map_check(structure, structure, phi, p) for p in chart.sample(rng, 100, margin=0.3))
        assert worst <= 1e-5

    @pytest.mark.parametrize(
        "name, hamiltonian",
        [
            ("cubic-graph", "x^2*y + z*x"),
            ("quadratic-singular", "x + y^2 + z"),
            ("clean-not-open", "y*w + x*z + w^2"),
            ("b-poisson", "x*y + u*z + z^2"),
        ],
    )
    def test_leaf_invariants_are_constant_along_flows(self, name, hamiltonian):
        from poissonlab.core.errors import LeftDomainError
        from poissonlab.flows import FlowSpec, integrate
        from poissonlab.scenarios.context import ScenarioContext
        from poissonlab.scenarios.loader import builtin

        ctx = ScenarioContext(builtin(name))
        H = ctx.expression(hamiltonian)
        rng = np.random.default_rng(22)
        checked = 0
        for p in ctx.chart.sample(rng, 20, margin=0.3):
            try:
                trajectory = integrate(ctx.structure, FlowSpec.for_time(H, 0.25, step=0.01), p)
            except LeftDomainError:
                continue
            region, values = ctx.atlas.leaf_key(p)
            for q in trajectory.points:
                key = ctx.atlas.leaf_key(q)
                assert key is not None and key[0] == region
                assert np.allclose(key[1], values, atol=1e-9)
            checked += 1
        assert checked >= 10
