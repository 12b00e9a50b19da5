"""
C0 極限實驗測試

範圍：
- SmoothMap / c0_distance / MapFamily / verify_family
- ExpressionFlow / ImplicitShearFlow（封閉形式 flow）
- run_hameotopy：gap 遞減與封閉形式極限
- casimir_hameotopy_check：Casimir ⇔ hameotopy 為恆等
- c0_distance 的對稱性與三角不等式
- leaf_mapping_check / leafwise_symplectic_check
- char_leaf_image_analysis：drop / jump
- c0_char_partition_probe
"""

from __future__ import annotations

import numpy as np
import pytest

XYZ = ("x", "y", "z")
H_N = "z*(z^2 + 1/n)^(-1/3)"


def _plane(bound: float = 1.0):
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-bound,) * 3, (bound,) * 3)
    return PoissonStructure.from_entries(chart, [("x", "y", parse("1", XYZ))])


def _map(*texts, params=()):
    from poissonlab.c0lab import SmoothMap
    from poissonlab.exprcore import parse

    return SmoothMap([parse(t, XYZ, params) for t in texts])


def _atlas(structure):
    from poissonlab.clean import LeafAtlas, LeafRegion
    from poissonlab.exprcore import parse

    return LeafAtlas(structure, [LeafRegion("leaves", (parse("z", XYZ),), rank=2)])


class TestSmoothMap:
    """分量式映射"""

    def test_evaluate_and_jacobian(self):
        phi = _map("x + 1", "y", "z^3")
        assert np.allclose(phi.evaluate((0.0, 2.0, 2.0)), [1.0, 2.0, 8.0])
        assert np.allclose(phi.jacobian((0.0, 2.0, 2.0)), np.diag([1.0, 1.0, 12.0]))

    def test_params_are_bound_per_member(self):
        phi = _map("x", "y", H_N, params=("n",))
        assert phi.params == ("n",)
        member = phi.with_params(n=1e12)
        assert member.evaluate((0.0, 0.0, 0.125))[2] == pytest.approx(0.5, abs=1e-6)
        with pytest.raises(ValueError):
            phi.with_params(m=1.0)

    def test_domain_is_enforced(self):
        from poissonlab.c0lab import SmoothMap
        from poissonlab.core.errors import OutOfDomainError

        structure = _plane()
        identity = SmoothMap.identity(XYZ, structure.chart)
        with pytest.raises(OutOfDomainError):
            identity.evaluate((2.0, 0.0, 0.0))

    def test_c0_distance(self):
        from poissonlab.c0lab import c0_distance

        shift = _map("x + 0.5", "y", "z")
        identity = _map("x", "y", "z")
        assert c0_distance(shift, identity, [(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)]) == pytest.approx(0.5)
        assert c0_distance(shift, identity, []) == 0.0


class TestC0DistanceProperties:
    """d_K 是探測點上的度量"""

    def test_symmetry_and_triangle_inequality(self):
        from poissonlab.c0lab import c0_distance

        maps = [
            _map("x", "y", H_N, params=("n",)).with_params(n=10.0),
            _map("x", "y", H_N, params=("n",)).with_params(n=1e3),
            _map("x", "y", "cbrt(z)"),
            _map("x + 0.25*y", "y - z", "z^3"),
        ]
        rng = np.random.default_rng(41)
        for _ in range(20):
            points = rng.uniform(-1.0, 1.0, size=(50, 3))
            d = [[c0_distance(f, g, points) for g in maps] for f in maps]
            for i in range(len(maps)):
                assert d[i][i] == 0.0
                for j in range(len(maps)):
                    assert abs(d[i][j] - d[j][i]) <= 1e-12
                    for k in range(len(maps)):
                        assert d[i][k] <= d[i][j] + d[j][k] + 1e-12


class TestMapFamily:
    """映射族的 C0 收斂"""

    def _family(self, **kwargs):
        from poissonlab.c0lab import MapFamily, SmoothMap
        from poissonlab.exprcore import parse
        from poissonlab.poisson import Chart

        members = _map("x", "y", H_N, params=("n",))
        limit = SmoothMap([parse(t, XYZ) for t in ("x", "y", "cbrt(z)")])
        box = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
        return MapFamily(members, limit, (box,), compact_nodes=5, **kwargs)

    def test_members_converge_monotonically(self):
        from poissonlab.c0lab import verify_family

        family = self._family(indices=(1e1, 1e2, 1e3, 1e4))
        report = verify_family(_plane(), family, [(0.1, 0.2, 0.3), (-0.4, 0.0, 0.0)])
        assert report.monotone
        assert report.converged
        assert report.passed
        assert max(report.residuals) <= 1e-6
        assert report.distances[0] > report.distances[-1]

    def test_tolerance_decides_convergence(self):
        from poissonlab.c0lab import verify_family

        family = self._family(indices=(1e1,), tolerance=1e-6)
        report = verify_family(_plane(), family, [(0.1, 0.2, 0.3)])
        assert not report.converged
        assert not report.passed

    def test_non_poisson_member_is_reported(self):
        from poissonlab.c0lab import MapFamily, SmoothMap, verify_family
        from poissonlab.core.errors import MemberNotPoissonError
        from poissonlab.exprcore import parse
        from poissonlab.poisson import Chart

        members = _map("x*(1 + 1/n)", "y", "z", params=("n",))
        limit = SmoothMap([parse(t, XYZ) for t in XYZ])
        box = Chart(XYZ, (-0.5,) * 3, (0.5,) * 3)
        family = MapFamily(members, limit, (box,), indices=(10.0,), compact_nodes=3)
        with pytest.raises(MemberNotPoissonError):
            verify_family(_plane(), family, [(0.1, 0.2, 0.3)])

    def test_index_parameter_must_exist(self):
        from poissonlab.c0lab import MapFamily
        from poissonlab.poisson import Chart

        members = _map("x", "y", "z")
        box = Chart(XYZ, (-0.5,) * 3, (0.5,) * 3)
        with pytest.raises(ValueError):
            MapFamily(members, members, (box,))


class TestClosedFormFlows:
    """封閉形式 flow"""

    def test_expression_flow(self):
        from poissonlab.c0lab import ExpressionFlow

        flow = ExpressionFlow(_map("x", "y + t", "z", params=("t",)))
        assert np.allclose(flow.evaluate((0.1, 0.2, 0.3), 0.5), [0.1, 0.7, 0.3])
        assert np.allclose(flow.at(-0.2).evaluate((0.1, 0.2, 0.3)), [0.1, 0.0, 0.3])

    def test_expression_flow_needs_the_time_parameter(self):
        from poissonlab.c0lab import ExpressionFlow

        with pytest.raises(ValueError):
            ExpressionFlow(_map("x", "y", "z"))

    def test_implicit_shear_with_drift(self):
        from poissonlab.c0lab import ImplicitShearFlow
        from poissonlab.exprcore import ImplicitFunction, parse

        # g = cbrt(z + y)
        g = ImplicitFunction(parse("w^3 - z - y", ("w",) + XYZ), "w", XYZ)
        flow = ImplicitShearFlow(XYZ, g, along="y", shear="x", drift="z", factor=parse("1", XYZ), wrt="y")
        end = flow.evaluate((0.0, 0.0, 1.0), 0.5)
        rise = 1.5 ** (1.0 / 3.0) - 1.0
        assert end[1] == pytest.approx(0.5)
        assert end[0] == pytest.approx(rise, abs=1e-10)
        # factor ≡ 1 時 drift 積分等於 g 的增量
        assert end[2] == pytest.approx(1.0 - rise, abs=1e-8)
        assert np.allclose(flow.at(0.0).evaluate((0.0, 0.0, 1.0)), [0.0, 0.0, 1.0])

    def test_drift_arguments_come_together(self):
        from poissonlab.c0lab import ImplicitShearFlow
        from poissonlab.exprcore import ImplicitFunction, parse

        g = ImplicitFunction(parse("w^3 - z", ("w",) + XYZ), "w", XYZ)
        with pytest.raises(ValueError):
            ImplicitShearFlow(XYZ, g, along="y", shear="x", drift="z")


class TestHameotopy:
    """光滑 Hamiltonian 族的 flow 收斂"""

    def _family(self):
        from poissonlab.c0lab import HameotopyFamily
        from poissonlab.exprcore import parse
        from poissonlab.poisson import Chart

        H = parse(f"y*{H_N}", XYZ, ("n",))
        support = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
        return HameotopyFamily(H, support, indices=(1e1, 1e3, 1e6))

    def test_endpoints_approach_the_closed_form(self):
        from poissonlab.c0lab import ExpressionFlow, run_hameotopy

        structure = _plane(bound=2.0)
        # X_{H_n} = (−h_n(z), 0, 0)
        limit = ExpressionFlow(_map("x - t*cbrt(z)", "y", "z", params=("t",)))
        seeds = [(0.0, 0.1, 0.5), (0.2, -0.3, 0.0), (-0.5, 0.0, -0.3)]
        report = run_hameotopy(structure, self._family(), seeds, t=0.5, closed_form=limit, step=0.1)
        assert report.endpoints.shape == (3, 3, 3)
        assert len(report.gaps) == 2
        assert report.gaps[1] < report.gaps[0]
        assert report.closed_form_error <= 1e-4
        assert np.allclose(report.limit_points[1], [0.2, -0.3, 0.0])

    def test_seeds_must_lie_in_the_support(self):
        from poissonlab.c0lab import run_hameotopy

        with pytest.raises(ValueError):
            run_hameotopy(_plane(bound=2.0), self._family(), [(1.5, 0.0, 0.0)])

    def _casimir_inputs(self, hamiltonian, limit):
        from poissonlab.c0lab import HameotopyFamily, leaf_samples
        from poissonlab.exprcore import parse
        from poissonlab.poisson import Chart

        structure = _plane(bound=2.0)
        support = Chart(XYZ, (-0.5, -1.0, -1.0), (0.5, 1.0, 1.0))
        family = HameotopyFamily(
            parse(hamiltonian, XYZ, ("n",)), support,
            limit_hamiltonian=parse(limit, XYZ) if limit else None,
            indices=(1e1, 1e3, 1e6),
        )
        rng = np.random.default_rng(5)
        seeds = list(support.sample(rng, 8, margin=0.05))
        groups = leaf_samples(_atlas(structure), seeds, rng)
        return structure, family, groups, seeds

    def test_casimir_limit_has_identity_hameotopy(self):
        from poissonlab.c0lab import casimir_hameotopy_check

        structure, family, groups, seeds = self._casimir_inputs(H_N, "cbrt(z)")
        report = casimir_hameotopy_check(structure, family, groups, seeds, times=(0.5, 1.0), step=0.1)
        assert report.casimir_defect == 0.0
        assert report.displacement == 0.0
        assert report.is_casimir and report.is_identity and report.consistent

    def test_non_casimir_limit_moves_points(self):
        from poissonlab.c0lab import casimir_hameotopy_check

        structure, family, groups, seeds = self._casimir_inputs(f"y*{H_N}", "y*cbrt(z)")
        report = casimir_hameotopy_check(structure, family, groups, seeds, times=(0.5, 1.0), step=0.1)
        assert report.casimir_defect > 1e-3
        assert report.displacement > 1e-3
        assert not report.is_casimir and not report.is_identity
        assert report.consistent

    def test_casimir_check_needs_a_limit(self):
        from poissonlab.c0lab import casimir_hameotopy_check

        structure, family, groups, seeds = self._casimir_inputs(H_N, None)
        with pytest.raises(ValueError):
            casimir_hameotopy_check(structure, family, groups, seeds)


class TestLeafGeometry:
    """葉的映射與葉上的辛形式"""

    def test_level_preserving_limit_maps_leaves_to_leaves(self):
        from poissonlab.c0lab import leaf_mapping_check, leaf_samples

        structure = _plane()
        atlas = _atlas(structure)
        groups = leaf_samples(atlas, [(0.0, 0.0, 0.2), (0.3, -0.2, -0.6)], np.random.default_rng(0))
        report = leaf_mapping_check(_map("x", "y", "cbrt(z)"), atlas, groups)
        assert report.passed
        assert report.groups == 2

    def test_mixing_limit_breaks_leaves(self):
        from poissonlab.c0lab import leaf_mapping_check, leaf_samples

        structure = _plane()
        atlas = _atlas(structure)
        groups = leaf_samples(atlas, [(0.0, 0.0, 0.2)], np.random.default_rng(0), count=12)
        report = leaf_mapping_check(_map("x", "y", "0.5*z + 0.5*x + 0.5*y"), atlas, groups)
        assert not report.passed
        assert report.violations[0][0] == 0

    def test_translation_preserves_the_leafwise_form(self):
        from poissonlab.c0lab import leafwise_symplectic_check

        structure = _plane(bound=3.0)
        members = [_map("x + 1", "y", "z^3")]
        assert leafwise_symplectic_check(structure, members, [(0.2, 0.1, 0.5), (0.0, 0.0, 0.0)]) <= 1e-12

    def test_scaling_changes_the_leafwise_form(self):
        from poissonlab.c0lab import leafwise_symplectic_check

        structure = _plane(bound=3.0)
        worst = leafwise_symplectic_check(structure, [_map("2*x", "y", "z")], [(0.2, 0.1, 0.5)])
        assert worst == pytest.approx(1.0)


class TestCharacteristicImages:
    """特徵葉的像"""

    def _manifolds(self, structure):
        from poissonlab.coiso import Submanifold
        from poissonlab.exprcore import parse

        line = Submanifold.create(structure.chart, [parse("z - x", XYZ)], name="C")
        cubic = Submanifold.create(structure.chart, [parse("z - x^3", XYZ)], name="Cprime")
        return line, cubic

    def test_dimension_drops_onto_the_cubic(self):
        from poissonlab.c0lab import char_leaf_image_analysis

        structure = _plane()
        line, cubic = self._manifolds(structure)
        limit = _map("x", "y", "z - x + x^3")
        report = char_leaf_image_analysis(structure, line, cubic, limit, [(0.0, 0.0, 0.0), (0.5, 0.0, 0.5)])
        assert report.drops == 1
        assert report.jumps == 0
        assert report.leaves[0].source_dim == 1
        assert min(report.leaves[0].image_dims) == 0
        assert report.max_residual <= 1e-12

    def test_dimension_jumps_off_the_cubic(self):
        from poissonlab.c0lab import char_leaf_image_analysis

        structure = _plane()
        line, cubic = self._manifolds(structure)
        limit = _map("x", "y", "z - x^3 + x")
        report = char_leaf_image_analysis(structure, cubic, line, limit, [(0.0, 0.0, 0.0)])
        assert report.jumps == 1
        assert report.leaves[0].samples == 1

    def test_image_off_target_is_an_error(self):
        from poissonlab.c0lab import char_leaf_image_analysis
        from poissonlab.core.errors import ImageOffTargetError

        structure = _plane()
        line, cubic = self._manifolds(structure)
        with pytest.raises(ImageOffTargetError):
            char_leaf_image_analysis(structure, line, cubic, _map("x", "y", "z"), [(0.5, 0.0, 0.5)])


class TestPartitionProbe:
    """C0 特徵分割"""

    def _setup(self, hamiltonian: str = "x - cbrt(z)"):
        from poissonlab.c0lab import C0Generator, ExpressionFlow
        from poissonlab.coiso import Submanifold
        from poissonlab.exprcore import parse

        structure = _plane()
        cubic = Submanifold.create(structure.chart, [parse("z - x^3", XYZ)], name="C")
        slide = C0Generator(ExpressionFlow(_map("x", "y + t", "z", params=("t",))), parse(hamiltonian, XYZ))
        return structure, cubic, slide

    def test_origin_class_crosses_the_smooth_leaf(self):
        from poissonlab.c0lab import c0_char_partition_probe

        structure, cubic, slide = self._setup()
        probe = c0_char_partition_probe(
            structure, cubic, [slide], (0.0, 0.0, 0.0), budget=20,
            probes=[(0.5, 0.0, 0.125), (-0.5, 0.3, -0.125)],
        )
        assert probe.leaf_dim == 0
        assert probe.cloud_dim == 1
        assert len(probe.cloud) == 9
        assert probe.crosses

    def test_regular_class_stays_in_its_leaf(self):
        from poissonlab.c0lab import c0_char_partition_probe

        structure, cubic, slide = self._setup()
        probe = c0_char_partition_probe(structure, cubic, [slide], (0.5, 0.0, 0.125), budget=20)
        assert probe.leaf_dim == 1
        assert probe.dims_seen == (1,)
        assert not probe.crosses

    def test_non_constant_limit_hamiltonian_is_rejected(self):
        from poissonlab.c0lab import c0_char_partition_probe
        from poissonlab.core.errors import NotVanishingError

        structure, cubic, slide = self._setup("x")
        with pytest.raises(NotVanishingError):
            c0_char_partition_probe(structure, cubic, [slide], (0.0, 0.0, 0.0), probes=[(0.5, 0.0, 0.125)])
