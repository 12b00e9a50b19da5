"""
Clean 交點分類測試

範圍：
- LeafAtlas：區域判定與不變量驗證
- classify：transverse / clean_non_transverse / non_clean
- clean_locus_scan：clean 比例、非 clean 點雲、並行結果一致
- 葉內 coisotropy 與特徵 radical
"""

from __future__ import annotations

import numpy as np
import pytest

XYZ = ("x", "y", "z")


def _cubic():
    from poissonlab.clean import LeafAtlas, LeafRegion
    from poissonlab.coiso import Submanifold
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
    structure = PoissonStructure.from_entries(chart, [("x", "y", parse("1", XYZ))])
    manifold = Submanifold.create(chart, [parse("z - x^3", XYZ)], name="C")
    atlas = LeafAtlas(structure, [LeafRegion("leaves", (parse("z", XYZ),), rank=2)])
    return structure, manifold, atlas


def _quadratic():
    from poissonlab.clean import LeafAtlas, LeafRegion
    from poissonlab.coiso import Submanifold
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
    structure = PoissonStructure.from_entries(chart, [("x", "y", parse("x^2 + y^2", XYZ))])
    manifold = Submanifold.create(chart, [parse("z - x^2", XYZ)], name="C")
    coords = tuple(parse(c, XYZ) for c in XYZ)
    atlas = LeafAtlas(
        structure,
        [LeafRegion("axis", coords, rank=0), LeafRegion("plane", (coords[2],), rank=2)],
    )
    return structure, manifold, atlas


class TestLeafAtlas:
    """葉的 atlas"""

    def test_region_of_uses_rank(self):
        structure, _, atlas = _quadratic()
        assert atlas.region_of((0.0, 0.0, 0.4)).name == "axis"
        assert atlas.region_of((0.2, 0.0, 0.4)).name == "plane"

    def test_membership_selects_a_side(self):
        from poissonlab.clean import LeafAtlas, LeafRegion
        from poissonlab.exprcore import parse

        structure, _, _ = _cubic()
        atlas = LeafAtlas(
            structure,
            [LeafRegion("upper", membership=parse("z", XYZ)), LeafRegion("lower", membership=parse("-z", XYZ))],
        )
        assert atlas.region_of((0.0, 0.0, 0.3)).name == "upper"
        assert atlas.region_of((0.0, 0.0, -0.3)).name == "lower"
        assert atlas.region_of((0.0, 0.0, 0.0)) is None

    def test_same_leaf_label(self):
        _, _, atlas = _cubic()
        assert atlas.same_leaf_label((0.1, 0.2, 0.5), (-0.7, 0.9, 0.5))
        assert not atlas.same_leaf_label((0.1, 0.2, 0.5), (0.1, 0.2, 0.6))

    def test_validation_accepts_casimirs(self):
        from poissonlab.clean import LeafAtlas, LeafRegion
        from poissonlab.exprcore import parse

        structure, _, _ = _cubic()
        atlas = LeafAtlas.build(structure, [LeafRegion("leaves", (parse("z", XYZ),), rank=2)])
        assert atlas.validate() <= 1e-6

    def test_validation_rejects_non_invariants(self):
        from poissonlab.clean import LeafAtlas, LeafRegion
        from poissonlab.core.errors import LeafAtlasError
        from poissonlab.exprcore import parse

        structure, _, _ = _cubic()
        with pytest.raises(LeafAtlasError) as info:
            LeafAtlas.build(structure, [LeafRegion("leaves", (parse("x", XYZ),), rank=2)])
        assert info.value.region == "leaves"

    def test_duplicate_region_names(self):
        from poissonlab.clean import LeafAtlas, LeafRegion

        structure, _, _ = _cubic()
        with pytest.raises(ValueError):
            LeafAtlas(structure, [LeafRegion("a"), LeafRegion("a")])


class TestClassify:
    """逐點分類"""

    def test_cubic_graph_is_non_clean_at_the_origin(self):
        from poissonlab.clean import classify

        structure, manifold, atlas = _cubic()
        verdict = classify(structure, manifold, atlas, (0.0, 0.0, 0.0), np.random.default_rng(0))
        assert verdict.kind == "non_clean"
        assert verdict.tangent_int_dim == 2
        assert verdict.estimated_int_dim == 1
        assert not verdict.is_clean

    def test_cubic_graph_is_transverse_away_from_the_axis(self):
        from poissonlab.clean import classify

        structure, manifold, atlas = _cubic()
        verdict = classify(structure, manifold, atlas, (0.5, 0.0, 0.125))
        assert verdict.kind == "transverse"
        assert verdict.tangent_int_dim == 1
        assert verdict.estimated_int_dim is None

    def test_quadratic_origin_is_clean_but_not_transverse(self):
        from poissonlab.clean import classify

        structure, manifold, atlas = _quadratic()
        verdict = classify(structure, manifold, atlas, (0.0, 0.0, 0.0), np.random.default_rng(0))
        assert verdict.kind == "clean_non_transverse"
        assert verdict.tangent_int_dim == 0
        assert verdict.estimated_int_dim == 0

    def test_too_few_samples_is_undetermined(self):
        from poissonlab.clean import classify

        structure, manifold, atlas = _cubic()
        verdict = classify(structure, manifold, atlas, (0.0, 0.0, 0.0), n_samples=5)
        assert verdict.kind == "undetermined"
        assert verdict.diagnostics["samples"] == 5

    def test_tangent_dimensions(self):
        from poissonlab.clean import tangent_data

        structure, manifold, _ = _cubic()
        data = tangent_data(structure, manifold, (0.0, 0.0, 0.0))
        assert (data.manifold_dim, data.leaf_dim, data.sum_dim) == (2, 2, 2)
        assert data.intersection_dim == 2


class TestCleanLocusScan:
    """clean locus 掃描"""

    def test_cubic_graph_scan(self):
        from poissonlab.clean import clean_locus_scan
        from poissonlab.coiso import grid_on_submanifold

        structure, manifold, atlas = _cubic()
        mgrid = grid_on_submanifold(manifold, ("x", "y"), 5)
        result = clean_locus_scan(structure, manifold, atlas, mgrid, seed=1)
        assert result.classified == 25
        assert result.count("transverse") == 20
        # y = ±1 的角落節點有一半的種子落在 box 外，可能判為 undetermined
        non_clean = result.count("non_clean")
        assert non_clean >= 3
        assert non_clean + result.undetermined == 5
        assert result.clean_fraction == pytest.approx(20 / (20 + non_clean))
        assert np.allclose(result.non_clean_cloud()[:, 0], 0.0)
        assert not result.has_open_block()

    def test_threads_do_not_change_verdicts(self):
        from poissonlab.clean import clean_locus_scan
        from poissonlab.coiso import grid_on_submanifold

        structure, manifold, atlas = _cubic()
        mgrid = grid_on_submanifold(manifold, ("x", "y"), 3)
        serial = clean_locus_scan(structure, manifold, atlas, mgrid, seed=7, threads=1)
        parallel = clean_locus_scan(structure, manifold, atlas, mgrid, seed=7, threads=3)
        assert np.array_equal(serial.kinds(), parallel.kinds())


class TestLeafwise:
    """葉內的辛幾何"""

    def test_clean_point_is_leafwise_coisotropic(self):
        from poissonlab.clean import classify, leafwise_coisotropy_check

        structure, manifold, atlas = _cubic()
        p = (0.5, 0.1, 0.125)
        verdict = classify(structure, manifold, atlas, p)
        assert leafwise_coisotropy_check(structure, manifold, p, verdict)

    def test_non_clean_point_is_refused(self):
        from poissonlab.clean import classify, leafwise_coisotropy_check
        from poissonlab.core.errors import NotCleanError

        structure, manifold, atlas = _cubic()
        verdict = classify(structure, manifold, atlas, (0.0, 0.0, 0.0), np.random.default_rng(0))
        with pytest.raises(NotCleanError):
            leafwise_coisotropy_check(structure, manifold, (0.0, 0.0, 0.0), verdict)

    def test_isotropic_axis_fails_leafwise_coisotropy(self):
        from poissonlab.clean import leafwise_coisotropy_check
        from poissonlab.coiso import Submanifold
        from poissonlab.exprcore import parse

        structure, _, _ = _cubic()
        axis = Submanifold.create(structure.chart, [parse("x", XYZ), parse("y", XYZ)])
        assert not leafwise_coisotropy_check(structure, axis, (0.0, 0.0, 0.3))

    def test_radical_matches_the_characteristic_span(self):
        from poissonlab.clean import characteristic_coincidence, characteristic_kernel

        structure, manifold, _ = _cubic()
        p = (0.5, 0.1, 0.125)
        kernel = characteristic_kernel(structure, manifold, p)
        assert kernel.shape == (3, 1)
        assert abs(kernel[1, 0]) == pytest.approx(1.0)
        result = characteristic_coincidence(structure, manifold, p)
        assert result.coincide
        assert result.span_dim == result.kernel_dim == 1
