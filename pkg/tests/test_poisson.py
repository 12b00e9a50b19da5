"""
Poisson 代數核心測試

範圍：
- Chart：定義域、網格（0 為節點）、取樣
- PoissonStructure：matrix_at / sharp / bracket / hamiltonian_vf / rank_at / leafwise_form
- jacobiator、poisson_map_check、下半連續性檢查
- Leibniz 規則、leafwise_form 與 preimage 選取無關
"""

from __future__ import annotations

import numpy as np
import pytest

XYZ = ("x", "y", "z")


def _chart(dim: int = 3, names=XYZ, bound: float = 1.0):
    from poissonlab.poisson import Chart

    return Chart(names[:dim], (-bound,) * dim, (bound,) * dim)


def _structure(entries, names=XYZ, bound: float = 1.0):
    from poissonlab.exprcore import parse
    from poissonlab.poisson import PoissonStructure

    chart = _chart(len(names), names, bound)
    return PoissonStructure.from_entries(chart, [(a, b, parse(e, names)) for a, b, e in entries])


class TestChart:
    """座標 chart"""

    def test_require_rejects_outside_points(self):
        from poissonlab.core.errors import OutOfDomainError

        chart = _chart()
        assert np.allclose(chart.require((0.5, 0, 0)), [0.5, 0, 0])
        with pytest.raises(OutOfDomainError):
            chart.require((2.0, 0, 0))

    def test_grid_contains_zero_exactly(self):
        from poissonlab.poisson import Chart

        chart = Chart(("x", "y"), (-2.0, -3.0), (2.0, 3.0))
        grid = chart.grid(101)
        assert grid.shape == (101, 101)
        assert 0.0 in grid.axis_values[0]
        assert 0.0 in grid.axis_values[1]

    def test_grid_fixes_other_coordinates(self):
        chart = _chart()
        grid = chart.grid(5, axes=("x", "z"), fixed={"y": 0.25})
        assert grid.points.shape == (25, 3)
        assert np.all(grid.points[:, 1] == 0.25)

    def test_sample_respects_margin(self):
        chart = _chart()
        points = chart.sample(np.random.default_rng(0), 200, margin=0.25)
        assert np.all(np.abs(points) <= 0.5)

    def test_empty_interval_is_rejected(self):
        from poissonlab.poisson import Chart

        with pytest.raises(ValueError):
            Chart(("x",), (1.0,), (0.0,))


class TestPoissonStructure:
    """PoissonStructure 基本運算"""

    def test_matrix_is_antisymmetric(self):
        structure = _structure([("x", "y", "1"), ("y", "z", "x")])
        m = structure.matrix_at((0.5, 0.1, 0.2))
        assert np.allclose(m, -m.T)
        assert m[0, 1] == 1.0
        assert m[1, 2] == 0.5

    def test_swapped_entry_is_negated(self):
        structure = _structure([("y", "x", "1")])
        assert structure.matrix_at((0, 0, 0))[0, 1] == -1.0

    def test_hamiltonian_vector_field_convention(self):
        from poissonlab.exprcore import parse

        structure = _structure([("x", "y", "1")])
        H = parse("x^2 + 3*y", XYZ)
        # X_H = (−∂H/∂y, ∂H/∂x, 0)
        assert np.allclose(structure.hamiltonian_vf(H, (0.5, 0, 0)), [-3.0, 1.0, 0.0])

    def test_bracket_of_coordinates(self):
        from poissonlab.exprcore import parse

        structure = _structure([("x", "y", "1")])
        x, y = parse("x", XYZ), parse("y", XYZ)
        assert structure.bracket(x, y, (0.2, 0.3, 0.4)) == pytest.approx(1.0)
        assert structure.bracket(y, x, (0.2, 0.3, 0.4)) == pytest.approx(-1.0)

    def test_rank_drops_on_the_axis(self):
        structure = _structure([("x", "y", "x^2 + y^2")])
        assert structure.rank_at((0.0, 0.0, 0.5)) == 0
        assert structure.rank_at((0.1, 0.0, 0.5)) == 2

    def test_b_poisson_rank(self):
        names = ("x", "y", "z", "u")
        structure = _structure([("x", "y", "1"), ("u", "z", "u")], names)
        assert structure.rank_at((0.0, 0.0, 0.0, 0.0)) == 2
        assert structure.rank_at((0.0, 0.0, 0.0, 0.02)) == 4

    def test_rank_parity_holds_at_random_points(self):
        structure = _structure([("x", "y", "1 + z^2"), ("y", "z", "x")])
        rng = np.random.default_rng(1)
        for p in structure.chart.sample(rng, 200):
            assert structure.rank_at(p) % 2 == 0

    def test_leafwise_form_is_canonical(self):
        structure = _structure([("x", "y", "1")])
        # ω_L = dx∧dy 的反號慣例：ω_L(∂x, ∂y) = −Π(dx, dy)·…，以 sharp 的 preimage 驗證
        value = structure.leafwise_form((0, 0, 0), (1.0, 0, 0), (0, 1.0, 0))
        assert abs(abs(value) - 1.0) < 1e-12

    def test_leafwise_form_rejects_transverse_vectors(self):
        from poissonlab.core.errors import NotInLeafError

        structure = _structure([("x", "y", "1")])
        with pytest.raises(NotInLeafError):
            structure.leafwise_form((0, 0, 0), (1.0, 0, 0), (0, 0, 1.0))

    def test_entry_coordinates_must_match_chart(self):
        from poissonlab.exprcore import parse
        from poissonlab.poisson import PoissonStructure

        with pytest.raises(ValueError):
            PoissonStructure(_chart(), {(0, 1): parse("1", ("x", "y"))})


class TestJacobiator:
    """Jacobi 恆等式"""

    def test_poisson_structures_satisfy_jacobi(self):
        from poissonlab.exprcore import parse
        from poissonlab.poisson import jacobiator

        structure = _structure([("x", "y", "x^2 + y^2")])
        coords = [parse(c, XYZ) for c in XYZ]
        rng = np.random.default_rng(2)
        for p in structure.chart.sample(rng, 50, margin=0.05):
            assert abs(jacobiator(structure, *coords, p)) <= 1e-8

    def test_non_poisson_bivector_violates_jacobi(self):
        from poissonlab.exprcore import parse
        from poissonlab.poisson import jacobiator

        structure = _structure([("x", "y", "1"), ("y", "z", "y")])
        coords = [parse(c, XYZ) for c in XYZ]
        rng = np.random.default_rng(3)
        worst = max(abs(jacobiator(structure, *coords, p)) for p in structure.chart.sample(rng, 50, margin=0.05))
        assert worst > 1e-3


class TestPoissonMap:
    """Poisson map 殘差"""

    def test_translation_is_poisson(self):
        from poissonlab.c0lab import SmoothMap
        from poissonlab.exprcore import parse
        from poissonlab.poisson import poisson_map_check

        structure = _structure([("x", "y", "1")], bound=3.0)
        phi = SmoothMap([parse(c, XYZ) for c in ("x + 1", "y", "z^3")])
        assert poisson_map_check(structure, structure, phi, (0.3, 0.2, 0.5)) <= 1e-12

    def test_scaling_is_not_poisson(self):
        from poissonlab.c0lab import SmoothMap
        from poissonlab.exprcore import parse
        from poissonlab.poisson import poisson_map_check

        structure = _structure([("x", "y", "1")], bound=3.0)
        phi = SmoothMap([parse(c, XYZ) for c in ("2*x", "y", "z")])
        assert poisson_map_check(structure, structure, phi, (0.3, 0.2, 0.5)) == pytest.approx(1.0)


class TestLowerSemicontinuity:
    """秩的下半連續性"""

    def test_grid_passes(self):
        from poissonlab.poisson import lower_semicontinuity_check

        structure = _structure([("x", "y", "x^2 + y^2")])
        report = lower_semicontinuity_check(structure, structure.chart.grid(5).points)
        assert report.passed
        assert report.checked == 125

    def test_upper_semicontinuous_rank_function_is_flagged(self, monkeypatch):
        from poissonlab.poisson import lower_semicontinuity_check

        structure = _structure([("x", "y", "1")])
        # 人為的秩：原點為 2，其他地方為 0
        monkeypatch.setattr(
            structure, "rank_at",
            lambda p, tol_rank=1e-8: 2 if np.allclose(p, 0.0) else 0,
        )
        report = lower_semicontinuity_check(structure, np.zeros((1, 3)))
        assert not report.passed


class TestBracketProperties:
    """bracket 與葉上辛形式的性質（隨機取樣）"""

    def test_leibniz_rule(self):
        from poissonlab.exprcore import parse

        structure = _structure([("x", "y", "x^2 + y^2"), ("y", "z", "x*z")])
        f = parse("x*y + z^2", XYZ)
        g = parse("x^2 - y*z", XYZ)
        h = parse("exp(x) + y", XYZ)
        gh = g * h
        rng = np.random.default_rng(11)
        for p in structure.chart.sample(rng, 1000):
            left = structure.bracket(f, gh, p)
            right = structure.bracket(f, g, p) * h.eval(p) + g.eval(p) * structure.bracket(f, h, p)
            assert left == pytest.approx(right, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize(
        "entries, names, pin",
        [
            ([("x", "y", "x^2 + y^2")], XYZ, {}),
            ([("x", "y", "1"), ("u", "z", "u")], ("x", "y", "z", "u"), {3: 0.0}),
        ],
    )
    def test_leafwise_form_ignores_kernel_shifts_of_preimages(self, entries, names, pin):
        from poissonlab.poisson import antisymmetric_pairing
        from poissonlab.utils.linalg import null_space

        structure = _structure(entries, names)
        rng = np.random.default_rng(12)
        for p in structure.chart.sample(rng, 100, margin=0.05):
            for k, value in pin.items():
                p[k] = value
            matrix = structure.matrix_at(p)
            kernel = null_space(matrix.T)
            assert kernel.shape[1] == len(names) - structure.rank_at(p)
            alpha, beta = rng.normal(size=(2, len(names)))
            u, v = structure.sharp(p, alpha), structure.sharp(p, beta)
            shifted_alpha = alpha + kernel @ rng.normal(size=kernel.shape[1])
            shifted_beta = beta + kernel @ rng.normal(size=kernel.shape[1])
            expected = -antisymmetric_pairing(matrix, shifted_alpha, shifted_beta)
            assert structure.leafwise_form(p, u, v) == pytest.approx(expected, abs=1e-10)
