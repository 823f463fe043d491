"""Cardinal-basis, Lebesgue-constant and witness-section tests."""

import math

import numpy as np
import pytest

from feketelab.errors import (
    BudgetExceeded,
    CountMismatch,
    DomainError,
    ModelMismatch,
    SingularConfiguration,
)
from feketelab.fekete import Certificate, Configuration, SolverOptions, solve_fekete
from feketelab.geometry import CP1, CP1XCP1, point_from_sphere
from feketelab.interpolation import (
    interpolate,
    lagrange_sections,
    lebesgue_constant,
    witness_point,
    witness_radius,
    witness_section,
)
from feketelab.sections import Section, eval_norm, get_space

OCTAHEDRON = [(0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]


def sphere_packed(vertices):
    pts = np.asarray(vertices, dtype=float)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return CP1.pack([point_from_sphere(p) for p in pts])


def manual_config(k, packed):
    from feketelab.sections import vandermonde_lognorm

    space = get_space(CP1, k)
    return Configuration(
        space, packed, vandermonde_lognorm(space, packed), Certificate(1.0, 0.0), {}
    )


@pytest.fixture(scope="module")
def antipodal_basis():
    return lagrange_sections(manual_config(1, sphere_packed([(0, 0, 1), (0, 0, -1)])))


@pytest.fixture(scope="module")
def octahedron_config():
    return solve_fekete(get_space(CP1, 5), SolverOptions(starts=4, seed=1))


@pytest.fixture(scope="module")
def k16_config():
    return solve_fekete(get_space(CP1, 16), SolverOptions(starts=3, seed=0))


class TestLagrangeBasis:
    def test_antipodal_coefficients(self, antipodal_basis):
        assert np.allclose(
            antipodal_basis.matrix[:, 0], [1.0 / math.sqrt(2.0), 0.0], atol=1e-12
        )
        assert np.allclose(
            antipodal_basis.matrix[:, 1], [0.0, 1.0 / math.sqrt(2.0)], atol=1e-12
        )

    def test_delta_property(self):
        rng = np.random.default_rng(2)
        space = get_space(CP1, 5)
        config = manual_config(5, CP1.uniform_points_array(rng, space.dim))
        basis = lagrange_sections(config)
        pts = config.point_objects()
        for j, sec in enumerate(basis.sections):
            for i, p in enumerate(pts):
                expected = 1.0 if i == j else 0.0
                assert eval_norm(sec, p) == pytest.approx(expected, abs=1e-8)

    def test_cofactor_formula_agrees(self):
        rng = np.random.default_rng(5)
        space = get_space(CP1, 4)
        packed = CP1.uniform_points_array(rng, space.dim)
        basis = lagrange_sections(manual_config(4, packed))
        M = space.eval_basis_array(packed).T  # M[i, j] = B_i(x_j)
        detM = np.linalg.det(M)
        for x in CP1.unpack(CP1.uniform_points_array(rng, 12)):
            b = space.eval_basis_array(CP1.pack([x]))[0]
            for j in range(space.dim):
                Mj = M.copy()
                Mj[:, j] = b
                cramer = np.linalg.det(Mj) / detM
                assert basis.section(j).eval(x) == pytest.approx(cramer, rel=1e-8)

    def test_condition_number_sane(self, antipodal_basis):
        assert antipodal_basis.condition_number == pytest.approx(1.0, abs=1e-12)

    def test_certified_sups_bounded(self, octahedron_config):
        from feketelab.sections import sup_norm

        basis = lagrange_sections(octahedron_config)
        worst = max(sup_norm(sec)[0] for sec in basis.sections)
        assert worst <= 1.0 + 1e-6

    def test_singular_config_rejected(self):
        packed = sphere_packed([(0, 0, 1), (0, 0, 1)])
        with pytest.raises(SingularConfiguration):
            lagrange_sections(manual_config(1, packed))


class TestInterpolate:
    def test_reproduces_sections(self):
        rng = np.random.default_rng(9)
        space = get_space(CP1, 6)
        config = manual_config(6, CP1.uniform_points_array(rng, space.dim))
        basis = lagrange_sections(config)
        coeffs = rng.standard_normal((space.dim, 2)) @ np.array([1.0, 1.0j])
        s = Section(space, coeffs)
        values = s.values_array(config.points)
        recovered = interpolate(basis, values)
        assert np.allclose(recovered.coeffs, s.coeffs, atol=1e-8)

    def test_zero_values(self, antipodal_basis):
        s = interpolate(antipodal_basis, [0.0, 0.0])
        assert np.all(s.coeffs == 0.0)

    def test_level_zero_constant(self):
        space = get_space(CP1, 0)
        pt = point_from_sphere((0.0, 1.0, 0.0))
        config = Configuration(space, CP1.pack([pt]), 0.0, Certificate(1.0, 0.0), {})
        basis = lagrange_sections(config)
        s = interpolate(basis, [0.3 - 0.4j])
        rng = np.random.default_rng(1)
        for q in CP1.unpack(CP1.uniform_points_array(rng, 5)):
            assert eval_norm(s, q) == pytest.approx(0.5, abs=1e-12)

    def test_linearity_and_phase(self, antipodal_basis):
        values = np.array([0.5 + 0.1j, -0.2j])
        u = np.exp(1j * 0.9)
        a = interpolate(antipodal_basis, u * values)
        b = interpolate(antipodal_basis, values)
        assert np.allclose(a.coeffs, u * b.coeffs, atol=1e-14)

    def test_count_mismatch(self, antipodal_basis):
        with pytest.raises(CountMismatch):
            interpolate(antipodal_basis, [1.0, 2.0, 3.0])


class TestLebesgue:
    def test_antipodal_value(self, antipodal_basis):
        value, argmax = lebesgue_constant(antipodal_basis)
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-6)
        # the maximizing set is the equal-modulus circle
        row = CP1.pack_row(argmax)
        assert abs(row[0, 0]) == pytest.approx(abs(row[0, 1]), abs=1e-5)

    def test_at_least_one(self):
        rng = np.random.default_rng(21)
        space = get_space(CP1, 3)
        basis = lagrange_sections(
            manual_config(3, CP1.uniform_points_array(rng, space.dim))
        )
        value, _ = lebesgue_constant(basis)
        assert value >= 1.0 - 1e-12

    def test_certified_dimension_bound(self, octahedron_config):
        basis = lagrange_sections(octahedron_config)
        value, _ = lebesgue_constant(basis)
        assert 1.0 <= value <= 6.0 * (1.0 + 1e-6)

    def test_product_model(self):
        config = solve_fekete(get_space(CP1XCP1, 1), SolverOptions(starts=3, seed=0))
        basis = lagrange_sections(config)
        value, argmax = lebesgue_constant(basis)
        assert 1.0 <= value <= 4.0 * (1.0 + 1e-6)
        assert len(argmax) == 2

    def test_deterministic(self, octahedron_config):
        basis = lagrange_sections(octahedron_config)
        a = lebesgue_constant(basis)
        b = lebesgue_constant(basis)
        assert a[0] == b[0]


class TestWitness:
    def test_radius_formula(self):
        assert witness_radius(16, 0.2) == pytest.approx(
            0.2 * math.log(16.0) / (0.8 * 4.0)
        )
        with pytest.raises(DomainError):
            witness_radius(16, 0.0)
        with pytest.raises(DomainError):
            witness_radius(16, 1.0)

    def test_point_choice_deterministic(self, k16_config):
        a = witness_point(k16_config, seed=3)
        b = witness_point(k16_config, seed=3)
        assert a == b

    def test_construction(self, k16_config):
        witness, ratio, diag = witness_section(k16_config, eps=0.2, seed=0)
        assert witness.space.k == 16
        assert diag["vanishing_level"] == 4
        assert diag["padding"] == 4 - len(diag["nodes_in_ball"])
        assert ratio >= 1.0 - 1e-9
        assert 0.0 < diag["blocker_at_x"] <= 1.0 + 1e-12
        assert diag["sup"] <= 1.0 + 1e-9
        for j in diag["nodes_in_ball"]:
            node = k16_config.point_objects()[j]
            assert eval_norm(witness, node) <= 1e-10

    def test_vanishes_inside_forced_ball(self, k16_config):
        # center on a node so the ball is certainly nonempty
        x = k16_config.point_objects()[0]
        witness, ratio, diag = witness_section(k16_config, eps=0.4, x=x)
        assert 0 in diag["nodes_in_ball"]
        assert eval_norm(witness, x) <= 1e-10
        assert ratio >= 1.0 - 1e-9

    def test_budget_exceeded(self):
        cluster = [(math.sin(0.05) * math.cos(a), math.sin(0.05) * math.sin(a),
                    math.cos(0.05)) for a in np.linspace(0.0, 5.0, 7)]
        rest = [(0, 0, -1), (1, 0, 0)]
        packed = sphere_packed(cluster + rest)
        config = manual_config(8, packed)
        with pytest.raises(BudgetExceeded):
            witness_section(config, eps=0.3, x=point_from_sphere((0, 0, 1.0)))

    def test_product_model_rejected(self):
        config = solve_fekete(get_space(CP1XCP1, 1), SolverOptions(starts=2, seed=0))
        with pytest.raises(ModelMismatch):
            witness_section(config, eps=0.2)
        with pytest.raises(ModelMismatch):
            witness_point(config)
