import numpy as np
import pytest

from berezin.core import BidegreeSeries, PowerSeries
from berezin.errors import DomainError, ZeroInput
from berezin.rank import (
    calibrated_orientation,
    coefficient_rows,
    complexified_eval,
    laplacian_weighted_monomial,
    moment_matrix,
    moment_matrix_from_grid,
    numerical_rank,
)
from berezin.symbols import Atom, Symbol
from berezin.transform import (
    log_atom_transform,
    pole_atom_transform,
    product_grid,
    symbol_transform,
)


def simple_grid(entries):
    return BidegreeSeries(np.asarray(entries, dtype=np.complex128))


class TestComplexified:
    def test_substitution(self):
        grid = simple_grid([[0, 0], [0, 1.0]])  # z conj(z)
        assert complexified_eval(grid, 0.5, 0.2j) == pytest.approx(0.1j)

    def test_diagonal_restriction(self, rng):
        grids = [
            log_atom_transform(0.3),
            pole_atom_transform(-0.2 + 0.4j),
            product_grid(0.5, 2, 1),
        ]
        for grid in grids:
            for _ in range(5):
                z = rng.uniform(0, 0.8) * np.exp(2j * np.pi * rng.uniform())
                diag = complexified_eval(grid, z, np.conj(z))
                assert diag == pytest.approx(grid.eval(z), abs=1e-12)

    def test_harmonic_w_independent(self):
        grid = simple_grid([[0, 0, 0], [0, 0, 0], [1.0, 0, 0]])  # z^2
        for w in (0.1, -0.5j, 0.3 + 0.3j):
            assert complexified_eval(grid, 0.4, w) == pytest.approx(0.16)

    def test_two_variable_defining_integral(self):
        # off-diagonal values must match the two-variable kernel integral
        # int u(t) (1 - z w)^2 / ((1 - conj(t) z)^2 (1 - t w)^2) dA(t)
        from berezin.quadrature import SingularityPlan, disk_integrate_singular

        a = 0.3
        grid = log_atom_transform(a)
        plan = SingularityPlan(centers=(a,))
        for (z, w) in ((0.4, 0.2j), (0.3 + 0.2j, -0.1 + 0.25j)):
            def integrand(t):
                kern = (1 - z * w) ** 2 / ((1 - np.conj(t) * z) ** 2 * (1 - t * w) ** 2)
                return np.log(np.abs(t - a)) * kern

            want = disk_integrate_singular(integrand, plan)
            assert complexified_eval(grid, z, w) == pytest.approx(want, abs=1e-8)


class TestNumericalRank:
    def test_single_product(self):
        assert numerical_rank(simple_grid([[0, 0], [0, 1.0]])).rank == 1

    def test_log_grid_rank_two(self):
        assert numerical_rank(simple_grid([[-0.5, 0], [0, 0.5]])).rank == 2

    def test_automorphism_product_rank_one(self):
        assert numerical_rank(product_grid(0.3, 1, 1)).rank == 1

    def test_constructed_ranks(self):
        for r in (1, 2, 3, 4):
            coeffs = np.zeros((10, 10), dtype=np.complex128)
            for i in range(r):
                coeffs[i, i] = 1.0
            assert numerical_rank(BidegreeSeries(coeffs)).rank == r

    def test_zero_input(self):
        with pytest.raises(ZeroInput):
            numerical_rank(BidegreeSeries.zero(4))

    def test_tolerance_domain(self):
        with pytest.raises(DomainError):
            numerical_rank(product_grid(0.3, 1, 1), tol_rel=2.0)

    def test_subadditivity(self, rng):
        for _ in range(10):
            a = product_grid(rng.uniform(0.1, 0.7), 1, 1)
            b = product_grid(rng.uniform(0.1, 0.7) * 1j, 1, 2)
            ra = numerical_rank(a).rank
            rb = numerical_rank(b).rank
            assert numerical_rank(a + b).rank <= ra + rb

    def test_report_serialization(self):
        report = numerical_rank(product_grid(0.3, 1, 1))
        doc = report.to_dict()
        assert doc["rank"] == 1
        assert doc["singular_values"][0] > 0


class TestCoefficientRows:
    def test_single_product(self):
        grid = simple_grid(np.pad([[0, 0], [0, 1.0]], ((0, 2), (0, 2))))
        rows = coefficient_rows(grid)
        assert rows[0, 0] == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(rows) > 1e-14) == 1

    def test_harmonic_gives_zero(self):
        coeffs = np.zeros((5, 5), dtype=np.complex128)
        coeffs[:, 0] = [1, 2, 3, 4, 5]
        coeffs[0, 1:] = [1, 1, 1, 1]
        assert np.max(np.abs(coefficient_rows(BidegreeSeries(coeffs)))) == 0

    def test_differentiation_weight(self):
        coeffs = np.zeros((4, 4), dtype=np.complex128)
        coeffs[2, 1] = 1.0  # z^2 conj(z)
        rows = coefficient_rows(BidegreeSeries(coeffs))
        assert rows[0, 1] == pytest.approx(2.0)

    def test_rank_bounded_by_grid_rank(self, rng):
        grid = log_atom_transform(0.4) + product_grid(-0.3j, 2, 1)
        r_grid = numerical_rank(grid).rank
        r_rows = numerical_rank(coefficient_rows(grid)[:30, :30]).rank
        assert r_rows <= r_grid


class TestLaplacianWeightedMonomial:
    def test_base_cases(self):
        lw = laplacian_weighted_monomial(0, 0)
        np.testing.assert_allclose(lw.coeffs, [[-2.0, 0], [0, 4.0]], atol=0)
        lw = laplacian_weighted_monomial(1, 0)
        np.testing.assert_allclose(
            lw.coeffs, [[0, 0], [-4.0, 0], [0, 6.0]], atol=0
        )

    def test_against_symbolic_differentiation(self):
        sympy = pytest.importorskip("sympy")
        z, w = sympy.symbols("z w")  # w stands for conj(z)
        for (k, l) in ((0, 0), (1, 0), (2, 3), (4, 1)):
            expr = sympy.expand(
                sympy.diff((1 - z * w) ** 2 * z ** k * w ** l, z, w)
            )
            got = laplacian_weighted_monomial(k, l).coeffs
            poly = sympy.Poly(expr, z, w)
            want = np.zeros_like(got)
            for (mz, mw), coeff in zip(poly.monoms(), poly.coeffs()):
                want[mz, mw] = complex(coeff)
            np.testing.assert_allclose(got, want, atol=0)

    def test_total_degree(self):
        for (k, l) in ((0, 0), (3, 2), (5, 5)):
            grid = laplacian_weighted_monomial(k, l).coeffs
            ms, ns = np.nonzero(grid)
            assert np.max(ms + ns) == k + l + 2


class TestMomentMatrix:
    def test_orientation_is_calibrated(self):
        assert calibrated_orientation() == "full"

    def test_harmonic_vanishes(self):
        u = Symbol(holo=PowerSeries([0, 0, 0, 1.0]), anti=PowerSeries([0, 0.5]))
        M = moment_matrix(u, 5, 5)
        assert np.max(np.abs(M.entries)) <= 1e-8

    def test_log_atom_node_ratio(self):
        # one log atom gives a rank-one matrix with geometric node structure
        u = Symbol(atoms=(Atom("log", 0.3, 1.0),))
        M = moment_matrix(u, 5, 5).entries
        ratios = M[1:, :] / M[:-1, :]
        np.testing.assert_allclose(ratios, 0.3, atol=1e-7)
        assert numerical_rank(M).rank == 1

    def test_two_log_atoms_rank_two(self):
        u = Symbol(atoms=(Atom("log", 0.3, 1.0), Atom("log", -0.2 + 0.5j, 1.0)))
        M = moment_matrix(u, 6, 6)
        assert numerical_rank(M.entries).rank == 2

    def test_rank_bound_per_center(self):
        u = Symbol(atoms=(
            Atom("log", 0.3, 1.0), Atom("pole", 0.3, 0.5), Atom("conjpole", 0.3, -0.25j),
            Atom("pole", -0.4j, 1.0),
        ))
        M = moment_matrix(u, 8, 8)
        assert numerical_rank(M.entries).rank <= 2 * 2

    def test_shift_minors_rank_one(self):
        u = Symbol(atoms=(Atom("log", 0.35 - 0.1j, 2.0),))
        M = moment_matrix(u, 5, 5).entries
        minors = M[1:, :-1] * M[:-1, 1:] - M[:-1, :-1] * M[1:, 1:]
        scale = np.abs(M[:-1, :-1] * M[1:, 1:])
        assert np.max(np.abs(minors) / np.maximum(scale, 1e-30)) <= 1e-8

    def test_cross_identity(self):
        # the central consistency check: moment entries from quadrature
        # match the derivative coefficients of the exact grid
        corpus = [
            Symbol(atoms=(Atom("log", 0.3, 1.0),)),
            Symbol(atoms=(Atom("pole", -0.2 + 0.4j, 1.0),)),
            Symbol(holo=PowerSeries([0.5, 1.0]), atoms=(Atom("conjpole", 0.45, 2.0),)),
        ]
        for u in corpus:
            quad = moment_matrix(u, 5, 5)
            exact = moment_matrix_from_grid(symbol_transform(u), 5, 5)
            assert np.max(np.abs(quad.entries - exact.entries)) <= 1e-6

    def test_grid_route_requires_truncation(self):
        with pytest.raises(DomainError):
            moment_matrix_from_grid(product_grid(0.3, 1, 1, 5), 8, 8)

    def test_serialization(self):
        M = moment_matrix(Symbol(atoms=(Atom("log", 0.2, 1.0),)), 2, 2)
        doc = M.to_dict()
        assert doc["kmax"] == 2 and doc["orientation"] == "full"
        assert len(doc["entries"]) == 3
