import numpy as np
import pytest

from berezin.core import BidegreeSeries, PowerSeries
from berezin.errors import (
    DegenerateNode,
    DomainError,
    IllConditioned,
    NoDiskDenominator,
    NotRankOne,
    PencilFailure,
)
from berezin.rank import MomentMatrix, moment_matrix, moment_matrix_from_grid, numerical_rank
from berezin.recovery import (
    decompose_form,
    decompose_node,
    factor_rank_one,
    fit_node_form,
    gauge_fix,
    recover_nodes,
)
from berezin.symbols import Atom, NodeForm, Symbol, canonicalize
from berezin.transform import node_form_transform, product_grid, symbol_transform

from conftest import random_form, rank_one_grid


def sorted_nodes(nodes):
    return sorted(nodes, key=lambda t: (complex(t[0]).real, complex(t[0]).imag))


class TestRecoverNodes:
    def test_single_log_atom_from_quadrature(self):
        u = Symbol(atoms=(Atom("log", 0.3, 1.0),))
        M = moment_matrix(u, 8, 8)
        est = recover_nodes(M, rank_bound=4)
        assert len(est.nodes) == 1
        assert abs(est.nodes[0] - 0.3) <= 1e-6

    def test_two_atoms_from_quadrature(self):
        u = Symbol(atoms=(Atom("log", 0.3, 1.0), Atom("log", -0.2 + 0.5j, 1.0)))
        M = moment_matrix(u, 8, 8)
        est = recover_nodes(M, rank_bound=5)
        assert len(est.nodes) == 2
        for target in (0.3, -0.2 + 0.5j):
            assert min(abs(n - target) for n in est.nodes) <= 1e-6

    def test_harmonic_gives_empty(self):
        u = Symbol(holo=PowerSeries([0, 0, 1.0]))
        M = moment_matrix(u, 6, 6)
        est = recover_nodes(M, rank_bound=4)
        assert est.nodes == ()
        assert est.residual <= 1e-7

    def test_confluent_pole_node(self):
        # a pole atom alone produces a defective eigenvalue pair
        u = Symbol(atoms=(Atom("pole", 0.4, 1.0),))
        M = moment_matrix(u, 8, 8)
        est = recover_nodes(M, rank_bound=5)
        assert len(est.nodes) == 1
        assert abs(est.nodes[0] - 0.4) <= 1e-6

    def test_rank_bound_validation(self):
        M = moment_matrix_from_grid(node_form_transform(random_form(np.random.default_rng(1), 1)), 8, 8)
        with pytest.raises(DomainError):
            recover_nodes(M, rank_bound=7)  # above 2*kmax/3
        with pytest.raises(DomainError):
            recover_nodes(M, rank_bound=0)

    def test_pencil_failure_outside_disk(self):
        k = np.arange(9, dtype=float)
        entries = np.outer(1.2 ** k, 0.5 ** k).astype(complex)
        with pytest.raises(PencilFailure):
            recover_nodes(MomentMatrix(entries=entries, orientation="full"), rank_bound=4)

    def test_close_nodes_rejected(self):
        k = np.arange(13, dtype=float)
        entries = (np.outer(0.30 ** k, np.conj(0.30) ** k)
                   + np.outer(0.33 ** k, np.conj(0.33) ** k)).astype(complex)
        with pytest.raises(IllConditioned):
            recover_nodes(MomentMatrix(entries=entries, orientation="full"), rank_bound=6)


class TestFitNodeForm:
    def test_pure_product(self):
        grid = product_grid(0.3, 1, 1)
        form, residual = fit_node_form(grid, [0.3])
        (a, c11, c21, c12) = form.nodes[0]
        assert abs(c11 - 1.0) <= 1e-8
        assert abs(c21) <= 1e-8 and abs(c12) <= 1e-8
        assert residual <= 1e-8
        assert float(np.max(np.abs(form.holo.coeffs))) <= 1e-8
        assert float(np.max(np.abs(form.anti.coeffs))) <= 1e-8

    def test_weighted_conjugate_product(self):
        grid = product_grid(0.4, 1, 2)
        form, residual = fit_node_form(grid, [0.4])
        (a, c11, c21, c12) = form.nodes[0]
        assert abs(c12 - 1.0) <= 1e-8
        assert abs(c11) <= 1e-8 and abs(c21) <= 1e-8
        assert residual <= 1e-8

    def test_pure_harmonic(self):
        target = Symbol(holo=PowerSeries([0, 1.0]), anti=PowerSeries([0, 0, 1.0]))
        grid = symbol_transform(target, 30)
        form, residual = fit_node_form(grid, [])
        assert residual <= 1e-12
        assert abs(form.holo.coeffs[1] - 1.0) <= 1e-12
        assert abs(form.anti.coeffs[2] - 1.0) <= 1e-12

    def test_close_nodes_ill_conditioned(self):
        grid = product_grid(0.3, 1, 1, 40)
        with pytest.raises(IllConditioned):
            fit_node_form(grid, [0.3, 0.3 + 1e-6], truncation=40)

    def test_duplicate_nodes_rejected(self):
        with pytest.raises(DomainError):
            fit_node_form(product_grid(0.3, 1, 1, 20), [0.3, 0.3])


class TestRoundTrip:
    def test_forms_round_trip(self, rng):
        for n in (1, 2, 3):
            form = random_form(rng, n_nodes=n)
            grid = node_form_transform(form)
            M = moment_matrix_from_grid(grid, 12, 12)
            est = recover_nodes(M, rank_bound=8)
            assert est.iterations <= 50
            fitted, residual = fit_node_form(grid, est.nodes)
            assert residual <= 1e-7
            got = sorted_nodes(fitted.nodes)
            want = sorted_nodes(form.nodes)
            assert len(got) == len(want)
            for (a1, d1, e1, f1), (a0, d0, e0, f0) in zip(got, want):
                assert abs(a1 - a0) <= 1e-6
                assert abs(d1 - d0) <= 1e-6
                assert abs(e1 - e0) <= 1e-6
                assert abs(f1 - f0) <= 1e-6

    def test_four_nodes_with_wider_moments(self, rng):
        from conftest import random_unit

        nodes = []
        while len(nodes) < 4:
            a = complex(rng.uniform(0, 0.75) * np.exp(2j * np.pi * rng.uniform()))
            if all(abs(a - b) >= 0.25 for b in nodes):
                nodes.append(a)
        form = NodeForm(nodes=tuple(
            (a, random_unit(rng), random_unit(rng), random_unit(rng)) for a in nodes
        ))
        grid = node_form_transform(form)
        est = recover_nodes(moment_matrix_from_grid(grid, 16, 16), rank_bound=10)
        assert len(est.nodes) == 4
        for a in nodes:
            assert min(abs(b - a) for b in est.nodes) <= 1e-6

    def test_node_at_origin(self):
        form = NodeForm(nodes=((0.0, 1.0, 0.4, -0.3j), (0.45, 0.8, 0.2j, 0.5)))
        grid = node_form_transform(form)
        est = recover_nodes(moment_matrix_from_grid(grid, 12, 12), rank_bound=8)
        assert len(est.nodes) == 2
        assert min(abs(n) for n in est.nodes) <= 1e-6
        assert min(abs(n - 0.45) for n in est.nodes) <= 1e-6
        fitted, residual = fit_node_form(grid, est.nodes)
        assert residual <= 1e-7

    def test_sparse_coefficient_patterns(self, rng):
        # every nonzero on/off pattern of the three node constants must
        # recover; patterns with only one weighted product leave a confluent
        # rank-one moment block, the case the augmented pencil exists for
        import itertools

        from conftest import random_nodes, random_unit

        patterns = [p for p in itertools.product((0, 1), repeat=3) if any(p)]
        for trial in range(8):
            centers = random_nodes(rng, int(rng.integers(1, 4)))
            nodes = []
            for a in centers:
                pat = patterns[int(rng.integers(len(patterns)))]
                nodes.append((a, random_unit(rng) * pat[0],
                              random_unit(rng) * pat[1], random_unit(rng) * pat[2]))
            form = NodeForm(nodes=tuple(nodes))
            grid = node_form_transform(form)
            est = recover_nodes(moment_matrix_from_grid(grid, 12, 12), rank_bound=8)
            assert len(est.nodes) == len(centers)
            for a in centers:
                assert min(abs(b - a) for b in est.nodes) <= 1e-6

    def test_symbol_level_round_trip_via_quadrature(self):
        # form -> canonical symbol (atoms) -> quadrature moments -> nodes
        form = NodeForm(nodes=((0.35, 1.0, 0.4j, -0.6), (-0.3j, 0.8, 0.0, 0.5)))
        u = form.to_symbol()
        M = moment_matrix(u, 10, 10)
        est = recover_nodes(M, rank_bound=6)
        assert len(est.nodes) == 2
        for (a, _, _, _) in form.nodes:
            assert min(abs(n - a) for n in est.nodes) <= 1e-6

    def test_harmonic_symbol_recovers_no_structure(self):
        # transforms of harmonic symbols carry no nodes: the moment matrix
        # is numerically zero and the fit returns the harmonic part alone
        u = Symbol(holo=PowerSeries([0.3, 0, 1.0]), anti=PowerSeries([0, -0.5j]))
        grid = symbol_transform(u, 40)
        M = moment_matrix_from_grid(grid, 10, 10)
        est = recover_nodes(M, rank_bound=6)
        assert est.nodes == ()
        form, residual = fit_node_form(grid, est.nodes)
        assert residual <= 1e-10
        assert form.nodes == ()


class TestFactorRankOne:
    def test_simple_product(self):
        fac = factor_rank_one(product_grid(0.3, 1, 1))
        assert abs(fac.a - 0.3) <= 1e-8
        p, q = gauge_fix([0, 1.0, 0], [0, 1.0, 0])
        np.testing.assert_allclose(fac.p, p, atol=1e-7)
        np.testing.assert_allclose(fac.q, q, atol=1e-7)

    def test_degree_three_product(self):
        fac = factor_rank_one(product_grid(0.4, 1, 2))
        assert abs(fac.a - 0.4) <= 1e-8
        assert np.flatnonzero(np.abs(fac.p) > 1e-9)[-1] == 1
        assert np.flatnonzero(np.abs(fac.q) > 1e-9)[-1] == 2

    def test_origin_product(self):
        fac = factor_rank_one(product_grid(0.0, 1, 1))
        assert abs(fac.a) <= 1e-10

    def test_random_cases(self, rng):
        from conftest import random_unit

        for _ in range(6):
            a = complex(rng.uniform(0, 0.7) * np.exp(2j * np.pi * rng.uniform()))
            dp, dq = ((1, 1), (1, 2), (2, 1))[int(rng.integers(3))]
            p = np.zeros(3, dtype=np.complex128)
            q = np.zeros(3, dtype=np.complex128)
            for j in range(dp + 1):
                p[j] = random_unit(rng)
            for j in range(dq + 1):
                q[j] = random_unit(rng)
            fac = factor_rank_one(rank_one_grid(a, p, q))
            assert abs(fac.a - a) <= 1e-8
            pg, qg = gauge_fix(p, q)
            assert np.max(np.abs(fac.p - pg)) <= 1e-7
            assert np.max(np.abs(fac.q - qg)) <= 1e-7

    def test_gauge_freedom_invisible(self, rng):
        a = 0.35 - 0.2j
        p = np.array([0.5, 1.0, 0.0], dtype=np.complex128)
        q = np.array([0.0, -0.7j, 0.3], dtype=np.complex128)
        mu = 1.7 * np.exp(0.9j)
        plain = factor_rank_one(rank_one_grid(a, p, q))
        scaled = factor_rank_one(rank_one_grid(a, mu * p, q / np.conj(mu)))
        np.testing.assert_allclose(plain.p, scaled.p, atol=1e-9)
        np.testing.assert_allclose(plain.q, scaled.q, atol=1e-9)

    def test_not_rank_one(self):
        with pytest.raises(NotRankOne):
            factor_rank_one(product_grid(0.3, 1, 1) + product_grid(-0.4, 1, 1))

    def test_degree_violation(self):
        grid = rank_one_grid(0.3, [0, 0, 1.0], [0, 0, 1.0])
        with pytest.raises(NoDiskDenominator):
            factor_rank_one(grid)

    def test_constant_factor_rejected(self):
        grid = BidegreeSeries.outer(
            PowerSeries(np.r_[1.0, np.zeros(40)]),
            PowerSeries(0.5 ** np.arange(41)),
        )
        with pytest.raises(NoDiskDenominator):
            factor_rank_one(grid)

    def test_near_boundary_centers(self):
        for a_mod in (0.85, 0.9, 0.94):
            a = a_mod * np.exp(0.8j)
            fac = factor_rank_one(rank_one_grid(a, [0.4, 1.0, 0], [0, 0.7, -0.5]))
            assert abs(fac.a - a) <= 1e-8

    def test_gauge_fix_canonical(self, rng):
        p = np.array([0.3 - 1j, 0.8, 0.0])
        q = np.array([0.2, -0.9 + 0.1j, 0.0])
        mu = 2.3 * np.exp(1.2j)
        p1, q1 = gauge_fix(p, q)
        p2, q2 = gauge_fix(mu * p, q / np.conj(mu))
        np.testing.assert_allclose(p1, p2, atol=1e-12)
        np.testing.assert_allclose(q1, q2, atol=1e-12)
        lead = p1[np.flatnonzero(np.abs(p1) > 1e-12)[0]]
        assert abs(lead.imag) <= 1e-14 and lead.real > 0


class TestDecomposeNode:
    def test_both_higher_terms(self):
        pieces = decompose_node(0.3, 0.0, 1.0, 1.0)
        assert len(pieces) == 2
        assert [(p.f.pole_order(), p.g.pole_order()) for p in pieces] == [(2, 1), (1, 2)]

    def test_single_piece_cases(self):
        assert len(decompose_node(0.3, 1.0, 1.0, 0.0)) == 1
        assert len(decompose_node(0.3, 1.0, 0.0, 1.0)) == 1
        assert len(decompose_node(0.3, 1.0, 0.0, 0.0)) == 1

    def test_pieces_match_products(self, rng):
        for (c11, c21, c12) in ((1.0, 0.5j, -0.7), (1.0, 0.0, 0.0), (0.2, 0.9, 0.0), (0.0, 0.0, 1.0)):
            a = complex(rng.uniform(0.1, 0.6) * np.exp(2j * np.pi * rng.uniform()))
            pieces = decompose_node(a, c11, c21, c12)
            total = None
            for piece in pieces:
                got = symbol_transform(piece.symbol, 60)
                want = BidegreeSeries.outer(piece.f.series(60), piece.g.series(60))
                assert got.max_coeff_diff(want) <= 1e-8
                assert numerical_rank(want).rank == 1
                total = got if total is None else total + got
            direct = (product_grid(a, 1, 1, 60) * c11 + product_grid(a, 2, 1, 60) * c21
                      + product_grid(a, 1, 2, 60) * c12)
            assert total.max_coeff_diff(direct) <= 1e-8

    def test_degenerate(self):
        with pytest.raises(DegenerateNode):
            decompose_node(0.3, 0.0, 0.0, 0.0)


class TestDecomposeForm:
    def _total_grid(self, pieces, remainder, truncation=80):
        total = None
        for piece in pieces:
            part = symbol_transform(piece.symbol, truncation)
            total = part if total is None else total + part
        if remainder is not None:
            part = symbol_transform(remainder, truncation)
            total = part if total is None else total + part
        return total

    def test_single_node_all_constants(self):
        form = NodeForm(nodes=((0.3, 1.0, 1.0, 1.0),))
        pieces, remainder, _ = decompose_form(form)
        assert len(pieces) == 2
        assert remainder is None
        total = self._total_grid(pieces, remainder)
        assert total.max_coeff_diff(node_form_transform(form)) <= 1e-7

    def test_absorbable_anti_part(self):
        base = NodeForm(nodes=((0.3, 1.0, 0.5, -0.25j),))
        base_pieces, _, _ = decompose_form(base)
        g1 = base_pieces[0].g.series(40).coeffs
        mu = 0.7 - 0.2j
        anti = g1 * mu
        anti[0] = 0.0
        form = NodeForm(anti=PowerSeries(anti), nodes=base.nodes)
        pieces, remainder, info = decompose_form(form)
        assert info["anti_absorbed"]
        assert remainder is None
        for piece in pieces:
            assert numerical_rank(symbol_transform(piece.symbol, 60)).rank == 1
        total = self._total_grid(pieces, remainder)
        assert total.max_coeff_diff(node_form_transform(form)) <= 1e-7

    def test_generic_anti_part_left_as_remainder(self):
        anti = np.zeros(6, dtype=np.complex128)
        anti[5] = 1.0
        form = NodeForm(anti=PowerSeries(anti), nodes=((0.3, 1.0, 0.5, 0.0),))
        pieces, remainder, info = decompose_form(form)
        assert not info["anti_absorbed"]
        assert remainder is not None
        assert remainder.is_harmonic()
        total = self._total_grid(pieces, remainder)
        assert total.max_coeff_diff(node_form_transform(form)) <= 1e-7

    def test_random_forms(self, rng):
        for _ in range(4):
            form = random_form(rng, n_nodes=int(rng.integers(1, 3)))
            pieces, remainder, _ = decompose_form(form)
            for piece in pieces:
                assert numerical_rank(symbol_transform(piece.symbol, 60)).rank == 1
            total = self._total_grid(pieces, remainder)
            assert total.max_coeff_diff(node_form_transform(form)) <= 1e-7

    def test_corollary_style_forward_check(self):
        # a fitted form with negligible node constants comes from a symbol
        # with negligible atom coefficients
        grid = symbol_transform(Symbol(holo=PowerSeries([0, 1.0])), 40)
        form, _ = fit_node_form(grid, [0.3])
        (a, c11, c21, c12) = form.nodes[0]
        assert max(abs(c11), abs(c21), abs(c12)) <= 1e-8
        sym = canonicalize(form.to_symbol(40))
        assert all(abs(atom.coeff) <= 1e-7 for atom in sym.atoms)
