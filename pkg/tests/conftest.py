import numpy as np
import pytest

from berezin.core import BidegreeSeries, PowerSeries, mobius_power_series
from berezin.symbols import Atom, NodeForm, Symbol


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def poly_phi_series(coeffs, a, truncation=80):
    """Series of c0 + c1 phi_a + c2 phi_a^2."""
    out = np.zeros(truncation + 1, dtype=np.complex128)
    out[0] = coeffs[0]
    for j in (1, 2):
        if len(coeffs) > j and coeffs[j] != 0:
            out += coeffs[j] * mobius_power_series(a, j, truncation).coeffs
    return PowerSeries(out)


def rank_one_grid(a, p, q, truncation=80):
    """Grid of p(phi_a) * conj(q(phi_a))."""
    return BidegreeSeries.outer(
        poly_phi_series(p, a, truncation), poly_phi_series(q, a, truncation)
    )


def random_unit(rng, lo=0.3, hi=1.5):
    return complex(rng.uniform(lo, hi) * np.exp(2j * np.pi * rng.uniform()))


def random_nodes(rng, n, separation=0.2, max_mod=0.7):
    nodes = []
    while len(nodes) < n:
        a = complex(rng.uniform(0, max_mod) * np.exp(2j * np.pi * rng.uniform()))
        if all(abs(a - b) >= separation for b in nodes):
            nodes.append(a)
    return nodes


def random_form(rng, n_nodes=None, harmonic_degree=4, max_mod=0.7):
    n = int(rng.integers(1, 4)) if n_nodes is None else n_nodes
    nodes = tuple(
        (a, random_unit(rng), random_unit(rng), random_unit(rng))
        for a in random_nodes(rng, n, max_mod=max_mod)
    )
    holo = 0.5 * (rng.standard_normal(harmonic_degree + 1)
                  + 1j * rng.standard_normal(harmonic_degree + 1))
    anti = 0.5 * (rng.standard_normal(harmonic_degree + 1)
                  + 1j * rng.standard_normal(harmonic_degree + 1))
    anti[0] = 0.0
    return NodeForm(holo=PowerSeries(holo), anti=PowerSeries(anti), nodes=nodes)


def conjugated_symbol(s: Symbol) -> Symbol:
    """Symbol of the pointwise complex conjugate function.

    conj(K + conj(L) + atoms) = L + conj(K) + conjugated atoms; the caller
    canonicalizes if the new anti part needs its constant shifted out.
    """
    flipped = {"log": "log", "pole": "conjpole", "conjpole": "pole"}
    atoms = tuple(
        Atom(flipped[a.kind], a.center, np.conj(a.coeff)) for a in s.atoms
    )
    return Symbol(holo=s.anti, anti=s.holo, atoms=atoms)
