"""Quadrature over the unit disk with the normalized area measure.

The measure convention throughout is ``dA = dx dy / pi`` so the disk has
measure one. The base rule is a polar tensor product: Gauss-Legendre in
``t = r^2`` (which makes the radial weight trivial) and uniform angles
(trapezoid, spectrally accurate for periodic integrands).

Integrands with log or first-order-pole singularities at declared interior
centers are handled by a partition of unity: a radial cutoff around each
center routes the singular mass to a local polar patch graded
geometrically (ratio 1/2) toward the center, while the complement is
integrated by a composite version of the global rule whose radial panels
are aligned to the cutoff annuli and whose angular count resolves them.
The resulting node/weight set is fixed per plan, so one set serves a whole
family of integrands.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil, comb

import numpy as np

from berezin import _kernels
from berezin.core import PowerSeries
from berezin.errors import DomainError, NonConvergence, OutOfRange
from berezin.symbols import Symbol

#: Default rule sizes: 64 radial Gauss points, 256 uniform angles.
DEFAULT_RADIAL = 64
DEFAULT_ANGULAR = 256

#: Radial cutoff profile: identically 1 up to this fraction of the patch
#: radius, then a degree-19 (C^9) polynomial step down to 0 at the radius.
_TRANSITION_START = 0.45

#: Target number of angular points across the cutoff transition at the
#: outermost radius; drives the angular count of the composite global rule.
_POINTS_ACROSS = 20

#: Hard cap on the composite angular count (keeps pathological plans finite).
_MAX_ANGULAR = 8192

_SMOOTH_ORDER = 9  # C^9 smoothstep


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss(n: int, lo: float, hi: float):
    x, w = _leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


@lru_cache(maxsize=None)
def _smoothstep_coeffs(order: int) -> tuple[float, ...]:
    return tuple(
        comb(order + k, k) * comb(2 * order + 1, order - k) * (-1.0) ** k
        for k in range(order + 1)
    )


def _smoothstep(x: np.ndarray) -> np.ndarray:
    """C^9 monotone step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    acc = np.zeros_like(x)
    for c in reversed(_smoothstep_coeffs(_SMOOTH_ORDER)):
        acc = acc * x + c
    return acc * x ** (_SMOOTH_ORDER + 1)


def _cutoff(s: np.ndarray, radius: float) -> np.ndarray:
    """Radial partition-of-unity profile: 1 near the center, 0 beyond radius."""
    lo = _TRANSITION_START * radius
    return 1.0 - _smoothstep((s - lo) / (radius - lo))


@dataclass(frozen=True)
class QuadratureRule:
    """Polar tensor rule: Gauss-Legendre on t = r^2 in (0,1) x uniform angles."""

    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angular_count: int

    @classmethod
    def build(cls, radial: int = DEFAULT_RADIAL, angular: int = DEFAULT_ANGULAR) -> "QuadratureRule":
        if radial < 8 or angular < 8:
            raise DomainError("rule sizes must be >= 8")
        t, w = _gauss(int(radial), 0.0, 1.0)
        t.setflags(write=False)
        w.setflags(write=False)
        return cls(radial_nodes=t, radial_weights=w, angular_count=int(angular))

    @property
    def radial_count(self) -> int:
        return len(self.radial_nodes)

    def is_default_size(self) -> bool:
        return self.radial_count <= DEFAULT_RADIAL and self.angular_count <= DEFAULT_ANGULAR

    def nodes(self):
        """Node array (complex) and weight array for the plain disk rule."""
        theta = 2.0 * np.pi * np.arange(self.angular_count) / self.angular_count
        r = np.sqrt(self.radial_nodes)
        z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
        w = np.repeat(self.radial_weights / self.angular_count, self.angular_count)
        return z, w


@dataclass(frozen=True)
class SingularityPlan:
    """Declared singular centers with the grading parameters of the patches.

    ``depth`` is the number of geometric (ratio 1/2) radial panels toward
    each center; ``patch_gauss`` and ``patch_angular`` size each panel.
    """

    centers: tuple[complex, ...] = ()
    depth: int = 12
    patch_gauss: int = 16
    patch_angular: int = 128

    def __post_init__(self):
        centers = tuple(complex(c) for c in self.centers)
        if self.depth < 0:
            raise DomainError("grading depth must be >= 0")
        for c in centers:
            if abs(c) >= 0.97:
                raise DomainError(f"singular center too close to the boundary: |{c}|={abs(c):.4f}")
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                if abs(centers[i] - centers[j]) < 1e-3:
                    raise DomainError("singular centers closer than 1e-3 are not resolvable")
        object.__setattr__(self, "centers", centers)


def plan_for_symbol(s: Symbol, **kwargs) -> SingularityPlan:
    """Plan whose centers are the distinct atom centers of ``s``."""
    centers: list[complex] = []
    for atom in s.atoms:
        if all(abs(atom.center - c) > 1e-12 for c in centers):
            centers.append(atom.center)
    return SingularityPlan(centers=tuple(centers), **kwargs)


def _patch_radii(centers) -> np.ndarray:
    radii = []
    for i, c in enumerate(centers):
        sep = min(
            (abs(c - d) for j, d in enumerate(centers) if j != i),
            default=np.inf,
        )
        radii.append(min(0.4 * sep, 0.4 * (1.0 - abs(c)), 0.35))
    return np.asarray(radii)


def _composite_global(centers, radii, rule: QuadratureRule, *, gauss_order: int,
                      points_across: int):
    """Global polar nodes/weights with panels aligned to the cutoff annuli."""
    # angular count resolving the narrowest transition at the outer radius
    angular = rule.angular_count
    if len(centers):
        w_min = float(np.min((1.0 - _TRANSITION_START) * radii))
        need = ceil(points_across * 2.0 * np.pi * 0.95 / w_min)
        angular = min(_MAX_ANGULAR, max(angular, need))
        angular = 32 * ceil(angular / 32)

    # radial breakpoints in t = r^2 at the cutoff joins of every patch
    cuts = {0.0, 1.0}
    for c, d in zip(centers, radii):
        for s in (abs(c) - d, abs(c) - _TRANSITION_START * d,
                  abs(c) + _TRANSITION_START * d, abs(c) + d):
            if 1e-9 < s < 1.0 - 1e-9:
                cuts.add(s * s)
    edges = sorted(cuts)

    def max_width(lo, hi):
        width = 0.12
        for c, d in zip(centers, radii):
            zone_lo, zone_hi = (abs(c) - 1.3 * d) ** 2, (abs(c) + 1.3 * d) ** 2
            if hi > zone_lo and lo < zone_hi:
                width = min(width, d * max(abs(c), 0.25))
        return width

    t_nodes, t_weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pieces = max(1, ceil((hi - lo) / max_width(lo, hi)))
        sub = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(sub[:-1], sub[1:]):
            x, w = _gauss(gauss_order, a, b)
            t_nodes.append(x)
            t_weights.append(w)
    t = np.concatenate(t_nodes)
    wt = np.concatenate(t_weights)

    theta = 2.0 * np.pi * np.arange(angular) / angular
    z = (np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w = np.repeat(wt / angular, angular)
    for c, d in zip(centers, radii):
        w = w * (1.0 - _cutoff(np.abs(z - c), d))
    keep = w != 0.0
    return z[keep], w[keep]


def _local_patch(center, radius, *, depth, gauss_order, angular):
    """Graded polar patch around one center carrying the cutoff weight."""
    inner = _TRANSITION_START * radius
    edges = [radius, inner]
    for j in range(1, depth):
        edges.append(inner * 0.5 ** j)
    edges.append(0.0)
    s_nodes, s_weights = [], []
    for hi, lo in zip(edges[:-1], edges[1:]):
        x, w = _gauss(gauss_order, lo, hi)
        s_nodes.append(x)
        s_weights.append(w)
    s = np.concatenate(s_nodes)
    ws = np.concatenate(s_weights) * s * _cutoff(s, radius)

    psi = 2.0 * np.pi * np.arange(angular) / angular
    z = (center + s[:, None] * np.exp(1j * psi)[None, :]).ravel()
    w = np.repeat(ws * 2.0 / angular, angular)
    return z, w


@lru_cache(maxsize=8)
def _singular_nodes_cached(centers, depth, patch_gauss, patch_angular,
                           radial, angular, coarse):
    rule = QuadratureRule.build(radial, angular)
    if not centers:
        if not coarse:
            return rule.nodes()
        return QuadratureRule.build(
            max(8, (3 * radial) // 4), max(8, (3 * angular) // 4)
        ).nodes()
    radii = _patch_radii(centers)
    if coarse:
        gz, gw = _composite_global(centers, radii, rule, gauss_order=14, points_across=14)
        depth, pg, pa = max(depth - 3, 4), max(patch_gauss - 4, 8), 96
    else:
        gz, gw = _composite_global(centers, radii, rule, gauss_order=20,
                                   points_across=_POINTS_ACROSS)
        pg, pa = patch_gauss, patch_angular
    parts_z, parts_w = [gz], [gw]
    for c, d in zip(centers, radii):
        lz, lw = _local_patch(c, d, depth=depth, gauss_order=pg, angular=pa)
        parts_z.append(lz)
        parts_w.append(lw)
    z, w = np.concatenate(parts_z), np.concatenate(parts_w)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def singular_nodes(plan: SingularityPlan, rule: QuadratureRule, *, coarse: bool = False):
    """Fixed node/weight set for the plan; ``coarse`` builds the check variant.

    Cached per (plan, rule size) since construction is pure.
    """
    return _singular_nodes_cached(
        plan.centers, plan.depth, plan.patch_gauss, plan.patch_angular,
        rule.radial_count, rule.angular_count, bool(coarse),
    )


def disk_integrate(f, rule: QuadratureRule | None = None) -> complex:
    """Integral of a smooth integrand over the disk with dA = dx dy / pi.

    Exact (to roundoff) for bidegree polynomials of radial degree at most
    ``2 * radial - 1`` and angular degree at most ``angular - 2``.
    """
    rule = rule or QuadratureRule.build()
    z, w = rule.nodes()
    return complex(np.sum(w * np.asarray(f(z), dtype=np.complex128)))


def disk_integrate_singular(f, plan: SingularityPlan, rule: QuadratureRule | None = None,
                            *, check: bool = True) -> complex:
    """Integral of an integrand with log/simple-pole singularities at the
    plan's centers.

    With ``check=True`` the value is recomputed on an independently coarser
    node set; a discrepancy above 1e-6 raises NonConvergence.
    """
    rule = rule or QuadratureRule.build()
    z, w = singular_nodes(plan, rule)
    fine = complex(np.sum(w * np.asarray(f(z), dtype=np.complex128)))
    if check:
        z2, w2 = singular_nodes(plan, rule, coarse=True)
        other = complex(np.sum(w2 * np.asarray(f(z2), dtype=np.complex128)))
        if abs(fine - other) > 1e-6:
            raise NonConvergence(
                f"singular quadrature refinement mismatch {abs(fine - other):.3e}"
            )
    return fine


# ---------------------------------------------------------------------------
# Numeric Berezin transform
# ---------------------------------------------------------------------------

#: Node-chunk length for kernel contractions; bounds the transient kernel
#: matrix at len(zs) * chunk doubles.
_KERNEL_CHUNK = 1 << 18


def _weighted_kernel_sum(nodes: np.ndarray, values: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """``sum_n values[n] * kernel(nodes[n], z)`` for each z, chunked over
    nodes in a fixed order (deterministic, bounded memory)."""
    out = np.zeros(len(zs), dtype=np.complex128)
    for start in range(0, len(nodes), _KERNEL_CHUNK):
        stop = start + _KERNEL_CHUNK
        out += _kernels.kernel_matrix(nodes[start:stop], zs) @ values[start:stop]
    return out


def _check_eval_points(zs: np.ndarray, rule: QuadratureRule):
    mags = np.abs(zs)
    if np.any(mags >= 0.999):
        raise OutOfRange("numeric transform needs |z| < 0.999")
    if np.any(mags > 0.9 + 1e-12) and rule.is_default_size():
        raise OutOfRange(
            "|z| > 0.9 exceeds the default rule's resolution; pass a denser rule"
        )


def _harmonic_part_values(holo: PowerSeries, anti: PowerSeries, nodes: np.ndarray) -> np.ndarray:
    return _kernels.poly_eval_many(holo.coeffs, nodes) + np.conj(
        _kernels.poly_eval_many(anti.coeffs, nodes)
    )


def berezin_numeric(u, z, rule: QuadratureRule | None = None,
                    plan: SingularityPlan | None = None, *, check: bool = True):
    """Numeric Berezin transform ``B(u)(z)`` by quadrature.

    ``u`` may be a :class:`Symbol` (atoms integrate on per-center singular
    node sets, the harmonic part on the plain rule) or any callable mapping
    a node array to values (singularities must be declared via ``plan``).
    ``z`` may be a scalar or an array; the result matches its shape.
    """
    rule = rule or QuadratureRule.build()
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    _check_eval_points(zs, rule)

    out = np.zeros(len(zs), dtype=np.complex128)
    if isinstance(u, Symbol):
        base_z, base_w = rule.nodes()
        hv = _harmonic_part_values(u.holo, u.anti, base_z) * base_w
        out += _weighted_kernel_sum(base_z, hv, zs)
        for atom in u.atoms:
            single = SingularityPlan(
                centers=(atom.center,),
                depth=plan.depth if plan else 12,
                patch_gauss=plan.patch_gauss if plan else 16,
                patch_angular=plan.patch_angular if plan else 128,
            )
            nz, nw = singular_nodes(single, rule)
            av = np.asarray(atom.eval(nz), dtype=np.complex128) * nw
            vals = _weighted_kernel_sum(nz, av, zs)
            if check:
                cz, cw = singular_nodes(single, rule, coarse=True)
                cv = np.asarray(atom.eval(cz), dtype=np.complex128) * cw
                cvals = _weighted_kernel_sum(cz, cv, zs)
                delta = float(np.max(np.abs(vals - cvals)))
                if delta > 1e-6:
                    raise NonConvergence(
                        f"numeric transform refinement mismatch {delta:.3e}"
                    )
            out += vals
    else:
        use_plan = plan if plan is not None else SingularityPlan()
        nz, nw = singular_nodes(use_plan, rule)
        uv = np.asarray(u(nz), dtype=np.complex128) * nw
        vals = _weighted_kernel_sum(nz, uv, zs)
        if check and use_plan.centers:
            cz, cw = singular_nodes(use_plan, rule, coarse=True)
            cv = np.asarray(u(cz), dtype=np.complex128) * cw
            cvals = _weighted_kernel_sum(cz, cv, zs)
            delta = float(np.max(np.abs(vals - cvals)))
            if delta > 1e-6:
                raise NonConvergence(
                    f"numeric transform refinement mismatch {delta:.3e}"
                )
        out += vals

    zarr = np.asarray(z, dtype=np.complex128)
    return complex(out[0]) if zarr.ndim == 0 else out.reshape(zarr.shape)
