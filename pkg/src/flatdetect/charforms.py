"""Exact exterior algebra over Q, grid Chern-Weil, and winding numbers.

MultiForm is an element of the rational exterior algebra on degree-1
generators of two kinds: z-labels (base/group directions) and x-labels
(parameter directions).  Monomials are stored canonically with all z's
before all x's, each kind sorted by index; the sign of bringing a product
into that order is absorbed into the coefficient.

Sign conventions (the global dictionary reported alongside results):
the exact pipeline normalizes the rank-1 character bundle on the 2-torus to
character 1 + z^x with coefficient +1; the numeric pipeline reports
c1 = (i/2pi) tr F, which evaluates to -1 on the same bundle.  Cross checks
compare absolute values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

# Label = (kind, index), kind in {"z", "x"}, index >= 1.
Label = tuple[str, int]

SIGN_CONVENTIONS = {
    "exact": "character of the rank-1 torus character bundle normalized to 1 + z1^x1",
    "numeric": "first Chern number c1 = (i/2pi) * integral of tr F (midpoint rule)",
    "relation": "numeric c1 = -1 times the exact z^x coefficient on the 2-torus",
}

INTEGRALITY_TOL = 1e-6


class IntegralityError(ValueError):
    """A numerically integrated Chern number was too far from an integer."""

    def __init__(self, value: complex, residual: float):
        super().__init__(f"non-integral Chern number {value} (residual {residual:.3g})")
        self.value = value
        self.residual = residual


class UnderSampledLoopError(ValueError):
    """Adjacent determinant arguments jumped by >= pi; refine the sampling."""


def _label_key(lab: Label):
    return (0 if lab[0] == "z" else 1, lab[1])


def _check_label(lab: Label):
    kind, idx = lab
    if kind not in ("z", "x") or idx < 1:
        raise ValueError(f"bad label {lab!r}")


def _merge_sign(a: tuple[Label, ...], b: tuple[Label, ...]):
    """Merge two canonical monomials; returns (merged, sign) or None if a
    generator repeats (the product is zero)."""
    out: list[Label] = []
    i = j = 0
    inversions = 0
    while i < len(a) and j < len(b):
        ka, kb = _label_key(a[i]), _label_key(b[j])
        if ka == kb:
            return None
        if ka < kb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
            inversions += len(a) - i
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), (-1 if inversions % 2 else 1)


def _canonical(labels: Iterable[Label]):
    """Sort arbitrary labels into canonical order; returns (monomial, sign) or
    None when a label repeats."""
    labels = list(labels)
    seen = set()
    for lab in labels:
        _check_label(lab)
        if lab in seen:
            return None
        seen.add(lab)
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(labels)):
        j = i
        while j > 0 and _label_key(labels[j - 1]) > _label_key(labels[j]):
            labels[j - 1], labels[j] = labels[j], labels[j - 1]
            sign = -sign
            j -= 1
    return tuple(labels), sign


class MultiForm:
    """Exterior-algebra element with exact Fraction coefficients."""

    __slots__ = ("_terms", "universe")

    def __init__(self, terms=None, universe: str | None = None):
        store: dict[tuple[Label, ...], Fraction] = {}
        for labels, coeff in (terms or {}).items():
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            canon = _canonical(labels)
            if canon is None:
                continue
            mono, sign = canon
            c = store.get(mono, Fraction(0)) + sign * coeff
            if c:
                store[mono] = c
            elif mono in store:
                del store[mono]
        self._terms = store
        self.universe = universe

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c, universe=None) -> "MultiForm":
        return cls({(): Fraction(c)}, universe)

    @classmethod
    def generator(cls, kind: str, index: int, universe=None) -> "MultiForm":
        _check_label((kind, index))
        return cls({((kind, index),): Fraction(1)}, universe)

    # -- queries -----------------------------------------------------------

    def terms(self):
        """Sorted (monomial, coefficient) pairs; deterministic order."""
        return sorted(
            self._terms.items(), key=lambda kv: (len(kv[0]), [_label_key(l) for l in kv[0]])
        )

    def coefficient(self, labels: Iterable[Label]) -> Fraction:
        canon = _canonical(labels)
        if canon is None:
            return Fraction(0)
        mono, sign = canon
        return sign * self._terms.get(mono, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def degree_part(self, d: int) -> "MultiForm":
        return MultiForm(
            {m: c for m, c in self._terms.items() if len(m) == d}, self.universe
        )

    def max_degree(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return MultiForm(terms, _join_universe(self, other))

    __radd__ = __add__

    def __neg__(self):
        return MultiForm({m: -c for m, c in self._terms.items()}, self.universe)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return MultiForm(
                {m: c * Fraction(other) for m, c in self._terms.items()}, self.universe
            )
        other = _coerce(other)
        uni = _join_universe(self, other)
        terms: dict[tuple[Label, ...], Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                merged = _merge_sign(ma, mb)
                if merged is None:
                    continue
                mono, sign = merged
                c = terms.get(mono, Fraction(0)) + sign * ca * cb
                if c:
                    terms[mono] = c
                elif mono in terms:
                    del terms[mono]
        return MultiForm(terms, uni)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return _coerce(other) * self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiForm.constant(other)
        if not isinstance(other, MultiForm):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.terms():
            body = "^".join(f"{k}{i}" for k, i in mono)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- structural operations ----------------------------------------------

    def shift(self, z_offset: int = 0, x_offset: int = 0) -> "MultiForm":
        """Translate label indices (disjointifying universes before a product)."""
        terms = {}
        for mono, c in self._terms.items():
            new = tuple(
                (k, i + (z_offset if k == "z" else x_offset)) for k, i in mono
            )
            terms[new] = c
        return MultiForm(terms, self.universe)

    def restrict_x(self, keep: Iterable[int]) -> "MultiForm":
        """Restriction to a parameter sub-torus: drop terms using other x-labels."""
        keep = set(keep)
        return MultiForm(
            {
                m: c
                for m, c in self._terms.items()
                if all(k != "x" or i in keep for k, i in m)
            },
            self.universe,
        )

    def contract_z(self, z_indices: Sequence[int]) -> "MultiForm":
        """Pair the base part against the class dual to the monomial
        z_{i1}^...^z_{ip}: keep terms whose full z-part matches exactly and
        strip it (the z-part is a canonical prefix, so no extra sign arises)."""
        want = tuple(("z", i) for i in sorted(z_indices))
        if len(set(z_indices)) != len(tuple(z_indices)):
            raise ValueError("repeated index in contraction monomial")
        out = {}
        for mono, c in self._terms.items():
            zpart = tuple(l for l in mono if l[0] == "z")
            if zpart != want:
                continue
            out[mono[len(zpart):]] = c
        return MultiForm(out, self.universe)

    def subst_z(self, images: Sequence["MultiForm"]) -> "MultiForm":
        """Algebra substitution z_i -> images[i-1] (each of pure degree 1),
        leaving x-labels fixed.  Used for cover pullbacks and transfers."""
        result = MultiForm()
        for mono, c in self._terms.items():
            factor = MultiForm.constant(c)
            for kind, idx in mono:
                if kind == "z":
                    if idx > len(images):
                        raise ValueError(f"no image for z{idx}")
                    factor = factor * images[idx - 1]
                else:
                    factor = factor * MultiForm.generator("x", idx)
            result = result + factor
        return result

    # -- serialization -------------------------------------------------------

    def to_records(self):
        return [
            [[f"{k}{i}" for k, i in mono], c.numerator, c.denominator]
            for mono, c in self.terms()
        ]

    @classmethod
    def from_records(cls, records, universe=None) -> "MultiForm":
        terms = {}
        for labels, num, den in records:
            mono = []
            for s in labels:
                kind, idx = s[0], int(s[1:])
                mono.append((kind, idx))
            terms[tuple(mono)] = Fraction(num, den)
        return cls(terms, universe)


def _coerce(v) -> MultiForm:
    if isinstance(v, MultiForm):
        return v
    if isinstance(v, (int, Fraction)):
        return MultiForm.constant(v)
    raise TypeError(f"cannot interpret {v!r} as a MultiForm")


def _join_universe(a: MultiForm, b: MultiForm) -> str | None:
    if a.universe is not None and b.universe is not None and a.universe != b.universe:
        raise ValueError(
            f"label collision across incompatible universes "
            f"{a.universe!r} and {b.universe!r}"
        )
    return a.universe if a.universe is not None else b.universe


def wedge(a: MultiForm, b: MultiForm) -> MultiForm:
    """Graded-anticommutative product with exact rational coefficients."""
    return _coerce(a) * _coerce(b)


def zgen(i: int) -> MultiForm:
    return MultiForm.generator("z", i)


def xgen(i: int) -> MultiForm:
    return MultiForm.generator("x", i)


# ---------------------------------------------------------------------------
# Grid connections and numerical Chern-Weil
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridConnection:
    """Connection coefficient samples on a flat torus grid.

    ``samples[axis][i1, ..., id]`` is the k x k coefficient matrix of the
    covariant derivative along ``axis`` at the grid node (i1/r, ..., id/r).
    """

    dim: int
    resolution: int
    fiber_dim: int
    samples: np.ndarray

    def __post_init__(self):
        expected = (self.dim,) + (self.resolution,) * self.dim + (self.fiber_dim,) * 2
        arr = np.asarray(self.samples, dtype=complex)
        if arr.shape != expected:
            raise ValueError(f"sample shape {arr.shape} != expected {expected}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)


def poincare_connection(resolution: int) -> GridConnection:
    """Rank-1 connection on the 2-torus with A_z = 0 and A_x = -2*pi*i*z.

    This is the standard connection on the character line bundle over
    (z, x) in S^1 x S^1; its curvature is constant.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    r = resolution
    samples = np.zeros((2, r, r, 1, 1), dtype=complex)
    z = np.arange(r) / r
    samples[1, :, :, 0, 0] = (-2j * np.pi * z)[:, None]
    return GridConnection(dim=2, resolution=r, fiber_dim=1, samples=samples)


def _principal_difference(delta: np.ndarray) -> np.ndarray:
    """Reduce connection-sample differences modulo 2*pi*i per entry.

    Samples of a connection on a nontrivial bundle jump by multiples of
    2*pi*i at the periodic seam (the transition function winds); reducing
    each difference to its principal representative makes the finite
    difference exact for the linear connections in scope.
    """
    return delta - 2j * np.pi * np.round(delta.imag / (2 * np.pi))


def numerical_curvature(c: GridConnection) -> np.ndarray:
    """Per-cell curvature matrices F[mu, nu] on grid plaquettes.

    Centered finite differences with periodic wraparound; the component
    convention is fixed so the connection with samples A_x = -2*pi*i*z has
    F[z, x] = +2*pi*i:  F_mn = d_n A_m - d_m A_n + [A_m, A_n].
    For rank 1 the commutator vanishes.
    """
    d, r, k = c.dim, c.resolution, c.fiber_dim
    h = 1.0 / r
    F = np.zeros((d, d) + (r,) * d + (k, k), dtype=complex)
    A = c.samples
    for mu in range(d):
        for nu in range(mu + 1, d):
            dmu_Anu = _edge_avg_derivative(A[nu], mu, nu, h)
            dnu_Amu = _edge_avg_derivative(A[mu], nu, mu, h)
            Amu_c = _cell_average(A[mu], mu, nu)
            Anu_c = _cell_average(A[nu], mu, nu)
            comm = Amu_c @ Anu_c - Anu_c @ Amu_c
            Fmn = dnu_Amu - dmu_Anu + comm
            F[mu, nu] = Fmn
            F[nu, mu] = -Fmn
    return F


def _edge_avg_derivative(field: np.ndarray, diff_axis: int, other_axis: int, h: float):
    """Cell-centered derivative along diff_axis: forward differences on the
    two opposite edges of the (diff_axis, other_axis) plaquette, averaged."""
    fwd = _principal_difference(np.roll(field, -1, axis=diff_axis) - field) / h
    return (fwd + np.roll(fwd, -1, axis=other_axis)) / 2.0


def _cell_average(field: np.ndarray, ax1: int, ax2: int):
    s1 = np.roll(field, -1, axis=ax1)
    s2 = np.roll(field, -1, axis=ax2)
    s12 = np.roll(s1, -1, axis=ax2)
    return (field + s1 + s2 + s12) / 4.0


def chern_number(c: GridConnection, cycle: tuple[int, int] = (0, 1)):
    """First Chern number (i/2pi) * integral of tr F over the coordinate
    2-torus spanned by the two axes, by the midpoint rule.

    Returns (nearest integer, rounding residual); raises IntegralityError
    when the residual exceeds INTEGRALITY_TOL.
    """
    mu, nu = cycle
    if mu == nu:
        raise ValueError("cycle axes must be distinct")
    F = numerical_curvature(c)[mu, nu]
    # restrict to the (mu, nu) plane through the origin in the other axes
    index: list = [slice(None)] * c.dim
    for ax in range(c.dim):
        if ax not in (mu, nu):
            index[ax] = 0
    plane = F[tuple(index)]
    tr = np.trace(plane, axis1=-2, axis2=-1)
    integral = tr.sum() / (c.resolution**2)
    value = 1j / (2 * np.pi) * integral
    nearest = int(np.round(value.real))
    residual = float(abs(value - nearest))
    if residual > INTEGRALITY_TOL:
        raise IntegralityError(value, residual)
    return nearest, residual


def winding_number(loop) -> int:
    """Total winding of det along a closed loop of invertible matrices.

    Convention: t -> e^{2*pi*i*t} sampled in increasing t has winding +1.
    The loop must close (first = last within 1e-9) and be sampled finely
    enough that consecutive determinant arguments differ by less than pi.
    """
    mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in loop]
    if len(mats) < 2:
        raise ValueError("need at least two samples")
    if np.linalg.norm(mats[0] - mats[-1]) > 1e-9:
        raise ValueError("loop is not closed (first and last samples differ)")
    dets = np.array([np.linalg.det(m) for m in mats])
    if np.min(np.abs(dets)) < 1e-12:
        raise ValueError("loop contains a (numerically) singular matrix")
    ratios = dets[1:] / dets[:-1]
    steps = np.angle(ratios)
    if np.max(np.abs(steps)) >= np.pi * (1 - 1e-9):
        raise UnderSampledLoopError(
            "adjacent determinant arguments jump by >= pi; sample more finely"
        )
    return int(np.round(steps.sum() / (2 * np.pi)))
