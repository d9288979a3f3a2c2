"""Rational homology bases, detection pairings, and detectability certificates.

Rational K-homology is represented throughout by rational homology via the
character isomorphism.  For the supported group classes the classifying space
has a torus/wedge model whose homology classes are dual to monomials in the
base (z) labels; pairing a family against a class contracts the family's
exact character form on that monomial.  Families without exact character
data can pair degree <= 1 classes numerically through determinant windings.

Basis conventions: base generators are ordered z1 < z2 < ..., parameter
generators x1 < x2 < ..., monomials sorted base-before-parameter; signs from
reordering are absorbed into coefficients, never dropped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .charforms import MultiForm, winding_number, SIGN_CONVENTIONS
from .families import Cover, Family, holonomy_loop, induce_family, pullback_family
from .presentation import Word, parse_word

SCOPE_NOTE = (
    "Detectability is certified only over the structured parameter spaces "
    "supported by this toolkit (torus grids, finite point sets, and their "
    "products and disjoint unions), not over arbitrary finite complexes."
)


class DetectionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Group class descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Free:
    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be >= 0")

    def describe(self) -> str:
        return f"free({self.rank})"


@dataclass(frozen=True)
class FreeAbelian:
    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be >= 0")

    def describe(self) -> str:
        return f"free_abelian({self.rank})"


@dataclass(frozen=True)
class SurfaceClosed:
    genus: int

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError("genus must be >= 1")

    def describe(self) -> str:
        return f"surface({self.genus})"


@dataclass(frozen=True)
class FreeProduct:
    left: "GroupClassDescriptor"
    right: "GroupClassDescriptor"

    def describe(self) -> str:
        return f"free_product({self.left.describe()}, {self.right.describe()})"


@dataclass(frozen=True)
class DirectProduct:
    left: "GroupClassDescriptor"
    right: "GroupClassDescriptor"

    def describe(self) -> str:
        return f"direct_product({self.left.describe()}, {self.right.describe()})"


@dataclass(frozen=True)
class FiniteIndexSuper:
    """A finite-index supergroup of ``sub``; its rational homology cannot be
    derived here and must be supplied as a table of labels per degree."""

    sub: "GroupClassDescriptor"
    index: int
    label: str
    homology: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        if self.index < 2:
            raise ValueError("index must be >= 2")

    def describe(self) -> str:
        return f"finite_index_super({self.sub.describe()}, {self.index}, {self.label})"


GroupClassDescriptor = (
    Free | FreeAbelian | SurfaceClosed | FreeProduct | DirectProduct | FiniteIndexSuper
)


@dataclass(frozen=True)
class BasisClass:
    """A labeled rational homology class; ``monomial`` is the dual z-monomial
    in the group's torus/wedge model when one exists."""

    label: str
    degree: int
    monomial: tuple[int, ...] | None


@dataclass(frozen=True)
class HomologyBasis:
    classes: tuple[tuple[BasisClass, ...], ...]  # per degree
    z_dim: int

    def betti(self) -> tuple[int, ...]:
        return tuple(len(cs) for cs in self.classes)

    def all_classes(self):
        return [c for degree in self.classes for c in degree]


def _shift_basis(b: HomologyBasis, z_offset: int, tag: str) -> HomologyBasis:
    shifted = tuple(
        tuple(
            BasisClass(
                label=f"{tag}{c.label}",
                degree=c.degree,
                monomial=tuple(i + z_offset for i in c.monomial)
                if c.monomial is not None
                else None,
            )
            for c in degree
        )
        for degree in b.classes
    )
    return HomologyBasis(shifted, b.z_dim)


def rational_homology(d: GroupClassDescriptor) -> HomologyBasis:
    """Labeled basis of the rational homology of the classifying space."""
    if isinstance(d, FreeAbelian):
        n = d.rank
        degrees = []
        for q in range(n + 1):
            classes = []
            for subset in itertools.combinations(range(1, n + 1), q):
                label = "pt" if q == 0 else "^".join(f"z{i}" for i in subset)
                classes.append(BasisClass(label, q, subset))
            degrees.append(tuple(classes))
        return HomologyBasis(tuple(degrees), n)
    if isinstance(d, Free):
        point = (BasisClass("pt", 0, ()),)
        if d.rank == 0:
            return HomologyBasis((point,), 0)
        ones = tuple(
            BasisClass(f"z{i}", 1, (i,)) for i in range(1, d.rank + 1)
        )
        return HomologyBasis((point, ones), d.rank)
    if isinstance(d, SurfaceClosed):
        g = d.genus
        if g == 1:
            return rational_homology(FreeAbelian(2))
        point = (BasisClass("pt", 0, ()),)
        ones = tuple(
            BasisClass(name, 1, None)
            for i in range(1, g + 1)
            for name in (f"a{i}", f"b{i}")
        )
        top = (BasisClass("fundamental", 2, None),)
        return HomologyBasis((point, ones, top), 2 * g)
    if isinstance(d, FreeProduct):
        bl = rational_homology(d.left)
        br = _shift_basis(rational_homology(d.right), bl.z_dim, "R.")
        top = max(len(bl.classes), len(br.classes))
        degrees = [(BasisClass("pt", 0, ()),)]
        for q in range(1, top):
            row = []
            if q < len(bl.classes):
                row.extend(bl.classes[q])
            if q < len(br.classes):
                row.extend(br.classes[q])
            degrees.append(tuple(row))
        return HomologyBasis(tuple(degrees), bl.z_dim + br.z_dim)
    if isinstance(d, DirectProduct):
        bl = rational_homology(d.left)
        br = _shift_basis(rational_homology(d.right), bl.z_dim, "R.")
        top = (len(bl.classes) - 1) + (len(br.classes) - 1)
        degrees = []
        for q in range(top + 1):
            row = []
            for ql in range(len(bl.classes)):
                qr = q - ql
                if not 0 <= qr < len(br.classes):
                    continue
                for cl in bl.classes[ql]:
                    for cr in br.classes[qr]:
                        mono = (
                            cl.monomial + cr.monomial
                            if cl.monomial is not None and cr.monomial is not None
                            else None
                        )
                        label = (
                            cl.label
                            if cr.degree == 0
                            else (cr.label if cl.degree == 0 else f"{cl.label}x{cr.label}")
                        )
                        row.append(BasisClass(label, q, mono))
            degrees.append(tuple(row))
        return HomologyBasis(tuple(degrees), bl.z_dim + br.z_dim)
    if isinstance(d, FiniteIndexSuper):
        if d.homology is None:
            raise DetectionError(
                f"finite-index supergroup {d.label!r} needs a supplied homology table"
            )
        degrees = tuple(
            tuple(BasisClass(label, q, None) for label in labels)
            for q, labels in enumerate(d.homology)
        )
        return HomologyBasis(degrees, 0)
    raise TypeError(f"unsupported descriptor {d!r}")


# ---------------------------------------------------------------------------
# Slant contraction and detection matrices
# ---------------------------------------------------------------------------


def slant_contract(ch: MultiForm, cls: BasisClass) -> MultiForm:
    """Contract a character form against a homology basis class: extract the
    parameter forms paired with the base monomial dual to the class."""
    if cls.monomial is None:
        raise DetectionError(
            f"class {cls.label!r} has no exact model; use the numeric pairing "
            "path (numeric_detection_report)"
        )
    if ch.max_degree() < cls.degree:
        return MultiForm()
    return ch.contract_z(cls.monomial)


def _x_monomials(x_dim: int):
    out = []
    for q in range(x_dim + 1):
        out.extend(itertools.combinations(range(1, x_dim + 1), q))
    return out


@dataclass(frozen=True)
class DetectionReport:
    group: str
    families: tuple[str, ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    detected: tuple[bool, ...]
    verdict: str                      # "FD-certified" | "undetected" | "obstructed"
    undetected_classes: tuple[str, ...]
    mode: str                         # "exact" | "numeric"
    sign_conventions: dict
    scope_note: str = SCOPE_NOTE

    def to_json_dict(self) -> dict:
        return {
            "kind": "detection_report",
            "group": self.group,
            "families": list(self.families),
            "rows": list(self.row_labels),
            "columns": list(self.col_labels),
            "matrix": [
                [f"{e.numerator}/{e.denominator}" for e in row] for row in self.matrix
            ],
            "detected": list(self.detected),
            "verdict": self.verdict,
            "undetected_classes": list(self.undetected_classes),
            "mode": self.mode,
            "sign_conventions": dict(self.sign_conventions),
            "scope_note": self.scope_note,
        }


def _assemble_report(d, fams, row_labels, col_labels, matrix, mode):
    detected = tuple(any(e != 0 for e in row) for row in matrix)
    undetected = tuple(
        label for label, hit in zip(row_labels, detected) if not hit
    )
    verdict = "FD-certified" if all(detected) else "undetected"
    return DetectionReport(
        group=d.describe(),
        families=tuple(f.structure for f in fams),
        row_labels=row_labels,
        col_labels=col_labels,
        matrix=tuple(tuple(row) for row in matrix),
        detected=detected,
        verdict=verdict,
        undetected_classes=undetected,
        mode=mode,
        sign_conventions=SIGN_CONVENTIONS,
    )


def detection_matrix(
    d: GroupClassDescriptor, fams: Sequence[Family]
) -> DetectionReport:
    """The exact detection matrix: one row per homology basis class, one
    column per parameter monomial of each family component, entries the
    rational coefficients of the contracted character forms.

    Disjoint unions contribute the concatenation of their components'
    columns.  Every family must carry exact character data.
    """
    basis = rational_homology(d)
    classes = basis.all_classes()
    for cls in classes:
        if cls.monomial is None:
            raise DetectionError(
                f"class {cls.label!r} of {d.describe()} has no exact model; "
                "use the numeric pairing path (numeric_detection_report)"
            )
    columns = []  # (family index, component index, x-monomial)
    for fi, f in enumerate(fams):
        if f.chern is None:
            raise DetectionError(
                f"family {fi} ({f.structure}) lacks exact character data; "
                "use the numeric pairing path (numeric_detection_report)"
            )
        for ci in range(f.space.n_components):
            for mono in _x_monomials(f.space.component_x_dim(ci)):
                columns.append((fi, ci, mono))
    col_labels = tuple(
        f"f{fi}.c{ci}." + ("1" if not mono else "^".join(f"x{i}" for i in mono))
        for fi, ci, mono in columns
    )
    matrix = []
    for cls in classes:
        row = []
        for fi, ci, mono in columns:
            contracted = slant_contract(fams[fi].chern[ci], cls)
            row.append(contracted.coefficient(tuple(("x", i) for i in mono)))
        matrix.append(row)
    row_labels = tuple(c.label for c in classes)
    return _assemble_report(d, fams, row_labels, col_labels, matrix, "exact")


def numeric_detection_report(
    d: GroupClassDescriptor,
    f: Family,
    samples: int = 64,
) -> DetectionReport:
    """Numeric pairing for families without exact character data.

    Degree-0 classes pair to the fiber rank per component; degree-1 classes,
    whose labels must parse as words in the family's group, pair to the
    winding of det(holonomy) along each parameter-axis loop.  Higher-degree
    classes are outside the numeric path.
    """
    basis = rational_homology(d)
    if len(basis.classes) > 2 and any(len(cs) for cs in basis.classes[2:]):
        raise DetectionError(
            "the numeric pairing path supports degree <= 1 classes only"
        )
    columns = []
    for ci in range(f.space.n_components):
        columns.append((ci, None))  # rank column
        for axis in range(f.space.component_x_dim(ci)):
            columns.append((ci, axis))
    col_labels = tuple(
        f"c{ci}.rank" if axis is None else f"c{ci}.loop_x{axis + 1}"
        for ci, axis in columns
    )
    matrix = []
    row_labels = []
    for cls in basis.all_classes():
        row = []
        if cls.degree == 0:
            for ci, axis in columns:
                row.append(Fraction(f.fiber_dims[ci]) if axis is None else Fraction(0))
        else:
            w = parse_word(cls.label, f.group)
            for ci, axis in columns:
                if axis is None:
                    row.append(Fraction(0))
                else:
                    loop = holonomy_loop(f, w, ci, axis, samples)
                    row.append(Fraction(winding_number(loop)))
        matrix.append(row)
        row_labels.append(cls.label)
    return _assemble_report(
        d, [f], tuple(row_labels), col_labels, matrix, "numeric"
    )


# ---------------------------------------------------------------------------
# Transfer scaling, obstruction arithmetic, Betti inequality
# ---------------------------------------------------------------------------


def transfer_scaling_check(
    f: Family,
    index: int,
    pulled: Family | None = None,
    *,
    cover: Cover,
) -> bool:
    """Check that pulling a family back along a structured cover and inducing
    it up again multiplies every detection-matrix entry by exactly the index.

    ``f`` is a family of the ambient group; ``pulled`` defaults to the
    pullback of ``f`` along the cover.
    """
    if cover.pullback_matrix is None:
        raise DetectionError(
            f"unsupported cover description {cover.describe()!r}: no rational model"
        )
    if cover.index != index:
        raise DetectionError(
            f"cover has index {cover.index}, expected {index}"
        )
    ambient = FreeAbelian(len(cover.ambient.generators))
    if pulled is None:
        pulled = pullback_family(f, cover)
    round_trip = induce_family(pulled, cover)
    base = detection_matrix(ambient, [f])
    scaled = detection_matrix(ambient, [round_trip])
    if base.col_labels != scaled.col_labels or base.row_labels != scaled.row_labels:
        return False
    return all(
        index * a == b
        for ra, rb in zip(base.matrix, scaled.matrix)
        for a, b in zip(ra, rb)
    )


def bm_obstruction(f: int, index: int) -> tuple[int, int, bool]:
    """Euler-characteristic arithmetic for an amalgam of free groups over a
    common finite-index subgroup: the subgroup rank is
    g = index*(f - 1) + 1, and the kernel of a map Q^g -> Q^{2f} has rank at
    least max(0, g - 2f).  A strictly positive bound excludes detectability
    of some class for a simple group with these data; bound zero is
    inconclusive.
    """
    if f < 2:
        raise ValueError("free rank must be >= 2")
    if index < 2:
        raise ValueError("index must be >= 2")
    g = index * (f - 1) + 1
    h2_lower_bound = max(0, g - 2 * f)
    return g, h2_lower_bound, h2_lower_bound > 0


def unitary_poincare_polynomial(n: int) -> list[int]:
    """Coefficients of prod_{i=1..n} (1 + t^{2i-1}), the Poincare polynomial
    of the n-dimensional unitary group."""
    coeffs = [1]
    for i in range(1, n + 1):
        deg = 2 * i - 1
        new = coeffs + [0] * deg
        for k, c in enumerate(coeffs):
            new[k + deg] += c
        coeffs = new
    return coeffs


def betti_inequality_check(m: int, n: int) -> tuple[int, int, bool]:
    """Compare total Betti numbers: the representation space of the rank-m
    free group in U(n) is U(n)^m, with Betti sum (sum of U(n) Betti)^m; the
    classifying space is a wedge of m circles, with Betti sum 1 + m."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    total_un = sum(unitary_poincare_polynomial(n))
    lhs = total_un**m
    rhs = 1 + m
    return lhs, rhs, lhs >= rhs
