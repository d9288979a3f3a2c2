"""Parameterized families of unitary representations and their combinators.

A Family bundles a structured parameter space, an evaluation rule sending a
parameter point to a representation point, and (when the build tree supports
it) the exact character form of the associated bundle.  Character data is
propagated structurally by the combinators, never inferred numerically; the
numeric pipeline validates it independently.

Parameter points are plain data: tuples of Fractions for torus grids,
integers for finite point sets, pairs for products, (side, point) tags for
disjoint unions.  Evaluation rules are closed-form, so families may be
sampled at any rational parameter, not only on the declared grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .charforms import MultiForm, winding_number, xgen, zgen
from .presentation import (
    GroupPresentation,
    Word,
    direct_product,
    evaluate_word,
    free_abelian,
    free_reduce,
    klein_bottle,
)
from .repvar import RepPoint, verify_homomorphism

HOMOMORPHISM_TOL = 1e-8


# ---------------------------------------------------------------------------
# Parameter spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusGrid:
    """The d-torus sampled on a uniform grid, coordinates in [0, 1)."""

    dim: int
    resolution: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("torus dimension must be >= 1")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2 per axis")

    @property
    def n_components(self) -> int:
        return 1

    def component_x_dim(self, ci: int) -> int:
        return self.dim

    def component_base(self, ci: int):
        return (Fraction(0),) * self.dim

    def component_points(self, ci: int) -> Iterator:
        for idx in itertools.product(range(self.resolution), repeat=self.dim):
            yield tuple(Fraction(i, self.resolution) for i in idx)

    def axis_loop(self, ci: int, axis: int, samples: int | None = None, base=None):
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range")
        samples = samples or self.resolution
        base = base if base is not None else self.component_base(ci)
        pts = []
        for j in range(samples + 1):
            coords = list(base)
            coords[axis] = Fraction(j, samples)
            pts.append(tuple(coords))
        return pts

    def describe(self) -> str:
        return f"T^{self.dim}[{self.resolution}]"


@dataclass(frozen=True)
class FinitePointSet:
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("point count must be >= 1")

    @property
    def n_components(self) -> int:
        return self.count

    def component_x_dim(self, ci: int) -> int:
        return 0

    def component_base(self, ci: int):
        return ci

    def component_points(self, ci: int) -> Iterator:
        yield ci

    def axis_loop(self, ci, axis, samples=None, base=None):
        raise ValueError("a finite point set has no parameter axes")

    def describe(self) -> str:
        return f"pts[{self.count}]"


@dataclass(frozen=True)
class ProductSpace:
    left: "ParameterSpace"
    right: "ParameterSpace"

    @property
    def n_components(self) -> int:
        return self.left.n_components * self.right.n_components

    def _split(self, ci: int):
        return divmod(ci, self.right.n_components)

    def component_x_dim(self, ci: int) -> int:
        cl, cr = self._split(ci)
        return self.left.component_x_dim(cl) + self.right.component_x_dim(cr)

    def component_base(self, ci: int):
        cl, cr = self._split(ci)
        return (self.left.component_base(cl), self.right.component_base(cr))

    def component_points(self, ci: int) -> Iterator:
        cl, cr = self._split(ci)
        for pl in self.left.component_points(cl):
            for pr in self.right.component_points(cr):
                yield (pl, pr)

    def axis_loop(self, ci: int, axis: int, samples=None, base=None):
        cl, cr = self._split(ci)
        bl, br = base if base is not None else self.component_base(ci)
        dl = self.left.component_x_dim(cl)
        if axis < dl:
            return [(p, br) for p in self.left.axis_loop(cl, axis, samples, bl)]
        return [(bl, p) for p in self.right.axis_loop(cr, axis - dl, samples, br)]

    def describe(self) -> str:
        return f"({self.left.describe()} x {self.right.describe()})"


@dataclass(frozen=True)
class DisjointUnionSpace:
    left: "ParameterSpace"
    right: "ParameterSpace"

    @property
    def n_components(self) -> int:
        return self.left.n_components + self.right.n_components

    def _delegate(self, ci: int):
        nl = self.left.n_components
        return (0, self.left, ci) if ci < nl else (1, self.right, ci - nl)

    def component_x_dim(self, ci: int) -> int:
        _, space, cj = self._delegate(ci)
        return space.component_x_dim(cj)

    def component_base(self, ci: int):
        side, space, cj = self._delegate(ci)
        return (side, space.component_base(cj))

    def component_points(self, ci: int) -> Iterator:
        side, space, cj = self._delegate(ci)
        for p in space.component_points(cj):
            yield (side, p)

    def axis_loop(self, ci: int, axis: int, samples=None, base=None):
        side, space, cj = self._delegate(ci)
        inner = base[1] if base is not None else None
        return [(side, p) for p in space.axis_loop(cj, axis, samples, inner)]

    def describe(self) -> str:
        return f"({self.left.describe()} | {self.right.describe()})"


ParameterSpace = TorusGrid | FinitePointSet | ProductSpace | DisjointUnionSpace


def all_points(space: ParameterSpace) -> Iterator[tuple[int, object]]:
    for ci in range(space.n_components):
        for p in space.component_points(ci):
            yield ci, p


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """A family of representations of ``group`` over ``space``.

    ``chern``, when present, holds one exact character form per connected
    component of the space; its degree-0 part equals the fiber dimension.
    ``base_dim`` is the number of base (z) labels of the group's torus/wedge
    model, needed to disjointify labels under tensor products.
    """

    group: GroupPresentation
    space: ParameterSpace
    fiber_dims: tuple[int, ...]
    evaluate_fn: Callable = field(repr=False)
    structure: str = "family"
    chern: tuple[MultiForm, ...] | None = None
    base_dim: int | None = None

    def __post_init__(self):
        if len(self.fiber_dims) != self.space.n_components:
            raise ValueError("one fiber dimension per connected component required")
        if self.chern is not None and len(self.chern) != self.space.n_components:
            raise ValueError("one character form per connected component required")

    def evaluate(self, point) -> RepPoint:
        return self.evaluate_fn(point)

    def holonomy(self, w: Word, point) -> np.ndarray:
        return evaluate_word(w, self.evaluate(point))


def verify_family(f: Family, tol: float = HOMOMORPHISM_TOL) -> bool:
    """Check the family invariants at every sampled grid point.

    Raises ValueError on the first violation; returns True when all points
    pass verify_homomorphism at ``tol``, fiber dimensions are constant per
    component, and character degree-0 parts match the fiber dimensions.
    """
    for ci in range(f.space.n_components):
        if f.chern is not None:
            rank = f.chern[ci].coefficient(())
            if rank != f.fiber_dims[ci]:
                raise ValueError(
                    f"component {ci}: character rank {rank} != fiber "
                    f"dimension {f.fiber_dims[ci]}"
                )
        for p in f.space.component_points(ci):
            rep = f.evaluate(p)
            if rep.dimension != f.fiber_dims[ci]:
                raise ValueError(
                    f"component {ci}: fiber dimension {rep.dimension} at {p!r} "
                    f"differs from declared {f.fiber_dims[ci]}"
                )
            if not verify_homomorphism(rep, f.group, tol):
                raise ValueError(f"point {p!r} fails the homomorphism check at {tol}")
    return True


def _phase(x: Fraction | float) -> complex:
    return complex(np.exp(2j * np.pi * float(x)))


def character_family_Zn(
    n: int, resolution: int, generators: Sequence[str] | None = None
) -> Family:
    """The standard character family of Z^n over the n-torus:
    the j-th generator maps to e^{2 pi i x_j} in U(1)."""
    if n < 1:
        raise ValueError("rank must be >= 1")
    group = free_abelian(n, generators)
    space = TorusGrid(n, resolution)

    def ev(point):
        return RepPoint(tuple(np.array([[_phase(x)]]) for x in point))

    ch = MultiForm.constant(1)
    for j in range(1, n + 1):
        ch = ch * (MultiForm.constant(1) + zgen(j) * xgen(j))
    return Family(
        group=group,
        space=space,
        fiber_dims=(1,),
        evaluate_fn=ev,
        structure=f"char_zn({n}, {resolution})",
        chern=(ch,),
        base_dim=n,
    )


def trivial_family(group: GroupPresentation, dim: int = 1) -> Family:
    """The constant trivial representation of ``group`` on a single point."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    mats = tuple(np.eye(dim, dtype=complex) for _ in group.generators)

    def ev(point):
        return RepPoint(mats)

    return Family(
        group=group,
        space=FinitePointSet(1),
        fiber_dims=(dim,),
        evaluate_fn=ev,
        structure=f"trivial(dim={dim})",
        chern=(MultiForm.constant(dim),),
        base_dim=len(group.generators),
    )


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def tensor_families(f: Family, g: Family) -> Family:
    """Pointwise Kronecker product, (left argument) x (right argument);
    a family of the direct-product group over the product space."""
    group = direct_product(f.group, g.group)
    space = ProductSpace(f.space, g.space)

    def ev(point):
        pl, pr = point
        A = f.evaluate(pl)
        B = g.evaluate(pr)
        eye_b = np.eye(B.dimension, dtype=complex)
        eye_a = np.eye(A.dimension, dtype=complex)
        mats = [np.kron(m, eye_b) for m in A.matrices]
        mats += [np.kron(eye_a, m) for m in B.matrices]
        return RepPoint(tuple(mats))

    fibers = []
    chern: list[MultiForm] | None = (
        [] if (f.chern is not None and g.chern is not None
               and f.base_dim is not None and g.base_dim is not None) else None
    )
    for cl in range(f.space.n_components):
        for cr in range(g.space.n_components):
            fibers.append(f.fiber_dims[cl] * g.fiber_dims[cr])
            if chern is not None:
                shifted = g.chern[cr].shift(
                    z_offset=f.base_dim, x_offset=f.space.component_x_dim(cl)
                )
                chern.append(f.chern[cl] * shifted)
    base = (
        f.base_dim + g.base_dim
        if (f.base_dim is not None and g.base_dim is not None)
        else None
    )
    return Family(
        group=group,
        space=space,
        fiber_dims=tuple(fibers),
        evaluate_fn=ev,
        structure=f"tensor({f.structure}, {g.structure})",
        chern=tuple(chern) if chern is not None else None,
        base_dim=base,
    )


def extend_free_product(f: Family, G: GroupPresentation) -> Family:
    """Extend a family across a free product: generators of the other free
    factor act as the identity of the same fiber dimension."""
    names = set(f.group.generators)
    missing = names - set(G.generators)
    if missing:
        raise ValueError(f"generators {sorted(missing)} absent from the ambient group")
    for rel in G.relators:
        used = {G.generators[gi] for gi, _ in rel.letters}
        if used & names and used - names:
            raise ValueError(
                "ambient relator mixes both free factors; not a free product"
            )
    positions = [G.generator_index(name) for name in f.group.generators]

    def ev(point):
        A = f.evaluate(point)
        eye = np.eye(A.dimension, dtype=complex)
        mats = [eye] * len(G.generators)
        for i, pos in enumerate(positions):
            mats[pos] = A.matrices[i]
        return RepPoint(tuple(mats))

    chern = None
    base = None
    if f.chern is not None and f.base_dim is not None:
        images = [zgen(pos + 1) for pos in positions]
        # base labels beyond the embedded factor never occur in f's forms
        images += [zgen(1)] * max(0, f.base_dim - len(images))
        chern = tuple(ch.subst_z(images[: f.base_dim]) for ch in f.chern)
        base = len(G.generators)
    return Family(
        group=G,
        space=f.space,
        fiber_dims=f.fiber_dims,
        evaluate_fn=ev,
        structure=f"extend({f.structure} -> {'*'.join(G.generators)})",
        chern=chern,
        base_dim=base,
    )


def disjoint_union(f: Family, g: Family) -> Family:
    """The same group over the disjoint union of the parameter spaces."""
    if f.group != g.group:
        raise ValueError("disjoint_union requires the same group on both sides")
    space = DisjointUnionSpace(f.space, g.space)

    def ev(point):
        side, p = point
        return (f if side == 0 else g).evaluate(p)

    chern = (
        f.chern + g.chern if (f.chern is not None and g.chern is not None) else None
    )
    base = f.base_dim if f.base_dim == g.base_dim else None
    return Family(
        group=f.group,
        space=space,
        fiber_dims=f.fiber_dims + g.fiber_dims,
        evaluate_fn=ev,
        structure=f"union({f.structure}, {g.structure})",
        chern=chern,
        base_dim=base,
    )


def direct_sum(f: Family, g: Family) -> Family:
    """Blockwise direct sum of two families over the same space."""
    if f.group != g.group:
        raise ValueError("direct_sum requires the same group")
    if f.space != g.space:
        raise ValueError("direct_sum requires the same parameter space")

    def ev(point):
        A = f.evaluate(point)
        B = g.evaluate(point)
        return RepPoint(
            tuple(_block_diag(a, b) for a, b in zip(A.matrices, B.matrices))
        )

    chern = None
    if f.chern is not None and g.chern is not None:
        chern = tuple(a + b for a, b in zip(f.chern, g.chern))
    base = f.base_dim if f.base_dim == g.base_dim else None
    return Family(
        group=f.group,
        space=f.space,
        fiber_dims=tuple(a + b for a, b in zip(f.fiber_dims, g.fiber_dims)),
        evaluate_fn=ev,
        structure=f"sum({f.structure}, {g.structure})",
        chern=chern,
        base_dim=base,
    )


# ---------------------------------------------------------------------------
# Structured covers (subgroup data is always supplied, never computed)
# ---------------------------------------------------------------------------


def _invert_fraction_matrix(m: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    aug = [
        [Fraction(m[i][j]) for j in range(n)]
        + [Fraction(1 if j == i else 0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _abelianize(w: Word, n: int) -> list[int]:
    v = [0] * n
    for g, s in w.letters:
        v[g] += s
    return v


def _power_word(gen_index: int, exponent: int) -> Word:
    sign = 1 if exponent >= 0 else -1
    return Word(tuple((gen_index, sign) for _ in range(abs(exponent))))


class SublatticeCover:
    """A finite-index sublattice of a free abelian group.

    ``basis`` lists the subgroup generators as integer exponent columns:
    the j-th subgroup generator is prod_i a_i^{basis[i][j]}.  Coset
    representatives are given as words in the ambient generators.
    """

    def __init__(
        self,
        ambient: GroupPresentation,
        basis: Sequence[Sequence[int]],
        cosets: Sequence[Word],
        sub_names: Sequence[str] | None = None,
    ):
        n = len(ambient.generators)
        mat = np.array(basis, dtype=int)
        if mat.shape != (n, n):
            raise ValueError(f"basis must be {n} x {n} (columns = subgroup generators)")
        for rel in ambient.relators:
            if any(_abelianize(rel, n)):
                raise ValueError("ambient group is not free abelian")
        det = round(float(np.linalg.det(mat)))
        if det == 0:
            raise ValueError("sublattice basis is singular")
        self.ambient = ambient
        self.basis = mat
        self.index = abs(det)
        self.sub = free_abelian(n, sub_names)
        self.cosets = tuple(free_reduce(c) for c in cosets)
        if len(self.cosets) != self.index:
            raise ValueError(
                f"need {self.index} coset representatives, got {len(self.cosets)}"
            )
        self._inverse = _invert_fraction_matrix(
            [[Fraction(int(mat[i, j])) for j in range(n)] for i in range(n)]
        )

    @property
    def sub_generator_words(self) -> tuple[Word, ...]:
        out = []
        for j in range(self.basis.shape[1]):
            w = Word(())
            for i in range(self.basis.shape[0]):
                w = w * _power_word(i, int(self.basis[i, j]))
            out.append(free_reduce(w))
        return tuple(out)

    def rewrite(self, w: Word) -> Word | None:
        """Membership test plus rewrite into subgroup generators, or None."""
        n = len(self.ambient.generators)
        v = _abelianize(w, n)
        coeffs = []
        for j in range(n):
            c = sum(self._inverse[j][i] * v[i] for i in range(n))
            if c.denominator != 1:
                return None
            coeffs.append(int(c))
        out = Word(())
        for j, c in enumerate(coeffs):
            out = out * _power_word(j, c)
        return free_reduce(out)

    @property
    def pullback_matrix(self) -> list[list[Fraction]]:
        n = self.basis.shape[0]
        return [[Fraction(int(self.basis[i, j])) for j in range(n)] for i in range(n)]

    def describe(self) -> str:
        return f"sublattice(index={self.index})"


def circle_cover(k: int, ambient: GroupPresentation | None = None) -> SublatticeCover:
    """The k-fold cover kZ <= Z with coset representatives e, a, ..., a^{k-1}."""
    if k < 1:
        raise ValueError("index must be >= 1")
    ambient = ambient or free_abelian(1)
    cosets = [_power_word(0, j) for j in range(k)]
    return SublatticeCover(ambient, [[k]], cosets)


class KleinBottleCover:
    """The index-2 free abelian subgroup <a, b^2> of the Klein-bottle group
    <a, b | a b a b^-1>, with coset representatives e and b."""

    def __init__(self):
        self.ambient = klein_bottle()
        self.sub = free_abelian(2)
        self.index = 2
        self.cosets = (Word(()), Word(((1, 1),)))
        self.pullback_matrix = None

    @property
    def sub_generator_words(self) -> tuple[Word, ...]:
        return (Word(((0, 1),)), Word(((1, 1), (1, 1))))

    def rewrite(self, w: Word) -> Word | None:
        # normal form a^m b^n: moving a past b or b^-1 inverts it
        m = n_seen = n = 0
        for g, s in w.letters:
            if g == 1:
                n_seen += 1
                n += s
            else:
                m += s * (1 if n_seen % 2 == 0 else -1)
        if n % 2:
            return None
        return free_reduce(_power_word(0, m) * _power_word(1, n // 2))

    def describe(self) -> str:
        return "klein_even(index=2)"


Cover = SublatticeCover | KleinBottleCover


def pullback_family(f: Family, cover: Cover) -> Family:
    """Restrict a family along a structured cover: subgroup generators act by
    their ambient words."""
    if len(f.group.generators) != len(cover.ambient.generators):
        raise ValueError("family group does not match the cover's ambient group")
    words = cover.sub_generator_words

    def ev(point):
        rep = f.evaluate(point)
        return RepPoint(tuple(evaluate_word(w, rep) for w in words))

    chern = None
    base = None
    if cover.pullback_matrix is not None and f.chern is not None and f.base_dim is not None:
        mat = cover.pullback_matrix
        images = [
            sum((mat[i][j] * zgen(j + 1) for j in range(len(mat))), MultiForm())
            for i in range(len(mat))
        ]
        chern = tuple(ch.subst_z(images) for ch in f.chern)
        base = len(cover.sub.generators)
    return Family(
        group=cover.sub,
        space=f.space,
        fiber_dims=f.fiber_dims,
        evaluate_fn=ev,
        structure=f"pullback({f.structure}, {cover.describe()})",
        chern=chern,
        base_dim=base,
    )


def induce_family(
    f: Family,
    cover: Cover,
    cosets: Sequence[Word] | None = None,
    group: GroupPresentation | None = None,
) -> Family:
    """Pointwise induction along a structured cover.

    For each parameter x and ambient generator g, block (i, j) of the induced
    matrix is rho_x(t_i^-1 g t_j) whenever that element lies in the subgroup
    (rewritten through the cover), and zero otherwise.
    """
    G = group or cover.ambient
    reps = tuple(free_reduce(c) for c in (cosets or cover.cosets))
    c = len(reps)
    if len(f.group.generators) != len(cover.sub.generators):
        raise ValueError("family group does not match the cover's subgroup")

    # Precompute, per ambient generator, the coset permutation and the
    # rewritten subgroup words filling the nonzero blocks.
    perms: list[list[int]] = []
    blocks: list[list[Word]] = []
    for gi in range(len(G.generators)):
        gen_word = Word(((gi, 1),))
        perm = []
        words = []
        for j in range(c):
            hits = []
            for i in range(c):
                h = cover.rewrite(free_reduce(reps[i].inverse() * gen_word * reps[j]))
                if h is not None:
                    hits.append((i, h))
            if len(hits) != 1:
                raise ValueError(
                    f"invalid coset system: generator {G.generators[gi]!r} times "
                    f"representative {j} hits {len(hits)} cosets"
                )
            perm.append(hits[0][0])
            words.append(hits[0][1])
        if sorted(perm) != list(range(c)):
            raise ValueError(
                f"invalid coset system: generator {G.generators[gi]!r} does not "
                "permute the cosets"
            )
        perms.append(perm)
        blocks.append(words)

    def ev(point):
        rep = f.evaluate(point)
        k = rep.dimension
        mats = []
        for gi in range(len(G.generators)):
            m = np.zeros((k * c, k * c), dtype=complex)
            for j in range(c):
                i = perms[gi][j]
                m[i * k : (i + 1) * k, j * k : (j + 1) * k] = evaluate_word(
                    blocks[gi][j], rep
                )
            mats.append(m)
        return RepPoint(tuple(mats))

    chern = None
    base = None
    if (
        cover.pullback_matrix is not None
        and f.chern is not None
        and f.base_dim is not None
    ):
        # transfer on the rational exterior algebra: index * (pullback)^{-1}
        inv = _invert_fraction_matrix(cover.pullback_matrix)
        images = [
            sum((inv[j][i] * zgen(i + 1) for i in range(len(inv))), MultiForm())
            for j in range(len(inv))
        ]
        chern = tuple(cover.index * ch.subst_z(images) for ch in f.chern)
        base = len(G.generators)
    return Family(
        group=G,
        space=f.space,
        fiber_dims=tuple(k * c for k in f.fiber_dims),
        evaluate_fn=ev,
        structure=f"induce({f.structure}, {cover.describe()})",
        chern=chern,
        base_dim=base,
    )


# ---------------------------------------------------------------------------
# Numeric bridges
# ---------------------------------------------------------------------------


def holonomy_loop(
    f: Family,
    w: Word,
    component: int = 0,
    axis: int = 0,
    samples: int | None = None,
    base=None,
) -> list[np.ndarray]:
    """Holonomy matrices of a word along a closed parameter-axis loop."""
    pts = f.space.axis_loop(component, axis, samples, base)
    return [f.holonomy(w, p) for p in pts]


def numeric_c1_windings(f: Family, samples: int = 64):
    """Winding of det(holonomy) of each generator along each parameter axis,
    per component: the numeric counterpart of the exact z^x coefficients."""
    out = []
    for ci in range(f.space.n_components):
        d = f.space.component_x_dim(ci)
        rows = []
        for gi in range(len(f.group.generators)):
            w = Word(((gi, 1),))
            row = []
            for axis in range(d):
                row.append(winding_number(holonomy_loop(f, w, ci, axis, samples)))
            rows.append(row)
        out.append(rows)
    return out
