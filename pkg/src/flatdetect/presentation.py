"""Finitely presented groups: parsing, free reduction, word evaluation.

The presentation source format is

    gens: a b ; rels: a b a^-1 b^-1 , b b ;

i.e. a generator list and a comma-separated relator list, both
semicolon-terminated.  A word is a whitespace-separated sequence of letters,
each ``<id>`` or ``<id>^-1``.  ``#`` starts a comment running to end of line.
An empty relator list (``rels: ;``) denotes a free group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class PresentationError(ValueError):
    """Malformed presentation source, with the offending position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


# One letter of a word: (generator index, exponent sign in {+1, -1}).
Letter = tuple[int, int]


@dataclass(frozen=True)
class Word:
    """A word in the generators, one letter per entry (no run-length packing)."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        for g, s in self.letters:
            if s not in (1, -1):
                raise ValueError(f"letter sign must be +1 or -1, got {s}")
            if g < 0:
                raise ValueError(f"negative generator index {g}")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple((g, -s) for g, s in reversed(self.letters)))

    def is_reduced(self) -> bool:
        return all(
            not (a[0] == b[0] and a[1] == -b[1])
            for a, b in zip(self.letters, self.letters[1:])
        )


def free_reduce(w: Word) -> Word:
    """The freely reduced word equal to ``w`` in the free group."""
    stack: list[Letter] = []
    for g, s in w.letters:
        if stack and stack[-1][0] == g and stack[-1][1] == -s:
            stack.pop()
        else:
            stack.append((g, s))
    return Word(tuple(stack))


@dataclass(frozen=True)
class GroupPresentation:
    """Generators plus relator words; relators are stored freely reduced."""

    generators: tuple[str, ...]
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        if len(set(self.generators)) != len(self.generators):
            raise PresentationError("duplicate generator identifiers")
        if any(not g for g in self.generators):
            raise PresentationError("empty generator identifier")
        object.__setattr__(
            self, "relators", tuple(free_reduce(r) for r in self.relators)
        )
        n = len(self.generators)
        for r in self.relators:
            for g, _ in r.letters:
                if g >= n:
                    raise PresentationError(
                        f"relator letter index {g} out of range for {n} generators"
                    )

    def generator_index(self, name: str) -> int:
        try:
            return self.generators.index(name)
        except ValueError:
            raise PresentationError(f"undeclared generator {name!r}") from None

    def word(self, text: str) -> Word:
        return parse_word(text, self)


_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*(?:\^-1)?|[;:,]|\S")


def _tokenize(text: str):
    """Yield (token, line, column), 1-based positions, comments stripped."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for m in _TOKEN_RE.finditer(line):
            yield m.group(0), lineno, m.start() + 1


def parse_presentation(text: str) -> GroupPresentation:
    """Parse presentation source into a GroupPresentation.

    Raises PresentationError with line/column on syntax errors or when a
    relator uses an undeclared generator.
    """
    tokens = list(_tokenize(text))
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, 0, 0)

    def expect(tok: str):
        nonlocal pos
        got, ln, col = peek()
        if got != tok:
            raise PresentationError(f"expected {tok!r}, got {got!r}", ln, col)
        pos += 1

    expect("gens")
    expect(":")
    gen_names: list[str] = []
    while True:
        tok, ln, col = peek()
        if tok == ";":
            pos += 1
            break
        if tok is None:
            raise PresentationError("unterminated generator list", ln, col)
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            raise PresentationError(f"invalid generator identifier {tok!r}", ln, col)
        gen_names.append(tok)
        pos += 1
    index = {name: i for i, name in enumerate(gen_names)}
    if len(index) != len(gen_names):
        raise PresentationError("duplicate generator identifiers")

    expect("rels")
    expect(":")
    relators: list[Word] = []
    current: list[Letter] = []
    while True:
        tok, ln, col = peek()
        if tok in (";", ","):
            if current:
                relators.append(Word(tuple(current)))
                current = []
            elif tok == ",":
                raise PresentationError("empty relator before ','", ln, col)
            pos += 1
            if tok == ";":
                break
            continue
        if tok is None:
            raise PresentationError("unterminated relator list", ln, col)
        name, sign = (tok[:-3], -1) if tok.endswith("^-1") else (tok, 1)
        if name not in index:
            raise PresentationError(f"undeclared generator {name!r} in relator", ln, col)
        current.append((index[name], sign))
        pos += 1

    tok, ln, col = peek()
    if tok is not None:
        raise PresentationError(f"trailing input {tok!r}", ln, col)
    return GroupPresentation(tuple(gen_names), tuple(relators))


def parse_word(text: str, G: GroupPresentation) -> Word:
    """Parse a single word (whitespace-separated letters) against ``G``."""
    letters: list[Letter] = []
    for tok, ln, col in _tokenize(text):
        name, sign = (tok[:-3], -1) if tok.endswith("^-1") else (tok, 1)
        if name not in G.generators:
            raise PresentationError(f"undeclared generator {name!r}", ln, col)
        letters.append((G.generator_index(name), sign))
    return free_reduce(Word(tuple(letters)))


def format_presentation(G: GroupPresentation) -> str:
    """Render a presentation in the source format; re-parses to an equal value."""
    def fmt_letter(l: Letter) -> str:
        name = G.generators[l[0]]
        return name if l[1] == 1 else f"{name}^-1"

    rels = " , ".join(" ".join(fmt_letter(l) for l in r.letters) for r in G.relators)
    return f"gens: {' '.join(G.generators)} ; rels: {rels} ;"


def evaluate_word(w: Word, point) -> np.ndarray:
    """Product of the assigned matrices along ``w``; identity for the empty word.

    ``point`` is a RepPoint or any sequence of square matrices indexed like the
    presentation's generators; exponent -1 uses the conjugate transpose.
    """
    mats = getattr(point, "matrices", point)
    if len(mats) == 0:
        raise ValueError("no matrices assigned")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise ValueError(f"dimension mismatch: {m.shape} vs ({n}, {n})")
    out = np.eye(n, dtype=complex)
    for g, s in w.letters:
        if g >= len(mats):
            raise ValueError(f"no matrix assigned to generator index {g}")
        out = out @ (mats[g] if s == 1 else mats[g].conj().T)
    return out


def commutator(a: Word, b: Word) -> Word:
    return a * b * a.inverse() * b.inverse()


def free_group(m: int, names: Sequence[str] | None = None) -> GroupPresentation:
    names = tuple(names) if names is not None else tuple(f"g{i+1}" for i in range(m))
    if len(names) != m:
        raise ValueError("name count does not match rank")
    return GroupPresentation(names, ())


def free_abelian(n: int, names: Sequence[str] | None = None) -> GroupPresentation:
    names = tuple(names) if names is not None else tuple(f"t{i+1}" for i in range(n))
    if len(names) != n:
        raise ValueError("name count does not match rank")
    rels = tuple(
        commutator(Word(((i, 1),)), Word(((j, 1),)))
        for i in range(n)
        for j in range(i + 1, n)
    )
    return GroupPresentation(names, rels)


def klein_bottle() -> GroupPresentation:
    """The Klein-bottle group < a, b | a b a b^-1 >."""
    return GroupPresentation(("a", "b"), (Word(((0, 1), (1, 1), (0, 1), (1, -1))),))


def surface_group(genus: int) -> GroupPresentation:
    """Closed orientable surface group with the single product-of-commutators relator."""
    if genus < 1:
        raise ValueError("genus must be >= 1")
    names = tuple(x for i in range(genus) for x in (f"a{i+1}", f"b{i+1}"))
    rel = Word(())
    for i in range(genus):
        rel = rel * commutator(Word(((2 * i, 1),)), Word(((2 * i + 1, 1),)))
    return GroupPresentation(names, (rel,))


def direct_product(G1: GroupPresentation, G2: GroupPresentation) -> GroupPresentation:
    """Presentation of G1 x G2: all generators, both relator sets, and all
    cross commutators.  Clashing right-hand generator names get a ``_2`` suffix."""
    taken = set(G1.generators)
    right_names = []
    for name in G2.generators:
        new = name
        while new in taken:
            new += "_2"
        taken.add(new)
        right_names.append(new)
    names = G1.generators + tuple(right_names)
    off = len(G1.generators)

    def shift(w: Word) -> Word:
        return Word(tuple((g + off, s) for g, s in w.letters))

    rels = list(G1.relators) + [shift(r) for r in G2.relators]
    for i in range(len(G1.generators)):
        for j in range(len(G2.generators)):
            rels.append(commutator(Word(((i, 1),)), Word(((off + j, 1),))))
    return GroupPresentation(names, tuple(rels))
