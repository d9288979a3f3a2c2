from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatdetect.charforms import (
    GridConnection,
    IntegralityError,
    MultiForm,
    UnderSampledLoopError,
    chern_number,
    numerical_curvature,
    poincare_connection,
    wedge,
    winding_number,
    xgen,
    zgen,
)


# ---------------------------------------------------------------------------
# exterior algebra
# ---------------------------------------------------------------------------


def test_wedge_anticommutes():
    zx = zgen(1) * xgen(1)
    xz = xgen(1) * zgen(1)
    assert zx == -xz
    assert not (zx + xz)


def test_wedge_square_of_generator_vanishes():
    assert (zgen(2) * zgen(2)).is_zero()
    assert (xgen(1) * xgen(1)).is_zero()


def test_wedge_expansion_two_line_characters():
    a = 1 + zgen(1) * xgen(1)
    b = 1 + zgen(2) * xgen(2)
    prod = a * b
    expected = (
        MultiForm.constant(1)
        + zgen(1) * xgen(1)
        + zgen(2) * xgen(2)
        + zgen(1) * xgen(1) * zgen(2) * xgen(2)
    )
    assert prod == expected
    # degree-2 blocks commute: z1^x1 and z2^x2 in either order
    assert (zgen(1) * xgen(1)) * (zgen(2) * xgen(2)) == (zgen(2) * xgen(2)) * (
        zgen(1) * xgen(1)
    )


def test_canonical_ordering_sign():
    # x1^z1 stored as -z1^x1
    f = xgen(1) * zgen(1)
    assert f.coefficient((("z", 1), ("x", 1))) == -1


def test_universe_collision_error():
    a = MultiForm({((("z", 1)),): Fraction(1)}, universe="A")
    b = MultiForm({((("z", 1)),): Fraction(1)}, universe="B")
    with pytest.raises(ValueError, match="incompatible universes"):
        wedge(a, b)
    # same tag is fine
    c = MultiForm({((("z", 2)),): Fraction(1)}, universe="A")
    assert wedge(a, c).universe == "A"


@st.composite
def forms(draw):
    n_terms = draw(st.integers(0, 4))
    terms = {}
    for _ in range(n_terms):
        labels = draw(
            st.lists(
                st.tuples(st.sampled_from(["z", "x"]), st.integers(1, 3)),
                max_size=3,
                unique=True,
            )
        )
        coeff = Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 4)))
        terms[tuple(labels)] = terms.get(tuple(labels), Fraction(0)) + coeff
    return MultiForm(terms)


@settings(max_examples=150)
@given(forms(), forms(), forms())
def test_wedge_associative_and_distributive(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(forms())
def test_serialization_roundtrip(f):
    assert MultiForm.from_records(f.to_records()) == f


def test_shift_and_restrict():
    f = zgen(1) * xgen(2) + xgen(1)
    g = f.shift(z_offset=3, x_offset=1)
    assert g == zgen(4) * xgen(3) + xgen(2)
    assert f.restrict_x([1]) == xgen(1)
    assert f.restrict_x([1, 2]) == f


def test_contract_z_prefix_semantics():
    ch = 1 + zgen(1) * xgen(1)
    assert ch.contract_z(()) == MultiForm.constant(1)
    assert ch.contract_z((1,)) == xgen(1)
    assert ch.contract_z((2,)).is_zero()


def test_subst_z_linear_substitution():
    # z1 -> 2 z1: pullback along the double cover of the circle
    f = 1 + zgen(1) * xgen(1)
    g = f.subst_z([2 * zgen(1)])
    assert g == 1 + 2 * zgen(1) * xgen(1)
    # substitution is an algebra map
    h = (zgen(1) * zgen(2)).subst_z([zgen(2), zgen(1)])
    assert h == -(zgen(1) * zgen(2))


# ---------------------------------------------------------------------------
# grid connections
# ---------------------------------------------------------------------------


def test_poincare_samples():
    c = poincare_connection(8)
    assert c.samples[1, 0, 3, 0, 0] == 0  # A_x at z = 0
    assert np.isclose(c.samples[1, 4, 0, 0, 0], -1j * np.pi)  # A_x at z = 1/2
    assert np.all(c.samples[0] == 0)  # A_z = 0


def test_zero_connection_zero_curvature():
    c = GridConnection(2, 16, 2, np.zeros((2, 16, 16, 2, 2)))
    F = numerical_curvature(c)
    assert np.max(np.abs(F)) == 0.0
    n, res = chern_number(c)
    assert n == 0 and res < 1e-12


def test_poincare_curvature_constant():
    c = poincare_connection(64)
    F = numerical_curvature(c)[0, 1]
    assert np.max(np.abs(F - 2j * np.pi)) <= 1e-9


def test_gauge_shift_leaves_curvature_unchanged():
    c = poincare_connection(32)
    shifted = np.array(c.samples)
    shifted[1] += 0.37j
    c2 = GridConnection(2, 32, 1, shifted)
    assert np.allclose(numerical_curvature(c)[0, 1], numerical_curvature(c2)[0, 1])


def test_chern_number_poincare_is_minus_one():
    n, res = chern_number(poincare_connection(64))
    assert n == -1
    assert res <= 1e-6


def test_chern_number_conjugate_sum_cancels():
    r = 32
    samples = np.zeros((2, r, r, 2, 2), dtype=complex)
    z = np.arange(r) / r
    samples[1, :, :, 0, 0] = (-2j * np.pi * z)[:, None]
    samples[1, :, :, 1, 1] = (+2j * np.pi * z)[:, None]
    c = GridConnection(2, r, 2, samples)
    n, res = chern_number(c)
    assert n == 0 and res < 1e-9


def test_chern_number_flags_non_integral():
    # unit flux through half the x-columns only: total flux is ~half a quantum
    r = 32
    samples = np.zeros((2, r, r, 1, 1), dtype=complex)
    z = np.arange(r) / r
    window = (np.arange(r) < r // 2).astype(float)
    samples[1, :, :, 0, 0] = (-2j * np.pi * z)[:, None] * window[None, :]
    with pytest.raises(IntegralityError):
        chern_number(GridConnection(2, r, 1, samples))


def test_chern_number_needs_distinct_axes():
    with pytest.raises(ValueError):
        chern_number(poincare_connection(8), (1, 1))


# ---------------------------------------------------------------------------
# winding numbers
# ---------------------------------------------------------------------------


def _scalar_loop(fn, samples=257):
    ts = np.linspace(0.0, 1.0, samples)
    return [np.array([[fn(t)]]) for t in ts]


def test_winding_constant_loop():
    assert winding_number(_scalar_loop(lambda t: 1.7 + 0.2j)) == 0


def test_winding_basic_convention():
    assert winding_number(_scalar_loop(lambda t: np.exp(2j * np.pi * t))) == 1
    assert winding_number(_scalar_loop(lambda t: np.exp(-2j * np.pi * t))) == -1


def test_winding_diagonal_determinant():
    # oracle: brute-force accumulated argument of det = e^{2pi i t} e^{-4pi i t}
    ts = np.linspace(0.0, 1.0, 513)
    dets = np.exp(2j * np.pi * ts) * np.exp(-4j * np.pi * ts)
    acc = np.angle(dets[1:] / dets[:-1]).sum() / (2 * np.pi)
    assert round(acc) == -1

    loop = [
        np.diag([np.exp(2j * np.pi * t), np.exp(-4j * np.pi * t)]) for t in ts
    ]
    assert winding_number(loop) == -1


def test_winding_undersampled_error():
    loop = _scalar_loop(lambda t: np.exp(2j * np.pi * t), samples=3)
    with pytest.raises(UnderSampledLoopError):
        winding_number(loop)


def test_winding_open_loop_error():
    ts = np.linspace(0.0, 0.9, 100)
    loop = [np.array([[np.exp(2j * np.pi * t)]]) for t in ts]
    with pytest.raises(ValueError, match="not closed"):
        winding_number(loop)


def test_winding_additive_under_block_sums():
    rng = np.random.default_rng(21)
    ts = np.linspace(0.0, 1.0, 257)
    for _ in range(25):
        k1, k2 = rng.integers(-3, 4, size=2)
        loop = [
            np.diag([np.exp(2j * np.pi * k1 * t), np.exp(2j * np.pi * k2 * t)])
            for t in ts
        ]
        assert winding_number(loop) == k1 + k2


def test_winding_homotopy_stability():
    rng = np.random.default_rng(22)
    ts = np.linspace(0.0, 1.0, 257)
    base = [np.array([[np.exp(2j * np.pi * 2 * t)]]) for t in ts]
    pert = rng.uniform(-0.04, 0.04, len(ts)) + 1j * rng.uniform(-0.04, 0.04, len(ts))
    pert[-1] = pert[0]  # keep the loop closed
    bumped = [m * (1 + p) for m, p in zip(base, pert)]
    assert winding_number(bumped) == winding_number(base) == 2


def test_exact_numeric_cross_validation():
    # the z^x coefficient of the rank-1 character family and the integrated
    # first Chern number of its standard connection agree in absolute value;
    # the relative sign is the globally recorded convention
    from flatdetect.charforms import SIGN_CONVENTIONS
    from flatdetect.families import character_family_Zn

    exact = character_family_Zn(1, 8).chern[0].coefficient((("z", 1), ("x", 1)))
    numeric, residual = chern_number(poincare_connection(64))
    assert residual <= 1e-6
    assert abs(numeric) == abs(int(exact)) == 1
    assert numeric == -int(exact)
    assert "relation" in SIGN_CONVENTIONS
