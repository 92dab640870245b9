import numpy as np
import pytest

from toruskit.fourier import (FourierForm, FourierFormSpace, canonical_frame,
                              dbar, dbar_star, green, harmonic_part,
                              laplace_scalar, wedge)


def make_space(n=3, bound=3):
    return FourierFormSpace(n, bound)


def random_form(space, q, extra=(), nmodes=4, seed=0):
    rng = np.random.default_rng(seed)
    modes = {}
    for _ in range(nmodes):
        m = tuple(int(x) for x in rng.integers(-2, 3, 2 * space.n))
        shape = (space.ncomp(q),) + extra
        modes[m] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return FourierForm(space, q, modes, extra=extra)


def inner(x, y):
    total = 0.0 + 0j
    for m, c in x.modes.items():
        if m in y.modes:
            total += np.vdot(c, y.modes[m])
    return total


def test_zeta_matches_standard_coordinates():
    sp = make_space()
    z = sp.zeta((1, 0, 0, 0, 0, 0))
    assert np.allclose(z, [0.5, 0, 0])
    z = sp.zeta((0, 0, 0, 1, 0, 0))
    assert np.allclose(z, [0.5j, 0, 0])


def test_dbar_squares_to_zero():
    sp = make_space()
    for q, extra in ((0, (2, 2)), (1, ()), (0, ())):
        f = random_form(sp, q, extra, seed=q)
        assert dbar(dbar(f)).norm() < 1e-12 * max(f.norm(), 1)


def test_adjointness():
    sp = make_space()
    a = random_form(sp, 1, seed=1)
    b = random_form(sp, 2, seed=1)  # same seed -> same mode support
    assert abs(inner(dbar(a), b) - inner(a, dbar_star(b))) < 1e-10


def test_clifford_scalar_laplacian():
    sp = make_space()
    m = (1, -2, 0, 3, 0, 1)
    lam = laplace_scalar(sp, m)
    f = random_form(sp, 1, seed=2)
    f = FourierForm(sp, 1, {m: f.modes[next(iter(f.modes))]})
    delta = dbar_star(dbar(f)) + dbar(dbar_star(f))
    for mm, c in delta.modes.items():
        assert np.abs(c - lam * f.modes[mm]).max() < 1e-9


def test_hodge_identity_on_01():
    sp = make_space()
    a = random_form(sp, 1, seed=3)
    lhs = harmonic_part(a) + dbar(green(a)) + green(dbar(a))
    assert (lhs - a).norm() < 1e-12


def test_harmonic_is_zero_mode():
    sp = make_space()
    a = random_form(sp, 1, seed=4)
    zero_mode = (0,) * 6
    coeff = np.ones((3,), complex)
    a = a + FourierForm(sp, 1, {zero_mode: coeff})
    h = harmonic_part(a)
    assert list(h.modes) == [zero_mode]


def test_twisted_sector_has_no_harmonics():
    sp = make_space()
    twist = np.zeros(6)
    twist[2] = 0.25
    a = random_form(sp, 1, seed=5)
    zero_mode = (0,) * 6
    a = a + FourierForm(sp, 1, {zero_mode: np.ones(3, complex)})
    # twisted Laplacian is invertible on every mode
    for m in a.modes:
        assert laplace_scalar(sp, m, twist) > 1e-3
    lhs = dbar(green(a, twist), twist) + green(dbar(a, twist), twist)
    assert (lhs - a).norm() < 1e-12


def test_wedge_truncates_to_cube():
    sp = FourierFormSpace(3, 1)
    m = (1, 0, 0, 0, 0, 0)
    c = np.zeros(3, complex)
    c[0] = 1.0
    f = FourierForm(sp, 1, {m: c})
    g = FourierForm(sp, 1, {m: np.array([0, 1.0, 0], complex)})
    prod = wedge(f, g)
    assert prod.modes == {}  # mode (2,0,...) is outside |m| <= 1


def test_wedge_composition_order():
    sp = make_space()
    a = np.zeros((3, 2, 2), complex)
    a[0] = [[0, 1], [0, 0]]
    b = np.zeros((3, 2, 2), complex)
    b[1] = [[0, 0], [1, 0]]
    f = FourierForm(sp, 1, {(0,) * 6: a}, extra=(2, 2))
    g = FourierForm(sp, 1, {(0,) * 6: b}, extra=(2, 2))
    fg = wedge(f, g)
    coeff = fg.modes[(0,) * 6]
    # dz1^dz2 component carries f's matrix on the left: E12 @ E21 = E11
    assert np.allclose(coeff[0], [[1, 0], [0, 0]])
    gf = wedge(g, f)
    # opposite composition, opposite form order sign
    assert np.allclose(gf.modes[(0,) * 6][0], [[0, 0], [0, -1]])


def test_dbar_star_on_functions_rejected():
    sp = make_space()
    f = random_form(sp, 0, seed=6)
    with pytest.raises(ValueError):
        dbar_star(f)


def test_canonical_frame_shape():
    b = canonical_frame(3)
    assert b.shape == (6, 3)
    c = np.hstack([b.conj(), b])
    assert np.linalg.matrix_rank(c) == 6


def test_coefficient_shape_validation():
    sp = make_space()
    with pytest.raises(ValueError):
        FourierForm(sp, 1, {(0,) * 6: np.zeros(4, complex)})
