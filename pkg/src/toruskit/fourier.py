"""Truncated Fourier-side Dolbeault complex of the flat torus.

A mode is a lattice character m in Z^{2n}; on the mode e^{2 pi i (m+twist).x}
the d-bar operator wedges with the (0,1) part of the covector, whose
components in the chosen frame are frame^T (m + twist). The Laplacian is
scalar per mode (Clifford identity), so the Green operator is an explicit
mode-diagonal contraction: that is the whole reason the Massey recursion is
cheap here.

Forms are stored sparsely per mode. Coefficients are arrays of shape
(ncomp(q),) for scalar forms or (ncomp(q), R, R) for End-valued ones; the
wedge composes matrix factors (form factor of the left operand first).
"""

from __future__ import annotations

import numpy as np

from .hodge import basis_subsets, merge_sign, subset_index

TWO_PI = 2.0 * np.pi


def canonical_frame(n: int) -> np.ndarray:
    """V^{0,1} frame of the standard structure: columns (e_a + i e_{n+a})/2."""
    b = np.zeros((2 * n, n), dtype=complex)
    for a in range(n):
        b[a, a] = 0.5
        b[n + a, a] = 0.5j
    return b


class FourierFormSpace:
    """(0,q)-forms with Fourier modes in the cube |m_k| <= mode_bound."""

    def __init__(self, n: int, mode_bound: int = 4, frame: np.ndarray | None = None):
        if mode_bound < 1:
            raise ValueError("mode bound must be >= 1")
        self.n = int(n)
        self.mode_bound = int(mode_bound)
        self.frame = canonical_frame(n) if frame is None else np.asarray(frame, complex)
        if self.frame.shape != (2 * n, n):
            raise ValueError(f"frame must be 2n x n, got {self.frame.shape}")

    def ncomp(self, q: int) -> int:
        return len(basis_subsets(self.n, q))

    def in_bounds(self, mode) -> bool:
        return all(abs(int(k)) <= self.mode_bound for k in mode)

    def zeta(self, mode, twist=None) -> np.ndarray:
        v = np.asarray(mode, dtype=float)
        if twist is not None:
            v = v + np.asarray(twist, dtype=float)
        return self.frame.T @ v

    def zero(self, q: int, extra: tuple = ()) -> "FourierForm":
        return FourierForm(self, q, {}, extra=extra)

    def constant(self, q: int, coeff: np.ndarray) -> "FourierForm":
        """Mode-0 form with the given coefficient array."""
        coeff = np.asarray(coeff, dtype=complex)
        extra = coeff.shape[1:]
        zero_mode = (0,) * (2 * self.n)
        return FourierForm(self, q, {zero_mode: coeff}, extra=extra)


class FourierForm:
    """Sparse (0,q)-form: mode tuple -> coefficient array."""

    def __init__(self, space: FourierFormSpace, q: int, modes: dict,
                 extra: tuple = ()):
        self.space = space
        self.q = int(q)
        self.extra = tuple(extra)
        want = (space.ncomp(q),) + self.extra
        self.modes = {}
        for m, c in modes.items():
            c = np.asarray(c, dtype=complex)
            if c.shape != want:
                raise ValueError(f"coefficient shape {c.shape}, expected {want}")
            if space.in_bounds(m) and np.any(c != 0):
                self.modes[tuple(int(k) for k in m)] = c.copy()

    def copy(self) -> "FourierForm":
        return FourierForm(self.space, self.q, self.modes, extra=self.extra)

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c in self.modes.values())))

    def __add__(self, other: "FourierForm") -> "FourierForm":
        if (self.q, self.extra) != (other.q, other.extra):
            raise ValueError("form degree/value shape mismatch")
        out = dict(self.modes)
        for m, c in other.modes.items():
            out[m] = out[m] + c if m in out else c
        return FourierForm(self.space, self.q, out, extra=self.extra)

    def __sub__(self, other: "FourierForm") -> "FourierForm":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "FourierForm":
        return FourierForm(self.space, self.q,
                           {m: c * scalar for m, c in self.modes.items()},
                           extra=self.extra)

    __rmul__ = __mul__


def _wedge_covector(space: FourierFormSpace, zeta: np.ndarray,
                    coeff: np.ndarray, q: int) -> np.ndarray:
    n = space.n
    idx = subset_index(n, q + 1)
    out = np.zeros((space.ncomp(q + 1),) + coeff.shape[1:], dtype=complex)
    for pos, s in enumerate(basis_subsets(n, q)):
        c = coeff[pos]
        for a in range(n):
            if zeta[a] == 0:
                continue
            merged, sign = merge_sign((a,), s)
            if merged is not None:
                out[idx[merged]] += sign * zeta[a] * c
    return out


def _contract_vector(space: FourierFormSpace, v: np.ndarray,
                     coeff: np.ndarray, q: int) -> np.ndarray:
    n = space.n
    idx = subset_index(n, q - 1)
    out = np.zeros((space.ncomp(q - 1),) + coeff.shape[1:], dtype=complex)
    for pos, s in enumerate(basis_subsets(n, q)):
        c = coeff[pos]
        for j, sj in enumerate(s):
            rest = s[:j] + s[j + 1:]
            out[idx[rest]] += ((-1) ** j) * v[sj] * c
    return out


def dbar(form: FourierForm, twist=None) -> FourierForm:
    space = form.space
    out = {}
    for m, c in form.modes.items():
        z = TWO_PI * 1j * space.zeta(m, twist)
        out[m] = _wedge_covector(space, z, c, form.q)
    return FourierForm(space, form.q + 1, out, extra=form.extra)


def dbar_star(form: FourierForm, twist=None) -> FourierForm:
    if form.q == 0:
        raise ValueError("dbar_star is undefined on (0,0)-forms")
    space = form.space
    out = {}
    for m, c in form.modes.items():
        z = space.zeta(m, twist)
        out[m] = (-TWO_PI * 1j) * _contract_vector(space, z.conj(), c, form.q)
    return FourierForm(space, form.q - 1, out, extra=form.extra)


def laplace_scalar(space: FourierFormSpace, mode, twist=None) -> float:
    z = space.zeta(mode, twist)
    return float(TWO_PI ** 2 * np.sum(np.abs(z) ** 2))


def green(form: FourierForm, twist=None) -> FourierForm:
    """Partial inverse of d-bar on its image: dbar_star / Laplacian, zero on
    the harmonic (zero) modes."""
    space = form.space
    out = {}
    for m, c in form.modes.items():
        lam = laplace_scalar(space, m, twist)
        if lam < 1e-24:
            continue
        z = space.zeta(m, twist)
        out[m] = (-TWO_PI * 1j / lam) * _contract_vector(space, z.conj(), c, form.q)
    return FourierForm(space, form.q - 1, out, extra=form.extra)


def harmonic_part(form: FourierForm, twist=None) -> FourierForm:
    """Zero-mode extraction: modes whose twisted covector vanishes."""
    space = form.space
    out = {}
    for m, c in form.modes.items():
        v = np.asarray(m, dtype=float)
        if twist is not None:
            v = v + np.asarray(twist, dtype=float)
        if np.max(np.abs(v)) < 1e-12:
            out[m] = c
    return FourierForm(space, form.q, out, extra=form.extra)


def wedge(f: FourierForm, g: FourierForm) -> FourierForm:
    """Composition wedge: form factors wedge, value factors compose (f's
    matrix on the left). Modes outside the cube are truncated away."""
    space = f.space
    if g.space is not space and (g.space.n != space.n
                                 or g.space.mode_bound != space.mode_bound):
        raise ValueError("forms live in different spaces")
    n = space.n
    q_out = f.q + g.q
    idx = subset_index(n, q_out)
    subs_f = basis_subsets(n, f.q)
    subs_g = basis_subsets(n, g.q)
    if f.extra and g.extra:
        extra = (f.extra[0], g.extra[1])
    else:
        extra = f.extra or g.extra
    out_modes = {}
    for m1, c1 in f.modes.items():
        for m2, c2 in g.modes.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            if not space.in_bounds(m):
                continue
            acc = out_modes.get(m)
            if acc is None:
                acc = np.zeros((space.ncomp(q_out),) + extra, dtype=complex)
                out_modes[m] = acc
            for i1, s1 in enumerate(subs_f):
                a1 = c1[i1]
                for i2, s2 in enumerate(subs_g):
                    merged, sign = merge_sign(s1, s2)
                    if merged is None:
                        continue
                    if f.extra and g.extra:
                        acc[idx[merged]] += sign * (a1 @ c2[i2])
                    else:
                        acc[idx[merged]] += sign * (a1 * c2[i2])
    return FourierForm(space, q_out, out_modes, extra=extra)
