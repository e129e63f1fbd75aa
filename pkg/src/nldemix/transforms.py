"""Orthonormal bases and the stacked two-basis dictionary.

A :class:`Basis` is an orthonormal transform on R^n addressed by a string
kind ("identity", "dct", "haar").  ``basis_apply`` is synthesis (coefficients
to signal, the matrix Phi acting on a vector) and ``basis_adjoint`` is
analysis (Phi^T).  A :class:`Dictionary` stacks two bases into
Gamma = [Phi  Psi] acting on constituent vectors t = [w; z] of length 2n,
so that ``dict_apply`` computes Phi w + Psi z and ``dict_adjoint`` computes
[Phi^T x; Psi^T x].  Because both bases are orthonormal, Gamma Gamma^T = 2 I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

BASIS_KINDS = ("identity", "dct", "haar")

_SQRT2 = np.sqrt(2.0)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis of R^n selected by kind.

    kind : one of "identity", "dct", "haar".  The DCT is the orthonormal
        DCT-II convention whose first atom is the constant vector 1/sqrt(n).
        "haar" requires n to be a power of two.
    n : dimension.
    """

    kind: str
    n: int

    def __post_init__(self) -> None:
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {BASIS_KINDS}")
        if self.n < 1:
            raise ValueError(f"basis dimension must be positive, got {self.n}")
        if self.kind == "haar" and not _is_power_of_two(self.n):
            raise ValueError(f"haar basis requires n to be a power of two, got {self.n}")


@dataclass(frozen=True)
class Dictionary:
    """The n x 2n dictionary Gamma = [Phi  Psi] built from two bases."""

    phi: Basis
    psi: Basis

    def __post_init__(self) -> None:
        if self.phi.n != self.psi.n:
            raise ValueError(
                f"bases must share a dimension, got {self.phi.n} and {self.psi.n}"
            )

    @property
    def n(self) -> int:
        return self.phi.n


def _haar_synthesis(coeffs: np.ndarray) -> np.ndarray:
    """Inverse lifting cascade along the last axis.

    Coefficient layout: [approx, d_coarsest, ..., d_finest].
    """
    n = coeffs.shape[-1]
    a = coeffs[..., :1].copy()
    size = 1
    while size < n:
        d = coeffs[..., size : 2 * size]
        out = np.empty(coeffs.shape[:-1] + (2 * size,), dtype=np.result_type(coeffs, float))
        out[..., 0::2] = (a + d) / _SQRT2
        out[..., 1::2] = (a - d) / _SQRT2
        a = out
        size *= 2
    return a


def _haar_analysis(x: np.ndarray) -> np.ndarray:
    """Forward lifting cascade along the last axis."""
    n = x.shape[-1]
    out = np.empty(x.shape[:-1] + (n,), dtype=np.result_type(x, float))
    a = np.asarray(x, dtype=float)
    pos = n
    while a.shape[-1] > 1:
        even = a[..., 0::2]
        odd = a[..., 1::2]
        half = even.shape[-1]
        out[..., pos - half : pos] = (even - odd) / _SQRT2
        a = (even + odd) / _SQRT2
        pos -= half
    out[..., 0] = a[..., 0]
    return out


def _synthesis(b: Basis, coeffs: np.ndarray) -> np.ndarray:
    # Operates along the last axis so diagnostics can batch rows.
    if b.kind == "identity":
        return np.asarray(coeffs, dtype=float).copy()
    if b.kind == "dct":
        return idct(np.asarray(coeffs, dtype=float), norm="ortho", axis=-1)
    return _haar_synthesis(np.asarray(coeffs, dtype=float))


def _analysis(b: Basis, x: np.ndarray) -> np.ndarray:
    if b.kind == "identity":
        return np.asarray(x, dtype=float).copy()
    if b.kind == "dct":
        return dct(np.asarray(x, dtype=float), norm="ortho", axis=-1)
    return _haar_analysis(np.asarray(x, dtype=float))


def _check_length(v: np.ndarray, n: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != n:
        raise ValueError(f"{what} must be a vector of length {n}, got shape {v.shape}")
    return v


def basis_apply(b: Basis, coeffs: np.ndarray) -> np.ndarray:
    """Synthesis Phi @ coeffs; preserves the l2 norm."""
    return _synthesis(b, _check_length(coeffs, b.n, "coeffs"))


def basis_adjoint(b: Basis, x: np.ndarray) -> np.ndarray:
    """Analysis Phi^T @ x; inverse of :func:`basis_apply`."""
    return _analysis(b, _check_length(x, b.n, "x"))


def basis_matrix(b: Basis) -> np.ndarray:
    """Materialized n x n synthesis matrix (columns are the atoms).

    Intended for small-n testing and diagnostics; O(n^2) memory.
    """
    return _synthesis(b, np.eye(b.n)).T


def split_constituents(t: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a stacked vector t = [w; z] of length 2n into (w, z)."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.shape[0] != 2 * n:
        raise ValueError(f"constituent vector must have length {2 * n}, got shape {t.shape}")
    return t[:n].copy(), t[n:].copy()


def stack_constituents(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Stack (w, z) into t = [w; z]."""
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if w.shape != z.shape or w.ndim != 1:
        raise ValueError(f"w and z must be vectors of equal length, got {w.shape} and {z.shape}")
    return np.concatenate([w, z])


def dict_apply(d: Dictionary, t: np.ndarray) -> np.ndarray:
    """Gamma @ t = Phi w + Psi z for t = [w; z]."""
    w, z = split_constituents(t, d.n)
    return _synthesis(d.phi, w) + _synthesis(d.psi, z)


def dict_adjoint(d: Dictionary, x: np.ndarray) -> np.ndarray:
    """Gamma^T @ x = [Phi^T x; Psi^T x]; dict_apply(dict_adjoint(x)) = 2x."""
    x = _check_length(x, d.n, "x")
    return np.concatenate([_analysis(d.phi, x), _analysis(d.psi, x)])
