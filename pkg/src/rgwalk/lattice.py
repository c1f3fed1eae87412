"""Circle lattice and discrete Fourier transform conventions.

Sites are labelled ``m = -M..M`` and stored at array index ``m + M``.  The
forward transform uses the ``exp(+i k m)`` kernel without normalization and
the inverse carries the ``1/(2M+1)`` factor::

    A_hat[k_n] = sum_m A[m] exp(+i k_n m)
    A[m]       = 1/(2M+1) sum_n A_hat[k_n] exp(-i k_n m)

with ``k_n = 2 pi n / (2M+1)``.  NumPy's FFT uses the opposite sign in its
forward transform, so :func:`dft_forward` is built on ``numpy.fft.ifft``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CircleGrid:
    """Periodic lattice ``{-M, ..., M}`` of ``2M + 1`` sites."""

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def size(self) -> int:
        return 2 * self.M + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        # each k_n is computed from the integer n directly, never accumulated
        return 2.0 * np.pi * self.sites / self.size

    def index(self, m):
        """Array index of site(s) ``m``, wrapping periodically."""
        return (np.asarray(m) + self.M) % self.size


@dataclass(frozen=True)
class ComplexSequence:
    """One complex value per site of ``grid`` (or per wavenumber)."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)


def _forward(values: np.ndarray, axis: int = -1) -> np.ndarray:
    n = values.shape[axis]
    shifted = np.fft.ifftshift(values, axes=axis)
    return np.fft.fftshift(np.fft.ifft(shifted, axis=axis), axes=axis) * n


def _inverse(values: np.ndarray, axis: int = -1) -> np.ndarray:
    n = values.shape[axis]
    shifted = np.fft.ifftshift(values, axes=axis)
    return np.fft.fftshift(np.fft.fft(shifted, axis=axis), axes=axis) / n


def dft_forward(seq: ComplexSequence) -> ComplexSequence:
    """Forward transform ``sum_m A_m exp(+i k_n m)``, indexed by ``n = -M..M``."""
    return ComplexSequence(seq.grid, _forward(seq.values))


def dft_inverse(modes: ComplexSequence) -> ComplexSequence:
    """Inverse of :func:`dft_forward`."""
    return ComplexSequence(modes.grid, _inverse(modes.values))


def dft_forward_array(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Array version of :func:`dft_forward` acting along ``axis``."""
    return _forward(np.asarray(values, dtype=np.complex128), axis)


def dft_inverse_array(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Array version of :func:`dft_inverse` acting along ``axis``."""
    return _inverse(np.asarray(values, dtype=np.complex128), axis)


def dft_matrix(grid: CircleGrid) -> np.ndarray:
    """Dense ``(2M+1, 2M+1)`` matrix of the forward transform.

    Used as a direct O(N^2) reference for the FFT-backed path.
    """
    k = grid.wavenumbers
    m = grid.sites
    return np.exp(1j * np.outer(k, m))
