"""Fourier machinery on uniform grids over the flat torus (period 2 pi per axis).

Grid functions are stored flattened: shape ``(N**n, *trailing)`` with the
grid axes in C order (``indexing="ij"``).
"""

from __future__ import annotations

import numpy as np


def angles(N: int, n: int) -> np.ndarray:
    """Grid angles, shape (N**n, n)."""
    theta = 2.0 * np.pi * np.arange(N) / N
    mesh = np.meshgrid(*([theta] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def wavenumbers(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, 1.0 / N)


def _to_grid(f, N, n):
    f = np.asarray(f)
    return f.reshape((N,) * n + f.shape[1:])


def derivative(f, N: int, n: int, axis: int) -> np.ndarray:
    """Spectral d/dtheta_axis of a flattened grid function."""
    F = _to_grid(f, N, n)
    k = wavenumbers(N)
    if N % 2 == 0:
        k[N // 2] = 0.0
    shape = [1] * F.ndim
    shape[axis] = N
    Fk = np.fft.fft(F, axis=axis) * (1j * k).reshape(shape)
    out = np.fft.ifft(Fk, axis=axis)
    if not np.iscomplexobj(f):
        out = out.real
    return out.reshape(np.shape(f))


def gradient(f, N: int, n: int) -> np.ndarray:
    """All parameter derivatives; result shape (P, n, *trailing)."""
    return np.stack([derivative(f, N, n, k) for k in range(n)], axis=1)


def quadrature(f, N: int, n: int) -> complex:
    """Trapezoidal rule on the torus (spectrally accurate for periodic data)."""
    f = np.asarray(f)
    return np.sum(f, axis=0) * (2.0 * np.pi / N) ** n


def coefficients(f, N: int, n: int) -> np.ndarray:
    """Fourier coefficients c_k with f = sum c_k exp(i k.theta); grid-shaped, FFT order."""
    F = _to_grid(f, N, n)
    return np.fft.fftn(F, axes=tuple(range(n))) / N**n


def tail_mass(f, N: int, n: int) -> float:
    """Relative coefficient mass in the outer half of the resolved band."""
    c = np.abs(coefficients(f, N, n))
    if c.ndim > n:
        c = c.reshape(c.shape[:n] + (-1,)).max(axis=-1)
    k = np.abs(wavenumbers(N))
    kmax = np.max(np.meshgrid(*([k] * n), indexing="ij"), axis=0)
    total = c.sum()
    if total == 0:
        return 0.0
    return float(c[kmax > N // 4].sum() / total)
