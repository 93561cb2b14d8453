"""Spectral transforms on the circle and on the Gauss product grid of S^2.

The zonal operator ``G -> int G(xi) |xi . x|^p dxi`` is diagonal in the
Fourier (circle) or spherical harmonic (sphere) basis, so it can be applied
exactly on band-limited data.  The same machinery yields derivatives of
sampled support functions, which is what the surface density needs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, gammasgn


def funk_hecke_eigenvalues(dim: int, p: float, lmax: int) -> np.ndarray:
    """Eigenvalues of ``f -> int_S f(xi) |xi . x|^p dxi`` on degree-l harmonics.

    Odd degrees vanish because the kernel is even.
    """
    ell = np.arange(lmax + 1, dtype=float)
    if dim == 2:
        log_c = math.log(4.0 * math.pi) - (p + 1.0) * math.log(2.0)
        a = 1.0 + (p + ell) / 2.0
        b = 1.0 + (p - ell) / 2.0
    elif dim == 3:
        log_c = math.log(4.0 * math.pi**1.5) - (p + 1.0) * math.log(2.0)
        a = p / 2.0 + ell / 2.0 + 1.5
        b = 1.0 + p / 2.0 - ell / 2.0
    else:
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    pole = (b <= 0) & (b == np.round(b))
    bs = np.where(pole, 0.5, b)
    mag = np.exp(log_c + gammaln(p + 1.0) - gammaln(a) - gammaln(bs))
    lam = mag * gammasgn(a) * gammasgn(bs)
    lam[pole] = 0.0
    lam[1::2] = 0.0
    return lam


def legendre_table(t: np.ndarray, lmax: int) -> np.ndarray:
    """Normalized associated Legendre functions ``P[m, l, j]``.

    Normalization is ``int_{-1}^{1} P[m, l]^2 dt = 1`` (Condon-Shortley phase).
    """
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    out = np.zeros((lmax + 1, lmax + 1, t.size))
    pmm = np.full(t.size, 1.0 / math.sqrt(2.0))
    for m in range(lmax + 1):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 > lmax:
            continue
        out[m, m + 1] = math.sqrt(2 * m + 3) * t * pmm
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            out[m, ell] = a * (t * out[m, ell - 1] - b * out[m, ell - 2])
    return out


def legendre_theta_derivative(t: np.ndarray, table: np.ndarray) -> np.ndarray:
    """``d/dtheta`` of a Legendre table built at ``t = cos(theta)``."""
    t = np.asarray(t, dtype=float)
    lmax = table.shape[1] - 1
    sin_theta = np.sqrt(1.0 - t * t)
    out = np.zeros_like(table)
    for m in range(lmax + 1):
        for ell in range(max(m, 1), lmax + 1):
            term = ell * t * table[m, ell]
            if ell - 1 >= m:
                c = math.sqrt((2 * ell + 1) * (ell * ell - m * m) / (2 * ell - 1))
                term = term - c * table[m, ell - 1]
            out[m, ell] = term / sin_theta
    return out


class CircleTransform:
    """Real Fourier analysis on ``N`` equispaced angles ``2 pi k / N``."""

    def __init__(self, n_angles: int):
        self.n = int(n_angles)
        self.angles = 2.0 * np.pi * np.arange(self.n) / self.n

    def forward(self, values: np.ndarray) -> np.ndarray:
        # c_k = int_0^{2pi} f e^{-ik phi} dphi (trapezoid)
        return np.fft.rfft(values) * (2.0 * np.pi / self.n)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs, n=self.n) * (self.n / (2.0 * np.pi))

    def evaluate(self, coeffs: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary angles."""
        angles = np.asarray(angles, dtype=float)
        k = np.arange(coeffs.size)
        weight = np.full(coeffs.size, 2.0)
        weight[0] = 1.0
        if self.n % 2 == 0:
            weight[-1] = 1.0
        phase = np.exp(1j * np.outer(angles, k))
        return (phase @ (weight * coeffs)).real / (2.0 * np.pi)

    def derivative(self, coeffs: np.ndarray, order: int) -> np.ndarray:
        k = np.arange(coeffs.size)
        out = coeffs * (1j * k) ** order
        if order % 2 == 1 and self.n % 2 == 0:
            out[-1] = 0.0
        return out

    def zonal(self, values: np.ndarray, p: float) -> np.ndarray:
        lam = funk_hecke_eigenvalues(2, p, self.n // 2)
        return self.forward(values) * lam


class SphereTransform:
    """Spherical harmonic analysis on a Gauss-Legendre x equispaced grid.

    Grid values have shape ``(n_theta, n_phi)`` with polar nodes ``t_j``
    (cosines) and azimuths ``2 pi k / n_phi``.  Coefficients ``a[m, l]`` are
    stored for ``m >= 0``; negative orders follow from reality.
    """

    def __init__(self, t: np.ndarray, wt: np.ndarray, n_phi: int):
        self.t = np.asarray(t, dtype=float)
        self.wt = np.asarray(wt, dtype=float)
        self.n_phi = int(n_phi)
        self.lmax = self.t.size - 1
        if self.n_phi < 2 * self.lmax + 2:
            raise ValueError("azimuthal grid too coarse for the polar order")
        self.table = legendre_table(self.t, self.lmax)
        self._dtable = None

    @property
    def dtable(self) -> np.ndarray:
        if self._dtable is None:
            self._dtable = legendre_theta_derivative(self.t, self.table)
        return self._dtable

    def forward(self, grid: np.ndarray) -> np.ndarray:
        grid = np.asarray(grid, dtype=float).reshape(self.t.size, self.n_phi)
        am = np.fft.rfft(grid, axis=1)[:, : self.lmax + 1] * (2.0 * np.pi / self.n_phi)
        return np.einsum("mlj,jm->ml", self.table, self.wt[:, None] * am)

    def _from_modes(self, modes: np.ndarray) -> np.ndarray:
        # modes[j, m] = A_m(t_j); returns grid values
        full = np.zeros((modes.shape[0], self.n_phi // 2 + 1), dtype=complex)
        full[:, : self.lmax + 1] = modes
        return np.fft.irfft(full, n=self.n_phi, axis=1) * (self.n_phi / (2.0 * np.pi))

    def synthesize(self, coeffs: np.ndarray, table: np.ndarray | None = None) -> np.ndarray:
        table = self.table if table is None else table
        modes = np.einsum("ml,mlj->jm", coeffs, table)
        return self._from_modes(modes)

    def synthesize_phi(self, coeffs: np.ndarray, order: int, table: np.ndarray | None = None) -> np.ndarray:
        table = self.table if table is None else table
        m = np.arange(self.lmax + 1)
        modes = np.einsum("ml,mlj->jm", coeffs * ((1j * m) ** order)[:, None], table)
        return self._from_modes(modes)

    def evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the harmonic expansion at unit vectors ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tz = np.clip(points[:, 2], -1.0, 1.0)
        phi = np.arctan2(points[:, 1], points[:, 0])
        out = np.empty(points.shape[0])
        chunk = 256
        m = np.arange(self.lmax + 1)
        weight = np.full(self.lmax + 1, 2.0)
        weight[0] = 1.0
        for start in range(0, points.shape[0], chunk):
            sl = slice(start, start + chunk)
            table = legendre_table(tz[sl], self.lmax)
            modes = np.einsum("ml,mlj->jm", coeffs, table)
            phase = np.exp(1j * np.outer(phi[sl], m))
            out[sl] = (modes * phase * weight).real.sum(axis=1) / (2.0 * np.pi)
        return out

    def zonal(self, grid: np.ndarray, p: float) -> np.ndarray:
        lam = funk_hecke_eigenvalues(3, p, self.lmax)
        return self.forward(grid) * lam[None, :]
