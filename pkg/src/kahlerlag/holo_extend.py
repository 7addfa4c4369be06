"""Holomorphic extension of periodic analytic data by Fourier continuation.

A real-analytic function on the torus, f = sum c_k exp(i k.theta), extends
to complexified angles w = theta + i phi by the same series; the extension is
holomorphic wherever the series converges, and unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import spectral
from .errors import ExtensionError
from .submanifold import TOTALLY_REAL_TOL, TorusImmersion, totally_real_margin

EPS = np.finfo(float).eps
HEADROOM = 1e6 * EPS
MAX_HALF_WIDTH = 5.0


@dataclass(frozen=True)
class ComplexTube:
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("tube half-width must be positive")

    def contains(self, w) -> bool:
        return bool(np.all(np.abs(np.imag(w)) <= self.eta * (1 + 1e-12)))


@dataclass(frozen=True, eq=False)
class FourierSeries:
    coeffs: np.ndarray  # grid-shaped, FFT order
    N: int
    n: int

    @classmethod
    def from_samples(cls, samples, N: int, n: int) -> "FourierSeries":
        return cls(spectral.coefficients(samples, N, n), N, n)

    @classmethod
    def from_function(cls, f, N: int, n: int) -> "FourierSeries":
        return cls.from_samples(f(spectral.angles(N, n)), N, n)

    @cached_property
    def modes(self):
        """(k, c) with the Nyquist coefficient split evenly between +-N/2."""
        k1 = spectral.wavenumbers(self.N).astype(int)
        mesh = np.meshgrid(*([k1] * self.n), indexing="ij")
        k = np.stack([m.ravel() for m in mesh], axis=-1)
        c = self.coeffs.ravel().astype(complex)
        if self.N % 2 == 0:
            for axis in range(self.n):
                nyq = k[:, axis] == -self.N // 2
                k_new = k[nyq].copy()
                k_new[:, axis] = self.N // 2
                c = c.copy()
                c[nyq] *= 0.5
                k = np.concatenate([k, k_new])
                c = np.concatenate([c, c[nyq]])
        keep = np.abs(c) > 1e-16 * max(np.abs(c).max(), 1e-300)
        return k[keep], c[keep]

    @property
    def bandwidth(self) -> int:
        k, _ = self.modes
        return int(np.max(np.abs(k))) if len(k) else 0

    def is_real(self, tol: float = 1e-12) -> bool:
        C = self.coeffs
        flipped = np.roll(np.flip(C, axis=tuple(range(self.n))), 1, axis=tuple(range(self.n)))
        return bool(np.max(np.abs(C - np.conj(flipped))) <= tol * max(1.0, np.abs(C).max()))

    def truncate(self, K: int) -> "FourierSeries":
        k1 = np.abs(spectral.wavenumbers(self.N))
        kmax = np.max(np.meshgrid(*([k1] * self.n), indexing="ij"), axis=0)
        return FourierSeries(np.where(kmax <= K, self.coeffs, 0.0), self.N, self.n)

    def amplified_mass(self, eta: float, outside: int | None = None) -> float:
        """sum |c_k| exp(|k|_1 eta), optionally only over modes with max|k_i| > outside."""
        k, c = self.modes
        if outside is not None:
            sel = np.max(np.abs(k), axis=1) > outside
            k, c = k[sel], c[sel]
        return float(np.sum(np.abs(c) * np.exp(np.sum(np.abs(k), axis=1) * eta)))

    def tail_bound(self, K: int, eta: float) -> float:
        return self.amplified_mass(eta, outside=K)

    def max_half_width(self) -> float:
        """Largest eta keeping the amplified outer-shell mass within the roundoff headroom."""
        total = self.amplified_mass(0.0)
        if total == 0:
            return MAX_HALF_WIDTH
        shell = self.N // 4

        def ok(eta):
            return self.amplified_mass(eta, outside=shell) <= HEADROOM * total

        if not ok(0.0):
            return 0.0
        if ok(MAX_HALF_WIDTH):
            return MAX_HALF_WIDTH
        lo, hi = 0.0, MAX_HALF_WIDTH
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ok(mid) else (lo, mid)
        return lo

    def evaluate(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        k, c = self.modes
        return np.exp(1j * (w @ k.T)) @ c

    def derivative(self, w, axis: int) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        k, c = self.modes
        return np.exp(1j * (w @ k.T)) @ (1j * k[:, axis] * c)


def default_tube(series) -> ComplexTube:
    """Half of the largest admissible half-width over all series."""
    if isinstance(series, FourierSeries):
        series = [series]
    eta = min(s.max_half_width() for s in series)
    if eta <= 0:
        raise ExtensionError("coefficients do not decay: no admissible tube")
    return ComplexTube(0.5 * eta)


@dataclass(frozen=True, eq=False)
class HolomorphicExtension:
    series: FourierSeries
    tube: ComplexTube

    def _check(self, w):
        if not self.tube.contains(w):
            raise ExtensionError(f"evaluation point outside tube of half-width {self.tube.eta:.3g}")

    def __call__(self, w) -> np.ndarray:
        self._check(w)
        return self.series.evaluate(w)

    def derivative(self, w, axis: int) -> np.ndarray:
        self._check(w)
        return self.series.derivative(w, axis)


def extend_fourier(f: FourierSeries, tube: ComplexTube | None = None) -> HolomorphicExtension:
    limit = f.max_half_width()
    tube = tube or default_tube(f)
    if tube.eta > limit:
        raise ExtensionError(
            f"coefficient sum diverges beyond roundoff headroom at eta={tube.eta:.3g} (limit {limit:.3g})"
        )
    return HolomorphicExtension(f, tube)


def cr_residual(fun, w, radius: float = 1e-2, n_nodes: int = 16) -> float:
    """Max |d fun / d wbar| at complex points w (P, n).

    Uses the circle mean  mean_j f(w + r e^{i phi_j}) e^{i phi_j} / r, which
    annihilates every holomorphic Taylor term below order ``n_nodes - 1`` and
    returns d fun / d wbar for the antiholomorphic part.
    """
    w = np.asarray(w, dtype=complex)
    phis = 2 * np.pi * np.arange(n_nodes) / n_nodes
    worst = 0.0
    for axis in range(w.shape[-1]):
        acc = 0.0
        for phi in phis:
            step = np.zeros(w.shape[-1], dtype=complex)
            step[axis] = radius * np.exp(1j * phi)
            acc = acc + fun(w + step) * np.exp(1j * phi)
        worst = max(worst, float(np.max(np.abs(acc / (n_nodes * radius)))))
    return worst


def tube_samples(tube: ComplexTube, n: int, count: int = 50, seed: int = 0, fraction: float = 0.5):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, (count, n))
    phi = rng.uniform(-fraction * tube.eta, fraction * tube.eta, (count, n))
    return theta + 1j * phi


@dataclass(frozen=True, eq=False)
class ComplexifiedImmersion:
    immersion: TorusImmersion
    components: tuple  # HolomorphicExtension per chart coordinate
    jacobian: np.ndarray  # (P, a, k) = dF^a / dtheta_k on L
    jacobian_inv: np.ndarray
    condition: float

    @property
    def tube(self) -> ComplexTube:
        return self.components[0].tube

    def evaluate(self, w) -> np.ndarray:
        return np.stack([c(w) for c in self.components], axis=-1)

    def jacobian_at(self, w) -> np.ndarray:
        n = len(self.components)
        return np.stack(
            [np.stack([c.derivative(w, k) for k in range(n)], axis=-1) for c in self.components], axis=-2
        )


def complexify_immersion(L: TorusImmersion, tail_tol: float = 1e-10) -> ComplexifiedImmersion:
    tail = L.fourier_tail()
    if tail > tail_tol:
        raise ExtensionError(f"{L.label}: insufficient coefficient decay (tail {tail:.2e}); raise resolution")
    margin = totally_real_margin(L)
    if margin < TOTALLY_REAL_TOL:
        raise ExtensionError(f"{L.label}: Jacobian singular (totally-real margin {margin:.2e})")
    series = [FourierSeries.from_samples(L.points[:, a], L.N, L.n) for a in range(L.n)]
    tube = default_tube(series)
    comps = tuple(extend_fourier(s, tube) for s in series)
    J = np.swapaxes(L.tangents, -1, -2)
    sv = np.linalg.svd(J, compute_uv=False)
    return ComplexifiedImmersion(L, comps, J, np.linalg.inv(J), float(np.max(sv[:, 0] / sv[:, -1])))


@dataclass(frozen=True, eq=False)
class PushforwardField:
    """Holomorphic extension of a tangent field on L, known through its 1-jet along L."""

    label: str
    immersion: TorusImmersion
    values: np.ndarray  # (P, a)
    jacobian: np.ndarray  # (P, a, b) = d Vtilde^a / d z^b on L
    tangential: tuple  # FourierSeries of the theta-components
    source_tube: ComplexTube

    @cached_property
    def tube(self) -> ComplexTube:
        """The source tube, narrowed until every tangential component is admissible."""
        return ComplexTube(min(self.source_tube.eta, default_tube(list(self.tangential)).eta))

    def jet_on(self, L):
        if L is not self.immersion:
            raise ExtensionError("pushforward field is only known along its source immersion")
        return self.values, self.jacobian

    def on_tube(self, cimm: ComplexifiedImmersion, w) -> np.ndarray:
        """Vtilde(Ftilde(w)) at complex angles."""
        a = np.stack([extend_fourier(s, self.tube)(w) for s in self.tangential], axis=-1)
        return np.einsum("pk,pak->pa", a, cimm.jacobian_at(w))


def pushforward_field(cimm: ComplexifiedImmersion, a, label: str = "pushforward") -> PushforwardField:
    """Extend the tangent field sum_k a_k d/dtheta_k to a holomorphic ambient field near L."""
    L = cimm.immersion
    a = [s if isinstance(s, FourierSeries) else FourierSeries.from_samples(np.asarray(s), L.N, L.n) for s in a]
    if len(a) != L.n:
        raise ValueError(f"need {L.n} tangential components")
    theta = L.theta
    acoef = np.stack([s.evaluate(theta) if s.N != L.N else _grid_values(s) for s in a], axis=-1)
    V = np.einsum("pk,pak->pa", acoef, cimm.jacobian)
    DV = np.swapaxes(L.diff(V), -1, -2)  # (p, a, m)
    jac = np.einsum("pam,pmb->pab", DV, cimm.jacobian_inv)
    return PushforwardField(label, L, V, jac, tuple(a), cimm.tube)


def _grid_values(s: FourierSeries) -> np.ndarray:
    return np.fft.ifftn(s.coeffs * s.N**s.n, axes=tuple(range(s.n))).ravel()
