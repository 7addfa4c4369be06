"""Immersed circles and tori: induced geometry on uniform parameter grids.

An immersion is a map from the flat torus (angles theta_1..theta_n, period
2 pi) into a single chart of the model.  Parameter derivatives are spectral;
integrals use the trapezoidal rule, which is spectrally accurate for the
analytic periodic data handled here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from . import spectral
from .errors import DegenerateImmersionError, DomainError, HypothesisError, KahlerLagError
from .kahler_core import ManifoldModel, christoffel, form_from_hermitian, hermitian, riemannian

LAGRANGIAN_TOL = 1e-8
TOTALLY_REAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TorusImmersion:
    model: ManifoldModel
    chart: int
    func: Callable  # angles (P, n) -> chart coordinates (P, n)
    N: int = 64
    orientation: int = 1
    label: str = "immersion"
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.N < 4:
            raise ValueError("resolution too small")

    @property
    def n(self) -> int:
        return self.model.n

    def with_resolution(self, N: int) -> "TorusImmersion":
        return replace(self, N=N)

    def flipped(self) -> "TorusImmersion":
        return replace(self, orientation=-self.orientation)

    @cached_property
    def theta(self) -> np.ndarray:
        return spectral.angles(self.N, self.n)

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.asarray(self.func(self.theta), dtype=complex)
        self.model.check_domain(self.chart, pts)
        return pts

    @cached_property
    def tangents(self) -> np.ndarray:
        """d F^a / d theta_k, shape (P, k, a)."""
        return spectral.gradient(self.points, self.N, self.n)

    @cached_property
    def metric(self) -> np.ndarray:
        return self.model.metric(self.chart, self.points)

    @cached_property
    def frame(self) -> "FrameField":
        return frame_field(self)

    def diff(self, f) -> np.ndarray:
        return spectral.gradient(f, self.N, self.n)

    def fourier_tail(self) -> float:
        return spectral.tail_mass(self.points, self.N, self.n)


@dataclass(frozen=True)
class FrameField:
    tangents: np.ndarray  # (P, k, a)
    induced_metric: np.ndarray  # (P, k, l)
    coeffs: np.ndarray  # (P, j, k): v_j = sum_k coeffs[j, k] d_k F
    frame: np.ndarray  # (P, j, a)

    @property
    def volume_density(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.induced_metric))


@dataclass(frozen=True)
class CanonicalSectionData:
    coefficient: np.ndarray  # c with kappa = c dz^1 ^ ... ^ dz^n
    xi: np.ndarray  # (P, k) connection form in the theta coframe
    norm: np.ndarray  # |kappa|


@dataclass(frozen=True)
class MeanCurvatureData:
    h: np.ndarray  # (P, a) (1,0)-components of the mean curvature vector
    sigma: np.ndarray  # (P, k) sigma(d_k F) = omega(h, d_k F)
    norm: np.ndarray  # |h| pointwise
    normal_defect: float  # max tangential component of h


def frame_field(L: TorusImmersion) -> FrameField:
    T = L.tangents
    g = L.metric
    G = riemannian(g[:, None, None], T[:, :, None, :], T[:, None, :, :])
    try:
        chol = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DegenerateImmersionError(f"{L.label}: induced metric not positive definite") from exc
    ev = np.linalg.eigvalsh(G)
    if np.min(ev[:, 0] / ev[:, -1]) < 1e-12:
        raise DegenerateImmersionError(f"{L.label}: immersion loses rank")
    B = np.linalg.inv(chol)  # Gram-Schmidt in theta order
    if L.orientation == -1:
        B = B.copy()
        B[:, -1, :] *= -1.0
    V = np.einsum("pjk,pka->pja", B, T)
    return FrameField(T, G, B, V)


def lagrangian_defect(L: TorusImmersion) -> float:
    """Max |omega(d_i F, d_j F)| / (|d_i F| |d_j F|) over the grid."""
    if L.n == 1:
        return 0.0
    T, g = L.tangents, L.metric
    norms = np.sqrt(riemannian(g[:, None], T, T))
    worst = 0.0
    for i in range(L.n):
        for j in range(i + 1, L.n):
            w = form_from_hermitian(g, T[:, i], T[:, j])
            worst = max(worst, float(np.max(np.abs(w) / (norms[:, i] * norms[:, j]))))
    return worst


def _unitary_frame_matrix(L: TorusImmersion) -> np.ndarray:
    A = 2.0 * np.conj(L.metric)
    C = np.conj(np.swapaxes(np.linalg.cholesky(A), -1, -2))
    return np.einsum("pab,pjb->paj", C, L.frame.frame)


def totally_real_margin(L: TorusImmersion) -> float:
    """Smallest singular value of the frame in a unitary basis (1 if Lagrangian, 0 if complex)."""
    U = _unitary_frame_matrix(L)
    return float(np.min(np.linalg.svd(U, compute_uv=False)[:, -1]))


def integrate(L: TorusImmersion, samples) -> complex | float:
    """Integral against the induced volume form."""
    samples = np.asarray(samples)
    if samples.shape[0] != L.N**L.n:
        raise KahlerLagError(f"samples have {samples.shape[0]} points, grid has {L.N ** L.n}")
    dens = L.frame.volume_density.reshape((-1,) + (1,) * (samples.ndim - 1))
    val = spectral.quadrature(samples * dens, L.N, L.n)
    return val if np.iscomplexobj(val) or np.ndim(val) else float(val)


def volume(L: TorusImmersion) -> float:
    return float(integrate(L, np.ones(L.N**L.n)))


def mean_curvature(L: TorusImmersion) -> MeanCurvatureData:
    fr = L.frame
    V, B = fr.frame, fr.coeffs
    P, n = V.shape[0], L.n
    gam = christoffel(L.model, L.chart, L.points)
    dV = L.diff(V.reshape(P, n * n)).reshape(P, n, n, n)  # (p, m, j, a)
    along = np.einsum("pjm,pmja->pja", B, dV)
    H = np.sum(along + np.einsum("pabc,pjb,pjc->pja", gam, V, V), axis=1)
    g = L.metric
    tang = riemannian(g[:, None], H[:, None, :], V)  # (p, j)
    h = H - np.einsum("pj,pja->pa", tang, V)
    resid = riemannian(g[:, None], h[:, None, :], V)
    sigma = form_from_hermitian(g[:, None], h[:, None, :], L.tangents)
    return MeanCurvatureData(
        h=h,
        sigma=sigma,
        norm=np.sqrt(np.maximum(riemannian(g, h, h), 0.0)),
        normal_defect=float(np.max(np.abs(resid))),
    )


def canonical_section(L: TorusImmersion, tol: float = TOTALLY_REAL_TOL) -> CanonicalSectionData:
    margin = totally_real_margin(L)
    if margin < tol:
        raise HypothesisError(f"{L.label}: totally-real margin {margin:.2e} below {tol:.0e}")
    V = L.frame.frame
    c = 1.0 / np.linalg.det(V)
    dc = L.diff(c)
    ldg = L.model.log_det_gradient(L.chart, L.points)
    conn = -np.einsum("pb,pkb->pk", ldg, L.tangents)
    xi = dc / c[:, None] + conn
    detg = np.real(np.linalg.det(L.metric))
    norm = np.abs(c) / np.sqrt(2.0**L.n * detg)
    return CanonicalSectionData(coefficient=c, xi=xi, norm=norm)


def kappa_on_tangents(L: TorusImmersion, section: CanonicalSectionData | None = None) -> np.ndarray:
    """kappa(d_1 F, ..., d_n F): the pulled-back n-form density."""
    section = section or canonical_section(L)
    return section.coefficient * np.linalg.det(L.tangents)


def lemma2_residual(L: TorusImmersion, tol: float = LAGRANGIAN_TOL) -> float:
    """Max |sigma(e) - i xi(e)| over grid points and coordinate directions."""
    defect = lagrangian_defect(L)
    if defect > tol:
        raise HypothesisError(f"{L.label} is not Lagrangian (defect {defect:.2e})")
    sigma = mean_curvature(L).sigma
    xi = canonical_section(L).xi
    return float(np.max(np.abs(sigma - 1j * xi)))


def ricci_restriction(L: TorusImmersion) -> float:
    if L.n == 1:
        return 0.0
    T, g = L.tangents, L.metric
    R = L.model.ricci_matrix(L.chart, L.points)
    norms = np.sqrt(riemannian(g[:, None], T, T))
    worst = 0.0
    for i in range(L.n):
        for j in range(i + 1, L.n):
            r = form_from_hermitian(R, T[:, i], T[:, j])
            worst = max(worst, float(np.max(np.abs(r) / (norms[:, i] * norms[:, j]))))
    return worst


# -- built-in families ---------------------------------------------------------


def _require_projective(model, n=None):
    if model.kind != "projective":
        raise KahlerLagError(f"family requires a projective model, got {model.name}")
    if n is not None and model.n != n:
        raise KahlerLagError(f"family requires CP^{n}, got CP^{model.n}")


def _toric_lift(moment_fn):
    """Homogeneous lift Z_0 = sqrt(mu_0), Z_k = sqrt(mu_k) exp(i theta_k)."""

    def lift(theta):
        mu = moment_fn(theta)  # (P, n+1)
        if np.any(mu <= 0):
            raise DomainError("torus leaves the open moment simplex")
        phase = np.concatenate([np.zeros(theta.shape[:-1] + (1,)), theta], axis=-1)
        return np.sqrt(mu) * np.exp(1j * phase)

    return lift


def _toric_immersion(model, moment_fn, N, orientation, label, family, params, chart=None):
    lift = _toric_lift(moment_fn)
    if chart is None:
        chart = int(np.argmax(np.mean(moment_fn(spectral.angles(8, model.n)), axis=0)))

    def func(theta):
        return model.chart_coords(chart, lift(theta))

    return TorusImmersion(model, chart, func, N, orientation, label, family, dict(params))


def orbit_torus(model: ManifoldModel, a, N: int = 64, orientation: int = 1) -> TorusImmersion:
    """The torus {|Z_i|^2 / |Z|^2 = a_i} of the standard torus action on CP^n."""
    _require_projective(model)
    a = np.asarray(a, dtype=float)
    if a.shape != (model.n + 1,) or np.any(a <= 0):
        raise ValueError(f"orbit weights must be {model.n + 1} positive numbers")
    a = a / a.sum()
    return _toric_immersion(
        model,
        lambda th: np.broadcast_to(a, th.shape[:-1] + a.shape),
        N,
        orientation,
        f"orbit-torus{tuple(np.round(a, 6))}",
        "orbit-torus",
        {"weights": a.tolist()},
    )


def clifford_torus(model: ManifoldModel, N: int = 64, orientation: int = 1) -> TorusImmersion:
    _require_projective(model)
    L = orbit_torus(model, np.full(model.n + 1, 1.0 / (model.n + 1)), N, orientation)
    return replace(L, label="clifford-torus", family="clifford-torus")


def equator(model: ManifoldModel, N: int = 64, orientation: int = 1) -> TorusImmersion:
    """The great circle |w| = 1 in CP^1."""
    _require_projective(model, 1)
    return TorusImmersion(
        model, 0, lambda th: np.exp(1j * th), N, orientation, "equator", "equator", {}
    )


def pair_torus(model: ManifoldModel, j: int = 2, rest=None, N: int = 64, orientation: int = 1):
    """Orbit torus with |Z_1| = |Z_j| only (the literal reading of the corollary's L')."""
    _require_projective(model)
    n1 = model.n + 1
    if not 2 <= j <= n1:
        raise IndexError("j out of range")
    others = [i for i in range(n1) if i not in (0, j - 1)]
    rest = np.full(len(others), 1.0) if rest is None else np.asarray(rest, dtype=float)
    if len(rest) != len(others):
        raise ValueError(f"need {len(others)} remaining weights")
    a = np.empty(n1)
    a[0] = a[j - 1] = 1.0
    a[others] = rest
    L = orbit_torus(model, a, N, orientation)
    return replace(L, label=f"pair-torus(1,{j})", family="pair-torus", params={"j": j, "weights": L.params["weights"]})


def product_torus(model: ManifoldModel, radii=None, N: int = 64, orientation: int = 1) -> TorusImmersion:
    """z_k = r_k exp(i theta_k) in flat C^n."""
    if model.kind != "flat":
        raise KahlerLagError("product tori live in flat C^n")
    r = np.ones(model.n) if radii is None else np.asarray(radii, dtype=float)
    return TorusImmersion(
        model, 0, lambda th: r * np.exp(1j * th), N, orientation, "product-torus", "product-torus",
        {"radii": r.tolist()},
    )


def _bump(theta):
    return np.exp(np.sum(np.cos(theta), axis=-1) - theta.shape[-1])


def _bump_grad(theta):
    return -np.sin(theta) * _bump(theta)[..., None]


def hamiltonian_torus(model: ManifoldModel, eps: float, N: int = 64, orientation: int = 1, weights=None):
    """Clifford torus displaced by the Hamiltonian bump H = exp(sum cos theta_k - n).

    In action-angle coordinates the displaced torus is the graph mu = a + eps dH,
    which is exactly Lagrangian and minimal only for eps = 0.
    """
    _require_projective(model)
    n = model.n
    a = np.full(n + 1, 1.0 / (n + 1)) if weights is None else np.asarray(weights, float) / np.sum(weights)

    def moment(theta):
        mu_rest = a[1:] + eps * _bump_grad(theta)
        return np.concatenate([1.0 - mu_rest.sum(axis=-1, keepdims=True), mu_rest], axis=-1)

    return _toric_immersion(
        model, moment, N, orientation, f"hamiltonian-torus(eps={eps})", "hamiltonian-torus",
        {"eps": eps}, chart=0,
    )


def graph_torus(model: ManifoldModel, delta: float = 0.1, N: int = 64, orientation: int = 1):
    """Totally real, non-Lagrangian torus in CP^2: mu = a + delta (sin theta_2, -sin theta_1)."""
    _require_projective(model, 2)
    a = np.full(3, 1.0 / 3.0)

    def moment(theta):
        mu_rest = a[1:] + delta * np.stack([np.sin(theta[..., 1]), -np.sin(theta[..., 0])], axis=-1)
        return np.concatenate([1.0 - mu_rest.sum(axis=-1, keepdims=True), mu_rest], axis=-1)

    return _toric_immersion(
        model, moment, N, orientation, f"graph-torus(delta={delta})", "graph-torus", {"delta": delta}, chart=0
    )


def revolution_torus(model: ManifoldModel, N: int = 64, orientation: int = 1):
    """Torus of revolution in C x R inside flat C^2; complex tangent planes where cos theta_2 = 0."""
    if model.kind != "flat" or model.n != 2:
        raise KahlerLagError("revolution torus lives in flat C^2")

    def func(th):
        r = 2.0 + np.cos(th[..., 1])
        return np.stack([r * np.exp(1j * th[..., 0]), np.sin(th[..., 1]) + 0j], axis=-1)

    return TorusImmersion(model, 0, func, N, orientation, "revolution-torus", "revolution-torus", {})


FAMILIES = {
    "clifford-torus": "CP^n; all homogeneous moduli equal (minimal Lagrangian)",
    "orbit-torus": "CP^n; params: weights (n+1 positive reals)",
    "pair-torus": "CP^n; |Z_1| = |Z_j| only; params: j, rest",
    "equator": "CP^1; the great circle |w| = 1",
    "product-torus": "flat C^n; params: radii",
    "hamiltonian-torus": "CP^n; params: eps (Hamiltonian bump displacement)",
    "graph-torus": "CP^2; params: delta (totally real, non-Lagrangian)",
    "revolution-torus": "flat C^2; has complex tangents (degenerate)",
}


def build_immersion(model: ManifoldModel, family: str, params: dict | None = None, N: int = 64, orientation: int = 1):
    params = dict(params or {})
    if family == "clifford-torus":
        return clifford_torus(model, N, orientation)
    if family == "orbit-torus":
        return orbit_torus(model, params.pop("weights"), N, orientation)
    if family == "pair-torus":
        return pair_torus(model, params.get("j", 2), params.get("rest"), N, orientation)
    if family == "equator":
        return equator(model, N, orientation)
    if family == "product-torus":
        return product_torus(model, params.get("radii"), N, orientation)
    if family == "hamiltonian-torus":
        return hamiltonian_torus(model, float(params.get("eps", 0.05)), N, orientation)
    if family == "graph-torus":
        return graph_torus(model, float(params.get("delta", 0.1)), N, orientation)
    if family == "revolution-torus":
        return revolution_torus(model, N, orientation)
    raise KahlerLagError(f"unknown family {family!r}; known: {', '.join(FAMILIES)}")
