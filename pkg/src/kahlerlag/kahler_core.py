"""Chart-based Kähler manifold models.

A model is a complex manifold covered by affine charts, each carrying a
Kähler potential K(z, zbar).  Everything else (metric, Christoffel symbols,
Ricci form, canonical-bundle connection) is derived from the potential.

All array routines are vectorized: chart coordinates have shape ``(..., n)``
and results carry the same leading axes.  Index conventions:

* ``g[..., a, b]``       = d_a d_bbar K
* ``dg[..., c, a, b]``   = d_c g_{a bbar}
* ``gamma[..., a, b, c]``= Gamma^a_{bc}, so nabla_{d_b} d_c = Gamma^a_{bc} d_a
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from .errors import DegenerateMetricError, DomainError, KahlerLagError

BUILTIN_MODELS = ("flat-Cn", "CPn-t1", "CPn-unit")


@dataclass(frozen=True)
class ChartPoint:
    chart: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.atleast_1d(np.asarray(self.coords, dtype=complex)))


@dataclass(frozen=True)
class MetricJet:
    point: ChartPoint
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    log_det_grad: np.ndarray


@dataclass(frozen=True)
class EinsteinFit:
    t: float
    residual: float
    tolerance: float
    n_samples: int
    flag: str = ""

    @property
    def lemma1_applicable(self) -> bool:
        return self.flag == ""


class _SymbolicPotential:
    """Exact derivatives of a user potential written in z1..zn, zb1..zbn."""

    def __init__(self, expr: str, n: int):
        self.n = n
        self.z = sp.symbols(" ".join(f"z{i + 1}" for i in range(n)), seq=True)
        self.zb = sp.symbols(" ".join(f"zb{i + 1}" for i in range(n)), seq=True)
        local = {str(s): s for s in (*self.z, *self.zb)}
        self.K = sp.sympify(expr, locals=local)
        z, zb = self.z, self.zb
        g = [[sp.diff(self.K, z[a], zb[b]) for b in range(n)] for a in range(n)]
        dg = [[[sp.diff(g[a][b], z[c]) for b in range(n)] for a in range(n)] for c in range(n)]
        # d_c dbar_d g_{ab}: needed for the Ricci form
        ddg = [
            [[[sp.diff(g[a][b], z[c], zb[d]) for b in range(n)] for a in range(n)] for d in range(n)]
            for c in range(n)
        ]
        dbg = [[[sp.diff(g[a][b], zb[d]) for b in range(n)] for a in range(n)] for d in range(n)]
        args = (*z, *zb)
        self._K = sp.lambdify(args, self.K, "numpy")
        self._g = sp.lambdify(args, g, "numpy")
        self._dg = sp.lambdify(args, dg, "numpy")
        self._dbg = sp.lambdify(args, dbg, "numpy")
        self._ddg = sp.lambdify(args, ddg, "numpy")

    def _call(self, fn, z, rank):
        z = np.asarray(z, dtype=complex)
        args = [z[..., i] for i in range(self.n)] + [np.conj(z[..., i]) for i in range(self.n)]
        out = fn(*args)
        arr = np.array(np.broadcast_arrays(*_flatten_nested(out, z.shape[:-1])), dtype=complex)
        shape = (self.n,) * rank
        arr = arr.reshape(shape + z.shape[:-1])
        return np.moveaxis(arr, list(range(rank)), list(range(-rank, 0)))

    def potential(self, z):
        z = np.asarray(z, dtype=complex)
        args = [z[..., i] for i in range(self.n)] + [np.conj(z[..., i]) for i in range(self.n)]
        return np.real(np.broadcast_to(self._K(*args), z.shape[:-1]))

    def g(self, z):
        return self._call(self._g, z, 2)

    def dg(self, z):
        return self._call(self._dg, z, 3)

    def dbar_g(self, z):
        return self._call(self._dbg, z, 3)

    def ddbar_g(self, z):
        return self._call(self._ddg, z, 4)


def _flatten_nested(obj, shape):
    if isinstance(obj, (list, tuple)):
        out = []
        for item in obj:
            out.extend(_flatten_nested(item, shape))
        return out
    return [np.broadcast_to(np.asarray(obj, dtype=complex), shape)]


@dataclass(frozen=True)
class ManifoldModel:
    """A Kähler manifold given by potentials on an atlas of affine charts.

    ``kind`` is one of ``"flat"`` (K = scale |z|^2, one chart),
    ``"projective"`` (K = scale log(1 + |w|^2) on each of the n+1 affine
    charts of CP^n) or ``"symbolic"`` (a single chart with a user potential).
    """

    name: str
    n: int
    kind: str
    scale: float = 1.0
    expression: str | None = None
    einstein_candidate: bool = True

    @cached_property
    def _symbolic(self) -> _SymbolicPotential:
        return _SymbolicPotential(self.expression, self.n)

    @property
    def n_charts(self) -> int:
        return self.n + 1 if self.kind == "projective" else 1

    # -- domain handling -------------------------------------------------

    def check_domain(self, chart: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} chart coordinates, got shape {z.shape}")
        if not 0 <= chart < self.n_charts:
            raise DomainError(f"chart {chart} not in atlas of {self.name} ({self.n_charts} charts)")
        if not np.all(np.isfinite(z)):
            raise DomainError("chart coordinates must be finite")
        return z

    def to_homogeneous(self, chart: int, z) -> np.ndarray:
        if self.kind != "projective":
            raise KahlerLagError(f"{self.name} has no homogeneous coordinates")
        z = self.check_domain(chart, z)
        return np.insert(z, chart, 1.0, axis=-1)

    def best_chart(self, Z) -> np.ndarray:
        """Chart index maximizing the modulus of the dominant homogeneous coordinate."""
        return np.argmax(np.abs(Z), axis=-1)

    def from_homogeneous(self, Z, chart: int | None = None) -> ChartPoint:
        Z = np.asarray(Z, dtype=complex)
        if chart is None:
            chart = int(self.best_chart(Z))
        if abs(Z[chart]) == 0:
            raise DomainError(f"homogeneous coordinate {chart} vanishes")
        return ChartPoint(chart, np.delete(Z / Z[chart], chart))

    def chart_coords(self, chart: int, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        return np.delete(Z / Z[..., chart : chart + 1], chart, axis=-1)

    def transition(self, src: int, dst: int, z):
        """Map chart ``src`` coordinates into chart ``dst``; returns (coords, Jacobian)."""
        if self.kind != "projective":
            if src != dst:
                raise DomainError("single-chart model")
            z = self.check_domain(src, z)
            return z, np.broadcast_to(np.eye(self.n, dtype=complex), z.shape + (self.n,))
        Z = self.to_homogeneous(src, z)
        Zk = Z[..., dst : dst + 1]
        if np.any(np.abs(Zk) == 0):
            raise DomainError(f"point not in chart {dst}")
        full = np.eye(self.n + 1, dtype=complex) / Zk[..., None]
        full = full - (Z / Zk**2)[..., :, None] * np.eye(self.n + 1)[dst][None, :]
        rows = [a for a in range(self.n + 1) if a != dst]
        cols = [c for c in range(self.n + 1) if c != src]
        jac = full[..., rows, :][..., :, cols]
        return self.chart_coords(dst, Z), jac

    # -- potential and its jets ---------------------------------------------

    def potential(self, chart: int, z) -> np.ndarray:
        z = self.check_domain(chart, z)
        r2 = np.sum(np.abs(z) ** 2, axis=-1)
        if self.kind == "flat":
            return self.scale * r2
        if self.kind == "projective":
            return self.scale * np.log1p(r2)
        return self._symbolic.potential(z)

    def metric(self, chart: int, z) -> np.ndarray:
        z = self.check_domain(chart, z)
        n = self.n
        if self.kind == "flat":
            return self.scale * np.broadcast_to(np.eye(n, dtype=complex), z.shape + (n,)).copy()
        if self.kind == "projective":
            rho = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)[..., None, None]
            outer = np.conj(z)[..., :, None] * z[..., None, :]
            return self.scale * (np.eye(n) / rho - outer / rho**2)
        return self._symbolic.g(z)

    def metric_derivative(self, chart: int, z) -> np.ndarray:
        z = self.check_domain(chart, z)
        n = self.n
        if self.kind == "flat":
            return np.zeros(z.shape + (n, n), dtype=complex)
        if self.kind == "projective":
            rho = (1.0 + np.sum(np.abs(z) ** 2, axis=-1))[..., None, None, None]
            zb = np.conj(z)
            eye = np.eye(n)
            # index order (c, a, b)
            t1 = -eye[None, :, :] * zb[..., :, None, None]
            t2 = -zb[..., None, :, None] * eye[:, None, :]
            t3 = 2.0 * zb[..., None, :, None] * z[..., None, None, :] * zb[..., :, None, None]
            return self.scale * ((t1 + t2) / rho**2 + t3 / rho**3)
        return self._symbolic.dg(z)

    def log_det_gradient(self, chart: int, z, g=None, dg=None) -> np.ndarray:
        """Holomorphic gradient d_c log det g."""
        z = self.check_domain(chart, z)
        if self.kind == "flat":
            return np.zeros(z.shape, dtype=complex)
        if self.kind == "projective":
            rho = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)[..., None]
            return -(self.n + 1) * np.conj(z) / rho
        g = self.metric(chart, z) if g is None else g
        dg = self.metric_derivative(chart, z) if dg is None else dg
        ginv = np.linalg.inv(g)
        return np.einsum("...ba,...cab->...c", ginv, dg)

    def ricci_matrix(self, chart: int, z) -> np.ndarray:
        """R_{a bbar} = -d_a d_bbar log det g."""
        z = self.check_domain(chart, z)
        n = self.n
        if self.kind == "flat":
            return np.zeros(z.shape + (n,), dtype=complex)
        if self.kind == "projective":
            return (self.n + 1) / self.scale * self.metric(chart, z)
        sym = self._symbolic
        g = sym.g(z)
        ginv = np.linalg.inv(g)
        dg = sym.dg(z)  # (c, p, q) = d_c g_pq
        dbg = sym.dbar_g(z)  # (d, p, q) = dbar_d g_pq
        ddg = sym.ddbar_g(z)  # (c, d, p, q)
        # d_a dbar_b log det g = tr(ginv ddbar g) - tr(ginv d_a g ginv dbar_b g)
        term1 = np.einsum("...qp,...abpq->...ab", ginv, ddg)
        term2 = np.einsum("...qp,...apr,...rs,...bsq->...ab", ginv, dg, ginv, dbg)
        return -(term1 - term2)

    def jet(self, chart: int, z):
        g = self.metric(chart, z)
        dg = self.metric_derivative(chart, z)
        return g, dg, self.log_det_gradient(chart, z, g, dg)


# -- model construction --------------------------------------------------------


def flat_model(n: int) -> ManifoldModel:
    return ManifoldModel(name="flat-Cn", n=n, kind="flat", scale=1.0, einstein_candidate=False)


def projective_model(n: int, normalization: str = "t1") -> ManifoldModel:
    if normalization not in ("t1", "unit"):
        raise ValueError(f"unknown normalization {normalization!r}")
    scale = float(n + 1) if normalization == "t1" else 1.0
    return ManifoldModel(name=f"CPn-{normalization}", n=n, kind="projective", scale=scale)


def symbolic_model(expression: str, n: int, name: str = "symbolic", einstein_candidate: bool = False):
    return ManifoldModel(
        name=name, n=n, kind="symbolic", expression=expression, einstein_candidate=einstein_candidate
    )


def load_model(name: str, dimension: int, potential: str | None = None) -> ManifoldModel:
    """Build a model from its descriptor (built-in name or symbolic potential)."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if name == "flat-Cn":
        return flat_model(dimension)
    if name == "CPn-t1":
        return projective_model(dimension, "t1")
    if name == "CPn-unit":
        return projective_model(dimension, "unit")
    if potential is not None:
        return symbolic_model(potential, dimension, name=name)
    raise ValueError(f"unknown model {name!r}; built-ins are {', '.join(BUILTIN_MODELS)}")


# -- real/complex tangent vectors ---------------------------------------------


def real_to_complex(x) -> np.ndarray:
    """Real components (x_1..x_n, y_1..y_n) -> (1,0)-components."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def complex_to_real(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, v.imag], axis=-1)


def real_basis(n: int) -> np.ndarray:
    """(1,0)-components of the real coordinate vectors d/dx_a, d/dy_a."""
    return np.concatenate([np.eye(n), 1j * np.eye(n)]).astype(complex)


def hermitian(g, X, Y) -> np.ndarray:
    return np.einsum("...a,...ab,...b->...", X, g, np.conj(Y))


def riemannian(g, X, Y) -> np.ndarray:
    return 2.0 * np.real(hermitian(g, X, Y))


def form_from_hermitian(H, X, Y) -> np.ndarray:
    """Real 2-form -i H_{ab} dz^a ^ dzbar^b evaluated on (X, Y)."""
    return 2.0 * np.imag(hermitian(H, X, Y))


def form_matrix(H) -> np.ndarray:
    """2n x 2n real matrix of the 2-form built from Hermitian matrix H."""
    n = H.shape[-1]
    E = real_basis(n)
    return 2.0 * np.imag(np.einsum("ka,...ab,lb->...kl", E, H, np.conj(E)))


def metric_matrix(g) -> np.ndarray:
    n = g.shape[-1]
    E = real_basis(n)
    return 2.0 * np.real(np.einsum("ka,...ab,lb->...kl", E, g, np.conj(E)))


def christoffel(model: ManifoldModel, chart: int, z, g=None, dg=None) -> np.ndarray:
    g = model.metric(chart, z) if g is None else g
    dg = model.metric_derivative(chart, z) if dg is None else dg
    ginv = np.linalg.inv(g)
    # Gamma^a_{bc} = g^{a dbar} d_b g_{c dbar}, with g^{a dbar} = ginv[d, a]
    return np.einsum("...da,...bcd->...abc", ginv, dg)


def _as_real_vector(model, X):
    X = np.asarray(X)
    if np.iscomplexobj(X):
        if X.shape[-1] != model.n:
            raise ValueError(f"expected {model.n} complex components, got {X.shape[-1]}")
        return X
    if X.shape[-1] != 2 * model.n:
        raise ValueError(f"expected {2 * model.n} real components, got {X.shape[-1]}")
    return real_to_complex(X)


# -- point-level operations ------------------------------------------------


def metric_at(model: ManifoldModel, p: ChartPoint) -> MetricJet:
    z = model.check_domain(p.chart, p.coords)
    g, dg, ldg = model.jet(p.chart, z)
    if not np.all(np.isfinite(g)):
        raise DegenerateMetricError(f"metric not finite at {p}")
    eig = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    if eig.min() <= 0:
        raise DegenerateMetricError(f"metric of {model.name} not positive definite at {p}")
    return MetricJet(point=p, g=g, g_inv=np.linalg.inv(g), dg=dg, log_det_grad=ldg)


def kahler_form_eval(model: ManifoldModel, p: ChartPoint, X, Y) -> float:
    """omega(X, Y) for real tangent vectors given in real chart coordinates."""
    Xc, Yc = _as_real_vector(model, X), _as_real_vector(model, Y)
    g = metric_at(model, p).g
    return float(form_from_hermitian(g, Xc, Yc))


def christoffel_at(model: ManifoldModel, p: ChartPoint) -> np.ndarray:
    jet = metric_at(model, p)
    return christoffel(model, p.chart, p.coords, jet.g, jet.dg)


def ricci_form_at(model: ManifoldModel, p: ChartPoint) -> np.ndarray:
    """Ricci form as a 2n x 2n real antisymmetric matrix in real chart coordinates."""
    metric_at(model, p)
    return form_matrix(model.ricci_matrix(p.chart, p.coords))


def canonical_conn_coeff(model: ManifoldModel, p: ChartPoint, u) -> complex:
    """Connection coefficient of the frame dz^1 ^ ... ^ dz^n of K(N) along u."""
    uc = _as_real_vector(model, u)
    jet = metric_at(model, p)
    return complex(-np.dot(jet.log_det_grad, uc))


def sample_points(model: ManifoldModel, count: int, seed: int = 0, radius: float = 1.0):
    """Deterministic sample of chart points spread over the atlas."""
    rng = np.random.default_rng(seed)
    pts = []
    for i in range(count):
        chart = i % model.n_charts
        z = radius * (rng.standard_normal(model.n) + 1j * rng.standard_normal(model.n)) / np.sqrt(2)
        pts.append(ChartPoint(chart, z))
    return pts


def einstein_constant(model: ManifoldModel, n_samples: int = 32, tol: float = 1e-7, seed: int = 0) -> EinsteinFit:
    """Least-squares fit of t in Ric = t omega over sampled points."""
    if n_samples < 32:
        raise ValueError("at least 32 sample points are required")
    omegas, rics = [], []
    for p in sample_points(model, n_samples, seed):
        jet = metric_at(model, p)
        omegas.append(form_matrix(jet.g))
        rics.append(form_matrix(model.ricci_matrix(p.chart, p.coords)))
    W, R = np.array(omegas), np.array(rics)
    t = float(np.sum(W * R) / np.sum(W * W))
    residual = float(np.max(np.abs(R - t * W)))
    scale = max(1.0, float(np.max(np.abs(R))))
    if residual > tol * scale:
        raise DegenerateMetricError(
            f"{model.name} is not Kähler-Einstein: residual {residual:.3e} exceeds {tol:.1e}"
        )
    flag = ""
    if abs(t) < tol:
        t = 0.0
        flag = "Lemma 1 inapplicable (t = 0)"
    return EinsteinFit(t=t, residual=residual, tolerance=tol, n_samples=n_samples, flag=flag)
