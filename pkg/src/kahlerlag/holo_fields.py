"""Holomorphic vector fields, their divergence, and moment maps.

A real vector field V is represented by its (1,0)-part V^a(z) in each chart,
together with the holomorphic Jacobian dV[..., a, b] = d_b V^a.  J V then has
(1,0)-part i V^a.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .errors import DegenerateMetricError, HypothesisError, KahlerLagError, NotHolomorphicError
from .kahler_core import (
    ChartPoint,
    ManifoldModel,
    complex_to_real,
    einstein_constant,
    form_from_hermitian,
    metric_at,
    metric_matrix,
    real_basis,
    real_to_complex,
)

HOLOMORPHY_TOL = 1e-8
KILLING_TOL = 1e-8


@dataclass(frozen=True)
class HolomorphicField:
    label: str
    n: int
    jet_fn: Callable
    charts: tuple | None = None  # None: every chart of the model

    def jet(self, chart: int, z):
        if self.charts is not None and chart not in self.charts:
            raise KahlerLagError(f"field {self.label} is not defined in chart {chart}")
        z = np.asarray(z, dtype=complex)
        V, dV = self.jet_fn(chart, z)
        return (
            np.broadcast_to(V, z.shape).astype(complex),
            np.broadcast_to(dV, z.shape + (self.n,)).astype(complex),
        )

    def values(self, chart: int, z):
        return self.jet(chart, z)[0]

    def jet_on(self, L):
        return self.jet(L.chart, L.points)

    def scaled(self, c: complex, label: str | None = None) -> "HolomorphicField":
        """Constant multiple; c = i gives J V."""

        def jet_fn(chart, z):
            V, dV = self.jet(chart, z)
            return c * V, c * dV

        return HolomorphicField(label or f"({c})*{self.label}", self.n, jet_fn, self.charts)

    def J(self) -> "HolomorphicField":
        return self.scaled(1j, f"J{self.label}")


@dataclass(frozen=True)
class HolomorphicFunction:
    label: str
    fn: Callable  # (chart, z) -> (value, gradient)
    antiholomorphic: Callable | None = None  # (chart, z) -> dbar gradient

    def __call__(self, chart, z):
        return self.fn(chart, np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class FieldBasis:
    fields: tuple
    name: str = ""

    @property
    def labels(self):
        return [f.label for f in self.fields]

    def __iter__(self):
        return iter(self.fields)

    def __len__(self):
        return len(self.fields)

    def rank(self, model: ManifoldModel, n_points: int = 8, seed: int = 1) -> int:
        """Real rank of the field family sampled at generic points."""
        rng = np.random.default_rng(seed)
        cols = []
        pts = [
            (i % model.n_charts, 0.7 * (rng.standard_normal(model.n) + 1j * rng.standard_normal(model.n)))
            for i in range(n_points)
        ]
        for f in self.fields:
            cols.append(np.concatenate([complex_to_real(f.values(c, z)) for c, z in pts]))
        return int(np.linalg.matrix_rank(np.array(cols), tol=1e-9))


@dataclass(frozen=True)
class MomentCheckReport:
    label: str
    max_residual: float
    tolerance: float
    verdict: bool
    t: float
    killing_residual: float
    n_points: int


# -- field constructors ---------------------------------------------------------


def linear_combination(fields: Sequence[HolomorphicField], coeffs, label: str = "combo") -> HolomorphicField:
    coeffs = list(coeffs)
    n = fields[0].n

    def jet_fn(chart, z):
        V = 0.0
        dV = 0.0
        for c, f in zip(coeffs, fields):
            v, dv = f.jet(chart, z)
            V = V + c * v
            dV = dV + c * dv
        return V, dV

    return HolomorphicField(label, n, jet_fn, fields[0].charts)


def projective_linear_field(n: int, A, label: str) -> HolomorphicField:
    """Field on CP^n generated by Z -> exp(s A) Z, s real."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (n + 1, n + 1):
        raise ValueError(f"matrix must be {(n + 1, n + 1)}")

    def jet_fn(chart, z):
        Z = np.insert(z, chart, 1.0, axis=-1)
        AZ = Z @ A.T
        keep = [a for a in range(n + 1) if a != chart]
        V = AZ[..., keep] - z * AZ[..., chart : chart + 1]
        Ared = A[np.ix_(keep, keep)]
        row = A[chart, keep]
        dV = (
            Ared
            - np.eye(n) * AZ[..., chart, None, None]
            - z[..., :, None] * row[None, :]
        )
        return V, dV

    return HolomorphicField(label, n, jet_fn)


def cpn_torus_generator(model: ManifoldModel, j: int, k: int) -> HolomorphicField:
    """Generator of exp(i s) on Z_j and exp(-i s) on Z_k (1-based indices)."""
    if model.kind != "projective":
        raise KahlerLagError("torus generators are defined on projective models")
    n = model.n
    if not (1 <= j <= n + 1 and 1 <= k <= n + 1) or j == k:
        raise IndexError(f"invalid generator indices ({j}, {k}) for CP^{n}")
    A = np.zeros((n + 1, n + 1), dtype=complex)
    A[j - 1, j - 1] = 1j
    A[k - 1, k - 1] = -1j
    return projective_linear_field(n, A, f"T({j},{k})")


def sl_real_basis(model: ManifoldModel) -> FieldBasis:
    """2((n+1)^2 - 1) real generators of the holomorphic fields on CP^n."""
    if model.kind != "projective":
        raise KahlerLagError("sl(n+1) basis requires a projective model")
    n1 = model.n + 1
    mats = []
    for a in range(n1):
        for b in range(n1):
            if a != b:
                E = np.zeros((n1, n1), dtype=complex)
                E[a, b] = 1.0
                mats.append((f"E{a + 1}{b + 1}", E))
    for a in range(n1 - 1):
        H = np.zeros((n1, n1), dtype=complex)
        H[a, a], H[a + 1, a + 1] = 1.0, -1.0
        mats.append((f"H{a + 1}", H))
    fields = []
    for label, M in mats:
        fields.append(projective_linear_field(model.n, M, label))
        fields.append(projective_linear_field(model.n, 1j * M, f"i{label}"))
    return FieldBasis(tuple(fields), "sl(n+1) real basis")


def affine_real_basis(model: ManifoldModel) -> FieldBasis:
    """Constant and linear fields on flat C^n, doubled by J."""
    n = model.n
    fields = []
    for a in range(n):
        const = np.zeros(n, dtype=complex)
        const[a] = 1.0
        fields.append(_affine_field(n, const, np.zeros((n, n)), f"D{a + 1}"))
        for b in range(n):
            L = np.zeros((n, n), dtype=complex)
            L[a, b] = 1.0
            fields.append(_affine_field(n, np.zeros(n), L, f"z{b + 1}D{a + 1}"))
    fields = [g for f in fields for g in (f, f.scaled(1j, f"i{f.label}"))]
    return FieldBasis(tuple(fields), "affine real basis")


def _affine_field(n, const, L, label):
    const = np.asarray(const, dtype=complex)
    L = np.asarray(L, dtype=complex)

    def jet_fn(chart, z):
        return const + z @ L.T, np.broadcast_to(L, z.shape + (n,))

    return HolomorphicField(label, n, jet_fn, (0,))


def euler_field(n: int) -> HolomorphicField:
    return _affine_field(n, np.zeros(n), np.eye(n), "Euler")


def field_basis(model: ManifoldModel) -> FieldBasis:
    if model.kind == "projective":
        return sl_real_basis(model)
    return affine_real_basis(model)


def _symbols(n):
    z = sp.symbols(" ".join(f"z{i + 1}" for i in range(n)), seq=True)
    zb = sp.symbols(" ".join(f"zb{i + 1}" for i in range(n)), seq=True)
    return z, zb


def _lambdify_vec(args, exprs):
    fn = sp.lambdify(args, exprs, "numpy")

    def call(z):
        vals = fn(*[z[..., i] for i in range(z.shape[-1])], *[np.conj(z[..., i]) for i in range(z.shape[-1])])
        return vals

    return call


def expression_field(exprs: Sequence[str], n: int, label: str = "expr", chart: int = 0) -> HolomorphicField:
    """Field from component expressions in z1..zn (zb1..zbn allowed for test fields)."""
    if len(exprs) != n:
        raise ValueError(f"need {n} component expressions")
    z, zb = _symbols(n)
    local = {str(s): s for s in (*z, *zb)}
    comps = [sp.sympify(e, locals=local) for e in exprs]
    jac = [[sp.diff(c, z[b]) for b in range(n)] for c in comps]
    fV = _lambdify_vec((*z, *zb), comps)
    fJ = _lambdify_vec((*z, *zb), jac)

    def jet_fn(ch, zz):
        lead = zz.shape[:-1]
        V = np.stack([np.broadcast_to(np.asarray(v, dtype=complex), lead) for v in fV(zz)], axis=-1)
        rows = [np.stack([np.broadcast_to(np.asarray(v, dtype=complex), lead) for v in r], axis=-1) for r in fJ(zz)]
        return V, np.stack(rows, axis=-2)

    return HolomorphicField(label, n, jet_fn, (chart,))


def expression_function(expr: str, n: int, label: str | None = None) -> HolomorphicFunction:
    z, zb = _symbols(n)
    local = {str(s): s for s in (*z, *zb)}
    e = sp.sympify(expr, locals=local)
    grad = [sp.diff(e, s) for s in z]
    dbar = [sp.diff(e, s) for s in zb]
    f0 = _lambdify_vec((*z, *zb), e)
    fg = _lambdify_vec((*z, *zb), grad)
    fb = _lambdify_vec((*z, *zb), dbar)

    def stack(vals, lead):
        return np.stack([np.broadcast_to(np.asarray(v, dtype=complex), lead) for v in vals], axis=-1)

    def fn(chart, zz):
        lead = zz.shape[:-1]
        return np.broadcast_to(np.asarray(f0(zz), dtype=complex), lead), stack(fg(zz), lead)

    def anti(chart, zz):
        return stack(fb(zz), zz.shape[:-1])

    return HolomorphicFunction(label or expr, fn, anti)


# -- finite-difference helpers ---------------------------------------------------


def _fd4(fun, x, k, h):
    e = np.zeros_like(x)
    e[k] = h
    return (-fun(x + 2 * e) + 8 * fun(x + e) - 8 * fun(x - e) + fun(x - 2 * e)) / (12 * h)


def _wirtinger_bar(fun, z, h=1e-3):
    """d/dzbar_b of a vector function of z (single point); returns [a, b]."""
    n = z.shape[-1]
    x = np.concatenate([z.real, z.imag])

    def fr(xx):
        return fun(real_to_complex(xx))

    cols = []
    for b in range(n):
        dx = _fd4(fr, x, b, h)
        dy = _fd4(fr, x, n + b, h)
        cols.append(0.5 * (dx + 1j * dy))
    return np.stack(cols, axis=-1)


def _points(points):
    for p in points:
        if isinstance(p, ChartPoint):
            yield p.chart, p.coords
        else:
            yield int(p[0]), np.asarray(p[1], dtype=complex)


def holomorphy_residual(V, points, h: float = 1e-3) -> float:
    """Max |d V^a / d zbar^b| over points (report only)."""
    worst = 0.0
    for chart, z in _points(points):
        if isinstance(V, HolomorphicFunction):
            if V.antiholomorphic is not None:
                r = np.abs(V.antiholomorphic(chart, z))
            else:
                r = np.abs(_wirtinger_bar(lambda zz: np.atleast_1d(V(chart, zz)[0]), z, h))
        else:
            r = np.abs(_wirtinger_bar(lambda zz: V.values(chart, zz), z, h))
        worst = max(worst, float(np.max(r)))
    return worst


# -- divergence -------------------------------------------------------------------


def divergence_from_jet(model: ManifoldModel, chart: int, z, V, dV) -> np.ndarray:
    """Vectorized chart formula: sum_a d_a V^a + V^c d_c log det g."""
    ldg = model.log_det_gradient(chart, z)
    return np.trace(dV, axis1=-2, axis2=-1) + np.sum(V * ldg, axis=-1)


def divergence(model: ManifoldModel, V: HolomorphicField, p: ChartPoint, check: bool = True) -> complex:
    metric_at(model, p)
    if check:
        res = holomorphy_residual(V, [p])
        if res > HOLOMORPHY_TOL * max(1.0, float(np.max(np.abs(V.values(p.chart, p.coords))))):
            raise NotHolomorphicError(f"field {V.label} has holomorphy residual {res:.2e} at {p}")
    vals, jac = V.jet(p.chart, p.coords)
    return complex(divergence_from_jet(model, p.chart, p.coords, vals, jac))


@dataclass(frozen=True)
class CovariantDerivative:
    """Real endomorphism X -> nabla_X V on the 2n-dimensional tangent space."""

    matrix: np.ndarray
    metric: np.ndarray

    @property
    def J(self):
        n = self.matrix.shape[0] // 2
        Z, I = np.zeros((n, n)), np.eye(n)
        return np.block([[Z, -I], [I, Z]])

    @property
    def commutator_norm(self) -> float:
        J = self.J
        return float(np.max(np.abs(self.matrix @ J - J @ self.matrix)))

    @property
    def complex_trace(self) -> complex:
        return 0.5 * (np.trace(self.matrix) - 1j * np.trace(self.J @ self.matrix))

    @property
    def killing_residual(self) -> float:
        K = self.metric @ self.matrix
        return float(np.max(np.abs(K + K.T)))


def covariant_derivative(model: ManifoldModel, V: HolomorphicField, p: ChartPoint, h: float = 1e-3):
    """Real Levi-Civita derivative of V from finite differences of the real metric.

    Independent of the holomorphic Christoffel symbols and of the field's
    analytic Jacobian: only metric values and field values are sampled.
    """
    chart = p.chart
    n = model.n
    x0 = complex_to_real(p.coords)

    def G(x):
        return metric_matrix(model.metric(chart, real_to_complex(x)))

    def U(x):
        return complex_to_real(V.values(chart, real_to_complex(x)))

    G0 = G(x0)
    Ginv = np.linalg.inv(G0)
    dG = np.array([_fd4(G, x0, i, h) for i in range(2 * n)])  # (i, j, l)
    # gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    dG_l_ij = np.transpose(dG, (1, 2, 0))  # [i, j, l] -> d_l g_ij
    gamma = 0.5 * np.einsum("kl,ijl->kij", Ginv, dG + np.transpose(dG, (1, 0, 2)) - dG_l_ij)
    U0 = U(x0)
    dU = np.stack([_fd4(U, x0, i, h) for i in range(2 * n)], axis=1)  # [k, i]
    M = dU + np.einsum("kij,j->ki", gamma, U0)
    return CovariantDerivative(M, G0)


def divergence_oracle(model: ManifoldModel, V: HolomorphicField, p: ChartPoint, h: float = 1e-3):
    """Complex trace of the assembled real endomorphism; returns (trace, J-commutator)."""
    cd = covariant_derivative(model, V, p, h)
    return complex(cd.complex_trace), cd.commutator_norm


def scale_field(V: HolomorphicField, f: HolomorphicFunction, points=None, tol: float = HOLOMORPHY_TOL):
    """The field f V = Re f V + Im f J V."""
    if points is not None:
        res = holomorphy_residual(f, points)
        if res > tol:
            raise NotHolomorphicError(f"function {f.label} has holomorphy residual {res:.2e}")

    def jet_fn(chart, z):
        v, dv = V.jet(chart, z)
        fv, fg = f(chart, z)
        fv = np.asarray(fv)[..., None]
        return fv * v, fv[..., None] * dv + v[..., :, None] * fg[..., None, :]

    return HolomorphicField(f"({f.label})*{V.label}", V.n, jet_fn, V.charts)


def directional(V: HolomorphicField, f: HolomorphicFunction, chart: int, z) -> np.ndarray:
    """V(f) for holomorphic f: sum_a V^a d_a f."""
    v = V.values(chart, z)
    return np.sum(v * f(chart, z)[1], axis=-1)


# -- moment maps --------------------------------------------------------------------


def moment_map_value(model: ManifoldModel, V: HolomorphicField, chart: int, z, t: float) -> np.ndarray:
    vals, jac = V.jet(chart, z)
    return 1j / t * divergence_from_jet(model, chart, z, vals, jac)


def moment_map_check(
    model: ManifoldModel,
    V: HolomorphicField,
    points,
    tol: float = 1e-6,
    step: float = 1e-5,
    killing_tol: float = KILLING_TOL,
) -> MomentCheckReport:
    """Compare d(i t^-1 div V) with i_V omega by central differences."""
    fit = einstein_constant(model)
    if fit.t == 0.0:
        raise HypothesisError(f"t=0 for {model.name}: {fit.flag}")
    points = list(_points(points))
    n = model.n
    E = real_basis(n)
    worst = 0.0
    worst_killing = 0.0
    for chart, z in points:
        p = ChartPoint(chart, z)
        cd = covariant_derivative(model, V, p)
        kres = cd.killing_residual / max(1.0, float(np.max(np.abs(cd.matrix))))
        worst_killing = max(worst_killing, kres)
        if kres > killing_tol:
            raise HypothesisError(f"{V.label} is not an infinitesimal isometry (Killing residual {kres:.2e})")
        g = metric_at(model, p).g
        v = V.values(chart, z)
        x0 = complex_to_real(z)
        for k in range(2 * n):
            e = np.zeros(2 * n)
            e[k] = step
            mu_p = moment_map_value(model, V, chart, real_to_complex(x0 + e), fit.t)
            mu_m = moment_map_value(model, V, chart, real_to_complex(x0 - e), fit.t)
            dmu = (mu_p - mu_m) / (2 * step)
            ivw = form_from_hermitian(g, v, E[k])
            worst = max(worst, float(abs(dmu - ivw)))
    return MomentCheckReport(
        label=V.label,
        max_residual=worst,
        tolerance=tol,
        verdict=worst < tol,
        t=fit.t,
        killing_residual=worst_killing,
        n_points=len(points),
    )


def corollary_moment_formula(model: ManifoldModel, chart: int, z, j: int = 1, k: int = 2) -> np.ndarray:
    """(|Z_j|^2 - |Z_k|^2) / sum |Z_i|^2 in homogeneous coordinates (1-based j, k)."""
    Z = model.to_homogeneous(chart, z)
    a = np.abs(Z) ** 2
    return (a[..., j - 1] - a[..., k - 1]) / np.sum(a, axis=-1)
