"""Projected descent over the moment simplex of orbit tori in CP^n.

Two objectives: the orbit-torus volume and the certificate defect, the sum of
squared divergence integrals over the torus-action generators.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .certify import CertificateReport, certificate_values, divergence_certificate
from .errors import DomainError
from .holo_fields import cpn_torus_generator, field_basis
from .kahler_core import ManifoldModel
from .submanifold import orbit_torus, volume

FLOOR = 1e-3
FD_STEP = 1e-4
INITIAL_STEP = 0.1
BACKTRACK = 0.5
ARMIJO = 1e-4
GRAD_TOL = 1e-6
MAX_ITER = 500
MIN_STEP = 1e-14


@dataclass(frozen=True)
class OrbitWeights:
    a: tuple

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or len(a) < 2:
            raise DomainError("orbit weights need at least two entries")
        if abs(a.sum() - 1.0) > 1e-9:
            raise DomainError(f"orbit weights must sum to 1, got {a.sum():.12g}")
        if np.any(a < FLOOR * (1 - 1e-9)):
            raise DomainError(f"orbit weights must stay above the floor {FLOOR:g}")
        object.__setattr__(self, "a", tuple(float(x) for x in a))

    @classmethod
    def normalized(cls, a) -> "OrbitWeights":
        a = np.asarray(a, dtype=float)
        return cls(tuple(a / a.sum()))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.a)


def _weights(model: ManifoldModel, a, floor: bool = True) -> np.ndarray:
    a = a.array if isinstance(a, OrbitWeights) else np.asarray(a, dtype=float)
    if a.shape != (model.n + 1,):
        raise DomainError(f"CP^{model.n} needs {model.n + 1} weights")
    if floor:
        return OrbitWeights.normalized(a).array
    if np.any(a <= 0):
        raise DomainError("orbit weights must be positive")
    return a / a.sum()


def orbit_volume(model: ManifoldModel, a, N: int = 64) -> float:
    return volume(orbit_torus(model, _weights(model, a), N))


def _volume_objective(model, N):
    # difference stencils may step just below the floor
    return lambda a: volume(orbit_torus(model, _weights(model, a, floor=False), N))


def torus_generators(model: ManifoldModel) -> list:
    return [cpn_torus_generator(model, j, k) for j, k in combinations(range(1, model.n + 2), 2)]


def defect_objective(model: ManifoldModel, a, N: int = 64) -> float:
    """Sum over torus generators of |integral of div V|^2 on the orbit torus."""
    L = orbit_torus(model, _weights(model, a, floor=False), N)
    return float(np.sum(np.abs(certificate_values(L, torus_generators(model))) ** 2))


def project_simplex(x, floor: float = FLOOR) -> np.ndarray:
    """Euclidean projection onto {a_i >= floor, sum a_i = 1}."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    y = x - floor
    budget = 1.0 - m * floor
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - budget
    rho = np.nonzero(u - css / np.arange(1, m + 1) > 0)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1), 0.0) + floor


def tangent_gradient(fun, a, step: float = FD_STEP) -> np.ndarray:
    """Central differences along each coordinate, projected onto the simplex tangent."""
    g = np.empty(len(a))
    for i in range(len(a)):
        e = np.zeros(len(a))
        e[i] = step
        g[i] = (fun(a + e) - fun(a - e)) / (2 * step)
    return g - g.mean()


@dataclass
class Iterate:
    weights: list
    objective: float
    volume: float
    grad_norm: float
    certificate: float


@dataclass
class DescentTrace:
    objective_name: str
    iterates: list = field(default_factory=list)
    termination: str = ""
    final_certificate: CertificateReport | None = None

    @property
    def final(self) -> np.ndarray:
        return np.array(self.iterates[-1].weights)

    @property
    def converged(self) -> bool:
        return self.termination == "gradient tolerance reached"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        m = len(self.iterates[0].weights) if self.iterates else 0
        w.writerow(["iterate"] + [f"a{i + 1}" for i in range(m)] + ["objective", "volume", "grad_norm", "certificate"])
        for k, it in enumerate(self.iterates):
            w.writerow([k] + [repr(x) for x in it.weights] + [repr(it.objective), repr(it.volume), repr(it.grad_norm), repr(it.certificate)])
        return buf.getvalue()


def projected_descent(
    model: ManifoldModel,
    fun,
    a0,
    name: str,
    N: int = 64,
    grad_tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    certify: bool = True,
) -> DescentTrace:
    """Projected gradient descent with Armijo backtracking on the floored simplex.

    Trial points are proj(a - s g / |g|): the step s is a displacement length in
    weight space, so the policy does not depend on the objective's scale.
    """
    gens = torus_generators(model)
    a = _weights(model, a0)
    trace = DescentTrace(name)

    def record(a, f, gnorm):
        L = orbit_torus(model, a, N)
        cert = float(np.max(np.abs(certificate_values(L, gens))))
        trace.iterates.append(Iterate(a.tolist(), f, volume(L), gnorm, cert))

    f = fun(a)
    for it in range(max_iter + 1):
        g = tangent_gradient(fun, a)
        gnorm = float(np.linalg.norm(g))
        record(a, f, gnorm)
        if gnorm < grad_tol:
            trace.termination = "gradient tolerance reached"
            break
        if it == max_iter:
            trace.termination = "iteration limit"
            break
        s = INITIAL_STEP
        while True:
            trial = project_simplex(a - s * g / gnorm)
            ft = fun(trial)
            if ft <= f + ARMIJO * g @ (trial - a) and ft < f:
                break
            s *= BACKTRACK
            if s < MIN_STEP:
                trial = None
                break
        if trial is None:
            trace.termination = "stall: no decreasing step"
            break
        a, f = trial, ft
        if np.any(a <= FLOOR * (1 + 1e-12)):
            record(a, f, float("nan"))  # the difference stencil would leave the simplex
            trace.termination = "hit simplex floor"
            break
    if certify:
        L = orbit_torus(model, a, N)
        trace.final_certificate = divergence_certificate(L, field_basis(model))
    return trace


def minimize_volume(model: ManifoldModel, a0, N: int = 64, **kw) -> DescentTrace:
    return projected_descent(model, _volume_objective(model, N), a0, "volume", N, **kw)


def extremize_volume(model: ManifoldModel, a0, N: int = 64, **kw) -> DescentTrace:
    """Ascent on the volume: the orbit family's critical point is a volume maximum."""
    return projected_descent(model, lambda a: -_volume_objective(model, N)(a), a0, "negative volume", N, **kw)


def minimize_defect(model: ManifoldModel, a0, N: int = 64, **kw) -> DescentTrace:
    return projected_descent(model, lambda a: defect_objective(model, a, N), a0, "certificate defect", N, **kw)
