"""Divergence certificates, the pointwise Stokes identity and the converse probe.

For a compact oriented minimal Lagrangian L and any holomorphic field V,
the integral of div(V) over L vanishes.  Off the minimal locus the same
integrals witness the obstruction, and the converse probe measures it through
the fields dual to the real and imaginary parts of the connection form xi.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from . import spectral
from .errors import HypothesisError, KahlerLagError
from .holo_extend import complexify_immersion, pushforward_field
from .holo_fields import FieldBasis, HolomorphicField, divergence_from_jet
from .submanifold import (
    LAGRANGIAN_TOL,
    TorusImmersion,
    canonical_section,
    integrate,
    lagrangian_defect,
    mean_curvature,
    volume,
)

CERTIFICATE_TOL = 1e-6
GATE_TOL = 1e-8
PROBE_TOL = 1e-7
IDENTITY_TOL = 1e-5
MINIMAL_TOL = 1e-6


def describe(L: TorusImmersion) -> dict:
    return {
        "model": L.model.name,
        "dimension": L.n,
        "family": L.family,
        "label": L.label,
        "params": {k: _plain(v) for k, v in sorted(L.params.items())},
        "resolution": L.N,
        "orientation": L.orientation,
    }


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class CertificateEntry:
    label: str
    real: float
    imag: float
    modulus: float

    @property
    def value(self) -> complex:
        return complex(self.real, self.imag)


@dataclass
class CertificateReport:
    submanifold: dict
    entries: list
    max_modulus: float
    resolution: int
    tolerance: float
    gate_resolution: int | None
    gate_difference: float | None
    verdict: str
    witness: str | None = None
    volume: float = float("nan")

    @property
    def passed(self) -> bool:
        return self.verdict == "certificate vanishes"

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "re_integral", "im_integral", "modulus"])
        for e in self.entries:
            w.writerow([e.label, repr(e.real), repr(e.imag), repr(e.modulus)])
        return buf.getvalue()


def divergence_on(L: TorusImmersion, V) -> np.ndarray:
    """div(V) at the grid points of L, from the field's 1-jet along L."""
    try:
        vals, jac = V.jet_on(L)
    except KahlerLagError as exc:
        raise KahlerLagError(f"field {getattr(V, 'label', V)} undefined on {L.label}: {exc}") from exc
    return divergence_from_jet(L.model, L.chart, L.points, vals, jac)


def certificate_values(L: TorusImmersion, fields) -> np.ndarray:
    """Integrals of div(V) against the induced volume form, one per field."""
    return np.array([complex(integrate(L, divergence_on(L, V))) for V in fields])


def divergence_certificate(
    L: TorusImmersion,
    basis: FieldBasis | list,
    tol: float = CERTIFICATE_TOL,
    gate: bool = True,
    gate_tol: float = GATE_TOL,
) -> CertificateReport:
    """Integrate div(V) over L for every basis field and issue a verdict.

    With ``gate`` the integrals are recomputed at twice the resolution; a
    verdict is issued only if both resolutions agree within ``gate_tol``.
    """
    fields = list(basis)
    vals = certificate_values(L, fields)
    mods = np.abs(vals)
    entries = [CertificateEntry(V.label, float(v.real), float(v.imag), float(m)) for V, v, m in zip(fields, vals, mods)]
    max_mod = float(mods.max()) if len(mods) else 0.0
    gate_N = gate_diff = None
    if gate:
        L2 = L.with_resolution(2 * L.N)
        gate_N = L2.N
        gate_diff = float(np.max(np.abs(certificate_values(L2, fields) - vals))) if fields else 0.0
    witness = None
    if gate_diff is not None and gate_diff > gate_tol:
        verdict = f"unresolved: resolutions {L.N} and {gate_N} differ by {gate_diff:.2e}"
    elif max_mod < tol:
        verdict = "certificate vanishes"
    else:
        witness = fields[int(np.argmax(mods))].label
        verdict = f"obstructed, witness field = {witness}"
    return CertificateReport(
        submanifold=describe(L),
        entries=entries,
        max_modulus=max_mod,
        resolution=L.N,
        tolerance=tol,
        gate_resolution=gate_N,
        gate_difference=gate_diff,
        verdict=verdict,
        witness=witness,
        volume=volume(L),
    )


def require_minimal_lagrangian(L: TorusImmersion, tol: float = MINIMAL_TOL) -> None:
    defect = lagrangian_defect(L)
    if defect > LAGRANGIAN_TOL:
        raise HypothesisError(f"{L.label} is not Lagrangian (defect {defect:.2e})")
    hmax = float(np.max(mean_curvature(L).norm))
    if hmax > tol:
        raise HypothesisError(f"{L.label} is not minimal (max |h| = {hmax:.2e})")


def stokes_pointwise_check(L: TorusImmersion, V: HolomorphicField) -> float:
    """Max |d(i_V kappa) - div(V) kappa| over the grid, both pulled back to the torus.

    The (n-1)-form i_V kappa has components psi_k = kappa(V, d_1F, .., (omit d_kF), .., d_nF),
    and d psi = sum_k (-1)^(k-1) d_k psi_k  d theta_1 ^ ... ^ d theta_n.
    """
    require_minimal_lagrangian(L)
    c = canonical_section(L).coefficient
    vals, jac = V.jet_on(L)
    div = divergence_from_jet(L.model, L.chart, L.points, vals, jac)
    T = L.tangents
    n = L.n
    dphi = np.zeros(L.N**n, dtype=complex)
    for k in range(n):
        cols = [vals] + [T[:, m] for m in range(n) if m != k]
        psi = c * np.linalg.det(np.stack(cols, axis=-1))
        dphi += (-1) ** k * spectral.derivative(psi, L.N, n, k)
    rhs = div * c * np.linalg.det(np.swapaxes(T, -1, -2))
    return float(np.max(np.abs(dphi - rhs)))


@dataclass
class ConverseProbeReport:
    submanifold: dict
    norm_sq_real: float  # integral of |V_r|^2
    minus_div_real: float  # -Re integral div(V_r) kappa
    xi_pairing_real: list  # integral xi(V_r) kappa as [re, im]
    minus_div_full_real: list  # -integral div(V_r) kappa as [re, im]
    norm_sq_imag: float  # integral of |V_i|^2
    minus_div_imag: float  # -Im integral div(V_i) kappa
    defect: float
    identity_gap: float
    tolerance: float
    identity_tolerance: float
    tube_half_width: float
    jacobian_condition: float
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict.startswith("minimal")

    def to_dict(self) -> dict:
        return asdict(self)


def converse_probe(L: TorusImmersion, tol: float = PROBE_TOL, identity_tol: float = IDENTITY_TOL) -> ConverseProbeReport:
    """Minimality defect from the metric duals of Re xi and Im xi, with the integrated identity."""
    sec = canonical_section(L)
    xi = sec.xi
    Ginv = np.linalg.inv(L.frame.induced_metric)
    cimm = complexify_immersion(L)

    def probe(part):
        a = np.einsum("pkl,pl->pk", Ginv, part)
        Vt = pushforward_field(cimm, [a[:, k] for k in range(L.n)], label="probe")
        # kappa restricts to the volume form, so kappa-weighted integrals use the volume density
        div_int = complex(integrate(L, divergence_on(L, Vt)))
        pairing = complex(integrate(L, np.einsum("pk,pk->p", xi, a)))
        norm_sq = float(integrate(L, np.einsum("pk,pk->p", part, a)))
        return norm_sq, div_int, pairing

    nr, div_r, pair_r = probe(xi.real)
    ni, div_i, pair_i = probe(xi.imag)
    defect = nr + ni
    gap = max(
        abs(nr - (-div_r.real)),
        abs(ni - (-div_i.imag)),
        abs(pair_r - (-div_r)),
        abs(pair_i - (-div_i)),
    )
    if gap > identity_tol:
        verdict = f"identity violated (gap {gap:.2e})"
    elif defect < tol:
        verdict = "minimal Lagrangian: defect vanishes"
    else:
        verdict = f"not minimal Lagrangian: defect {defect:.3e}"
    return ConverseProbeReport(
        submanifold=describe(L),
        norm_sq_real=nr,
        minus_div_real=-div_r.real,
        xi_pairing_real=[pair_r.real, pair_r.imag],
        minus_div_full_real=[-div_r.real, -div_r.imag],
        norm_sq_imag=ni,
        minus_div_imag=-div_i.imag,
        defect=defect,
        identity_gap=float(gap),
        tolerance=tol,
        identity_tolerance=identity_tol,
        tube_half_width=cimm.tube.eta,
        jacobian_condition=cimm.condition,
        verdict=verdict,
    )


def corollary_integrand(L: TorusImmersion, j: int = 1, k: int = 2) -> np.ndarray:
    Z = L.model.to_homogeneous(L.chart, L.points)
    w = np.abs(Z) ** 2
    return (w[:, j - 1] - w[:, k - 1]) / w.sum(axis=1)


def corollary_integral(L: TorusImmersion, j: int = 1, k: int = 2) -> float:
    """Integral of (|z_j|^2 - |z_k|^2) / sum |z_i|^2 over L."""
    if L.model.kind != "projective":
        raise KahlerLagError("the moment integral needs homogeneous coordinates")
    return float(integrate(L, corollary_integrand(L, j, k)))


@dataclass
class StokesReport:
    submanifold: dict
    residuals: dict = field(default_factory=dict)
    max_residual: float = 0.0
    tolerance: float = 1e-6
    verdict: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def stokes_report(L: TorusImmersion, basis, tol: float = 1e-6) -> StokesReport:
    res = {V.label: stokes_pointwise_check(L, V) for V in basis}
    worst = max(res.values()) if res else 0.0
    verdict = "identity holds" if worst < tol else f"identity violated (max residual {worst:.2e})"
    return StokesReport(describe(L), res, worst, tol, verdict)
