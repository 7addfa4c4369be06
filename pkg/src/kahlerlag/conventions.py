"""Sign and normalization conventions used throughout the package.

Every identity check in the package is convention-sensitive, so the choices
are fixed here once and embedded verbatim in every run report.
"""

CONVENTIONS = {
    "hermitian_form": "h(X, Y) = g_{ab} X^a conj(Y^b), conjugate-linear in the second slot",
    "riemannian_metric": "g(X, Y) = 2 Re h(X, Y)",
    "complex_structure": "J acts on chart (1,0)-components as multiplication by i",
    "kahler_form": "omega(X, Y) = g(X, J Y) = 2 Im h(X, Y) = -i g_{ab} dz^a ^ dzbar^b",
    "ricci_form": "Ric = i ddbar log det g, evaluated like omega from R_{ab} = -d_a d_bbar log det g",
    "einstein_constant": "t with Ric = t omega; equals the curvature of the canonical bundle (i dxi = t omega)",
    "projective_normalization": "CPn-t1: K = (n+1) log(1+|w|^2), t = 1; CPn-unit: K = log(1+|w|^2), t = n+1",
    "moment_map": "mu = i t^-1 div(V) with d mu = i_V omega",
    "divergence": "div V = sum_a d_a V^a + V^c d_c log det g (complex trace of X -> nabla_X V)",
    "canonical_section": "kappa(v_1..v_n) = 1 on an oriented orthonormal frame; nabla_u kappa = xi(u) kappa",
    "mean_curvature_form": "sigma(e) = omega(h, e)",
    "real_coordinates": "real tangent vectors are ordered (x_1..x_n, y_1..y_n) with z = x + i y",
}
