"""Gate-error operators and closed-form error estimates.

For a qubit state ``|chi>`` and drive state ``|sigma>`` the fidelity of the
target gate ``K`` after a JC interaction of duration ``gT`` is a quadratic
form ``<sigma|F|sigma>``. Here ``F = W^dag W`` where row ``k`` of ``W`` holds
the coefficients of the amplitude ``<chi, k| (K^dag x 1) U |chi, sigma>``.
``W`` is tridiagonal and linear in the four qubit monomials

    m = (cos^2(t/2), sin(t)/2 e^{-i p}, sin(t)/2 e^{i p}, sin^2(t/2))

so sphere averages only need the second moments of ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import jc
from .exceptions import UnsupportedGateError

LN_SQRT_PI_2 = 0.5 * np.log(np.pi / 2)
LN_SQRT_PI_SQRT8 = 0.5 * np.log(np.pi / np.sqrt(8))

AXIAL_POINTS = (
    (0.0, 0.0),
    (np.pi, 0.0),
    (np.pi / 2, 0.0),
    (np.pi / 2, np.pi),
    (np.pi / 2, np.pi / 2),
    (np.pi / 2, -np.pi / 2),
)

# E[conj(m_p) m_q] over the uniform Bloch sphere, from E[cos t] = 0,
# E[cos^2 t] = 1/3 and E[e^{i k p}] = 0 for k != 0.
SPHERE_MOMENTS = np.array(
    [
        [1 / 3, 0, 0, 1 / 6],
        [0, 1 / 6, 0, 0],
        [0, 0, 1 / 6, 0],
        [1 / 6, 0, 0, 1 / 3],
    ]
)


@dataclass(frozen=True)
class ErrorOperator:
    matrix: np.ndarray
    kind: str
    gate: np.ndarray
    gT: float
    params: dict = field(default_factory=dict)

    @property
    def n_cut(self) -> int:
        return self.matrix.shape[0]

    def fidelity(self, state: np.ndarray) -> float:
        state = np.asarray(state)
        if state.ndim == 1:
            return float(np.real(np.vdot(state, self.matrix @ state)))
        return float(np.real(np.sum(self.matrix * state.T)))

    def error(self, state: np.ndarray) -> float:
        return 1.0 - self.fidelity(state)


def qubit_monomials(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    half = 0.5 * np.sin(theta)
    return np.array([c * c, half * np.exp(-1j * phi), half * np.exp(1j * phi), s * s])


def gamma(k: int, K: np.ndarray, theta: float, phi: float, gT: float):
    """``(G00, G01, G10, G11)`` for photon index ``k`` in the untruncated model."""
    if k < 0:
        raise ValueError("k must be non-negative")
    Kc = np.conj(K)
    C = lambda n: np.cos(gT * np.sqrt(n))  # noqa: E731
    S = lambda n: np.sin(gT * np.sqrt(n))  # noqa: E731
    cos2 = np.cos(theta / 2) ** 2
    sin2 = np.sin(theta / 2) ** 2
    half = 0.5 * np.sin(theta)
    g00 = C(k) * (Kc[0, 0] * cos2 + Kc[0, 1] * half * np.exp(-1j * phi))
    g01 = -1j * S(k) * (Kc[0, 1] * sin2 + Kc[0, 0] * half * np.exp(1j * phi))
    g10 = -1j * S(k + 1) * (Kc[1, 0] * cos2 + Kc[1, 1] * half * np.exp(-1j * phi))
    g11 = C(k + 1) * (Kc[1, 1] * sin2 + Kc[1, 0] * half * np.exp(1j * phi))
    return g00, g01, g10, g11


def _basis_bands(K: np.ndarray, gT: float, n_cut: int):
    """Tridiagonal coefficient matrices of ``W`` for each qubit monomial.

    Each entry is ``(diag, sub, sup)`` where ``sub[k-1] = W[k, k-1]`` and
    ``sup[k] = W[k, k+1]``.
    """
    Kc = np.conj(K)
    c_g, c_e, s = jc.jc_coefficients(gT, n_cut)
    s_up = -1j * s[1:]  # S_{k+1} for k = 0..n-2
    s_dn = -1j * s[1:]  # S_k for k = 1..n-1
    zero = np.zeros(n_cut - 1, dtype=complex)
    return [
        (Kc[0, 0] * c_g, zero, Kc[1, 0] * s_up),
        (Kc[0, 1] * c_g, zero, Kc[1, 1] * s_up),
        (Kc[1, 0] * c_e, Kc[0, 0] * s_dn, zero),
        (Kc[1, 1] * c_e, Kc[0, 1] * s_dn, zero),
    ]


def _dense(band, n_cut):
    diag, sub, sup = band
    return np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)


def w_matrix(K, gT, theta, phi, n_cut) -> np.ndarray:
    m = qubit_monomials(theta, phi)
    bands = _basis_bands(K, gT, n_cut)
    return sum(m[p] * _dense(bands[p], n_cut) for p in range(4))


def _hermitize(a):
    return 0.5 * (a + a.conj().T)


def error_operator_pointwise(K, gT, theta, phi, n_cut) -> ErrorOperator:
    """Fidelity operator for a fixed initial qubit state ``(theta, phi)``."""
    K = np.asarray(K, dtype=complex)
    w = w_matrix(K, gT, theta, phi, n_cut)
    mat = _hermitize(w.conj().T @ w)
    return ErrorOperator(mat, "pointwise", K, gT, {"theta": theta, "phi": phi})


def error_operator_average(K, gT, n_cut, method: str = "axial") -> ErrorOperator:
    """Bloch-sphere averaged fidelity operator.

    ``method="axial"`` averages the six axial-state operators;
    ``method="integral"`` contracts the monomial bands with the exact
    sphere moments.
    """
    K = np.asarray(K, dtype=complex)
    if method == "axial":
        mat = sum(
            error_operator_pointwise(K, gT, t, p, n_cut).matrix for t, p in AXIAL_POINTS
        ) / 6.0
    elif method == "integral":
        dense = [_dense(b, n_cut) for b in _basis_bands(K, gT, n_cut)]
        mat = np.zeros((n_cut, n_cut), dtype=complex)
        for p in range(4):
            for q in range(4):
                if SPHERE_MOMENTS[p, q]:
                    mat += SPHERE_MOMENTS[p, q] * (dense[p].conj().T @ dense[q])
        mat = _hermitize(mat)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ErrorOperator(mat, "average", K, gT, {"method": method})


def average_operator_bands(K, gT, n_cut):
    """Non-zero diagonals ``(d0, d1, d2)`` of the sphere-averaged operator.

    ``F_avg`` is pentadiagonal with ``F[i, i+k] = dk[i]``; this avoids the
    dense matrix for very large cutoffs.
    """
    K = np.asarray(K, dtype=complex)
    mats = [
        sp.diags([sub, diag, sup], [-1, 0, 1], format="csr")
        for diag, sub, sup in _basis_bands(K, gT, n_cut)
    ]
    f = sp.csr_matrix((n_cut, n_cut), dtype=complex)
    for p in range(4):
        for q in range(4):
            if SPHERE_MOMENTS[p, q]:
                f = f + SPHERE_MOMENTS[p, q] * (mats[p].conj().T @ mats[q])
    return tuple(np.asarray(f.diagonal(k)) for k in range(3))


def is_equatorial_pi_rotation(K: np.ndarray, tol: float = 1e-9):
    """Return the axis angle if ``K`` is a pi rotation about an xy-plane axis."""
    K = np.asarray(K, dtype=complex)
    # up to phase K = cos(phi) X + sin(phi) Y = [[0, e^{-i phi}], [e^{i phi}, 0]]
    if abs(K[0, 0]) > tol or abs(K[1, 1]) > tol:
        return None
    if abs(abs(K[0, 1]) - 1) > tol or abs(abs(K[1, 0]) - 1) > tol:
        return None
    return float(0.5 * np.angle(K[1, 0] / K[0, 1]))


def error_operator_min(phi_axis: float, gT: float, n_cut: int, gate=None) -> ErrorOperator:
    """Operator whose expectation gives the maximum error of a pi rotation.

    Averages the pointwise operators of the two equatorial states
    perpendicular to the rotation axis.
    """
    if gate is not None:
        axis = is_equatorial_pi_rotation(gate)
        if axis is None:
            raise UnsupportedGateError("maximum-error operator only exists for xy-plane pi rotations")
        if abs(np.exp(2j * axis) - np.exp(2j * phi_axis)) > 1e-9:
            raise UnsupportedGateError("gate axis does not match phi_axis")
    K = jc.rotation(np.pi, phi_axis)
    f1 = error_operator_pointwise(K, gT, np.pi / 2, phi_axis + np.pi / 2, n_cut)
    f2 = error_operator_pointwise(K, gT, np.pi / 2, phi_axis - np.pi / 2, n_cut)
    mat = 0.5 * (f1.matrix + f2.matrix)
    return ErrorOperator(mat, "min", K, gT, {"phi_axis": phi_axis})


def pointwise_error(K, gT, theta, phi, drive) -> float:
    drive = np.asarray(drive)
    return error_operator_pointwise(K, gT, theta, phi, drive.shape[0]).error(drive)


def average_error(K, gT, drive) -> float:
    drive = np.asarray(drive)
    return error_operator_average(K, gT, drive.shape[0]).error(drive)


def max_error(phi_axis, gT, drive) -> float:
    """Largest error of a pi rotation about ``phi_axis`` over the Bloch sphere.

    For the optimal drive families the maximum sits at one of the two
    equatorial states perpendicular to the axis; the larger of the two is
    returned. For squeezed cats both coincide and equal the ``F_min``
    expectation.
    """
    drive = np.asarray(drive)
    K = jc.rotation(np.pi, phi_axis)
    n_cut = drive.shape[0]
    return max(
        error_operator_pointwise(K, gT, np.pi / 2, phi_axis + s * np.pi / 2, n_cut).error(drive)
        for s in (1, -1)
    )


def gram_matrix(K, gT, drive) -> np.ndarray:
    """``G[p, q] = Tr(B_p^dag B_q rho)`` so that the pointwise fidelity is ``m^dag G m``."""
    K = np.asarray(K, dtype=complex)
    drive = np.asarray(drive, dtype=complex)
    n_cut = drive.shape[0]
    bands = _basis_bands(K, gT, n_cut)
    if drive.ndim == 1:
        b = np.stack([jc._tri_apply(*band, drive[:, None])[:, 0] for band in bands], axis=1)
        return b.conj().T @ b
    g = np.empty((4, 4), dtype=complex)
    ys = [jc._tri_apply(*band, drive) for band in bands]
    for p in range(4):
        for q in range(4):
            # Tr(B_p^dag B_q rho) = Tr((B_q rho) B_p^dag)
            g[p, q] = jc._trace_with(ys[q], bands[p])
    return g


def sphere_error_range(K, gT, drive, n_theta: int = 61, n_phi: int = 120):
    """Minimum and maximum pointwise error over the Bloch sphere.

    Returns ``(e_min, e_max, (theta_min, phi_min), (theta_max, phi_max))``;
    a grid scan is refined with Nelder-Mead.
    """
    from scipy.optimize import minimize

    g = gram_matrix(K, gT, drive)

    def err(x):
        m = qubit_monomials(x[0], x[1])
        return 1.0 - float(np.real(m.conj() @ g @ m))

    th = np.linspace(0, np.pi, n_theta)
    ph = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    grid = np.array([[err((t, p)) for p in ph] for t in th])
    out = []
    for sign in (1, -1):
        i, j = np.unravel_index(np.argmin(sign * grid), grid.shape)
        res = minimize(lambda x: sign * err(x), [th[i], ph[j]], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-16})
        out.append((sign * res.fun, (float(res.x[0]), float(res.x[1] % (2 * np.pi)))))
    (lo, at_lo), (hi, at_hi) = out
    return float(lo), float(hi), at_lo, at_hi


def exact_average_error_xpi(drive: np.ndarray, gT: float) -> float:
    """Closed-form sphere-averaged error of an X_pi gate for a pure drive state.

    Uses the same truncation convention as the operators (the top Fock level
    does not couple upward).
    """
    c = np.asarray(drive, dtype=complex)
    n_cut = c.shape[0]
    s = np.sin(gT * np.sqrt(np.arange(n_cut + 1, dtype=float)))
    s[n_cut] = 0.0
    p = np.abs(c) ** 2
    total = np.sum(p * (s[:n_cut] ** 2 + s[1:] ** 2))
    # cross term: n runs over 1..n_cut-2 so that c_{n+1}, c_{n-1} exist
    n = np.arange(1, n_cut - 1)
    total += np.sum(2 * s[n] * s[n + 1] * np.real(c[n + 1] * np.conj(c[n - 1])))
    return float(2 / 3 - total / 6)


def semiclassical_average_error(r: float, n_bar: float) -> float:
    """Large-n average X_pi error of a minimum-uncertainty classical pulse."""
    return (4 * np.exp(2 * r) + np.pi**2 * np.exp(-2 * r)) / (24 * n_bar)


# (angle, family, which) -> (coefficient of 1/n, optimal |r|)
_TABLE = {
    ("pi", "coherent", "avg"): ((4 + np.pi**2) / 24, 0.0),
    ("pi", "coherent", "max"): ((4 + 4 * np.pi + np.pi**2) / 16, 0.0),
    ("pi", "squeezed", "avg"): (np.pi / 6, LN_SQRT_PI_2),
    ("pi", "squeezed", "max"): (np.pi / 2, LN_SQRT_PI_2),
    ("pi", "cat", "avg"): (np.pi / 6, LN_SQRT_PI_2),
    ("pi", "cat", "max"): (np.pi / 4, LN_SQRT_PI_2),
    ("pi/2", "coherent", "avg"): ((8 + np.pi**2) / 96, 0.0),
    ("pi/2", "squeezed", "avg"): (np.sqrt(2) * np.pi / 24, LN_SQRT_PI_SQRT8),
}


def _angle_key(gate) -> str:
    if isinstance(gate, str):
        key = gate.replace("R'_", "").replace("R_", "")
        if key in ("pi", "pi/2"):
            return key
        raise UnsupportedGateError(f"unknown rotation {gate!r}")
    theta = abs(float(gate))
    if np.isclose(theta, np.pi):
        return "pi"
    if np.isclose(theta, np.pi / 2):
        return "pi/2"
    raise UnsupportedGateError(f"no closed form for rotation angle {gate}")


def analytic_error(gate, family: str, n_bar: float, which: str = "avg", phi: float = 0.0):
    """First-order error ``coefficient / n_bar`` and the optimal squeezing.

    ``gate`` is ``"pi"``, ``"pi/2"`` or a rotation angle. Returns
    ``(value, r)`` with ``r`` carrying the phase ``e^{2 i phi}`` of the axis.
    """
    if n_bar <= 0:
        raise ValueError("n_bar must be positive")
    key = (_angle_key(gate), family, which)
    if key not in _TABLE:
        raise UnsupportedGateError(f"no closed form for {key}")
    coeff, r = _TABLE[key]
    return coeff / n_bar, r * np.exp(2j * phi)
