"""Fidelity-optimal drive states and their characterization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import fock, jc
from .error import ErrorOperator, error_operator_average, error_operator_min

DENSE_LIMIT = 512


@dataclass(frozen=True)
class OptimalState:
    state: np.ndarray
    fidelity: float
    degenerate: bool
    cluster_size: int
    residual: float

    @property
    def error(self) -> float:
        return 1.0 - self.fidelity

    def __iter__(self):
        # allows ``state, f = optimal_drive_state(F)``
        return iter((self.state, self.fidelity))


def gate_angles(K: np.ndarray) -> tuple[float, float]:
    """Rotation angle in ``[0, pi]`` and axis azimuth of a single-qubit gate.

    For pi rotations the axis is only defined modulo pi; it is folded into
    ``(-pi/2, pi/2]``.
    """
    K = np.asarray(K, dtype=complex)
    su = K / np.sqrt(np.linalg.det(K))
    c = np.real(0.5 * (su[0, 0] + su[1, 1]))
    if c < 0:
        su, c = -su, -c
    theta = 2 * np.arccos(np.clip(c, -1.0, 1.0))
    s = np.sin(theta / 2)
    if s < 1e-12:
        return 0.0, 0.0
    phi = float(np.angle(1j * su[1, 0] / s))
    if np.isclose(theta, np.pi):
        if phi <= -np.pi / 2 + 1e-12:
            phi += np.pi
        elif phi > np.pi / 2 + 1e-12:
            phi -= np.pi
    return float(theta), phi


def photon_cap(K: np.ndarray, gT: float) -> float:
    """Mean-photon ceiling that excludes solutions with extra 2 pi turns.

    Halfway, in field amplitude, between the direct solution and the nearest
    wrapped one.
    """
    theta, _ = gate_angles(K)
    if gT <= 0 or theta == 0:
        return np.inf
    wrapped = 2 * np.pi - theta if theta < np.pi - 1e-9 else 3 * np.pi
    return ((theta + wrapped) / (4 * gT)) ** 2


def _top_eigenpairs(mat: np.ndarray, k: int = 8):
    n = mat.shape[0]
    if n <= DENSE_LIMIT:
        return np.linalg.eigh(mat)
    try:
        # F is banded, so shift-invert just above the spectrum is cheap
        _, v = eigsh(sp.csc_matrix(mat), k=min(k, n - 2), sigma=1.0 + 1e-6, which="LM")
    except ArpackNoConvergence:
        return np.linalg.eigh(mat)
    # ARPACK does not orthonormalize inside degenerate clusters; Rayleigh-Ritz does
    q, _ = np.linalg.qr(v)
    h = q.conj().T @ mat @ q
    w, y = np.linalg.eigh(0.5 * (h + h.conj().T))
    return w, q @ y


def _axis_quadrature(n_cut: int, phi: float) -> np.ndarray:
    a = fock.annihilation(n_cut)
    q = np.exp(-1j * phi) * a
    return 0.5 * (q + q.conj().T)


def optimal_drive_state(
    F: ErrorOperator, cap: float | None = None, degeneracy_tol: float = 1e-9
) -> OptimalState:
    """Top eigenstate of a fidelity operator.

    Eigenvectors with mean photon number above ``cap`` (default:
    :func:`photon_cap` of the operator's gate) are skipped. A degenerate top
    cluster is resolved to the state with the largest field quadrature along
    the gate axis, which picks the Gaussian branch over cat superpositions.
    """
    mat = F.matrix
    n_cut = mat.shape[0]
    if cap is None:
        cap = photon_cap(F.gate, F.gT)
    w, v = _top_eigenpairs(mat)
    photons = np.array([fock.mean_photon(v[:, j]) for j in range(v.shape[1])])
    allowed = np.flatnonzero(photons <= cap)
    if allowed.size == 0 and v.shape[1] < n_cut:
        w, v = np.linalg.eigh(mat)
        photons = np.array([fock.mean_photon(v[:, j]) for j in range(n_cut)])
        allowed = np.flatnonzero(photons <= cap)
    if allowed.size == 0:
        raise ValueError("no eigenstate below the photon cap")
    top = allowed[np.argmax(w[allowed])]
    cluster = allowed[np.abs(w[allowed] - w[top]) <= degeneracy_tol]
    if cluster.size > 1:
        # prefer the lowest-energy members of the cluster
        low = photons[cluster].min()
        cluster = cluster[photons[cluster] <= low + 1.0]
    basis = v[:, cluster]
    if basis.shape[1] > 1:
        _, phi = gate_angles(F.gate)
        q = basis.conj().T @ _axis_quadrature(n_cut, phi) @ basis
        _, cv = np.linalg.eigh(0.5 * (q + q.conj().T))
        state = basis @ cv[:, -1]
    else:
        state = basis[:, 0]
    state = state / np.linalg.norm(state)
    # fix the global phase: largest amplitude real and positive
    j = np.argmax(np.abs(state))
    state = state * np.exp(-1j * np.angle(state[j]))
    f = F.fidelity(state)
    residual = float(np.linalg.norm(mat @ state - f * state))
    return OptimalState(state, f, cluster.size > 1, int(cluster.size), residual)


def _moment_guesses(state: np.ndarray):
    n_cut = state.shape[0]
    a = fock.annihilation(n_cut)
    mean_a = np.vdot(state, a @ state)
    a2 = np.vdot(state, a @ (a @ state))
    n = fock.mean_photon(state)
    nn = n - abs(mean_a) ** 2
    mag = np.arcsinh(np.sqrt(max(nn, 0.0)))
    guesses = [(mean_a, mag * np.exp(1j * np.angle(-(a2 - mean_a**2))) if mag > 0 else 0.0)]
    # superpositions of opposite fields have <a> ~ 0: also start on each branch
    axis = np.exp(0.5j * np.angle(a2))
    for sign in (1, -1):
        guesses.append((sign * np.sqrt(n) * axis, 0.0))
    return guesses


def _gaussian(alpha, r, n_cut):
    dim = fock._work_dim(n_cut)
    psi = fock._apply_displacement(alpha, fock._apply_squeeze(r, fock._vacuum(dim)))[:n_cut]
    return psi / np.linalg.norm(psi)


def characterize_state(state: np.ndarray):
    """Least-squares fit of ``state`` to a squeezed coherent state.

    Returns ``(alpha, r, residual)`` with ``residual = 1 - |<fit|state>|^2``.
    """
    state = np.asarray(state, dtype=complex)
    n_cut = state.shape[0]

    def loss(x):
        fit = _gaussian(complex(x[0], x[1]), complex(x[2], x[3]), n_cut)
        return 1.0 - abs(np.vdot(fit, state)) ** 2

    best = None
    for a0, r0 in _moment_guesses(state):
        x0 = np.array([a0.real, a0.imag, np.real(r0), np.imag(r0)])
        res = minimize(loss, x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 4000, "maxfev": 8000})
        if best is None or res.fun < best.fun - 1e-12:
            best = res
        if best.fun < 1e-8:
            break
    # a second pass from the optimum tightens the simplex
    best = minimize(loss, best.x, method="Nelder-Mead",
                    options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 4000, "maxfev": 8000})
    x = best.x
    return complex(x[0], x[1]), complex(x[2], x[3]), float(best.fun)


def commutator_magnitude(F1: np.ndarray, F2: np.ndarray, n_bar: float, window: float = 4.0) -> float:
    """Largest element of ``[F1, F2]`` inside ``n_bar +- window sqrt(n_bar)``.

    Rows near the truncation edge describe photon numbers no relevant drive
    occupies and are excluded.
    """
    c = F1 @ F2 - F2 @ F1
    n_cut = c.shape[0]
    lo = max(0, int(np.floor(n_bar - window * np.sqrt(n_bar))))
    hi = min(n_cut, int(np.ceil(n_bar + window * np.sqrt(n_bar))) + 1)
    return float(np.abs(c[lo:hi, lo:hi]).max())


def commutator_magnitudes(phi_axis: float, n_bar_list, window: float = 4.0) -> list[float]:
    """``max |[F_min, F_avg]|`` for each photon number at the matched pi time."""
    K = jc.rotation(np.pi, phi_axis)
    mags = []
    for n_bar in n_bar_list:
        n_cut = fock.required_cutoff(n_bar)
        gT = jc.rotation_time(np.pi, n_bar)
        fa = error_operator_average(K, gT, n_cut).matrix
        fm = error_operator_min(phi_axis, gT, n_cut).matrix
        mags.append(commutator_magnitude(fm, fa, n_bar, window))
    return mags


def commutator_scaling(phi_axis: float, n_bar_list, window: float = 4.0) -> float:
    """Log-log slope of the commutator magnitude against the photon number."""
    n_bar_list = [float(n) for n in n_bar_list]
    if len(set(n_bar_list)) < 2:
        raise ValueError("need at least two distinct photon numbers")
    mags = commutator_magnitudes(phi_axis, n_bar_list, window)
    return float(np.polyfit(np.log(n_bar_list), np.log(mags), 1)[0])
