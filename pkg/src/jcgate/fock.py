"""Bosonic drive states in a truncated Fock space.

States are plain complex numpy vectors (pure) or Hermitian matrices
(mixed), indexed by photon number ``0 .. n_cut - 1``. The squeezed coherent
state convention is ``|alpha, r> = D(alpha) S(r) |0>`` with

    D(alpha) = exp(alpha a^dag - alpha^* a)
    S(r)     = exp((r^* a^2 - r a^dag^2) / 2)

evaluated through cached eigendecompositions of the truncated generators.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .exceptions import CutoffError, DegenerateStateError

LEAKAGE_TOL = 1e-8
NORM_TOL = 1e-10

# N_cut > n + CUTOFF_SIGMAS * spread + margin; the leakage check catches the rest
CUTOFF_SIGMAS = 8.0
CUTOFF_MARGIN = 12.0


def photon_spread(alpha: complex, r: complex = 0.0) -> float:
    """Photon-number standard deviation of ``D(alpha) S(r)|0>``."""
    alpha, r = complex(alpha), complex(r)
    a, rr = abs(r), np.angle(r)
    var = abs(alpha) ** 2 * (np.cosh(2 * a) - np.sinh(2 * a) * np.cos(2 * np.angle(alpha) - rr))
    var += 2 * (np.sinh(a) * np.cosh(a)) ** 2
    return float(np.sqrt(max(var, 0.0)))


def _tail_margin(r: complex) -> float:
    # squeezed-vacuum populations fall off like tanh(|r|)^n
    t = np.tanh(abs(r))
    if t < 1e-3:
        return CUTOFF_MARGIN
    return max(CUTOFF_MARGIN, np.log(LEAKAGE_TOL) / np.log(t))


def required_cutoff(n_bar: float, spread: float | None = None, r: complex = 0.0) -> int:
    """Smallest Fock cutoff accepted for a state with mean photon number ``n_bar``.

    ``spread`` is the photon-number standard deviation (``sqrt(n_bar)`` by
    default) and ``r`` the squeezing, which sets the tail margin.
    """
    n_bar = max(float(n_bar), 0.0)
    if n_bar == 0 and r == 0:
        return 2  # the vacuum is exact once one empty level sits above it
    spread = np.sqrt(n_bar) if spread is None else spread
    return int(np.floor(n_bar + CUTOFF_SIGMAS * spread + _tail_margin(r))) + 1


def check_cutoff(n_bar: float, n_cut: int, spread: float | None = None, r: complex = 0.0) -> None:
    need = required_cutoff(n_bar, spread, r)
    if n_cut < need:
        raise CutoffError(
            f"n_cut={n_cut} too small for mean photon number {n_bar:.4g}; need >= {need}"
        )


def _check_leakage(psi: np.ndarray) -> None:
    leak = abs(psi[-1]) ** 2
    if leak >= LEAKAGE_TOL:
        raise CutoffError(f"truncation leakage {leak:.3g} in the top Fock level")


def _work_dim(n_cut: int) -> int:
    # generators are exponentiated in a padded space; the padding absorbs the
    # unitarity defect of the truncated matrices
    return n_cut + max(40, int(4 * np.sqrt(n_cut)))


def annihilation(n_cut: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_cut, dtype=float)), 1)


def number_operator(n_cut: int) -> np.ndarray:
    return np.diag(np.arange(n_cut, dtype=float))


@lru_cache(maxsize=32)
def _displacement_eig(dim: int):
    # i (a^dag - a) is real-antisymmetric times i, hence Hermitian
    a = annihilation(dim)
    gen = 1j * (a.T - a)
    w, v = np.linalg.eigh(gen)
    return w, v


@lru_cache(maxsize=32)
def _squeeze_eig(dim: int):
    a = annihilation(dim)
    a2 = a @ a
    gen = 0.5j * (a2 - a2.T)
    w, v = np.linalg.eigh(gen)
    return w, v


def _phase_diag(dim: int, angle: float) -> np.ndarray:
    return np.exp(1j * angle * np.arange(dim))


def _apply_displacement(alpha: complex, psi: np.ndarray) -> np.ndarray:
    # D(alpha) = R D(|alpha|) R^dag with R = exp(i arg(alpha) n)
    dim = psi.shape[0]
    if alpha == 0:
        return psi.copy()
    w, v = _displacement_eig(dim)
    ph = _phase_diag(dim, np.angle(alpha))
    x = v.conj().T @ (ph.conj() * psi)
    x = np.exp(-1j * abs(alpha) * w) * x
    return ph * (v @ x)


def _apply_squeeze(r: complex, psi: np.ndarray) -> np.ndarray:
    # S(r) = R S(|r|) R^dag with R = exp(i arg(r)/2 n)
    dim = psi.shape[0]
    if r == 0:
        return psi.copy()
    w, v = _squeeze_eig(dim)
    ph = _phase_diag(dim, 0.5 * np.angle(r))
    x = v.conj().T @ (ph.conj() * psi)
    x = np.exp(-1j * abs(r) * w) * x
    return ph * (v @ x)


def displacement_matrix(alpha: complex, n_cut: int) -> np.ndarray:
    """Matrix of D(alpha) obtained by exponentiating the truncated generator."""
    if n_cut < 2:
        raise ValueError("n_cut must be >= 2")
    w, v = _displacement_eig(n_cut)
    ph = _phase_diag(n_cut, np.angle(alpha))
    u = (v * np.exp(-1j * abs(alpha) * w)) @ v.conj().T
    return ph[:, None] * u * ph.conj()[None, :]


def squeeze_matrix(r: complex, n_cut: int) -> np.ndarray:
    """Matrix of S(r) obtained by exponentiating the truncated generator."""
    if n_cut < 2:
        raise ValueError("n_cut must be >= 2")
    w, v = _squeeze_eig(n_cut)
    ph = _phase_diag(n_cut, 0.5 * np.angle(r))
    u = (v * np.exp(-1j * abs(r) * w)) @ v.conj().T
    return ph[:, None] * u * ph.conj()[None, :]


def _vacuum(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def _finish(psi: np.ndarray, n_cut: int) -> np.ndarray:
    psi = psi[:n_cut]
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise DegenerateStateError("state has vanishing norm")
    psi = psi / norm
    _check_leakage(psi)
    return psi


def fock_state(n: int, n_cut: int) -> np.ndarray:
    if not 0 <= n < n_cut:
        raise ValueError(f"Fock index {n} outside 0..{n_cut - 1}")
    psi = np.zeros(n_cut, dtype=complex)
    psi[n] = 1.0
    return psi


def coherent_state(alpha: complex, n_cut: int) -> np.ndarray:
    """Poissonian coherent state, renormalized over the truncated basis."""
    alpha = complex(alpha)
    check_cutoff(abs(alpha) ** 2, n_cut)
    n = np.arange(n_cut)
    if alpha == 0:
        return _vacuum(n_cut)
    # log-space evaluation keeps large-n terms finite
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    psi = np.exp(log_mag + 1j * n * np.angle(alpha))
    return _finish(psi, n_cut)


def squeezed_coherent_state(alpha: complex, r: complex, n_cut: int) -> np.ndarray:
    """``D(alpha) S(r) |0>`` truncated to ``n_cut`` levels and renormalized."""
    alpha, r = complex(alpha), complex(r)
    check_cutoff(abs(alpha) ** 2 + np.sinh(abs(r)) ** 2, n_cut, photon_spread(alpha, r), r)
    dim = _work_dim(n_cut)
    psi = _apply_squeeze(r, _vacuum(dim))
    psi = _apply_displacement(alpha, psi)
    return _finish(psi, n_cut)


def squeezed_cat_state(alpha: complex, r: complex, sign: int, n_cut: int) -> np.ndarray:
    """Normalized superposition ``|alpha, r> + sign |-alpha, r>``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    alpha, r = complex(alpha), complex(r)
    # each branch has the spread of |alpha, r>
    check_cutoff(abs(alpha) ** 2 + np.sinh(abs(r)) ** 2, n_cut, photon_spread(alpha, r), r)
    dim = _work_dim(n_cut)
    sq = _apply_squeeze(r, _vacuum(dim))
    psi = _apply_displacement(alpha, sq) + sign * _apply_displacement(-alpha, sq)
    if np.linalg.norm(psi) < 1e-12:
        raise DegenerateStateError("cat branches cancel")
    return _finish(psi, n_cut)


def to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 2:
        return state
    return np.outer(state, state.conj())


def mean_photon(state: np.ndarray) -> float:
    state = np.asarray(state)
    n = np.arange(state.shape[0])
    if state.ndim == 1:
        return float(np.sum(n * np.abs(state) ** 2))
    return float(np.real(np.sum(n * np.diag(state))))


def photon_variance(state: np.ndarray) -> float:
    state = np.asarray(state)
    n = np.arange(state.shape[0])
    p = np.abs(state) ** 2 if state.ndim == 1 else np.real(np.diag(state))
    mean = np.sum(n * p)
    return float(np.sum(n**2 * p) - mean**2)


def purity(density: np.ndarray) -> float:
    """``2 Tr(rho^2) - 1``; equals 1 for pure states."""
    rho = to_density(density)
    return float(2.0 * np.real(np.vdot(rho, rho)) - 1.0)


def is_valid_density(rho: np.ndarray, tol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -tol)


def wigner(state: np.ndarray, z: complex) -> float:
    """Wigner function at ``z`` via the displaced-parity expectation.

    ``W(z) = (2/pi) Tr[D(-z) rho D(z) P]`` with ``P = exp(i pi a^dag a)``.
    """
    return float(wigner_grid(state, np.atleast_1d(np.asarray(z, dtype=complex)))[0])


def wigner_grid(state: np.ndarray, points) -> np.ndarray:
    """Vectorised :func:`wigner` over an array of phase-space points."""
    state = np.asarray(state)
    points = np.asarray(points, dtype=complex)
    n_cut = state.shape[0]
    # D(-z) moves the state by |z|; the working space must hold the displaced vector
    reach = (np.abs(points).max(initial=0.0) + np.sqrt(mean_photon(state))) ** 2
    dim = max(_work_dim(n_cut), _work_dim(required_cutoff(reach)))
    if state.ndim == 1:
        psi = np.zeros(dim, dtype=complex)
        psi[:n_cut] = state
        vecs, weights = psi[:, None], np.ones(1)
    else:
        w, v = np.linalg.eigh(state)
        keep = w > 1e-14
        vecs = np.zeros((dim, keep.sum()), dtype=complex)
        vecs[:n_cut] = v[:, keep]
        weights = w[keep]
    parity = (-1.0) ** np.arange(dim)
    ew, ev = _displacement_eig(dim)
    out = np.empty(points.shape, dtype=float)
    flat = points.ravel()
    res = out.ravel()
    for idx, z in enumerate(flat):
        # phi = D(-z) psi for every ensemble member at once
        ph = _phase_diag(dim, np.angle(-z))
        x = ev.conj().T @ (ph.conj()[:, None] * vecs)
        x = np.exp(-1j * abs(z) * ew)[:, None] * x
        phi = ph[:, None] * (ev @ x)
        res[idx] = (2 / np.pi) * np.sum(weights * (parity @ np.abs(phi) ** 2))
    return out
