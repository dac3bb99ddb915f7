"""Resonant Jaynes-Cummings evolution of qubits coupled to one drive mode.

Basis ordering for joint states is qubits major, Fock index minor: the
amplitude of ``|q_1 ... q_k, n>`` sits at ``(q_1 ... q_k)_2 * n_cut + n`` with
``|g> = 0`` and ``|e> = 1``.

The interaction couples ``|g, l> <-> |e, l-1>`` with amplitudes
``C_l = cos(gT sqrt(l))`` and ``-i S_l = -i sin(gT sqrt(l))``. In the truncated
space the level ``|e, n_cut-1>`` has no partner and evolves trivially, which
keeps the truncated propagator exactly unitary.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

GATE_NAMES = {
    "Xpi": (np.pi, 0.0),
    "Ypi": (np.pi, np.pi / 2),
    "Xpi2": (np.pi / 2, 0.0),
    "Ypi2": (np.pi / 2, np.pi / 2),
    "X-pi2": (-np.pi / 2, 0.0),
}


def rotation(theta: float, phi: float) -> np.ndarray:
    """``exp(-i theta/2 (cos(phi) X + sin(phi) Y))``."""
    axis = np.cos(phi) * SX + np.sin(phi) * SY
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * axis


def parse_gate(name: str) -> tuple[float, float]:
    """Map a gate name such as ``Xpi`` or ``Ypi2`` to ``(theta, phi)``.

    Also accepts ``R:<theta>:<phi>`` with angles in radians.
    """
    if name in GATE_NAMES:
        return GATE_NAMES[name]
    if name.startswith("R:"):
        parts = name.split(":")
        if len(parts) == 3:
            return float(parts[1]), float(parts[2])
    raise ValueError(f"unknown gate {name!r}; expected one of {sorted(GATE_NAMES)} or R:theta:phi")


def qubit_state(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)], dtype=complex)


def qubit_density(theta: float, phi: float) -> np.ndarray:
    v = qubit_state(theta, phi)
    return np.outer(v, v.conj())


def semiclassical_gate(alpha: complex, gT: float) -> np.ndarray:
    """Propagator of the classical-field Hamiltonian ``alpha|e><g| + alpha*|g><e|``."""
    return rotation(2 * gT * abs(alpha), float(np.angle(alpha)))


def rotation_time(theta: float, n_bar: float) -> float:
    """Dimensionless interaction time ``gT`` from the timing condition ``2 gT sqrt(n) = theta``."""
    return abs(theta) / (2 * np.sqrt(n_bar))


def jc_coefficients(gT: float, n_cut: int):
    """Return ``(c_g, c_e, s)`` for the truncated propagator.

    ``c_g[l] = C_l`` multiplies ``|g, l>``; ``c_e[l] = C_{l+1}`` multiplies
    ``|e, l>`` (1 at the top level); ``s[l] = S_l`` couples ``|g, l>`` and
    ``|e, l-1>`` (``s[0]`` is unused and zero).
    """
    root = np.sqrt(np.arange(n_cut + 1, dtype=float))
    c = np.cos(gT * root)
    s = np.sin(gT * root)
    c_g = c[:n_cut].copy()
    c_e = c[1:].copy()
    c_e[-1] = 1.0
    return c_g, c_e, s[:n_cut].copy()


def jc_propagator(gT: float, n_cut: int) -> np.ndarray:
    """Dense ``2 n_cut x 2 n_cut`` propagator in the (qubit, Fock) basis."""
    if gT < 0:
        raise ValueError("gT must be non-negative")
    c_g, c_e, s = jc_coefficients(gT, n_cut)
    u = np.zeros((2 * n_cut, 2 * n_cut), dtype=complex)
    idx = np.arange(n_cut)
    u[idx, idx] = c_g
    u[n_cut + idx, n_cut + idx] = c_e
    l = np.arange(1, n_cut)
    # |g,l> -> -i S_l |e,l-1>  and  |e,l-1> -> -i S_l |g,l>
    u[n_cut + l - 1, l] = -1j * s[l]
    u[l, n_cut + l - 1] = -1j * s[l]
    return u


def _apply_pair(g: np.ndarray, e: np.ndarray, gT: float):
    """Evolve the qubit-ground and qubit-excited Fock blocks (Fock axis first)."""
    n_cut = g.shape[0]
    c_g, c_e, s = jc_coefficients(gT, n_cut)
    shape = (-1,) + (1,) * (g.ndim - 1)
    c_g, c_e, s = c_g.reshape(shape), c_e.reshape(shape), s.reshape(shape)
    new_g = c_g * g
    new_e = c_e * e
    new_g[1:] += -1j * s[1:] * e[:-1]
    new_e[:-1] += -1j * s[1:] * g[1:]
    return new_g, new_e


def _n_qubits(dim: int, n_cut: int) -> int:
    k = int(round(np.log2(dim // n_cut))) if dim % n_cut == 0 else -1
    if k < 1 or (2**k) * n_cut != dim:
        raise ValueError(f"dimension {dim} is not 2^k * {n_cut}")
    return k


def _apply_vectors(psi: np.ndarray, gT: float, target: int, n_cut: int) -> np.ndarray:
    # psi has the joint index on axis 0; trailing axes are batch columns
    dim = psi.shape[0]
    k = _n_qubits(dim, n_cut)
    if not 0 <= target < k:
        raise IndexError(f"qubit index {target} out of range for {k} qubits")
    batch = psi.shape[1:]
    t = psi.reshape((2**target, 2, 2 ** (k - target - 1), n_cut) + batch)
    # move Fock axis to front so the coefficient vectors broadcast
    t = np.moveaxis(t, 3, 0)
    g, e = _apply_pair(t[:, :, 0], t[:, :, 1], gT)
    out = np.stack([g, e], axis=2)
    out = np.moveaxis(out, 0, 3)
    return out.reshape(psi.shape)


def evolve(joint: np.ndarray, gT: float, target_qubit: int, n_cut: int) -> np.ndarray:
    """Apply the JC propagator between ``target_qubit`` and the drive.

    ``joint`` is a state vector or density matrix on ``2^k * n_cut``
    dimensions; the full-space operator is never formed.
    """
    joint = np.asarray(joint, dtype=complex)
    if gT == 0:
        _apply_vectors(joint, gT, target_qubit, n_cut)  # index validation
        return joint.copy()
    if joint.ndim == 1:
        return _apply_vectors(joint, gT, target_qubit, n_cut)
    half = _apply_vectors(joint, gT, target_qubit, n_cut)
    return _apply_vectors(half.conj().T, gT, target_qubit, n_cut).conj().T


def product_state(qubits, drive: np.ndarray) -> np.ndarray:
    """Kronecker product of qubit vectors (in register order) and a drive vector."""
    out = np.ones(1, dtype=complex)
    for q in qubits:
        out = np.kron(out, q)
    return np.kron(out, drive)


def partial_trace_drive(joint: np.ndarray, n_cut: int) -> np.ndarray:
    """Reduced density matrix of the qubit register."""
    joint = np.asarray(joint)
    q = joint.shape[0] // n_cut
    if joint.ndim == 1:
        m = joint.reshape(q, n_cut)
        return m @ m.conj().T
    return np.einsum("anbn->ab", joint.reshape(q, n_cut, q, n_cut))


def partial_trace_qubit(joint: np.ndarray, index: int, n_cut: int) -> np.ndarray:
    """Trace out one qubit; returns a density matrix on the remaining factors.

    With a single qubit the result is the drive density matrix.
    """
    joint = np.asarray(joint)
    k = _n_qubits(joint.shape[0], n_cut)
    if not 0 <= index < k:
        raise IndexError(f"qubit index {index} out of range for {k} qubits")
    rest = joint.shape[0] // 2
    shape = (2**index, 2, 2 ** (k - index - 1) * n_cut)
    if joint.ndim == 1:
        m = joint.reshape(shape)
        return np.einsum("aqb,cqd->abcd", m, m.conj()).reshape(rest, rest)
    r = joint.reshape(shape + shape)
    return np.einsum("aqbcqd->abcd", r).reshape(rest, rest)


# -- pairwise qubit/pulse interaction in the separable picture ----------------


def _tri_apply(diag, sub, sup, x):
    # (diag + sub on the first lower diagonal + sup on the first upper) @ x
    y = diag[:, None] * x
    if np.any(sub):
        y[1:] += sub[:, None] * x[:-1]
    if np.any(sup):
        y[:-1] += sup[:, None] * x[1:]
    return y


def _kraus_tridiag(vec: np.ndarray, gT: float, n_cut: int):
    """Drive operators ``A_out = sum_q vec[q] U[out, q]`` as tridiagonal bands.

    Returns a list ``[(diag, sub, sup)]`` for ``out = g, e``.
    """
    c_g, c_e, s = jc_coefficients(gT, n_cut)
    zero = np.zeros(n_cut - 1, dtype=complex)
    band = -1j * s[1:]
    a_g = (vec[0] * c_g, vec[1] * band, zero)
    a_e = (vec[1] * c_e, zero, vec[0] * band)
    return [a_g, a_e]


def _sandwich(op, rho):
    # A rho A^dag with the column side applied in place (no transposes)
    diag, sub, sup = op
    y = _tri_apply(diag, sub, sup, rho)
    out = y * diag.conj()
    if np.any(sub):
        out[:, 1:] += y[:, :-1] * sub.conj()
    if np.any(sup):
        out[:, :-1] += y[:, 1:] * sup.conj()
    return out, y


def _trace_with(y, op):
    # Tr(y A^dag) for tridiagonal A
    diag, sub, sup = op
    return (
        np.sum(np.diagonal(y) * diag.conj())
        + np.sum(np.diagonal(y, -1) * sub.conj())
        + np.sum(np.diagonal(y, 1) * sup.conj())
    )


def interact(qubit: np.ndarray, drive: np.ndarray, gT: float, return_qubit: bool = True):
    """One qubit/drive interaction followed by mutual partial traces.

    ``qubit`` is a 2-vector or 2x2 density matrix; ``drive`` a Fock-space
    density matrix. Returns ``(qubit_out, drive_out)`` unit-trace densities;
    the joint correlations are discarded.
    """
    qubit = np.asarray(qubit, dtype=complex)
    n_cut = drive.shape[0]
    if qubit.ndim == 1:
        terms = [(1.0, qubit)]
    else:
        w, v = np.linalg.eigh(qubit)
        terms = [(w[i], v[:, i]) for i in range(2) if w[i] > 1e-15]
    drive_out = np.zeros_like(drive, dtype=complex)
    qubit_out = np.zeros((2, 2), dtype=complex)
    for p, vec in terms:
        ops = _kraus_tridiag(vec, gT, n_cut)
        ys = []
        for op in ops:
            z, y = _sandwich(op, drive)
            drive_out += p * z
            ys.append(y)
        if return_qubit:
            for o in range(2):
                for o2, op2 in enumerate(ops):
                    qubit_out[o, o2] += p * _trace_with(ys[o], op2)
    # both outputs carry Tr(qubit) * Tr(drive); pairwise exchanges between
    # reused pulses and qubits would compound any rounding in that product
    drive_out /= np.real(np.trace(drive_out))
    if return_qubit:
        qubit_out = 0.5 * (qubit_out + qubit_out.conj().T)
        return qubit_out / np.real(np.trace(qubit_out)), drive_out
    return None, drive_out


def drive_after(qubit: np.ndarray, drive: np.ndarray, gT: float) -> np.ndarray:
    """Drive density after interacting with ``qubit`` and tracing the qubit out."""
    return interact(qubit, drive, gT, return_qubit=False)[1]
