"""Drive-refreshing protocol simulators.

Three variants share one drive model:

* ``ideal``: every cycle a random register qubit is rotated, then ``M``
  freshly prepared ancillas ``(|g> + i e^{i phi}|e>)/sqrt(2)`` each take a pi
  interaction with the drive.
* ``ghz``: the register is an N-qubit GHZ state kept coherently with the
  drive; ancillas refresh the drive between register gates.
* ``full``: ancillas start in ``|g>`` and persist; a corrector pulse of
  opposite phase prepares and resets them around every drive interaction.

Interaction times are dimensionless ``gT``. The default timing follows
``2 gT sqrt(n) = theta``; ``time_convention="linear"`` replays ``gT = theta/(2 n)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import fock, jc
from .error import LN_SQRT_PI_2, average_operator_bands, error_operator_average
from .exceptions import CutoffError, MemoryBudgetError

VARIANTS = ("ideal", "ghz", "full")


@dataclass
class ProtocolConfig:
    n_bar: float = 100.0
    r: complex = LN_SQRT_PI_2
    theta: float = np.pi
    phi: float = 0.0
    M: int = 0
    cycles: int = 100
    n_cut: int | None = None
    seed: int = 0
    variant: str = "ideal"
    ghz_N: int = 1
    time_convention: str = "sqrt"
    memory_budget: float = 2e9  # bytes
    max_rank: int = 256
    method: str = "density"
    n_traj: int = 64
    record_every: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.n_bar <= 0:
            raise ValueError("n_bar must be positive")
        if self.time_convention not in ("sqrt", "linear"):
            raise ValueError("time_convention must be 'sqrt' or 'linear'")
        if self.method not in ("density", "trajectories"):
            raise ValueError("method must be 'density' or 'trajectories'")
        if self.n_traj < 2 or self.record_every < 1:
            raise ValueError("n_traj must be >= 2 and record_every >= 1")
        if self.variant == "ghz" and self.ghz_N < 1:
            raise ValueError("ghz_N must be >= 1")
        if self.n_cut is None:
            self.n_cut = default_cutoff(self.n_bar, self.r)
        fock.check_cutoff(self.n_bar + np.sinh(abs(self.r)) ** 2, self.n_cut)

    def interaction_time(self, theta: float) -> float:
        if self.time_convention == "linear":
            return abs(theta) / (2 * self.n_bar)
        return jc.rotation_time(theta, self.n_bar)

    @property
    def gate(self) -> np.ndarray:
        return jc.rotation(self.theta, self.phi)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["r"] = [float(np.real(self.r)), float(np.imag(self.r))]
        return d


@dataclass
class CycleRecord:
    cycle: int
    avg_error: float
    purity: float
    mean_photon: float
    energy_per_gate: float = field(default=float("nan"))
    stderr: float = field(default=float("nan"))  # Monte Carlo error of avg_error


class QubitState(tuple):
    """Pure qubit state as ``(theta, phi)`` on the Bloch sphere."""

    def __new__(cls, theta, phi):
        return super().__new__(cls, (float(theta), float(phi)))

    @property
    def theta(self):
        return self[0]

    @property
    def phi(self):
        return self[1]

    @property
    def vector(self):
        return jc.qubit_state(self[0], self[1])


def default_cutoff(n_bar: float, r: complex = 0.0) -> int:
    # headroom for the photon-number drift of reused pulses
    return fock.required_cutoff(n_bar + np.sinh(abs(r)) ** 2, r=r) + 20


def sample_uniform_qubit(rng: np.random.Generator) -> QubitState:
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    return QubitState(np.arccos(cos_t), phi)


def initial_drive(config: ProtocolConfig, sign: int = 1) -> np.ndarray:
    """Squeezed coherent pulse aligned with the gate axis (``sign=-1`` for the corrector)."""
    rot = np.exp(1j * config.phi)
    alpha = sign * np.sqrt(config.n_bar) * rot
    r = config.r * rot**2
    return fock.squeezed_coherent_state(alpha, r, config.n_cut)


def ideal_ancilla(phi: float = 0.0) -> np.ndarray:
    return np.array([1.0, 1j * np.exp(1j * phi)], dtype=complex) / np.sqrt(2)


def _record(cycle, drive, f_avg, energy=float("nan")):
    return CycleRecord(
        cycle=cycle,
        avg_error=f_avg.error(drive),
        purity=fock.purity(drive),
        mean_photon=fock.mean_photon(drive),
        energy_per_gate=energy,
    )


def _check_top(rho, what="drive"):
    leak = float(np.real(rho[-1, -1]))
    if leak >= fock.LEAKAGE_TOL:
        raise CutoffError(f"{what} population {leak:.3g} reached the top Fock level; raise n_cut")


def _due(cycle, config):
    return cycle % config.record_every == 0 or cycle == config.cycles


def run_ideal(config: ProtocolConfig, return_state: bool = False):
    """Ideal-ancilla protocol; one record per cycle after the refresh.

    ``method="trajectories"`` unravels the drive density into pure-state
    trajectories, see :func:`run_ideal_trajectories`. With ``return_state``
    the final drive density is returned as well.
    """
    if config.method == "trajectories":
        return run_ideal_trajectories(config)
    rng = np.random.default_rng(config.seed)
    gt_reg = config.interaction_time(config.theta)
    gt_anc = config.interaction_time(np.pi)
    f_avg = error_operator_average(config.gate, gt_reg, config.n_cut)
    drive = fock.to_density(initial_drive(config))
    ancilla = ideal_ancilla(config.phi)
    records = []
    for cycle in range(1, config.cycles + 1):
        qubit = sample_uniform_qubit(rng).vector
        drive = jc.drive_after(qubit, drive, gt_reg)
        for _ in range(config.M):
            drive = jc.drive_after(ancilla, drive, gt_anc)
        _check_top(drive)
        if _due(cycle, config):
            records.append(_record(cycle, drive, f_avg, config.n_bar / cycle))
    if return_state:
        return records, drive
    return records


class _Coefficients:
    """JC and F_avg coefficients on a growable photon-number range."""

    def __init__(self, gts, K, gt_reg, size):
        self.gts, self.K, self.gt_reg = gts, K, gt_reg
        self.build(size)

    def build(self, size):
        self.size = size
        self.jc = {}
        for gt in self.gts:
            c_g, c_e, s = jc.jc_coefficients(gt, size)
            self.jc[gt] = (c_g, c_e, -1j * s)
        self.bands = average_operator_bands(self.K, self.gt_reg, size)


def _gather(arr, offsets, width):
    idx = offsets[None, :] + np.arange(width)[:, None]
    return arr[np.minimum(idx, arr.shape[0] - 1)]


def run_ideal_trajectories(config: ProtocolConfig) -> list[CycleRecord]:
    """Ideal-ancilla protocol by stochastic unraveling of the drive density.

    Each of ``config.n_traj`` trajectories keeps a pure drive state; after
    every interaction the qubit outcome ``g`` or ``e`` is drawn with its
    Born probability. All trajectories see the same register qubits as
    :func:`run_ideal` with the same seed, and the ensemble average of
    ``|psi><psi|`` equals that run's density cycle by cycle, so ``avg_error`` and
    ``mean_photon`` are unbiased estimates and ``purity`` uses the
    pairwise-overlap estimator of ``Tr rho^2``.

    Single trajectories stay narrow in photon number while the ensemble
    spreads, so each one lives in a sliding window of ``width`` levels and
    the cost per cycle does not grow with the spread.
    """
    # register qubits come from the same stream as the density method, so a
    # given seed unravels the same run; outcomes use an independent stream
    rng = np.random.default_rng(config.seed)
    outcomes = np.random.default_rng([config.seed, 1])
    n_traj = config.n_traj
    width = max(96, int(16 * np.sqrt(config.n_bar + 1)) + 64)
    gt_reg = config.interaction_time(config.theta)
    gt_anc = config.interaction_time(np.pi)
    coef = _Coefficients({gt_reg, gt_anc}, config.gate, gt_reg,
                         int(4 * config.n_bar) + 4 * width)

    psi0 = initial_drive(config)
    start = max(0, int(round(fock.mean_photon(psi0))) - width // 2)
    window0 = np.zeros(width, dtype=complex)
    chunk = psi0[start:start + width]
    window0[: chunk.size] = chunk
    psi = np.repeat(window0[:, None] / np.linalg.norm(window0), n_traj, axis=1)
    offsets = np.full(n_traj, start)
    levels = np.arange(width)[:, None]
    lost = 0.0

    def regather():
        nonlocal gathered
        gathered = {
            gt: tuple(_gather(a, offsets, width) for a in coef.jc[gt]) for gt in coef.jc
        }
        gathered["F"] = tuple(_gather(b, offsets, width) for b in coef.bands)

    gathered = {}
    regather()

    def step(v0, v1, gt):
        nonlocal psi, lost
        cg, ce, bd = gathered[gt]
        g = cg * psi * v0
        g[1:] += bd[1:] * psi[:-1] * v1
        e = ce * psi * v1
        e[:-1] += bd[1:] * psi[1:] * v0
        pg = np.sum(np.abs(g) ** 2, axis=0)
        pe = np.sum(np.abs(e) ** 2, axis=0)
        loss = 1.0 - pg - pe
        if loss.max() > 1e-6:
            t = int(np.argmax(loss))
            raise CutoffError(
                f"trajectory window lost weight {loss[t]:.3g} at offset {offsets[t]} "
                f"(mean photon {offsets[t] + np.sum(levels[:, 0] * np.abs(psi[:, t]) ** 2):.1f})"
            )
        lost = max(lost, float(loss.max()))
        pick = outcomes.random(n_traj) * (pg + pe) < pg
        psi = np.where(pick, g / np.sqrt(np.where(pg > 0, pg, 1.0)),
                       e / np.sqrt(np.where(pe > 0, pe, 1.0)))

    def recenter():
        nonlocal psi, offsets
        p = np.abs(psi) ** 2
        means = offsets + np.sum(levels * p, axis=0)
        target = np.maximum(0, np.round(means).astype(int) - width // 2)
        move = (np.abs(means - offsets - width // 2) > width // 8) & (target != offsets)
        if not move.any():
            return
        for t in np.flatnonzero(move):
            shift = target[t] - offsets[t]
            col = np.zeros(width, dtype=complex)
            if shift > 0:
                col[: width - shift] = psi[shift:, t]
            else:
                col[-shift:] = psi[: width + shift, t]
            psi[:, t] = col / np.linalg.norm(col)
        offsets = np.where(move, target, offsets)
        if offsets.max() + width + 2 >= coef.size:
            coef.build(2 * coef.size)
        regather()

    def expect_f():
        d0, d1, d2 = gathered["F"]
        val = np.sum(np.real(d0) * np.abs(psi) ** 2, axis=0)
        val += 2 * np.real(np.sum(psi[:-1].conj() * d1[:-1] * psi[1:], axis=0))
        val += 2 * np.real(np.sum(psi[:-2].conj() * d2[:-2] * psi[2:], axis=0))
        return val

    def purity_estimate():
        lo = offsets.min()
        span = offsets.max() - lo + width
        dense = np.zeros((span, n_traj), dtype=complex)
        for t in range(n_traj):
            dense[offsets[t] - lo: offsets[t] - lo + width, t] = psi[:, t]
        gram = np.abs(dense.conj().T @ dense) ** 2
        tr2 = (gram.sum() - np.trace(gram)) / (n_traj * (n_traj - 1))
        return float(2 * tr2 - 1)

    anc = ideal_ancilla(config.phi)
    records = []
    for cycle in range(1, config.cycles + 1):
        qubit = sample_uniform_qubit(rng).vector
        step(qubit[0], qubit[1], gt_reg)
        for _ in range(config.M):
            step(anc[0], anc[1], gt_anc)
        if cycle % 8 == 0 or _due(cycle, config):
            recenter()
        if _due(cycle, config):
            errs = 1.0 - expect_f()
            photons = offsets + np.sum(levels * np.abs(psi) ** 2, axis=0)
            records.append(CycleRecord(
                cycle=cycle,
                avg_error=float(errs.mean()),
                purity=purity_estimate(),
                mean_photon=float(photons.mean()),
                energy_per_gate=config.n_bar / cycle,
                stderr=float(errs.std(ddof=1) / np.sqrt(n_traj)),
            ))
    return records


def run_full(config: ProtocolConfig, return_state: bool = False):
    """Protocol with corrector-prepared, persistent ancillas.

    Every pairwise interaction is followed by mutual partial traces, so the
    qubit and pulse stay uncorrelated. Energy per gate counts both pulses
    when ancillas are used. With ``return_state`` the final
    ``(drive, corrector, ancillas)`` densities are returned as well.
    """
    rng = np.random.default_rng(config.seed)
    gt_reg = config.interaction_time(config.theta)
    gt_anc = config.interaction_time(np.pi)
    f_avg = error_operator_average(config.gate, gt_reg, config.n_cut)
    drive = fock.to_density(initial_drive(config))
    corrector = fock.to_density(initial_drive(config, sign=-1))
    ground = np.array([[1, 0], [0, 0]], dtype=complex)
    ancillas = [ground.copy() for _ in range(config.M)]
    pulses = 2 if config.M > 0 else 1
    records = []
    for cycle in range(1, config.cycles + 1):
        qubit = sample_uniform_qubit(rng).vector
        drive = jc.drive_after(qubit, drive, gt_reg)
        for j in range(config.M):
            anc, corrector = jc.interact(ancillas[j], corrector, gt_anc / 2)
            anc, drive = jc.interact(anc, drive, gt_anc)
            anc, corrector = jc.interact(anc, corrector, gt_anc / 2)
            ancillas[j] = anc
        _check_top(drive)
        _check_top(corrector, "corrector")
        if _due(cycle, config):
            records.append(_record(cycle, drive, f_avg, pulses * config.n_bar / cycle))
    if return_state:
        return records, (drive, corrector, ancillas)
    return records


def _register_average_map(gT: float, n_cut: int, k: int):
    """Sphere average of the register-qubit channel on the offset-``k`` coherences.

    With ``b[i] = rho[i, i+k]`` the averaged channel
    ``(C_g rho C_g + L rho L^dag + C_e rho C_e + R rho R^dag) / 2`` acts as a
    real symmetric tridiagonal matrix; returns its ``(diag, off)`` bands.
    """
    c_g, c_e, s = jc.jc_coefficients(gT, n_cut)
    s_ext = np.append(s, 0.0)  # S_{n_cut} = 0 in the truncated model
    i = np.arange(n_cut - k)
    diag = 0.5 * (c_g[i] * c_g[i + k] + c_e[i] * c_e[i + k])
    off = 0.5 * s_ext[i[1:]] * s_ext[i[1:] + k]
    return diag, off


def seed_averaged_error(config: ProtocolConfig, cycles) -> np.ndarray:
    """Exact mean of ``run_ideal`` over register draws for ``M = 0``.

    Averaging over uniformly random register qubits leaves a phase-covariant
    channel, so each coherence offset evolves independently under a fixed
    tridiagonal map and any number of cycles costs one eigendecomposition.
    """
    if config.M != 0:
        raise ValueError("seed averaging in closed form needs M = 0")
    gt = config.interaction_time(config.theta)
    n_cut = config.n_cut
    rho = fock.to_density(initial_drive(config))
    bands = average_operator_bands(config.gate, gt, n_cut)
    cycles = np.atleast_1d(np.asarray(cycles, dtype=float))
    fid = np.zeros(cycles.shape)
    for k in range(3):
        w, v = eigh_tridiagonal(*_register_average_map(gt, n_cut, k))
        proj = v.T @ np.diagonal(rho, k)
        weight = v.T @ np.conj(bands[k])
        # each of the two mirrored offsets contributes for k > 0
        terms = np.real(np.power.outer(w, cycles).T @ (weight.conj() * proj))
        fid += terms if k == 0 else 2 * terms
    return 1.0 - fid


# -- entangled register --------------------------------------------------------


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def _kron_power(K: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, K)
    return out


def _compress(cols: np.ndarray, max_rank: int, tol: float = 1e-13):
    # rho = cols cols^dag; keep the dominant eigen-directions of the small Gram matrix
    if cols.shape[1] == 1:
        return cols, 0.0
    w, v = np.linalg.eigh(cols.conj().T @ cols)
    w, v = w[::-1], v[:, ::-1]
    total = w.sum()
    keep = max(1, min(max_rank, int(np.sum(w > tol * total))))
    dropped = float(max(w[keep:].sum(), 0.0) / total)
    return cols @ v[:, :keep], dropped


def run_ghz(config: ProtocolConfig, return_info: bool = False):
    """GHZ register driven by one pulse, refreshed by ideal ancillas between gates.

    The register-drive state is carried as a low-rank ensemble
    ``rho = L L^dag``; each traced ancilla splits every member into two.
    Returns ``(E_ghz, E_eff)``.
    """
    n = config.ghz_N
    n_cut = config.n_cut
    dim = (2**n) * n_cut
    need = dim * min(config.max_rank, 2 ** max(config.M * (n - 1), 0)) * 16 * 4
    if need > config.memory_budget:
        raise MemoryBudgetError(f"GHZ run needs ~{need / 1e9:.2f} GB")
    gt_reg = config.interaction_time(config.theta)
    gt_anc = config.interaction_time(np.pi)
    drive = initial_drive(config)
    cols = np.kron(ghz_state(n), drive)[:, None]
    ops = jc._kraus_tridiag(ideal_ancilla(config.phi), gt_anc, n_cut)
    dropped = 0.0
    for q in range(n):
        cols = jc._apply_vectors(cols, gt_reg, q, n_cut)
        if q == n - 1:
            break
        for _ in range(config.M):
            # drive index first so the tridiagonal ancilla operators apply row-wise
            k = cols.shape[1]
            x = cols.reshape(2**n, n_cut, k).transpose(1, 0, 2).reshape(n_cut, -1)
            parts = [jc._tri_apply(*op, x).reshape(n_cut, 2**n, k) for op in ops]
            x = np.concatenate(parts, axis=2).transpose(1, 0, 2)
            cols, d = _compress(x.reshape(dim, 2 * k), config.max_rank)
            dropped += d
    target = _kron_power(config.gate, n) @ ghz_state(n)
    m = cols.reshape(2**n, n_cut, -1)
    overlap = np.einsum("r,rjk->jk", target.conj(), m)
    fidelity = float(np.real(np.vdot(overlap, overlap)))
    e_ghz = 1.0 - fidelity
    if return_info:
        return e_ghz, e_ghz / n, {"rank": cols.shape[1], "dropped_weight": dropped}
    return e_ghz, e_ghz / n


def ghz_disposable_error(n: int, n_bar: float, theta: float, phi: float = 0.0,
                         r: complex = LN_SQRT_PI_2, n_cut: int | None = None):
    """GHZ error when each register qubit gets its own fresh pulse.

    Returns ``(E_ghz, E_eff)``. The single-qubit channel of one pulse is
    applied to every qubit of the GHZ density matrix.
    """
    n_cut = n_cut or fock.required_cutoff(n_bar + np.sinh(abs(r)) ** 2, r=r)
    rot = np.exp(1j * phi)
    drive = fock.squeezed_coherent_state(np.sqrt(n_bar) * rot, r * rot**2, n_cut)
    gT = jc.rotation_time(theta, n_bar)
    u = jc.jc_propagator(gT, n_cut).reshape(2, n_cut, 2, n_cut)
    kraus = np.einsum("ojqk,k->ojq", u, drive)  # (out, photon, in)
    sup = np.einsum("ojq,pjs->opqs", kraus, kraus.conj())
    rho = np.outer(ghz_state(n), ghz_state(n).conj())
    for i in range(n):
        t = rho.reshape(2**i, 2, 2 ** (n - i - 1), 2**i, 2, 2 ** (n - i - 1))
        t = np.einsum("opqs,aqbcsd->aobcpd", sup, t)
        rho = t.reshape(2**n, 2**n)
    target = _kron_power(jc.rotation(theta, phi), n) @ ghz_state(n)
    e = 1.0 - float(np.real(target.conj() @ rho @ target))
    return e, e / n


# -- drive stabilization diagnostics ---------------------------------------------


def ancilla_diagnostics(drive: np.ndarray, beta_A: complex, gT: float):
    """Purity and photon-number change of a drive after one ancilla interaction.

    The ancilla starts in ``sqrt(1 - |beta|^2)|g> + beta|e>``. Returns
    ``(delta_purity, delta_photons)``.
    """
    if abs(beta_A) > 1 + 1e-12:
        raise ValueError("|beta_A| must be <= 1")
    rho = fock.to_density(drive)
    anc = np.array([np.sqrt(max(0.0, 1 - abs(beta_A) ** 2)), beta_A], dtype=complex)
    after = jc.drive_after(anc, rho, gT)
    return fock.purity(after) - fock.purity(rho), fock.mean_photon(after) - fock.mean_photon(rho)


def degraded_drive(n_bar: float, n_qubits: int, rng: np.random.Generator,
                   r: complex = LN_SQRT_PI_2, n_cut: int | None = None) -> np.ndarray:
    """Squeezed pulse after pi interactions with ``n_qubits`` random qubits."""
    n_cut = n_cut or default_cutoff(n_bar, r)
    rho = fock.to_density(fock.squeezed_coherent_state(np.sqrt(n_bar), r, n_cut))
    gT = jc.rotation_time(np.pi, n_bar)
    for _ in range(n_qubits):
        rho = jc.drive_after(sample_uniform_qubit(rng).vector, rho, gT)
    return rho
