"""Power budget of a large surface-code processor driven by classical pulses.

Two evaluation chains are kept side by side: ``exact`` carries every
weight and photon number at full precision, ``rounded`` uses the common
shortcuts ``P_q ~ 0.1 P_pi`` and ``n ~ 500`` photons at 0.1 % error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.constants import hbar

W_PI, W_CZ, W_M = 15 / 184, 9 / 46, 7 / 92
ROUNDED_W_PI = 0.1
ROUNDED_PHOTONS = 500.0
COHERENT_AVG_COEFF = (4 + np.pi**2) / 24


@dataclass(frozen=True)
class BudgetParams:
    N_q: float = 2e8
    T_pi: float = 20e-9
    T_CZ: float = 45e-9
    T_M: float = 140e-9
    P_pi: float = 1e-11
    P_CZ: float = 0.0
    P_M: float = 0.0
    omega: float = 2 * np.pi * 6e9
    attenuation_factor: float = 10.0  # 10 dB at the base stage
    target_error: float = 1e-3

    def __post_init__(self):
        for name in ("N_q", "T_pi", "T_CZ", "T_M", "omega", "attenuation_factor", "target_error"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("P_pi", "P_CZ", "P_M"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.target_error >= 1:
            raise ValueError("target_error must be < 1")

    def as_dict(self):
        return asdict(self)


def qubit_power(params: BudgetParams, rounded: bool = False, P_pi: float | None = None) -> float:
    """Duration-weighted average drive power per physical qubit (W)."""
    p_pi = params.P_pi if P_pi is None else P_pi
    w_pi = ROUNDED_W_PI if rounded else W_PI
    return w_pi * p_pi + W_CZ * params.P_CZ + W_M * params.P_M


def total_power(params: BudgetParams, rounded: bool = False, P_pi: float | None = None) -> float:
    """Power dissipated at the base stage for the whole register (W)."""
    return params.N_q * qubit_power(params, rounded, P_pi) * params.attenuation_factor


def min_photons(target_error: float) -> float:
    """Photon number whose coherent-pulse average error equals ``target_error``."""
    if not 0 < target_error < 1:
        raise ValueError("target_error must lie in (0, 1)")
    return COHERENT_AVG_COEFF / target_error


def min_drive_power(n_bar: float, omega: float, T_pi: float) -> float:
    """``hbar omega n / T_pi`` (W)."""
    if n_bar < 0 or omega <= 0 or T_pi <= 0:
        raise ValueError("inputs must be positive")
    return hbar * omega * n_bar / T_pi


def tl_resonator_ratio(omega: float, T_pi: float) -> tuple[float, float]:
    """Transmission-line to resonator power ratio ``(4/pi) x T_pi``.

    Returns ``(with_angular, with_frequency)`` for ``x = omega`` and
    ``x = omega / 2 pi``.
    """
    if omega <= 0 or T_pi <= 0:
        raise ValueError("inputs must be positive")
    return 4 / np.pi * omega * T_pi, 4 / np.pi * omega / (2 * np.pi) * T_pi


def min_total_power(params: BudgetParams, rounded: bool = False) -> float:
    """Register power when every pi pulse carries the minimum photon number."""
    n = ROUNDED_PHOTONS if rounded else min_photons(params.target_error)
    p_pi = min_drive_power(n, params.omega, params.T_pi)
    return total_power(params, rounded, P_pi=p_pi)


def budget_table(params: BudgetParams) -> list[dict]:
    """Rows ``{quantity, unit, exact, rounded}`` of the full estimate."""
    n_exact = min_photons(params.target_error)
    ratio_w, ratio_f = tl_resonator_ratio(params.omega, params.T_pi)
    rows = [
        ("qubit_power", "W", qubit_power(params), qubit_power(params, True)),
        ("total_power", "W", total_power(params), total_power(params, True)),
        ("min_photons", "", n_exact, ROUNDED_PHOTONS),
        ("min_drive_power", "W",
         min_drive_power(n_exact, params.omega, params.T_pi),
         min_drive_power(ROUNDED_PHOTONS, params.omega, params.T_pi)),
        ("min_total_power", "W", min_total_power(params), min_total_power(params, True)),
        ("tl_ratio_angular", "", ratio_w, ratio_w),
        ("tl_ratio_frequency", "", ratio_f, ratio_f),
    ]
    return [dict(quantity=q, unit=u, exact=float(e), rounded=float(r)) for q, u, e, r in rows]
