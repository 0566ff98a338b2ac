"""Estimation-theoretic analysis: quantum Fisher information, the Cramer-Rao
bound, the magnetic sensitivity model and Rabi-amplitude <-> field conversion.

QFI conventions: for a pure-state family |psi(w)> at fixed evolution time,

    I(w) = 4 ( <d_w psi | d_w psi> - |<psi | d_w psi>|^2 )

with w the rotating-frame Rabi amplitude in rad/us, so I carries units of
us^2.  The equivalent (theta, phi) form for
|psi> = cos(theta)|+> + sin(theta) e^{i phi} |-> is

    I = 4 (d theta/d w)^2 + sin^2(2 theta) (d phi/d w)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import mhz_to_angular
from .propagator import StateVector


class QfiStepError(RuntimeError):
    """Finite-difference cross-check failure in ``qfi_exact``."""


@dataclass(frozen=True)
class PureStateParam:
    """(theta, phi) coordinates of a pure state in the |+>/|-> basis.

    ``phi_degenerate`` flags the poles where phi is undefined and has been
    set to 0 by convention.
    """

    theta: float
    phi: float
    phi_degenerate: bool = False


@dataclass(frozen=True)
class QfiEstimate:
    """A QFI value (us^2) with its provenance and statistical uncertainty."""

    value: float
    method: str  # exact-fd | fidelity-fd | theta-phi-fit | monte-carlo
    stderr: float = 0.0
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SensitivityParams:
    """Readout and coherence parameters entering the sensitivity model."""

    contrast: float = 0.13
    count_rate: float = 9.5e4  # counts / s
    t_det: float = 0.94  # us
    T2: float = 17.9  # us
    gamma_e_cyclic: float = 28.0  # Hz / nT

    def __post_init__(self):
        if not 0.0 < self.contrast < 1.0:
            raise ValueError("contrast must lie in (0, 1)")
        if self.count_rate <= 0 or self.t_det <= 0 or self.T2 <= 0:
            raise ValueError("count rate, detection time and T2 must be positive")


@dataclass(frozen=True)
class OptimalSensingResult:
    t_opt: float  # us
    eta_opt: float  # nT / sqrt(Hz)
    eta_at_t2: float  # nT / sqrt(Hz)


def _state_array(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.as_array()
    return np.asarray(state, dtype=complex).reshape(2)


def qfi_exact(
    family: Callable[[float], StateVector],
    omega: float,
    h: float | None = None,
) -> QfiEstimate:
    """QFI of a state family by central finite differences.

    The state-derivative form is cross-checked against the fidelity form
    I ~ 8 (1 - |<psi(w)|psi(w+h)>|) / h^2; a disagreement beyond 1 percent
    (above a small absolute floor) raises ``QfiStepError`` with both values.
    """
    if h is None:
        h = 1e-4 * max(abs(omega), mhz_to_angular(0.1))
    psi_m = _state_array(family(omega - h))
    psi_0 = _state_array(family(omega))
    psi_p = _state_array(family(omega + h))

    dpsi = (psi_p - psi_m) / (2.0 * h)
    overlap = np.vdot(psi_0, dpsi)
    value = 4.0 * (np.vdot(dpsi, dpsi).real - abs(overlap) ** 2)

    fidelity = abs(np.vdot(psi_0, psi_p))
    value_fid = 8.0 * (1.0 - fidelity) / h**2

    tol = 0.01 * max(abs(value), abs(value_fid)) + 1e-4
    if abs(value - value_fid) > tol:
        raise QfiStepError(
            f"derivative-step breakdown: state-derivative QFI {value:.6g} vs "
            f"fidelity QFI {value_fid:.6g} disagree beyond 1%"
        )
    return QfiEstimate(value=float(value), method="exact-fd")


def qfi_theta_phi(theta: float, dtheta_domega: float, dphi_domega: float) -> QfiEstimate:
    """Algebraic QFI from the (theta, phi) parameterization and its slopes."""
    value = 4.0 * dtheta_domega**2 + math.sin(2.0 * theta) ** 2 * dphi_domega**2
    return QfiEstimate(value=value, method="theta-phi-fit")


def theta_phi_from_expectations(sx: float, sy: float, sz: float) -> PureStateParam:
    """Recover (theta, phi) from measured Pauli expectations.

    theta = arccos(sx)/2 with sx clamped to [-1, 1] (statistical estimates
    may overshoot); phi = atan2(-sy, sz) covering the full (-pi, pi] branch.
    The (sy, sz) = (0, 0) pole returns phi = 0 with a degeneracy flag.
    """
    sx = min(1.0, max(-1.0, sx))
    theta = 0.5 * math.acos(sx)
    if abs(sy) < 1e-12 and abs(sz) < 1e-12:
        return PureStateParam(theta=theta, phi=0.0, phi_degenerate=True)
    return PureStateParam(theta=theta, phi=math.atan2(-sy, sz))


def state_from_theta_phi(theta: float, phi: float) -> StateVector:
    """Pure state cos(theta)|+> + sin(theta) e^{i phi}|-> in the z basis."""
    ct, st = math.cos(theta), math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    inv = 1.0 / math.sqrt(2.0)
    return StateVector(inv * (ct + st * e), inv * (ct - st * e))


def cramer_rao(qfi: QfiEstimate, repetitions: int = 1) -> float:
    """Minimum achievable standard deviation of the Rabi amplitude, rad/us.

    1/sqrt(repetitions * QFI); a zero (or negative) QFI is unbounded and
    returns +inf.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if qfi.value <= 0.0:
        return math.inf
    return 1.0 / math.sqrt(repetitions * qfi.value)


def sensitivity(params: SensitivityParams, t: float) -> float:
    """Magnetic amplitude sensitivity at sensing time t (us), in nT/sqrt(Hz).

    eta(t) = 1/(gamma_e_cyclic * C * sqrt(N)) * sqrt(1 + t/t_det) / (t e^{-t/T2})

    with the time in the denominator converted to seconds and the
    proportionality constant fixed to 1 under this unit convention (the
    calibration that reproduces the published endpoint values).
    """
    if t <= 0:
        raise ValueError("sensing time must be positive")
    prefactor = 1.0 / (
        params.gamma_e_cyclic * params.contrast * math.sqrt(params.count_rate)
    )
    duty = math.sqrt(1.0 + t / params.t_det)
    t_seconds = t * 1e-6
    return prefactor * duty / (t_seconds * math.exp(-t / params.T2))


def optimal_sensing_time(params: SensitivityParams) -> OptimalSensingResult:
    """Numerically minimize eta(t) over (0, 10*T2] by golden-section search.

    The objective is unimodal (diverges at 0+, grows like e^{t/T2} at large t).
    Also reports eta(T2) for comparison against the published convention.
    """
    lo = min(params.t_det, params.T2) * 1e-3
    hi = 10.0 * params.T2
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = sensitivity(params, c), sensitivity(params, d)
    while (b - a) > 1e-3 * max(1.0, a):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sensitivity(params, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sensitivity(params, d)
    t_opt = 0.5 * (a + b)
    return OptimalSensingResult(
        t_opt=t_opt,
        eta_opt=sensitivity(params, t_opt),
        eta_at_t2=sensitivity(params, params.T2),
    )


def field_from_rabi(omega_s_amp: float, gamma_e: float = mhz_to_angular(2.8)) -> float:
    """Magnetic field amplitude (nT) producing a given Rabi amplitude (rad/us).

    B = sqrt(2) * omega_s_amp / gamma_e with the angular gyromagnetic ratio
    (rad/us/G); the result is converted from Gauss to nT.
    """
    if omega_s_amp < 0:
        raise ValueError("Rabi amplitude must be >= 0")
    return math.sqrt(2.0) * omega_s_amp / gamma_e * 1e5


def rabi_from_field(b_nt: float, gamma_e: float = mhz_to_angular(2.8)) -> float:
    """Inverse of ``field_from_rabi``: field amplitude (nT) -> Rabi rad/us."""
    return b_nt * 1e-5 * gamma_e / math.sqrt(2.0)
