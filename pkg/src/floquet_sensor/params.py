"""Parameter types and unit conventions for the two-level spin sensor.

Internal convention: every frequency-like quantity is an *angular* frequency
in rad/us, times are in us, fields in Gauss.  User-facing configuration
(the CLI) works in cyclic MHz and converts once at the boundary with
``mhz_to_angular`` / ``angular_to_mhz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

#: the drive frequency should exceed every other rate in the rotating frame
#: by at least this factor for the time-averaged description to be trustworthy
DEFAULT_VALIDITY_FACTOR = 10.0


def mhz_to_angular(f_mhz: float) -> float:
    """Cyclic MHz -> angular rad/us."""
    return TWO_PI * f_mhz


def angular_to_mhz(omega: float) -> float:
    """Angular rad/us -> cyclic MHz."""
    return omega / TWO_PI


@dataclass(frozen=True)
class SensorParams:
    """Static sensor parameters.

    Attributes
    ----------
    D : float
        Zero-field splitting, rad/us.
    gamma_e : float
        Electron gyromagnetic ratio, rad/us/G.
    B0 : float
        Static bias field along the sensor axis, G.
    """

    D: float = mhz_to_angular(2870.0)
    gamma_e: float = mhz_to_angular(2.8)
    B0: float = 500.0

    def __post_init__(self):
        if self.omega_0 <= 0:
            raise ValueError(
                f"sensor resonance omega_0 = D - gamma_e*B0 must be positive, "
                f"got {self.omega_0:g} rad/us"
            )

    @property
    def omega_0(self) -> float:
        """Transition frequency D - gamma_e*B0, rad/us."""
        return self.D - self.gamma_e * self.B0

    @property
    def gamma_e_cyclic(self) -> float:
        """Gyromagnetic ratio in Hz/nT (cyclic units; 2.8 MHz/G -> 28 Hz/nT)."""
        return self.gamma_e / TWO_PI * 10.0


@dataclass(frozen=True)
class SignalParams:
    """Transverse microwave signal: amplitude and carrier frequency.

    ``omega_s_amp`` is the Rabi amplitude (the quantity being estimated),
    ``omega_s_freq`` the lab-frame carrier.  Both in rad/us.
    """

    omega_s_amp: float
    omega_s_freq: float

    def __post_init__(self):
        if self.omega_s_amp < 0:
            raise ValueError("signal Rabi amplitude must be >= 0")
        if self.omega_s_freq <= 0:
            raise ValueError("lab-frame signal carrier frequency must be > 0")

    def detuning(self, sensor: SensorParams) -> float:
        """Carrier-sensor detuning omega_s - omega_0, rad/us."""
        return self.omega_s_freq - sensor.omega_0

    @classmethod
    def from_detuning(
        cls, sensor: SensorParams, omega_s_amp: float, delta: float
    ) -> "SignalParams":
        """Build a signal at given detuning from the sensor resonance."""
        return cls(omega_s_amp=omega_s_amp, omega_s_freq=sensor.omega_0 + delta)

    def with_amp(self, omega_s_amp: float) -> "SignalParams":
        return SignalParams(omega_s_amp=omega_s_amp, omega_s_freq=self.omega_s_freq)


@dataclass(frozen=True)
class ControlErrorParams:
    """Additive control-drive errors: amplitude and frequency offsets, rad/us."""

    amp_error: float = 0.0
    freq_error: float = 0.0


@dataclass(frozen=True)
class FloquetDriveParams:
    """Periodic control drive: amplitude, fundamental frequency and harmonic count.

    The drive consists of ``harmonics`` tones at l*omega_F_freq, l = 1..k, each
    of amplitude ``omega_F_amp`` (rotating-frame convention).  ``phases`` are
    per-tone phase offsets (radians); ``None`` means the plain all-cosine
    convention.  Tone phases are experimentally free and shift the switch-on
    micromotion kick without affecting the quasi-energy shift.
    """

    omega_F_amp: float
    omega_F_freq: float
    harmonics: int = 1
    phases: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.omega_F_freq <= 0:
            raise ValueError("drive frequency must be > 0")
        if self.omega_F_amp < 0:
            raise ValueError("drive amplitude must be >= 0")
        if self.harmonics < 1 or int(self.harmonics) != self.harmonics:
            raise ValueError("harmonic count must be a positive integer")
        if self.phases is not None and len(self.phases) != self.harmonics:
            raise ValueError("need one tone phase per harmonic")

    def tone_phase(self, l: int) -> float:
        """Phase offset of harmonic l (1-based)."""
        return 0.0 if self.phases is None else self.phases[l - 1]

    @property
    def period(self) -> float:
        """Drive period 2*pi/omega_F, us."""
        return TWO_PI / self.omega_F_freq

    def validity_ratio(self, omega_s_amp: float, delta: float) -> float:
        """Ratio of drive frequency to the fastest competing rate.

        The effective (time-averaged) description requires this ratio to be
        large; ``DEFAULT_VALIDITY_FACTOR`` is the recommended floor.  A zero
        competing rate returns ``inf``.
        """
        scale = max(self.omega_F_amp, omega_s_amp, abs(delta))
        if scale == 0:
            return math.inf
        return self.omega_F_freq / scale

    def is_valid(
        self, omega_s_amp: float, delta: float, factor: float = DEFAULT_VALIDITY_FACTOR
    ) -> bool:
        return self.validity_ratio(omega_s_amp, delta) >= factor

    def perturbed(self, errors: ControlErrorParams) -> "FloquetDriveParams":
        """Apply additive amplitude/frequency errors.

        Raises
        ------
        ValueError
            If the perturbed amplitude is negative or the perturbed
            frequency is non-positive.
        """
        amp = self.omega_F_amp + errors.amp_error
        freq = self.omega_F_freq + errors.freq_error
        if amp < 0:
            raise ValueError(f"perturbed drive amplitude is negative ({amp:g} rad/us)")
        return FloquetDriveParams(
            omega_F_amp=amp,
            omega_F_freq=freq,
            harmonics=self.harmonics,
            phases=self.phases,
        )
