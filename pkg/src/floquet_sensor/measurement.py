"""Photon-count readout simulation and estimation from shot noise.

The readout model maps a |0> population to a Poisson mean via linear
contrast interpolation, mu(p0) = N * t_det * [1 - C * (1 - p0)], with |0>
the bright state.  Estimators invert that map; the full estimation pipeline
measures Pauli expectations over a small grid of signal amplitudes, converts
them to (theta, phi), fits straight lines and evaluates the algebraic
Fisher-information form, with Monte Carlo repetition supplying error bars.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .metrology import QfiEstimate, theta_phi_from_expectations
from .propagator import StateVector, expectation


@dataclass(frozen=True)
class ReadoutModel:
    """Fluorescence readout statistics.

    count_rate in counts/s, t_det in us, contrast dimensionless.  The bright
    (|0>) and dark (|1>) reference means follow from the three parameters.
    """

    count_rate: float = 9.5e4
    t_det: float = 0.94
    contrast: float = 0.13

    def __post_init__(self):
        if not 0.0 < self.contrast < 1.0:
            raise ValueError("contrast must lie in (0, 1)")
        if self.count_rate <= 0 or self.t_det <= 0:
            raise ValueError("count rate and detection time must be positive")

    @property
    def mu_bright(self) -> float:
        return self.count_rate * self.t_det * 1e-6

    @property
    def mu_dark(self) -> float:
        return self.mu_bright * (1.0 - self.contrast)

    def mean_counts(self, p0: float) -> float:
        """Poisson mean for a state with |0> population p0."""
        return self.mu_bright * (1.0 - self.contrast * (1.0 - p0))


@dataclass(frozen=True)
class ShotRecord:
    """A single readout: photon count, measured basis and the true mean used."""

    counts: int
    basis: str = "z"
    mean: float = 0.0


@dataclass(frozen=True)
class MonteCarloConfig:
    """Shots per grid point, repeat count for error bars, and the master seed."""

    shots: int = 100_000
    repeats: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1 or self.repeats < 1:
            raise ValueError("shots and repeats must be >= 1")


def simulate_counts(
    p0: float, model: ReadoutModel, shots: int, seed=None, basis: str = "z"
) -> list[ShotRecord]:
    """Draw per-shot Poisson photon counts for a given |0> population."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    mu = model.mean_counts(p0)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mu, size=int(shots))
    return [ShotRecord(counts=int(c), basis=basis, mean=mu) for c in counts]


def estimate_p0(records: Sequence[ShotRecord], model: ReadoutModel):
    """Invert the count model: (p0_hat, stderr) from a batch of shots.

    p0_hat = 1 - (1 - mean/mu_bright)/C.  The estimate is deliberately not
    clamped to [0, 1]: clamping would bias the line fits downstream.  The
    standard error propagates the Poisson variance (estimated by the sample
    mean).
    """
    if len(records) == 0:
        raise ValueError("need at least one shot record")
    total = sum(r.counts for r in records)
    return _estimate_p0_from_total(total, len(records), model)


def _estimate_p0_from_total(total_counts: float, shots: int, model: ReadoutModel):
    mean = total_counts / shots
    p0_hat = 1.0 - (1.0 - mean / model.mu_bright) / model.contrast
    stderr = math.sqrt(max(mean, 0.0) / shots) / (model.mu_bright * model.contrast)
    return p0_hat, stderr


def _rotated_p0(state: StateVector, axis: str) -> float:
    """Population of the +1 eigenstate of the requested Pauli axis."""
    return 0.5 * (1.0 + expectation(state, axis))


def measure_expectation(
    state: StateVector, axis: str, model: ReadoutModel, shots=None, seed=None
):
    """Estimate a Pauli expectation through the photon-count readout.

    An ideal instantaneous basis rotation maps the axis onto z, the rotated
    |0> population is read out over ``shots`` Poisson shots and inverted,
    and the expectation is 2*p0 - 1.  ``shots=None`` returns the exact value
    with zero error.  The total count over a shot batch is Poisson with mean
    shots*mu, so a single aggregate draw reproduces the batch statistics.
    """
    p0 = _rotated_p0(state, axis)
    if shots is None:
        return expectation(state, axis), 0.0
    rng = np.random.default_rng(seed)
    total = rng.poisson(model.mean_counts(p0) * shots)
    p0_hat, p0_err = _estimate_p0_from_total(total, shots, model)
    return 2.0 * p0_hat - 1.0, 2.0 * p0_err


def _unwrap_nearest(phis: np.ndarray) -> np.ndarray:
    """Sequential nearest-branch unwrapping of a phase sequence."""
    out = np.array(phis, dtype=float)
    for i in range(1, len(out)):
        jump = out[i] - out[i - 1]
        out[i] -= 2.0 * math.pi * round(jump / (2.0 * math.pi))
    return out


def _line_fit(x: np.ndarray, y: np.ndarray):
    """Least-squares line; returns (slope, intercept, slope variance estimate)."""
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    dof = max(len(x) - 2, 1)
    var_slope = float(np.sum(resid**2) / dof / np.sum((x - np.mean(x)) ** 2))
    return float(coeffs[0]), float(coeffs[1]), var_slope


def _fit_qfi_from_expectations(
    omega_grid: np.ndarray, sx, sy, sz, omega_center: float, debias: bool = False
) -> tuple[float, list[str]]:
    """(theta, phi) conversion, unwrap, line fits and the algebraic QFI.

    With ``debias`` (the Monte Carlo path) the squared slopes are corrected
    by their fitted variance, removing the quadratic noise inflation
    E[b_hat^2] = b^2 + Var(b_hat); noiseless fits keep the raw slopes since
    their residuals reflect trajectory curvature, not noise.
    """
    notes: list[str] = []
    theta = np.empty(len(omega_grid))
    phi = np.empty(len(omega_grid))
    for i in range(len(omega_grid)):
        p = theta_phi_from_expectations(sx[i], sy[i], sz[i])
        theta[i] = p.theta
        phi[i] = p.phi
        if p.phi_degenerate:
            notes.append(f"phi degenerate at grid point {i}")
    phi = _unwrap_nearest(phi)
    steps = np.abs(np.diff(phi))
    if np.any(steps > 0.5 * math.pi):
        notes.append(
            "phi-unwrap ambiguity: adjacent grid points differ by more than pi/2"
        )
    slope_t, icept_t, var_t = _line_fit(omega_grid, theta)
    slope_p, _, var_p = _line_fit(omega_grid, phi)
    theta_c = slope_t * omega_center + icept_t
    sq_t = slope_t**2 - (var_t if debias else 0.0)
    sq_p = slope_p**2 - (var_p if debias else 0.0)
    value = 4.0 * sq_t + math.sin(2.0 * theta_c) ** 2 * sq_p
    return value, notes


def default_omega_grid(omega_center: float, points: int = 7, span: float = 0.025):
    """Symmetric fractional grid around the nominal amplitude (default +-2.5%)."""
    return omega_center * (1.0 + span * np.linspace(-1.0, 1.0, points))


def qfi_pipeline(
    scenario: Callable[[float, float], StateVector],
    t: float,
    omega_grid,
    shots: int | None = None,
    mc: MonteCarloConfig | None = None,
    model: ReadoutModel = ReadoutModel(),
    omega_center: float | None = None,
) -> QfiEstimate:
    """Full estimation pipeline: states -> noisy expectations -> line fits -> QFI.

    ``scenario(omega, t)`` supplies the evolved state for each grid amplitude.
    With ``shots=None`` the expectations are exact and a single deterministic
    pass is performed; otherwise each of ``mc.repeats`` repeats redraws the
    Poisson counts (seeded deterministically per repeat, grid point and axis)
    and the spread of the per-repeat values gives the error bar.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.size < 3:
        raise ValueError("omega grid needs at least 3 points for a slope fit")
    if np.ptp(omega_grid) <= 0:
        raise ValueError("omega grid is degenerate (zero span)")
    if omega_center is None:
        omega_center = float(np.mean(omega_grid))

    states = [scenario(float(w), t) for w in omega_grid]
    exact = {
        ax: np.array([expectation(s, ax) for s in states]) for ax in ("x", "y", "z")
    }

    if shots is None:
        value, notes = _fit_qfi_from_expectations(
            omega_grid, exact["x"], exact["y"], exact["z"], omega_center
        )
        for n in notes:
            warnings.warn(n, stacklevel=2)
        return QfiEstimate(
            value=value, method="theta-phi-fit", stderr=0.0, notes=tuple(notes)
        )

    mc = mc or MonteCarloConfig()
    seed_root = np.random.SeedSequence(mc.seed)
    repeat_seeds = seed_root.spawn(mc.repeats)
    values = np.empty(mc.repeats)
    all_notes: list[str] = []
    for r in range(mc.repeats):
        point_seeds = repeat_seeds[r].spawn(omega_grid.size * 3)
        est = {}
        for a, ax in enumerate(("x", "y", "z")):
            vals = np.empty(omega_grid.size)
            for i in range(omega_grid.size):
                rng = np.random.default_rng(point_seeds[i * 3 + a])
                p0 = 0.5 * (1.0 + exact[ax][i])
                total = rng.poisson(model.mean_counts(p0) * shots)
                p0_hat, _ = _estimate_p0_from_total(total, shots, model)
                vals[i] = 2.0 * p0_hat - 1.0
            est[ax] = vals
        values[r], notes = _fit_qfi_from_expectations(
            omega_grid, est["x"], est["y"], est["z"], omega_center, debias=True
        )
        all_notes.extend(notes)
    stderr = float(np.std(values, ddof=1)) if mc.repeats > 1 else 0.0
    if all_notes:
        warnings.warn(f"{len(all_notes)} fit notes over {mc.repeats} repeats", stacklevel=2)
    return QfiEstimate(
        value=max(float(np.mean(values)), 0.0),
        method="monte-carlo",
        stderr=stderr,
        notes=tuple(sorted(set(all_notes))),
    )
