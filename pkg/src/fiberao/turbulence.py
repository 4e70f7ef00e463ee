"""Kolmogorov / von Karman phase screens and Fried-parameter estimation.

Screens are synthesized in the Fourier domain from the modified von
Karman phase PSD and compensated with nested subharmonic grids for
low-frequency (tilt) fidelity, then advected across the aperture under
the frozen-flow hypothesis.  The angle-of-arrival machinery mirrors the
image-motion method for measuring turbulence strength: the Fried
parameter follows from the variance of the aperture-averaged wavefront
tilt.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, NoMeasurableTurbulence
from .zernike import unit_disk_grid

log = logging.getLogger(__name__)

#: Kolmogorov phase PSD prefactor, 0.023 r0^(-5/3) f^(-11/3).
PSD_PREFACTOR = 0.023
#: Structure-function constant: D(r) = 6.88 (r/r0)^(5/3).
STRUCTURE_CONSTANT = 6.88
#: Fried-parameter prefactor of the angle-of-arrival formula.
AOA_PREFACTOR = 3.18

BEACON_WAVELENGTH = 810e-9
SIGNAL_WAVELENGTH = 1570e-9


@dataclass(frozen=True)
class PhaseScreen:
    """Frozen turbulent phase over a gridded master screen.

    ``phase`` holds the full pre-generated screen (radians at
    ``wavelength_ref``); ``offset`` is the frozen-flow travel in meters
    applied when windowing.  Instances are treated as immutable;
    :func:`evolve` returns advanced copies sharing the master grid.
    """

    phase: np.ndarray
    pixel_pitch: float
    r0: float
    wavelength_ref: float
    outer_scale: float
    seed: int
    offset: tuple[float, float] = (0.0, 0.0)

    @property
    def physical_size(self) -> tuple[float, float]:
        """(width_x, height_y) of the master grid in meters."""
        ny, nx = self.phase.shape
        return nx * self.pixel_pitch, ny * self.pixel_pitch


@dataclass(frozen=True)
class TurbulenceScenario:
    """Atmospheric condition for one simulated link."""

    r0_at_810nm: float
    aperture_diameter: float = 0.4
    wind_velocity: tuple[float, float] = (5.0, 0.0)
    signal_wavelength: float = SIGNAL_WAVELENGTH
    beacon_wavelength: float = BEACON_WAVELENGTH
    outer_scale: float = 25.0
    duration: float = 20.0
    loop_rate: float = 500.0

    def __post_init__(self):
        if self.r0_at_810nm <= 0:
            raise ConfigurationError(f"r0 must be > 0, got {self.r0_at_810nm}")
        if self.aperture_diameter <= 0:
            raise ConfigurationError("aperture diameter must be > 0")
        if self.loop_rate <= 0:
            raise ConfigurationError("loop rate must be > 0")

    @property
    def wind_speed(self) -> float:
        return float(np.hypot(*self.wind_velocity))

    def r0_at(self, wavelength: float) -> float:
        return scale_r0(self.r0_at_810nm, self.beacon_wavelength, wavelength)

    @property
    def d_over_r0_at_810nm(self) -> float:
        return self.aperture_diameter / self.r0_at_810nm


def scale_r0(r0_ref: float, wavelength_ref: float, wavelength_target: float) -> float:
    """Chromatic scaling of the Fried parameter, r0 ~ lambda^(6/5)."""
    if wavelength_ref <= 0 or wavelength_target <= 0:
        raise ValueError("wavelengths must be > 0")
    return r0_ref * (wavelength_target / wavelength_ref) ** 1.2


def von_karman_psd(f: np.ndarray, r0: float, outer_scale: float) -> np.ndarray:
    """Modified von Karman phase PSD in rad^2 m^2 at spatial frequency f (1/m)."""
    f0_sq = 0.0 if np.isinf(outer_scale) else (1.0 / outer_scale) ** 2
    with np.errstate(divide="ignore"):
        psd = PSD_PREFACTOR * r0 ** (-5.0 / 3.0) * (f * f + f0_sq) ** (-11.0 / 6.0)
    return psd


def _gradient_weighted_cell_psd(fx, fy, dfx, dfy, r0, outer_scale, n_sub=64):
    """Effective PSD for steep low-frequency cells centered at (fx x fy).

    A synthesized mode at the cell center f_c must reproduce the cell's
    gradient-weighted power, so each cell gets the average of
    PSD(f) (f/f_c)^2 over n_sub^2 sample points.  Point sampling badly
    under-integrates these cells, and raw power conservation would
    over-weight tilt; this choice is exact in the quadratic regime of
    the structure function, which is all these cells see.
    """
    u = ((np.arange(n_sub) + 0.5) / n_sub - 0.5)
    sx = (fx[:, np.newaxis] + u * dfx).ravel()
    sy = (fy[:, np.newaxis] + u * dfy).ravel()
    f = np.hypot(sx[np.newaxis, :], sy[:, np.newaxis])
    weighted = von_karman_psd(f, r0, outer_scale) * f * f
    weighted = weighted.reshape(len(fy), n_sub, len(fx), n_sub).mean(axis=(1, 3))
    fc_sq = fx[np.newaxis, :] ** 2 + fy[:, np.newaxis] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = weighted / fc_sq
    out[fc_sq == 0] = 0.0
    return out


@lru_cache(maxsize=8)
def _synthesis_amplitude(shape, pixel_pitch, r0, outer_scale):
    """sqrt(PSD * cell area) on the fftfreq grid, DC zeroed.

    Point-value sampling is used for the base grid; the under-resolved
    center cell is patched by the subharmonic levels (which do need
    cell averaging, their cells being steep).
    """
    ny, nx = shape
    dfx = 1.0 / (nx * pixel_pitch)
    dfy = 1.0 / (ny * pixel_pitch)
    fx = np.fft.fftfreq(nx, pixel_pitch)
    fy = np.fft.fftfreq(ny, pixel_pitch)
    f = np.hypot(fx[np.newaxis, :], fy[:, np.newaxis])
    psd = von_karman_psd(f, r0, outer_scale)
    psd[0, 0] = 0.0
    return np.sqrt(psd * dfx * dfy)


def generate_screen(
    r0: float,
    outer_scale: float,
    grid_size,
    pixel_pitch: float,
    seed: int,
    *,
    wavelength_ref: float = BEACON_WAVELENGTH,
    subharmonics: int = 8,
    aperture_diameter: float | None = None,
) -> PhaseScreen:
    """Synthesize a zero-mean von Karman phase screen (FFT + subharmonics).

    ``grid_size`` is a single even side length or an (ny, nx) pair; a
    rectangular master long in the wind direction avoids periodic wrap
    on long runs.  Deterministic given ``seed``.  With an
    ``aperture_diameter`` the grid must give at least 4 diameters of
    scroll room in its longest dimension and fit the aperture in the
    shortest.
    """
    if r0 <= 0:
        raise ConfigurationError(f"r0 must be > 0, got {r0}")
    ny, nx = (grid_size, grid_size) if np.isscalar(grid_size) else grid_size
    if ny % 2 or nx % 2:
        raise ConfigurationError(f"grid sides must be even, got {(ny, nx)}")
    if aperture_diameter is not None:
        long_side = max(nx, ny) * pixel_pitch
        short_side = min(nx, ny) * pixel_pitch
        if long_side < 4 * aperture_diameter or short_side < aperture_diameter:
            raise ConfigurationError(
                f"screen {nx}x{ny} px at {pixel_pitch} m/px is too small for a "
                f"{aperture_diameter} m aperture (need >= 4 D of scroll room)"
            )

    rng = np.random.default_rng(seed)
    amplitude = _synthesis_amplitude((ny, nx), pixel_pitch, r0, outer_scale)
    cn = (rng.standard_normal((ny, nx)) + 1j * rng.standard_normal((ny, nx)))
    cn *= amplitude
    screen = np.fft.ifft2(cn).real * (nx * ny)

    screen += _subharmonic_field(rng, r0, outer_scale, (ny, nx), pixel_pitch,
                                 subharmonics)
    screen -= screen.mean()
    return PhaseScreen(screen, pixel_pitch, r0, wavelength_ref, outer_scale, seed)


def _subharmonic_field(rng, r0, outer_scale, shape, pixel_pitch, levels):
    """Low-frequency compensation: nested 3x3 grids below the base FFT bin.

    Level p tiles the zeroed center cell of level p-1 exactly, so no
    frequency cell is double counted.
    """
    ny, nx = shape
    x = np.arange(nx) * pixel_pitch
    y = np.arange(ny) * pixel_pitch
    total = np.zeros((ny, nx))
    for p in range(1, levels + 1):
        dfx = 1.0 / (3.0 ** p * nx * pixel_pitch)
        dfy = 1.0 / (3.0 ** p * ny * pixel_pitch)
        fx = np.array([-1.0, 0.0, 1.0]) * dfx
        fy = np.array([-1.0, 0.0, 1.0]) * dfy
        psd = _gradient_weighted_cell_psd(fx, fy, dfx, dfy, r0, outer_scale)
        cn = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        cn *= np.sqrt(psd * dfx * dfy)
        ex = np.exp(2j * np.pi * fx[:, np.newaxis] * x[np.newaxis, :])
        ey = np.exp(2j * np.pi * fy[:, np.newaxis] * y[np.newaxis, :])
        total += np.einsum("iy,ij,jx->yx", ey, cn, ex).real
    return total - total.mean()


def evolve(screen: PhaseScreen, wind_velocity, dt: float) -> PhaseScreen:
    """Advance frozen-flow travel by wind * dt; the master grid is shared.

    Windowing wraps periodically once the full master has been
    traversed; the first wrap is logged as a statistics warning.
    """
    vx, vy = wind_velocity
    ox, oy = screen.offset
    new = (ox + vx * dt, oy + vy * dt)
    size_x, size_y = screen.physical_size
    if (int(abs(new[0]) // size_x) > int(abs(ox) // size_x)
            or int(abs(new[1]) // size_y) > int(abs(oy) // size_y)):
        log.warning(
            "frozen-flow window wrapped around the %0.1f m master screen; "
            "turbulence statistics are now periodic", max(size_x, size_y),
        )
    return replace(screen, offset=new)


def window_phase(screen: PhaseScreen, window_px: int) -> np.ndarray:
    """Square aperture window at the current offset (bilinear, periodic).

    Integer-pixel offsets reproduce an integer roll of the master grid
    bit-exactly.
    """
    ny, nx = screen.phase.shape
    if window_px > min(nx, ny):
        raise ConfigurationError(
            f"window {window_px} px exceeds master grid {(ny, nx)}"
        )
    ox = screen.offset[0] / screen.pixel_pitch
    oy = screen.offset[1] / screen.pixel_pitch
    ix, fx = int(np.floor(ox)), ox - np.floor(ox)
    iy, fy = int(np.floor(oy)), oy - np.floor(oy)
    cols = (np.arange(window_px) + ix) % nx
    rows = (np.arange(window_px) + iy) % ny
    cols1 = (cols + 1) % nx
    rows1 = (rows + 1) % ny
    m = screen.phase
    return (
        (1.0 - fy) * (1.0 - fx) * m[np.ix_(rows, cols)]
        + (1.0 - fy) * fx * m[np.ix_(rows, cols1)]
        + fy * (1.0 - fx) * m[np.ix_(rows1, cols)]
        + fy * fx * m[np.ix_(rows1, cols1)]
    )


def master_shape_for_run(
    aperture_diameter: float,
    pixel_pitch: float,
    wind_velocity,
    duration: float,
    *,
    margin: float = 1.0,
) -> tuple[int, int]:
    """Even (ny, nx) master grid covering a frozen-flow run without wrap."""
    def _side(travel):
        need = abs(travel) * duration + (margin + 1.0) * aperture_diameter
        need = max(need, 4.0 * aperture_diameter)
        px = int(np.ceil(need / pixel_pitch))
        return px + px % 2
    vx, vy = wind_velocity
    return _side(vy), _side(vx)


def screen_for_scenario(
    scenario: TurbulenceScenario,
    seed: int,
    *,
    window_px: int,
    wavelength: float | None = None,
    duration: float | None = None,
    subharmonics: int = 8,
) -> PhaseScreen:
    """Master screen sized for a full scenario run at the given wavelength."""
    wavelength = scenario.signal_wavelength if wavelength is None else wavelength
    duration = scenario.duration if duration is None else duration
    pitch = scenario.aperture_diameter / window_px
    shape = master_shape_for_run(
        scenario.aperture_diameter, pitch, scenario.wind_velocity, duration
    )
    return generate_screen(
        scenario.r0_at(wavelength), scenario.outer_scale, shape, pitch, seed,
        wavelength_ref=wavelength, subharmonics=subharmonics,
        aperture_diameter=scenario.aperture_diameter,
    )


def gradient_tilt(window: np.ndarray, mask: np.ndarray, pixel_pitch: float,
                  wavelength: float) -> tuple[float, float]:
    """Aperture-averaged wavefront tilt angle (radians) from a phase window.

    Mean phase gradient over the disk divided by the angular wavenumber:
    the small-angle image-motion model (centroid shift / focal length).
    """
    k = 2.0 * np.pi / wavelength
    gy, gx = np.gradient(window, pixel_pitch)
    return float(gx[mask].mean() / k), float(gy[mask].mean() / k)


def angle_of_arrival_series(
    scenario: TurbulenceScenario,
    n_samples: int,
    sample_rate: float = 1000.0,
    *,
    seed: int = 0,
    window_px: int = 64,
    subharmonics: int = 8,
) -> np.ndarray:
    """Simulated centroid-motion series: (n_samples, 2) tilt angles in radians.

    Measured at the beacon wavelength with both control loops open; the
    screen advects under the scenario wind between samples.
    """
    duration = n_samples / sample_rate
    pitch = scenario.aperture_diameter / window_px
    shape = master_shape_for_run(
        scenario.aperture_diameter, pitch, scenario.wind_velocity, duration
    )
    screen = generate_screen(
        scenario.r0_at_810nm, scenario.outer_scale, shape, pitch, seed,
        wavelength_ref=scenario.beacon_wavelength, subharmonics=subharmonics,
        aperture_diameter=scenario.aperture_diameter,
    )
    _, _, mask = unit_disk_grid(window_px)
    dt = 1.0 / sample_rate
    out = np.empty((n_samples, 2))
    for i in range(n_samples):
        w = window_phase(screen, window_px)
        out[i] = gradient_tilt(w, mask, pitch, scenario.beacon_wavelength)
        screen = evolve(screen, scenario.wind_velocity, dt)
    return out


def angle_of_arrival_std(series: np.ndarray) -> float:
    """Per-axis pooled standard deviation of an angle-of-arrival series."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, np.newaxis]
    return float(np.sqrt(np.mean(series.var(axis=0, ddof=1))))


def estimate_r0(delta_alpha: float, aperture_diameter: float,
                k: float) -> tuple[float, float]:
    """Fried parameter from angle-of-arrival fluctuation.

    r0 = 3.18 k^(-6/5) D^(-1/5) delta_alpha^(-6/5), with k the angular
    wavenumber (rad/m).  Returns (r0, D/r0).
    """
    if aperture_diameter <= 0 or k <= 0:
        raise ValueError("aperture diameter and wavenumber must be > 0")
    if delta_alpha < 0:
        raise ValueError("delta_alpha must be >= 0")
    if delta_alpha == 0:
        raise NoMeasurableTurbulence(
            "angle-of-arrival fluctuation is zero: no measurable turbulence "
            "(infinite r0)"
        )
    r0 = (AOA_PREFACTOR * k ** (-1.2) * aperture_diameter ** (-0.2)
          * delta_alpha ** (-1.2))
    return r0, aperture_diameter / r0


def structure_function(screen: PhaseScreen, max_lag_px: int) -> np.ndarray:
    """Isotropic-average phase structure function D(r) by direct differencing.

    Returns shape (max_lag_px, 2): columns are separation (m) and D
    (rad^2), averaged over the x and y axes with no periodic wrap.
    """
    phase = screen.phase
    out = np.empty((max_lag_px, 2))
    for lag in range(1, max_lag_px + 1):
        dx = phase[:, lag:] - phase[:, :-lag]
        dy = phase[lag:, :] - phase[:-lag, :]
        out[lag - 1] = (lag * screen.pixel_pitch,
                        0.5 * (np.mean(dx * dx) + np.mean(dy * dy)))
    return out


def kolmogorov_structure(r, r0):
    """Theoretical D(r) = 6.88 (r/r0)^(5/3)."""
    return STRUCTURE_CONSTANT * (np.asarray(r) / r0) ** (5.0 / 3.0)
