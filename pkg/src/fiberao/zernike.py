"""Noll-indexed Zernike basis on the unit disk.

Modes are evaluated with Noll (unit-variance) normalization so that the
coefficient of each mode equals the RMS phase it contributes over the
pupil.  Sampled bases live on a square grid whose inscribed circle is
the unit disk; pixels outside the disk are zero and excluded from all
inner products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: Conventional names for the low-order Noll modes.
MODE_NAMES = {
    1: "piston", 2: "tip", 3: "tilt", 4: "defocus",
    5: "oblique astigmatism", 6: "vertical astigmatism",
    7: "vertical coma", 8: "horizontal coma",
    9: "vertical trefoil", 10: "oblique trefoil",
    11: "spherical", 12: "vertical secondary astigmatism",
    13: "oblique secondary astigmatism",
    14: "vertical quadrafoil", 15: "oblique quadrafoil",
}


def noll_to_nm(j: int) -> tuple[int, int]:
    """Map a Noll index j >= 1 to the (n, m) radial/azimuthal pair.

    Within each radial order n the modes are sorted by |m| ascending;
    even j carries the cosine (m >= 0) term, odd j the sine (m < 0).
    """
    if j < 1:
        raise ValueError(f"Noll index must be >= 1, got {j}")
    n = 0
    k = j
    while k > n + 1:
        k -= n + 1
        n += 1
    if n % 2 == 0:
        m_abs = 2 * (k // 2)
    else:
        m_abs = 2 * ((k - 1) // 2) + 1
    if m_abs == 0:
        return n, 0
    return n, m_abs if j % 2 == 0 else -m_abs


@lru_cache(maxsize=None)
def _radial_coeffs(n: int, m_abs: int) -> tuple[float, ...]:
    """Polynomial coefficients of R_n^|m|(rho), highest power first."""
    coeffs = [0.0] * (n + 1)
    for k in range((n - m_abs) // 2 + 1):
        c = (
            (-1) ** k
            * math.factorial(n - k)
            / (
                math.factorial(k)
                * math.factorial((n + m_abs) // 2 - k)
                * math.factorial((n - m_abs) // 2 - k)
            )
        )
        coeffs[2 * k] = c  # power n - 2k, stored highest-first
    return tuple(coeffs)


def evaluate(j: int, rho, theta):
    """Evaluate the Noll-normalized Zernike mode Z_j at polar points.

    rho must lie in [0, 1]; points outside the unit disk are a domain
    error.  Accepts scalars or arrays (broadcast together).
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError("rho must lie in [0, 1] (unit disk)")
    n, m = noll_to_nm(j)
    radial = np.polyval(_radial_coeffs(n, abs(m)), rho)
    if m == 0:
        out = math.sqrt(n + 1) * radial
    elif m > 0:
        out = math.sqrt(2 * (n + 1)) * radial * np.cos(m * theta)
    else:
        out = math.sqrt(2 * (n + 1)) * radial * np.sin(-m * theta)
    return out + np.zeros(np.broadcast_shapes(rho.shape, theta.shape))


def unit_disk_grid(grid_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel-center coordinates (x, y) and disk mask for a square grid.

    The inscribed circle of the grid is the unit disk; pixel centers
    span (-1, 1) exclusive so no sample sits exactly on the rim.
    """
    c = (2.0 * np.arange(grid_size) + 1.0) / grid_size - 1.0
    x, y = np.meshgrid(c, c)
    mask = x * x + y * y <= 1.0
    return x, y, mask


@dataclass(frozen=True)
class ZernikeBasis:
    """Stack of Zernike modes sampled on a pupil grid.

    samples[i] is mode mode_indices[i] over the full grid, zero outside
    the disk mask.  Immutable after construction; safe to share.
    """

    mode_indices: tuple[int, ...]
    grid_size: int
    samples: np.ndarray          # (len(mode_indices), N, N)
    mask: np.ndarray             # (N, N) bool
    noll_normalized: bool = True

    @property
    def mode_count(self) -> int:
        return len(self.mode_indices)

    @property
    def mask_area(self) -> int:
        return int(self.mask.sum())

    def gram(self) -> np.ndarray:
        """Discrete Gram matrix over the disk, normalized by mask area."""
        flat = self.samples[:, self.mask]
        return flat @ flat.T / self.mask_area

    def compose(self, coeffs: np.ndarray) -> np.ndarray:
        """Phase map sum_i coeffs[i] * Z_{mode_indices[i]}."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.mode_count,):
            raise ValueError(
                f"expected {self.mode_count} coefficients, got {coeffs.shape}"
            )
        return np.tensordot(coeffs, self.samples, axes=1)


def sample_modes(mode_indices, grid_size: int) -> ZernikeBasis:
    """Sample the given Noll modes on a grid_size x grid_size pupil grid."""
    mode_indices = tuple(int(j) for j in mode_indices)
    if not mode_indices:
        raise ValueError("mode_indices must be non-empty")
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    x, y, mask = unit_disk_grid(grid_size)
    rho = np.hypot(x, y)[mask]
    theta = np.arctan2(y, x)[mask]
    samples = np.zeros((len(mode_indices), grid_size, grid_size))
    for i, j in enumerate(mode_indices):
        samples[i][mask] = evaluate(j, rho, theta)
    return ZernikeBasis(mode_indices, grid_size, samples, mask)


def sample_basis(mode_count: int, grid_size: int) -> ZernikeBasis:
    """Sample the first mode_count Noll modes (1..mode_count)."""
    if mode_count < 1:
        raise ValueError(f"mode_count must be >= 1, got {mode_count}")
    return sample_modes(range(1, mode_count + 1), grid_size)


def fit_coefficients(
    phase: np.ndarray, basis: ZernikeBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares Zernike coefficients of a gridded phase map.

    Minimizes masked residual power.  Returns (coefficients, residual
    map); the residual map is zero outside the disk.  Raises
    LinAlgError when the basis Gram matrix is rank-deficient.
    """
    phase = np.asarray(phase, dtype=float)
    if phase.shape != basis.mask.shape:
        raise ValueError(
            f"phase shape {phase.shape} does not match basis grid "
            f"{basis.mask.shape}"
        )
    design = basis.samples[:, basis.mask].T
    coeffs, _, rank, sv = np.linalg.lstsq(design, phase[basis.mask], rcond=None)
    if rank < basis.mode_count:
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        raise np.linalg.LinAlgError(
            f"degenerate basis: rank {rank} < {basis.mode_count} modes "
            f"(condition number {cond:.3e})"
        )
    residual = np.zeros_like(phase)
    residual[basis.mask] = phase[basis.mask] - design @ coeffs
    return coeffs, residual
