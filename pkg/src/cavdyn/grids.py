"""Fourier grid for the molecular coordinate R.

Periodic (wrap-around) grid: points r_min + i*dR for i = 0..n-1 with
dR = (r_max - r_min)/n, so r_max itself is excluded. The kinetic operator is
applied spectrally (multiply by k^2/2M in momentum space), and the dense
Fourier-grid Hamiltonian matrix backs the 1D vibrational eigensolver.

All wavefunctions use the "values" convention: psi holds amplitudes at the
grid points and the quadrature weight dR is applied explicitly, i.e.
norm^2 = dR * sum(|psi|^2).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NumericsError


@dataclass(frozen=True)
class RGrid:
    r_min: float
    r_max: float
    n: int
    points: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    @property
    def dr(self):
        return (self.r_max - self.r_min) / self.n


def make_grid(r_min, r_max, n):
    """Build an RGrid; n must be a power of two and the interval non-empty."""
    if r_max <= r_min:
        raise ConfigError(f"grid bounds reversed or empty: [{r_min}, {r_max}]")
    if n < 8 or (n & (n - 1)) != 0:
        raise ConfigError(f"grid point count must be a power of two >= 8, got {n}")
    dr = (r_max - r_min) / n
    points = r_min + dr * np.arange(n)
    k = 2.0 * np.pi * np.fft.fftfreq(n, dr)
    return RGrid(r_min, r_max, n, points, k)


@dataclass(frozen=True)
class PotentialCurve:
    """Energies (or any R-dependent quantity, e.g. a dipole) on the grid points.

    `fn` re-evaluates the curve at arbitrary R (used by the eigensolver's
    grid-doubling self-check); for tabulated curves it is the defining spline.
    """

    values: np.ndarray
    source: str = ""
    fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ConfigError(f"curve {self.source!r} contains non-finite values")


def morse_curve(de, a, re, offset, grid):
    """V(R) = De*(1 - exp(-a(R-re)))^2 + offset sampled on the grid."""
    if de <= 0 or a <= 0 or re <= 0:
        raise ConfigError(
            f"Morse parameters must be positive: De={de}, a={a}, re={re}"
        )

    def f(r):
        return de * (1.0 - np.exp(-a * (np.asarray(r) - re))) ** 2 + offset

    return PotentialCurve(
        f(grid.points), source=f"morse(De={de}, a={a}, re={re}, offset={offset})", fn=f
    )


def tabulated_curve(path, grid):
    """Interpolate a two-column text table (R in bohr, value in au) onto the grid.

    Cubic-spline interpolation; the sample range must cover the grid. The
    spline uses not-a-knot end conditions so that sampled cubic polynomials
    are reproduced exactly.
    """
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read curve file {path!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed curve file {path!r}: {exc}") from exc
    if data.shape[0] < 4:
        raise ConfigError(
            f"curve file {path!r} has {data.shape[0]} rows; at least 4 required"
        )
    if data.shape[1] != 2:
        raise ConfigError(f"curve file {path!r} must have exactly two columns")
    x, y = data[:, 0], data[:, 1]
    if not np.all(np.diff(x) > 0):
        raise ConfigError(f"curve file {path!r}: abscissae must be strictly increasing")
    if x[0] > grid.r_min or x[-1] < grid.points[-1]:
        raise ConfigError(
            f"curve file {path!r} covers [{x[0]}, {x[-1]}] but the grid needs "
            f"[{grid.r_min}, {grid.points[-1]}]"
        )
    spline = CubicSpline(x, y)
    return PotentialCurve(spline(grid.points), source=str(path), fn=spline)


def apply_kinetic(psi, mass, grid):
    """Spectral kinetic action -(1/2M) d^2/dR^2 on the trailing axis of psi."""
    psi = np.asarray(psi)
    if psi.shape[-1] != grid.n:
        raise ValueError(f"psi trailing axis {psi.shape[-1]} != grid size {grid.n}")
    kfac = grid.k**2 / (2.0 * mass)
    return sfft.ifft(kfac * sfft.fft(psi, axis=-1), axis=-1)


def kinetic_matrix(mass, grid):
    """Dense symmetric kinetic matrix of the Fourier grid (for eigensolves)."""
    kfac = grid.k**2 / (2.0 * mass)
    t = sfft.ifft(kfac[:, None] * sfft.fft(np.eye(grid.n), axis=0), axis=0).real
    return 0.5 * (t + t.T)


@dataclass(frozen=True)
class VibrationalLadder:
    energies: np.ndarray
    functions: np.ndarray  # (count, n); dR-orthonormal rows, sign-fixed
    tag: str
    mass: float
    grid: RGrid = field(repr=False)


def _fix_signs(functions):
    # Sign convention: positive in the leftmost significant lobe, i.e. at the
    # first grid point where |phi| reaches 10% of its maximum.
    out = functions.copy()
    for i, phi in enumerate(out):
        j = np.argmax(np.abs(phi) >= 0.1 * np.abs(phi).max())
        if phi[j] < 0:
            out[i] = -phi
    return out


def vibrational_eigenstates(curve, mass, grid, count, tag="", check_convergence=False):
    """Lowest `count` eigenpairs of T + V by dense diagonalization.

    Eigenfunctions are returned in the values convention (dR-orthonormal).
    With check_convergence=True the solve is repeated on a doubled grid and a
    NumericsError is raised if any requested energy shifts by > 1e-8 hartree.
    """
    if count < 1:
        raise ConfigError(f"requested {count} eigenstates; need at least 1")
    if count > grid.n // 4:
        raise ConfigError(
            f"requested {count} eigenstates on an n={grid.n} grid; "
            f"limit is n/4 = {grid.n // 4}"
        )
    h = kinetic_matrix(mass, grid)
    h[np.diag_indices_from(h)] += curve.values
    energies, vectors = sla.eigh(h, subset_by_index=(0, count - 1))
    functions = _fix_signs(vectors.T / np.sqrt(grid.dr))
    ladder = VibrationalLadder(energies, functions, tag, mass, grid)
    if check_convergence:
        fine = make_grid(grid.r_min, grid.r_max, 2 * grid.n)
        if curve.fn is not None:
            fine_values = np.asarray(curve.fn(fine.points), dtype=float)
        else:
            # best available stand-in when only samples exist
            fine_values = CubicSpline(grid.points, curve.values)(fine.points)
        hf = kinetic_matrix(mass, fine)
        hf[np.diag_indices_from(hf)] += fine_values
        ef = sla.eigh(hf, eigvals_only=True, subset_by_index=(0, count - 1))
        shift = np.abs(ef - energies).max()
        if shift > 1e-8:
            raise NumericsError(
                f"vibrational ladder not converged: doubling the grid moves "
                f"energies by up to {shift:.3e} hartree (limit 1e-8)"
            )
    return ladder
