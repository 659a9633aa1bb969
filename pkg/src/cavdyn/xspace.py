"""Cross-check propagator with the photon mode as a continuous coordinate.

Replaces the Fock ladder by a displacement coordinate x carrying
-1/2 d^2/dx^2 + 1/2 omega_c^2 x^2; cavity couplings become the pointwise
multiplication g * d * sqrt(2 omega_c) * x.  Loss acts as -(i/2) kappa nhat
with nhat realized spectrally as (px^2 + omega_c^2 x^2)/(2 omega_c) - 1/2.
The same RK4 stepping kernel drives both representations, so agreement
tests the basis, not the integrator.

Validation-scale only: horizons are capped and the x-box is audited for
amplitude leaking to its edges.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import system, units
from .errors import ConfigError, NumericsError
from .observables import PopulationSnapshot, photon_state_location
from .propagate import _check_norm, rk4_step
from .grids import RGrid, make_grid

MAX_ORACLE_FS = 200.0
BOUNDARY_FRACTION = 1e-8
HERMITE_GRAM_TOL = 1e-8


@dataclass
class XGridState:
    amplitudes: np.ndarray      # (C, nx, nR) complex
    x_grid: RGrid
    omega_c: float              # oscillator frequency the x axis represents
    basis: object = field(repr=False)


def default_x_grid(omega_c, n=64, span=8.0):
    """n points over +-span/sqrt(omega_c); resolves Hermite levels n <= 6."""
    half = span / math.sqrt(omega_c)
    return make_grid(-half, half, n)


def hermite_matrix(x_grid, omega, count):
    """Columns phi_0..phi_{count-1} of the omega-oscillator eigenfunctions.

    Uses the stable two-term recurrence on the normalized functions and
    refuses grids on which the sampled functions are not orthonormal under
    the trapezoid-free periodic quadrature (under-resolved or truncated box).
    """
    x = x_grid.points
    t = np.empty((x_grid.n, count))
    t[:, 0] = (omega / math.pi) ** 0.25 * np.exp(-0.5 * omega * x * x)
    if count > 1:
        t[:, 1] = math.sqrt(2.0 * omega) * x * t[:, 0]
    for n in range(2, count):
        t[:, n] = (
            math.sqrt(2.0 * omega / n) * x * t[:, n - 1]
            - math.sqrt((n - 1) / n) * t[:, n - 2]
        )
    gram = x_grid.dr * (t.T @ t)
    defect = np.abs(gram - np.eye(count)).max()
    if defect > HERMITE_GRAM_TOL:
        raise ConfigError(
            f"x grid ({x_grid.n} points over [{x_grid.r_min:.3g}, "
            f"{x_grid.r_max:.3g}]) cannot resolve {count} oscillator "
            f"levels: orthonormality defect {defect:.2e}"
        )
    return t


def fock_to_x(psi, basis, x_grid, omega_c):
    """Exact linear expansion of Fock amplitudes onto the x grid."""
    t = hermite_matrix(x_grid, omega_c, basis.n_fock)
    amps = np.transpose(np.tensordot(t, psi, axes=(1, 1)), (1, 0, 2))
    return XGridState(
        amplitudes=np.ascontiguousarray(amps), x_grid=x_grid,
        omega_c=omega_c, basis=basis,
    )


def x_to_fock(state, count=None):
    """Project x amplitudes back onto the lowest `count` oscillator levels."""
    basis = state.basis
    count = basis.n_fock if count is None else count
    t = hermite_matrix(state.x_grid, state.omega_c, count)
    coef = state.x_grid.dr * np.tensordot(t, state.amplitudes, axes=(0, 1))
    return np.ascontiguousarray(np.transpose(coef, (1, 0, 2)))


class XSpaceModel:
    """H*psi on the (channel, x, R) grid; mirrors HamiltonianModel.apply."""

    def __init__(self, model, x_points=64, span=8.0):
        basis = model.basis
        self.basis = basis
        self.laser = model.laser
        self.omega_c = model.omega_c
        self.kappa = model.kappa
        self.g = model.g
        self.x_grid = default_x_grid(model.omega_c, x_points, span)
        self.shape = (basis.n_channels, self.x_grid.n, basis.grid.n)
        self.kx2half = 0.5 * self.x_grid.k**2
        self.v_ho = 0.5 * model.omega_c**2 * self.x_grid.points**2
        # -(i/2) kappa (H_ho/omega - 1/2) folds into a complex prefactor
        self.ho_factor = 1.0 - 0.5j * model.kappa / model.omega_c
        self.kfac_r = model.kfac
        ci = basis.curve_index
        self.v_channel = [
            model.curves[ci[c]] + basis.offsets[c]
            for c in range(basis.n_channels)
        ]
        self.scalar_couplings = []
        self.mu_couplings = []
        for i, j, dip in model.couplings:
            if np.isscalar(dip):
                self.scalar_couplings.append((i, j, float(dip)))
            else:
                self.mu_couplings.append((i, j, np.asarray(dip, dtype=float)))
        # g * sqrt(2 omega) * x, ready to broadcast over R
        self.gx = (model.g * math.sqrt(2.0 * model.omega_c)
                   * self.x_grid.points)[:, None]

    def apply(self, psi, t, eref=0.0):
        if psi.shape != self.shape:
            raise ValueError(f"state shape {psi.shape}, expected {self.shape}")
        hx = sfft.ifft(self.kx2half[None, :, None] * sfft.fft(psi, axis=1),
                       axis=1)
        hx += self.v_ho[None, :, None] * psi
        out = self.ho_factor * hx
        if self.kappa:
            out += (0.25j * self.kappa) * psi
        out += sfft.ifft(self.kfac_r[None, None, :] * sfft.fft(psi, axis=2),
                         axis=2)
        for c in range(self.shape[0]):
            out[c] += self.v_channel[c][None, :] * psi[c]
        et = system.envelope_field(t, self.laser)
        for i, j, dip in self.scalar_couplings:
            term = (dip * self.gx) * psi[j] - (dip * et) * psi[j]
            out[i] += term
            out[j] += (dip * self.gx) * psi[i] - (dip * et) * psi[i]
        for i, j, mu in self.mu_couplings:
            row = mu[None, :]
            out[i] += self.gx * (row * psi[j]) - et * (row * psi[j])
            out[j] += self.gx * (row * psi[i]) - et * (row * psi[i])
        if eref:
            out -= eref * psi
        return out

    # ----------------------------------------------------------- observables

    def number_expectation(self, amps):
        """<nhat> via the spectral (px^2 + w^2 x^2)/(2w) - 1/2 realization."""
        hx = sfft.ifft(self.kx2half[None, :, None] * sfft.fft(amps, axis=1),
                       axis=1)
        hx += self.v_ho[None, :, None] * amps
        w = self.x_grid.dr * self.basis.grid.dr
        e_ho = w * float(np.sum(np.real(np.conj(amps) * hx)))
        norm2 = w * float(np.sum(np.abs(amps) ** 2))
        return e_ho / self.omega_c - 0.5 * norm2

    def populations(self, amps, t):
        w = self.x_grid.dr * self.basis.grid.dr
        dens = np.abs(amps) ** 2
        p_channel = w * dens.sum(axis=(2, 1))
        state = XGridState(amps, self.x_grid, self.omega_c, self.basis)
        coef = x_to_fock(state)
        p_cn = self.basis.grid.dr * np.sum(np.abs(coef) ** 2, axis=-1)
        pc, pn = photon_state_location(self.basis)
        return PopulationSnapshot(
            time=t,
            p_channel=p_channel,
            p_cn=p_cn,
            n_expect=self.number_expectation(amps),
            p_photon_state=float(p_cn[pc, pn]),
            norm_total=float(p_channel.sum()),
        )

    def check_boundary(self, amps, t):
        peak = np.abs(amps).max()
        edge = max(np.abs(amps[:, 0, :]).max(), np.abs(amps[:, -1, :]).max())
        if edge > BOUNDARY_FRACTION * peak:
            raise NumericsError(
                f"x-grid box too small: boundary amplitude {edge:.3e} vs "
                f"peak {peak:.3e} at t = {t:.3f} au"
            )


def oracle_propagate(cfg, t_end_fs, dt=None, snapshot=None,
                     x_points=64, span=8.0):
    """Short-horizon propagation on the (x, R) grid.

    Returns one PopulationSnapshot per snapshot-lattice time, aligned with
    the Fock-basis propagator run at the same dt and snapshot interval.
    """
    if t_end_fs > MAX_ORACLE_FS:
        raise ConfigError(
            f"x-grid oracle horizon {t_end_fs} fs exceeds the "
            f"{MAX_ORACLE_FS:.0f} fs validation cap"
        )
    model = system.build_model(cfg)
    xm = XSpaceModel(model, x_points=x_points, span=span)
    dt = cfg.schedule.dt if dt is None else dt
    snapshot = cfg.schedule.snapshot if snapshot is None else snapshot
    stride = max(1, int(round(snapshot / dt)))
    t_end = units.fs_to_au(t_end_fs)
    n_snaps = int(math.floor(t_end / (stride * dt) + 1e-9))
    # +omega_c/2 keeps the shifted spectrum identical to the Fock frame,
    # which drops the photon zero-point energy
    eref = cfg.schedule.energy_shift + 0.5 * model.omega_c

    amps = fock_to_x(system.initial_state(model), model.basis,
                     xm.x_grid, model.omega_c).amplitudes.astype(complex)
    xm.check_boundary(amps, 0.0)
    snaps = [xm.populations(amps, 0.0)]
    lossy = model.kappa > 0.0
    prev = snaps[0].norm_total
    for m in range(1, n_snaps + 1):
        base = (m - 1) * stride
        for s in range(stride):
            amps = rk4_step(xm, amps, (base + s) * dt, dt, eref)
        t = (base + stride) * dt
        snap = xm.populations(amps, t)
        _check_norm(snap.norm_total, prev, lossy, t)
        xm.check_boundary(amps, t)
        prev = snap.norm_total
        snaps.append(snap)
    return snaps
