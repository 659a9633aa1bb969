"""State-space layout and Hamiltonian action for the coupled system.

The state lives on channels x Fock levels x R-grid, stored as a complex
array of shape (C, n_max+1, n). Channel ordering:

    atom-molecule-cavity: [ G_A1, G_A2, G_A3, E_A2 ]   (curves X, X, X, A)
    molecule-cavity:      [ G, E ]                      (curves X, A)

The Hamiltonian splits into an R-independent part over (channel, Fock) --
level offsets, photon energy n*omega_c, the loss term -(i/2)*kappa*n, and
every constant-dipole coupling -- kept as a small (C*N x C*N) matrix applied
with one matmul per call, plus the R-dependent pieces: the two diabatic
curves, the spectral kinetic term, and the mu(R) couplings. Couplings carry
a laser part -d*E(t) diagonal in n and a cavity part g*d*(a + a^dagger),
exact under sqrt(2*omega_c)*x -> a + a^dagger. No rotating-wave
approximation anywhere; the zero-point photon energy is dropped uniformly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import grids
from .errors import ConfigError

ATOM_CHANNELS = ("G_A1", "G_A2", "G_A3", "E_A2")
NOATOM_CHANNELS = ("G", "E")


@dataclass(frozen=True)
class ChannelBasis:
    labels: tuple
    curve_index: tuple      # 0 = ground (X), 1 = excited (A) curve per channel
    offsets: tuple          # constant channel energy offsets (au)
    n_max: int
    grid: grids.RGrid = field(repr=False)

    @property
    def n_channels(self):
        return len(self.labels)

    @property
    def n_fock(self):
        return self.n_max + 1

    @property
    def dim(self):
        return self.n_channels * self.n_fock * self.grid.n

    def index(self, channel, n, r):
        return (channel * self.n_fock + n) * self.grid.n + r

    def unravel(self, linear):
        channel, rest = divmod(linear, self.n_fock * self.grid.n)
        n, r = divmod(rest, self.grid.n)
        return channel, n, r


def build_basis(cfg):
    rgrid = cfg.grid.build()
    if cfg.composition == "atom-molecule-cavity":
        at = cfg.atom
        return ChannelBasis(
            labels=ATOM_CHANNELS,
            curve_index=(0, 0, 0, 1),
            offsets=(at.a1, at.a2, at.a3, at.a2),
            n_max=cfg.cavity.n_max,
            grid=rgrid,
        )
    return ChannelBasis(
        labels=NOATOM_CHANNELS,
        curve_index=(0, 1),
        offsets=(0.0, 0.0),
        n_max=cfg.cavity.n_max,
        grid=rgrid,
    )


def envelope_field(t, laser):
    """E(t) = E0 sin^2(pi (t-t0)/T) cos(omega_L (t-t0)) inside the pulse, else 0."""
    tt = t - laser.t_start
    if tt <= 0.0 or tt >= laser.duration:
        return 0.0
    return (
        laser.e0
        * np.sin(np.pi * tt / laser.duration) ** 2
        * np.cos(laser.omega_l * tt)
    )


class HamiltonianModel:
    """Precomputed operators; `apply` is the matrix-free H*psi hot path."""

    def __init__(self, basis, curves, dipole_mu, couplings, cavity, laser, mass):
        self.basis = basis
        self.laser = laser
        self.mass = mass
        self.omega_c = cavity.omega_c
        self.g = cavity.g
        self.kappa = cavity.kappa
        grid = basis.grid
        c, nf = basis.n_channels, basis.n_fock
        cn = c * nf
        self.cn = cn
        self.kfac = grid.k**2 / (2.0 * mass)
        self.curves = curves            # (2, n) ground/excited values
        # channels grouped by parent curve -> two broadcast multiplies
        self.curve_groups = []
        ci = np.asarray(basis.curve_index)
        for curve_id in np.unique(ci):
            sel = np.where(ci == curve_id)[0]
            sl = slice(sel[0], sel[-1] + 1)
            assert np.array_equal(sel, np.arange(sel[0], sel[-1] + 1))
            self.curve_groups.append((sl, curves[curve_id]))

        ns = np.arange(nf)
        lad = np.diag(np.sqrt(ns[1:]), 1) + np.diag(np.sqrt(ns[1:]), -1)
        a_static = np.zeros((cn, cn), dtype=complex)
        diag = (np.add.outer(np.asarray(basis.offsets), ns * self.omega_c)
                - 0.5j * self.kappa * ns).ravel()
        a_static[np.diag_indices(cn)] = diag
        a_laser = np.zeros((cn, cn))
        self.r_couplings = []           # (i, j, mu_values, g*mu_values)
        self.couplings = tuple(couplings)
        for i, j, dip in couplings:
            if np.isscalar(dip):
                bi, bj = i * nf, j * nf
                a_static[bi:bi + nf, bj:bj + nf] += self.g * dip * lad
                a_static[bj:bj + nf, bi:bi + nf] += self.g * dip * lad
                for n in range(nf):
                    a_laser[bi + n, bj + n] = a_laser[bj + n, bi + n] = -dip
            else:
                mu = np.asarray(dip, dtype=float)
                self.r_couplings.append((i, j, mu, self.g * mu))
        self.dipole_mu = dipole_mu
        self.a_static = a_static
        self.a_laser = a_laser
        self.lad = lad
        self._sqrt_n = np.sqrt(ns[1:])[:, None]

    # ------------------------------------------------------------- action

    def apply(self, psi, t, eref=0.0):
        """H(t) psi  (minus eref*psi when an energy shift is active)."""
        basis = self.basis
        if psi.shape != (basis.n_channels, basis.n_fock, basis.grid.n):
            raise ValueError(
                f"state shape {psi.shape} does not match basis "
                f"({basis.n_channels}, {basis.n_fock}, {basis.grid.n})"
            )
        et = envelope_field(t, self.laser)
        p2 = psi.reshape(self.cn, basis.grid.n)
        a = self.a_static + et * self.a_laser
        if eref:
            a = a.copy()
            a.flat[:: self.cn + 1] -= eref
        out = (a @ p2).reshape(psi.shape)
        for sl, values in self.curve_groups:
            out[sl] += values * psi[sl]
        out += sfft.ifft(
            self.kfac * sfft.fft(p2, axis=-1), axis=-1
        ).reshape(psi.shape)
        s = self._sqrt_n
        for i, j, mu, gmu in self.r_couplings:
            w = -et * mu
            out[i] += w * psi[j]
            out[j] += w * psi[i]
            out[i, :-1] += gmu * (s * psi[j, 1:])
            out[i, 1:] += gmu * (s * psi[j, :-1])
            out[j, :-1] += gmu * (s * psi[i, 1:])
            out[j, 1:] += gmu * (s * psi[i, :-1])
        return out

    # ------------------------------------------------------ dense variants

    def dense_field_free(self):
        """Materialized field-free H (real symmetric; complex symmetric if lossy)."""
        basis = self.basis
        nr = basis.grid.n
        nf = basis.n_fock
        dim = basis.dim
        tmat = grids.kinetic_matrix(self.mass, basis.grid)
        h = np.zeros((dim, dim), dtype=complex if self.kappa else float)
        for c in range(basis.n_channels):
            vdiag = self.curves[basis.curve_index[c]] + basis.offsets[c]
            for n in range(nf):
                a = basis.index(c, n, 0)
                blk = h[a:a + nr, a:a + nr]
                blk += tmat
                extra = n * self.omega_c - (0.5j * self.kappa * n if self.kappa else 0.0)
                blk[np.diag_indices(nr)] += vdiag + extra
        for i, j, dip in self.couplings:
            mu = None if np.isscalar(dip) else np.asarray(dip)
            for n1 in range(nf):
                for n2 in range(nf):
                    if self.lad[n1, n2] == 0.0:
                        continue
                    elem = self.g * self.lad[n1, n2] * (dip if mu is None else mu)
                    a, b = basis.index(i, n1, 0), basis.index(j, n2, 0)
                    h[a:a + nr, b:b + nr][np.diag_indices(nr)] += elem
                    h[b:b + nr, a:a + nr][np.diag_indices(nr)] += elem
        return h


def build_model(cfg, basis=None):
    """Realize curves and couplings from a SimulationConfig."""
    if basis is None:
        basis = build_basis(cfg)
    grid = basis.grid
    ground = cfg.molecule.ground.build(grid)
    excited = cfg.molecule.excited.build(grid)
    curves = np.vstack([ground.values, excited.values])
    mu = cfg.molecule.dipole.build(grid).values
    if cfg.composition == "atom-molecule-cavity":
        at = cfg.atom
        couplings = []
        if at.d12 != 0.0:
            couplings.append((0, 1, at.d12))
        couplings += [(0, 2, at.d13), (1, 2, at.d23), (1, 3, mu)]
    else:
        couplings = [(0, 1, mu)]
    return HamiltonianModel(
        basis=basis, curves=curves, dipole_mu=mu, couplings=couplings,
        cavity=cfg.cavity, laser=cfg.laser, mass=cfg.molecule.mass,
    )


def initial_state(model, ground_ladder=None):
    """phi_0 of the ground curve in the first channel, Fock vacuum; norm 1."""
    basis = model.basis
    if ground_ladder is None:
        curve = grids.PotentialCurve(model.curves[0], "ground")
        ground_ladder = grids.vibrational_eigenstates(
            curve, model.mass, basis.grid, 1, tag="X"
        )
    phi0 = ground_ladder.functions[0]
    psi = np.zeros((basis.n_channels, basis.n_fock, basis.grid.n), dtype=complex)
    psi[0, 0] = phi0
    psi /= np.sqrt(basis.grid.dr * np.sum(np.abs(psi) ** 2))
    return psi
