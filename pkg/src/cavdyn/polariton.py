"""Static polaritonic analysis of the one-excitation manifold.

At each grid point R the three states carrying one quantum of excitation --
|G,A3,0>, |G,A2,1>, |E,A2,0> -- form a real symmetric 3x3 potential matrix:

    diag: (V_X + A3,  V_X + A2 + omega_c,  V_A + A2)
    (1,2) = g*d23     (2,3) = g*mu(R)      (1,3) = 0

whose sorted eigenvalues are the lower/middle/upper polariton curves.
Counter-rotating couplings connect out of this manifold and are excluded
from the static picture by construction (the dynamics keeps them).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

BASIS_LABELS = ("G_A3_0", "G_A2_1", "E_A2_0")


@dataclass(frozen=True)
class PolaritonCurves:
    r: np.ndarray               # (n,) grid points
    energies: np.ndarray        # (n, 3) ascending per row
    compositions: np.ndarray    # (n, 3, 3): [r, branch, diabatic weight]


@dataclass(frozen=True)
class CrossingReport:
    branches: tuple             # (lower index, lower index + 1)
    r_star: float
    gap: float
    composition_lower: np.ndarray   # diabatic weights of the two branches
    composition_upper: np.ndarray   # at the grid point nearest r_star
    grid_index: int


def _coupling_for(model, pair):
    for i, j, dip in model.couplings:
        if (i, j) == pair:
            return dip
    return 0.0


def excitation_matrix(model):
    """The (n, 3, 3) one-excitation potential matrices."""
    basis = model.basis
    if basis.n_channels != 4:
        raise ConfigError(
            "polariton analysis needs the atom-molecule-cavity composition"
        )
    n = basis.grid.n
    vx, va = model.curves
    a2, a3 = basis.offsets[1], basis.offsets[2]
    d23 = _coupling_for(model, (1, 2))
    mu = model.dipole_mu
    h = np.zeros((n, 3, 3))
    h[:, 0, 0] = vx + a3
    h[:, 1, 1] = vx + a2 + model.omega_c
    h[:, 2, 2] = va + a2
    h[:, 0, 1] = h[:, 1, 0] = model.g * d23
    h[:, 1, 2] = h[:, 2, 1] = model.g * mu
    return h


def polariton_surfaces(model):
    h = excitation_matrix(model)
    energies, vecs = np.linalg.eigh(h)          # batched, ascending
    compositions = np.transpose(vecs**2, (0, 2, 1))
    return PolaritonCurves(
        r=model.basis.grid.points, energies=energies,
        compositions=compositions,
    )


def _parabolic_min(y0, y1, y2, dr):
    """Vertex (offset from center, value) of the parabola through three
    equidistant samples; exact for quadratic data."""
    denom = y0 - 2.0 * y1 + y2
    if denom <= 0.0:
        return 0.0, y1
    delta = 0.5 * (y0 - y2) / denom * dr
    delta = float(np.clip(delta, -dr, dr))
    value = y1 - (y0 - y2) ** 2 / (8.0 * denom)
    return delta, value


def locate_avoided_crossings(curves):
    """Interior local minima of each adjacent-branch gap, refined on gap^2.

    The squared gap of a linearly crossing pair is exactly quadratic in R,
    so the three-point parabola reproduces the textbook crossing without
    bias; curvature of realistic diabats enters only at O(dr^3).
    """
    r = curves.r
    if len(r) < 32:
        raise ConfigError(
            f"crossing search needs >= 32 grid points, got {len(r)}"
        )
    dr = r[1] - r[0]
    out = []
    for b in range(curves.energies.shape[1] - 1):
        gap = curves.energies[:, b + 1] - curves.energies[:, b]
        gap2 = gap * gap
        interior = np.nonzero(
            (gap2[1:-1] < gap2[:-2]) & (gap2[1:-1] <= gap2[2:])
        )[0] + 1
        for i in interior:
            delta, value = _parabolic_min(gap2[i - 1], gap2[i], gap2[i + 1],
                                          dr)
            r_star = r[i] + delta
            nearest = i + (1 if delta > 0.5 * dr else
                           -1 if delta < -0.5 * dr else 0)
            out.append(CrossingReport(
                branches=(b, b + 1),
                r_star=float(r_star),
                gap=float(np.sqrt(max(value, 0.0))),
                composition_lower=curves.compositions[nearest, b].copy(),
                composition_upper=curves.compositions[nearest, b + 1].copy(),
                grid_index=int(nearest),
            ))
    return out
