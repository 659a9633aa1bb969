"""Population extraction and trajectory-level diagnostics.

All quadrature follows the grid convention: squared norms are
dr * sum(|psi|^2). Photonic content is reported two ways and both are always
emitted: the population of the designated photonic component (the ground
channel that carries the one-photon excitation, n=1) for figure-style
curves, and the unnormalized expectation <n> = sum_n n p_{c,n} which is the
quantity entering the loss identity d|psi|^2/dt = -kappa*<n>.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericsError
from .units import au_to_fs


def photon_state_location(basis):
    """(channel, n) of the designated one-photon component."""
    return (1 if basis.n_channels == 4 else 0), 1


def excited_channel(basis):
    """Channel index of the electronically excited molecular state."""
    return 3 if basis.n_channels == 4 else 1


@dataclass(frozen=True)
class PopulationSnapshot:
    time: float                 # au
    p_channel: np.ndarray       # (C,)
    p_cn: np.ndarray            # (C, N)
    n_expect: float             # sum_n n * p_{c,n}, unnormalized
    p_photon_state: float
    norm_total: float           # |psi|^2 under grid quadrature


def channel_populations(state, basis):
    shape = (basis.n_channels, basis.n_fock, basis.grid.n)
    if state.shape != shape:
        raise ValueError(f"state shape {state.shape}, expected {shape}")
    p_cn = basis.grid.dr * np.sum(np.abs(state) ** 2, axis=-1)
    pc, pn = photon_state_location(basis)
    return PopulationSnapshot(
        time=0.0,
        p_channel=p_cn.sum(axis=1),
        p_cn=p_cn,
        n_expect=float(p_cn.sum(axis=0) @ np.arange(basis.n_fock)),
        p_photon_state=float(p_cn[pc, pn]),
        norm_total=float(p_cn.sum()),
    )


def populations_from_block(block, basis, with_time_axis=True):
    """Vectorized populations for a (C, N, R, M) stack of states.

    Returns a dict of arrays with the snapshot axis last: p_cn (C, N, M),
    p_channel (C, M), n_expect (M,), p_photon_state (M,), norm_total (M,).
    """
    p_cn = basis.grid.dr * np.sum(np.abs(block) ** 2, axis=2)
    pc, pn = photon_state_location(basis)
    ns = np.arange(basis.n_fock)
    return {
        "p_cn": p_cn,
        "p_channel": p_cn.sum(axis=1),
        "n_expect": np.tensordot(ns, p_cn.sum(axis=0), axes=(0, 0)),
        "p_photon_state": p_cn[pc, pn],
        "norm_total": p_cn.sum(axis=(0, 1)),
    }


def vibrational_projection(state, channel, ladder):
    """Per-nu populations of the n=0 component of `channel` plus residual.

    The residual is the full channel population not captured by the ladder
    span (higher photon sectors included), so that
    sum_nu p_nu + residual == p_channel.
    """
    if ladder.grid.n != state.shape[-1]:
        raise ValueError(
            f"ladder grid ({ladder.grid.n} points) does not match state "
            f"({state.shape[-1]} points)"
        )
    dr = ladder.grid.dr
    amps = dr * (ladder.functions @ state[channel, 0])
    p_nu = np.abs(amps) ** 2
    p_ch = dr * np.sum(np.abs(state[channel]) ** 2)
    return p_nu, float(p_ch - p_nu.sum())


def projection_from_block(block, channel, ladder):
    """Vectorized form of vibrational_projection for (C, N, R, M) stacks."""
    dr = ladder.grid.dr
    amps = dr * (ladder.functions @ block[channel, 0])      # (K, M)
    p_nu = np.abs(amps) ** 2
    p_ch = dr * np.sum(np.abs(block[channel]) ** 2, axis=(0, 1))
    return p_nu, p_ch - p_nu.sum(axis=0)


# ------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class DiagnosticsSummary:
    exchange_period_fs: float | None    # dominant atom<->molecule period
    peak_p_mol: float
    t_peak_fs: float
    t_one_over_e_fs: float | None       # norm |psi|^2 crossing 1/e
    ratio_photon_molecule: float | None # mean p_photon/p_mol where p_mol>0.01
    final_norm: float


def _dominant_period_fs(times_fs, series):
    """Spectral peak of a uniformly sampled series, parabolic refinement."""
    m = len(series)
    if m < 8 or np.var(series) < 1e-18:
        return None
    dt = np.diff(times_fs)
    step = dt.mean()
    if np.max(np.abs(dt - step)) > 1e-6 * step:
        raise NumericsError("period extraction requires uniform sampling")
    windowed = (series - series.mean()) * np.hanning(m)
    power = np.abs(np.fft.rfft(windowed)) ** 2
    power[0] = 0.0
    k = int(np.argmax(power))
    if power[k] <= 1e-24 * m * max(np.var(series), 1e-30):
        return None
    if 1 <= k < len(power) - 1:
        # log-parabolic interpolation of the peak bin
        la, lb, lc = np.log(power[k - 1:k + 2] + 1e-300)
        denom = la - 2.0 * lb + lc
        shift = 0.5 * (la - lc) / denom if denom != 0.0 else 0.0
        k = k + np.clip(shift, -0.5, 0.5)
    freq = k / (m * step)
    return 1.0 / freq if freq > 0 else None


def _one_over_e_time_fs(times_fs, norm):
    thresh = np.exp(-1.0)
    below = np.nonzero(norm < thresh)[0]
    if below.size == 0:
        return None
    j = below[0]
    if j == 0:
        return float(times_fs[0])
    t0, t1 = times_fs[j - 1], times_fs[j]
    n0, n1 = norm[j - 1], norm[j]
    return float(t0 + (n0 - thresh) / (n0 - n1) * (t1 - t0))


def diagnostics(record):
    """Trajectory-level summary; needs >= 100 post-pulse snapshots."""
    times_fs = au_to_fs(record.times)
    pulse_end_fs = au_to_fs(record.pulse_end)
    post = times_fs > pulse_end_fs + 1e-9
    if post.sum() < 100:
        raise NumericsError(
            f"diagnostics needs at least 100 post-pulse snapshots, got "
            f"{int(post.sum())}"
        )
    p_mol = record.p_mol
    period = _dominant_period_fs(times_fs[post], p_mol[post])
    ipeak = int(np.argmax(p_mol))
    sel = p_mol > 0.01
    ratio = (
        float(np.mean(record.p_photon_state[sel] / p_mol[sel]))
        if sel.any() else None
    )
    return DiagnosticsSummary(
        exchange_period_fs=period,
        peak_p_mol=float(p_mol[ipeak]),
        t_peak_fs=float(times_fs[ipeak]),
        t_one_over_e_fs=_one_over_e_time_fs(times_fs, record.norm_total),
        ratio_photon_molecule=ratio,
        final_norm=float(record.norm_total[-1]),
    )
