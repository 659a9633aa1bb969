"""Synthetic CSV inputs matching the simulator's file contracts.

The generators below write cells with %.12g — the simulator's own cell
format — so byte-level sidecar assertions exercise the same round-trip
the real files do. No simulator code is imported: plotkit's only
coupling to it is the CSV layout, and these fixtures pin that layout.
"""

import math

import pytest

POPULATION_HEADER = (
    "t_fs,p_G_A1,p_G_A2,p_G_A3,p_E_A2,p_photon_state,n_photon_expect,"
    "norm_total,p_nu0,p_nu1,p_nu2"
)

SURFACE_HEADER = (
    "R_bohr,E_lower,E_middle,E_upper,"
    "comp_lower_G_A3_0,comp_lower_G_A2_1,comp_lower_E_A2_0,"
    "comp_middle_G_A3_0,comp_middle_G_A2_1,comp_middle_E_A2_0,"
    "comp_upper_G_A3_0,comp_upper_G_A2_1,comp_upper_E_A2_0"
)

CROSSING_HEADER = (
    "branch_lower,branch_upper,r_star_bohr,gap_ha,"
    "comp_lower_G_A3_0,comp_lower_G_A2_1,comp_lower_E_A2_0,"
    "comp_upper_G_A3_0,comp_upper_G_A2_1,comp_upper_E_A2_0"
)

SUMMARY_HEADER = (
    "member,g_rel,exchange_period_fs,peak_p_mol,t_peak_fs,"
    "t_one_over_e_fs,ratio_photon_molecule,final_norm,status,error"
)


def fmt(value):
    return format(float(value), ".12g")


def write_population_csv(path, n_rows=40, phase=0.0):
    """A plausible trajectory: smooth, normalized-looking columns."""
    lines = [POPULATION_HEADER]
    for m in range(n_rows):
        t = float(m)
        s = math.sin(0.11 * t + phase) ** 2
        atom = 0.5 * (1.0 - s) * 0.6
        mol = 0.3 * s
        photon_state = 0.04 * s
        rest = 1.0 - atom - mol - photon_state
        cells = [
            t, 0.7 * rest, 0.3 * rest, atom, mol, photon_state,
            1.2 * photon_state, 1.0,
            0.5 * mol, 0.3 * mol, 0.2 * mol,
        ]
        lines.append(",".join(fmt(c) for c in cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_surfaces_csv(path, n_rows=80, r_star=6.0, gap=0.002):
    """Three branches with a narrow avoided crossing at r_star."""
    lines = [SURFACE_HEADER]
    for m in range(n_rows):
        r = 4.0 + 4.0 * m / (n_rows - 1)
        d1 = 0.05 * (r - r_star)          # two diabats crossing at r_star
        d2 = -0.05 * (r - r_star)
        split = math.hypot(d1 - d2, gap)
        mean = 0.5 * (d1 + d2) + 0.1
        lower = mean - 0.5 * split
        upper = mean + 0.5 * split
        middle = 0.1 + 0.02 * (r - 4.0) + 0.05
        row = [r, lower, middle, upper,
               0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8]
        lines.append(",".join(fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_crossings_csv(path, rows=((0, 1, 6.0, 0.002), (1, 2, 7.5, 0.04))):
    lines = [CROSSING_HEADER]
    for lower, upper, r_star, gap in rows:
        cells = [str(lower), str(upper), fmt(r_star), fmt(gap)]
        cells += [fmt(v) for v in (0.7, 0.2, 0.1, 0.1, 0.2, 0.7)]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_summary_csv(path):
    lines = [SUMMARY_HEADER]
    values = [
        ("g_rel=0.002", 0.002, 310.0, 0.118, 155.0, "", 0.21, 1.0, "ok", ""),
        ("g_rel=0.004", 0.004, 160.0, 0.236, 83.0, "", 0.19, 1.0, "ok", ""),
        ("g_rel=0.006", 0.006, 110.0, 0.244, 61.0, "", 0.17, 1.0, "ok", ""),
        ("g_rel=-1", "", "", "", "", "", "", "", "error",
         "cavity.g_rel must be non-negative"),
    ]
    for row in values:
        cells = [row[0]]
        for v in row[1:8]:
            cells.append("" if v == "" else fmt(v))
        cells += [row[8], row[9]]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def member_csvs(tmp_path):
    """Four sweep-member trajectories in per-member directories."""
    paths = []
    for k in range(4):
        member = tmp_path / f"g_rel=0.00{k + 2}"
        member.mkdir()
        paths.append(write_population_csv(
            member / "populations.csv", phase=0.3 * k))
    return paths


@pytest.fixture
def population_header():
    return POPULATION_HEADER


@pytest.fixture
def make_population_csv():
    return write_population_csv


@pytest.fixture
def surfaces_csv(tmp_path):
    return write_surfaces_csv(tmp_path / "surfaces.csv")


@pytest.fixture
def crossings_csv(tmp_path):
    return write_crossings_csv(tmp_path / "crossings.csv")


@pytest.fixture
def summary_csv(tmp_path):
    return write_summary_csv(tmp_path / "summary.csv")
