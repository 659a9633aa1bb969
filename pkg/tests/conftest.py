"""Shared helpers: compact config documents for fast test systems."""

import copy

from cavdyn import config as cfgmod

BASE = {
    "system": {"composition": "atom-molecule-cavity"},
    "cavity": {"omega_c_ev": "1.968", "g_rel": "0.0022", "kappa_au": "0.0",
               "n_max": "2"},
    "laser": {"intensity_wcm2": "1.0e12", "omega_l_ev": "20.57",
              "duration_fs": "100.0"},
    "atom": {"a1_ev": "0.0", "a2_ev": "18.6357", "a3_ev": "20.57",
             "d13_au": "0.1", "d23_au": "1.0"},
    "molecule": {
        "mass_me": "20953.892858154255",
        "ground_de_ha": "0.0274409", "ground_a_invbohr": "0.44798",
        "ground_re_bohr": "5.81823", "ground_offset_ha": "0.0",
        "excited_de_ha": "0.0378085", "excited_a_invbohr": "0.281406",
        "excited_re_bohr": "6.87601", "excited_offset_ha": "0.0677777511809",
        "dipole_au": "3.5",
    },
    "grid": {"r_min_bohr": "4.0", "r_max_bohr": "14.0", "n_points": "128"},
    "propagation": {"t_final_fs": "200.0", "dt_au": "0.05",
                    "snapshot_fs": "1.0", "strategy": "two-phase",
                    "energy_shift_au": "auto", "nu_max": "10"},
}


def config_text(overrides=None, drop=()):
    """Render BASE (+ per-section key overrides, minus dropped keys) as INI."""
    doc = copy.deepcopy(BASE)
    for section, keys in (overrides or {}).items():
        doc.setdefault(section, {}).update(keys)
    for path in drop:
        section, _, key = path.partition(".")
        if not key:
            doc.pop(section, None)
        else:
            doc[section].pop(key, None)
    lines = []
    for section, keys in doc.items():
        if not keys:
            continue
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in keys.items()]
        lines.append("")
    return "\n".join(lines)


def make_cfg(overrides=None, drop=(), base_dir="."):
    return cfgmod.parse_config(config_text(overrides, drop), base_dir)


def noatom_overrides(omega_l_ev="1.968"):
    return (
        {"system": {"composition": "molecule-cavity"},
         "laser": {"omega_l_ev": omega_l_ev}},
        ("atom",),
    )
