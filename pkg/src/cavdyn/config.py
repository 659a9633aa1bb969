"""Run-configuration parsing, validation, and the canonical resolved echo.

Configuration files are flat INI-style documents with a fixed set of sections
(system, cavity, laser, atom, molecule, grid, propagation). Keys are lowercase
and carry explicit unit suffixes; every scalar is accepted either in a human
unit (eV, fs, W/cm^2, amu) or directly in atomic units, but never both at
once. Unknown sections or keys are hard errors.

`echo()` emits the fully resolved configuration with every value in atomic
units, formatted deterministically (%.12g) so identical inputs produce
byte-identical documents; the echo re-parses to the same configuration.
"""

import configparser
import io
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import grids, units
from .errors import ConfigError

log = logging.getLogger("cavdyn.config")

COMPOSITIONS = ("atom-molecule-cavity", "molecule-cavity")
STRATEGIES = ("two-phase", "uniform-stepping")

_KNOWN_KEYS = {
    "system": {"composition"},
    "cavity": {
        "omega_c_ev", "omega_c_au", "g_rel", "g_au",
        "kappa_au", "tau_fs", "q_factor", "n_max",
    },
    "laser": {
        "omega_l_ev", "omega_l_au", "intensity_wcm2", "e0_au",
        "duration_fs", "duration_au", "t_start_fs", "t_start_au",
    },
    "atom": {
        "a1_ev", "a1_au", "a2_ev", "a2_au", "a3_ev", "a3_au",
        "d13_au", "d23_au", "d12_au",
    },
    "molecule": {
        "mass_me", "mass_amu",
        "ground_de_ha", "ground_a_invbohr", "ground_re_bohr", "ground_offset_ha",
        "ground_file",
        "excited_de_ha", "excited_a_invbohr", "excited_re_bohr", "excited_offset_ha",
        "excited_file",
        "dipole_au", "dipole_file",
    },
    "grid": {"r_min_bohr", "r_max_bohr", "n_points"},
    "propagation": {
        "t_final_fs", "t_final_au", "dt_au", "snapshot_fs", "snapshot_au",
        "strategy", "energy_shift_au", "nu_max", "eigen_segment_fs",
    },
}

# Alternative spellings of one quantity (at most one may appear); sweep
# overrides use this table to drop the siblings of an overridden key.
EXCLUSIVE_GROUPS = [
    ("cavity", ("omega_c_ev", "omega_c_au")),
    ("cavity", ("g_rel", "g_au")),
    ("cavity", ("kappa_au", "tau_fs", "q_factor")),
    ("laser", ("omega_l_ev", "omega_l_au")),
    ("laser", ("intensity_wcm2", "e0_au")),
    ("laser", ("duration_fs", "duration_au")),
    ("laser", ("t_start_fs", "t_start_au")),
    ("atom", ("a1_ev", "a1_au")),
    ("atom", ("a2_ev", "a2_au")),
    ("atom", ("a3_ev", "a3_au")),
    ("molecule", ("mass_me", "mass_amu")),
    ("molecule", ("dipole_au", "dipole_file")),
    ("propagation", ("t_final_fs", "t_final_au")),
    ("propagation", ("snapshot_fs", "snapshot_au")),
]

_MORSE_KEYS = ("{}_de_ha", "{}_a_invbohr", "{}_re_bohr", "{}_offset_ha")


@dataclass(frozen=True)
class CavityParams:
    omega_c: float      # au
    g_rel: float        # coupling as a multiple of omega_c
    kappa: float        # au; 0 for lossless
    n_max: int

    @property
    def g(self):
        return self.g_rel * self.omega_c

    @property
    def tau(self):
        return math.inf if self.kappa == 0 else 1.0 / self.kappa

    @property
    def q_factor(self):
        return math.inf if self.kappa == 0 else self.omega_c / self.kappa


@dataclass(frozen=True)
class LaserParams:
    e0: float           # au
    omega_l: float      # au
    duration: float     # au
    t_start: float = 0.0


@dataclass(frozen=True)
class AtomParams:
    a1: float
    a2: float
    a3: float
    d13: float
    d23: float
    d12: float = 0.0


@dataclass(frozen=True)
class CurveSpec:
    """Either Morse parameters or a two-column file; `path` resolved for I/O."""

    kind: str                   # "morse" | "file"
    de: float = 0.0
    a: float = 0.0
    re: float = 0.0
    offset: float = 0.0
    given: str = ""             # file reference exactly as configured
    path: str = ""              # resolved absolute path (file curves)

    def build(self, grid):
        if self.kind == "morse":
            curve = grids.morse_curve(self.de, self.a, self.re, self.offset, grid)
        else:
            curve = grids.tabulated_curve(self.path, grid)
        return curve


@dataclass(frozen=True)
class DipoleSpec:
    kind: str                   # "constant" | "file"
    value: float = 0.0
    given: str = ""
    path: str = ""

    def build(self, grid):
        if self.kind == "constant":
            return grids.PotentialCurve(
                np.full(grid.n, self.value), source=f"constant({self.value})"
            )
        return grids.tabulated_curve(self.path, grid)


@dataclass(frozen=True)
class MoleculeParams:
    mass: float                 # electron masses
    ground: CurveSpec
    excited: CurveSpec
    dipole: DipoleSpec


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    n: int

    def build(self):
        return grids.make_grid(self.r_min, self.r_max, self.n)


@dataclass(frozen=True)
class PropagationSchedule:
    t_final: float              # au
    dt: float                   # au, pulse-phase step
    snapshot: float             # au between snapshots
    strategy: str               # two-phase | uniform-stepping
    energy_shift: float         # au; resolved (never "auto" after parsing)
    nu_max: int
    eigen_segment: float | None  # au; None = single segment


@dataclass(frozen=True)
class SimulationConfig:
    composition: str
    cavity: CavityParams
    laser: LaserParams
    atom: AtomParams | None
    molecule: MoleculeParams
    grid: GridSpec
    schedule: PropagationSchedule
    fc_gap: float               # vertical gap at the ground-curve minimum (au)

    @property
    def n_channels(self):
        return 4 if self.composition == "atom-molecule-cavity" else 2


# --------------------------------------------------------------------- parsing


def read_raw(text):
    """INI text -> {section: {key: value-string}}, with key legality checks."""
    cp = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
        strict=True,
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    raw = {}
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        known = _KNOWN_KEYS[section]
        raw[section] = {}
        for key, value in cp.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key}")
            raw[section][key] = value.strip()
    return raw


def override_raw(raw, param_path, value):
    """Return a copy of `raw` with section.key set, dropping exclusive siblings."""
    try:
        section, key = param_path.split(".")
    except ValueError:
        raise ConfigError(
            f"parameter path {param_path!r} must look like section.key"
        ) from None
    if section not in _KNOWN_KEYS or key not in _KNOWN_KEYS[section]:
        raise ConfigError(f"unknown parameter path {param_path!r}")
    out = {s: dict(kv) for s, kv in raw.items()}
    out.setdefault(section, {})
    for gsec, gkeys in EXCLUSIVE_GROUPS:
        if gsec == section and key in gkeys:
            for sibling in gkeys:
                out[section].pop(sibling, None)
    out[section][key] = str(value)
    return out


class _Section:
    """Typed accessors over one raw section with section.key error reporting."""

    def __init__(self, name, mapping):
        self.name = name
        self.map = dict(mapping)
        self.used = set()

    def has(self, key):
        return key in self.map

    def _fetch(self, key):
        self.used.add(key)
        return self.map[key]

    def float(self, key, default=None):
        if key not in self.map:
            if default is None:
                raise ConfigError(f"missing required key {self.name}.{key}")
            return default
        text = self._fetch(key)
        try:
            return float(text)
        except ValueError:
            raise ConfigError(
                f"{self.name}.{key}: cannot parse {text!r} as a number"
            ) from None

    def int(self, key, default=None):
        v = self.float(key, default=default)
        if v != int(v):
            raise ConfigError(f"{self.name}.{key}: expected an integer, got {v}")
        return int(v)

    def str(self, key, default=None):
        if key not in self.map:
            if default is None:
                raise ConfigError(f"missing required key {self.name}.{key}")
            return default
        return self._fetch(key)

    def pick(self, *keys):
        """Exactly-one-of accessor; returns (key, value-string) or raises."""
        present = [k for k in keys if k in self.map]
        if len(present) > 1:
            raise ConfigError(
                f"keys {', '.join(present)} in [{self.name}] are mutually "
                f"exclusive; give exactly one"
            )
        if not present:
            raise ConfigError(
                f"[{self.name}] needs exactly one of: {', '.join(keys)}"
            )
        return present[0], self._fetch(present[0])


def _energy(sec, base, default_au=None):
    """Energy given as either <base>_ev or <base>_au."""
    kev, kau = f"{base}_ev", f"{base}_au"
    if sec.has(kev) or sec.has(kau):
        key, _ = sec.pick(kev, kau)
        v = sec.float(key)
        return units.ev_to_au(v) if key == kev else v
    if default_au is None:
        raise ConfigError(f"missing required key {sec.name}.{kev} (or {kau})")
    return default_au


def _time(sec, base, default_au=None):
    kfs, kau = f"{base}_fs", f"{base}_au"
    if sec.has(kfs) or sec.has(kau):
        key, _ = sec.pick(kfs, kau)
        v = sec.float(key)
        return units.fs_to_au(v) if key == kfs else v
    if default_au is None:
        raise ConfigError(f"missing required key {sec.name}.{kfs} (or {kau})")
    return default_au


def _curve_spec(sec, prefix, base_dir):
    file_key = f"{prefix}_file"
    morse_keys = [pat.format(prefix) for pat in _MORSE_KEYS]
    have_morse = [k for k in morse_keys if sec.has(k)]
    if sec.has(file_key):
        if have_morse:
            raise ConfigError(
                f"[molecule] {file_key} conflicts with {', '.join(have_morse)}"
            )
        given = sec.str(file_key)
        return CurveSpec(
            kind="file", given=given, path=str((base_dir / given).resolve())
        )
    de = sec.float(morse_keys[0])
    a = sec.float(morse_keys[1])
    re = sec.float(morse_keys[2])
    offset = sec.float(morse_keys[3], default=0.0)
    if de <= 0 or a <= 0 or re <= 0:
        raise ConfigError(
            f"[molecule] {prefix} Morse parameters must be positive "
            f"(De={de}, a={a}, re={re})"
        )
    return CurveSpec(kind="morse", de=de, a=a, re=re, offset=offset)


def parse_config(text, base_dir="."):
    """Parse + validate a configuration document; all quantities to au."""
    return _parse(read_raw(text), Path(base_dir))


def parse_raw(raw, base_dir="."):
    return _parse(raw, Path(base_dir))


def _parse(raw, base_dir):
    for required in ("system", "cavity", "laser", "molecule", "grid", "propagation"):
        if required not in raw:
            raise ConfigError(f"missing required section [{required}]")

    sys_sec = _Section("system", raw["system"])
    composition = sys_sec.str("composition")
    if composition not in COMPOSITIONS:
        raise ConfigError(
            f"system.composition must be one of {COMPOSITIONS}, got {composition!r}"
        )

    # ---- cavity
    cav = _Section("cavity", raw["cavity"])
    omega_c = _energy(cav, "omega_c")
    if omega_c <= 0:
        raise ConfigError("cavity.omega_c must be positive")
    gkey, _ = cav.pick("g_rel", "g_au")
    gval = cav.float(gkey)
    g_rel = gval if gkey == "g_rel" else gval / omega_c
    if g_rel < 0:
        raise ConfigError("cavity coupling must be non-negative")
    lkey, _ = cav.pick("kappa_au", "tau_fs", "q_factor")
    lval = cav.float(lkey)
    if lkey == "kappa_au":
        if lval < 0:
            raise ConfigError("cavity.kappa_au must be non-negative")
        kappa = lval
    elif lkey == "tau_fs":
        try:
            kappa = units.kappa_from_lifetime(lval)
        except ValueError as exc:
            raise ConfigError(f"cavity.tau_fs: {exc}") from None
    else:
        try:
            kappa = units.kappa_from_q(lval, omega_c)
        except ValueError as exc:
            raise ConfigError(f"cavity.q_factor: {exc}") from None
    n_max = cav.int("n_max")
    if n_max < 1:
        raise ConfigError(f"cavity.n_max must be >= 1, got {n_max}")
    cavity = CavityParams(omega_c=omega_c, g_rel=g_rel, kappa=kappa, n_max=n_max)

    # ---- laser
    las = _Section("laser", raw["laser"])
    omega_l = _energy(las, "omega_l")
    if omega_l <= 0:
        raise ConfigError("laser.omega_l must be positive")
    fkey, _ = las.pick("intensity_wcm2", "e0_au")
    fval = las.float(fkey)
    if fkey == "intensity_wcm2":
        try:
            e0 = units.field_amplitude_from_intensity(fval)
        except ValueError as exc:
            raise ConfigError(f"laser.intensity_wcm2: {exc}") from None
    else:
        e0 = fval
    if e0 < 0:
        raise ConfigError("laser field amplitude must be non-negative")
    duration = _time(las, "duration")
    if duration <= 0:
        raise ConfigError("laser.duration must be positive")
    t_start = _time(las, "t_start", default_au=0.0)
    laser = LaserParams(e0=e0, omega_l=omega_l, duration=duration, t_start=t_start)

    # ---- atom
    if composition == "atom-molecule-cavity":
        if "atom" not in raw:
            raise ConfigError(
                "composition atom-molecule-cavity requires an [atom] section"
            )
        at = _Section("atom", raw["atom"])
        a1 = _energy(at, "a1", default_au=0.0)
        a2 = _energy(at, "a2")
        a3 = _energy(at, "a3")
        if not a1 < a2 < a3:
            raise ConfigError(
                f"atomic levels must satisfy A1 < A2 < A3, got "
                f"{a1:.6g}, {a2:.6g}, {a3:.6g} au"
            )
        atom = AtomParams(
            a1=a1, a2=a2, a3=a3,
            d13=at.float("d13_au"), d23=at.float("d23_au"),
            d12=at.float("d12_au", default=0.0),
        )
    else:
        if "atom" in raw and raw["atom"]:
            raise ConfigError(
                "composition molecule-cavity does not take an [atom] section"
            )
        atom = None

    # ---- molecule
    mol = _Section("molecule", raw["molecule"])
    mkey, _ = mol.pick("mass_me", "mass_amu")
    mval = mol.float(mkey)
    mass = mval if mkey == "mass_me" else mval * units.AMU_ME
    if mass <= 0:
        raise ConfigError("molecule mass must be positive")
    ground = _curve_spec(mol, "ground", base_dir)
    excited = _curve_spec(mol, "excited", base_dir)
    if mol.has("dipole_au") or mol.has("dipole_file"):
        dkey, _ = mol.pick("dipole_au", "dipole_file")
        if dkey == "dipole_au":
            dipole = DipoleSpec(kind="constant", value=mol.float(dkey))
        else:
            given = mol.str(dkey)
            dipole = DipoleSpec(
                kind="file", given=given, path=str((base_dir / given).resolve())
            )
    else:
        raise ConfigError("[molecule] needs dipole_au or dipole_file")
    molecule = MoleculeParams(mass=mass, ground=ground, excited=excited, dipole=dipole)

    # ---- grid
    gr = _Section("grid", raw["grid"])
    grid = GridSpec(
        r_min=gr.float("r_min_bohr"),
        r_max=gr.float("r_max_bohr"),
        n=gr.int("n_points"),
    )
    rgrid = grid.build()  # validates bounds and the power-of-two count

    # ---- propagation
    pr = _Section("propagation", raw["propagation"])
    t_final = _time(pr, "t_final")
    if t_final <= 0:
        raise ConfigError("propagation.t_final must be positive")
    dt = pr.float("dt_au", default=0.05)
    if dt <= 0:
        raise ConfigError("propagation.dt_au must be positive")
    if dt * omega_l >= 0.25:
        raise ConfigError(
            f"propagation.dt_au = {dt} does not resolve the laser carrier: "
            f"dt*omega_l = {dt * omega_l:.3g} >= 0.25"
        )
    snapshot = _time(pr, "snapshot", default_au=units.fs_to_au(1.0))
    if snapshot <= 0:
        raise ConfigError("propagation.snapshot must be positive")
    if snapshot < dt:
        raise ConfigError(
            f"snapshot interval {snapshot:.4g} au is shorter than dt = {dt} au"
        )
    strategy = pr.str("strategy", default="two-phase")
    if strategy not in STRATEGIES:
        raise ConfigError(
            f"propagation.strategy must be one of {STRATEGIES}, got {strategy!r}"
        )
    shift_text = pr.str("energy_shift_au", default="auto")
    if shift_text == "auto":
        # Midpoint between the ground manifold and the laser-driven manifold;
        # keeps the RK4 stability polynomial centred on the populated spectrum.
        if atom is not None:
            energy_shift = 0.5 * (atom.a1 + atom.a3)
        else:
            energy_shift = 0.5 * omega_l
    else:
        try:
            energy_shift = float(shift_text)
        except ValueError:
            raise ConfigError(
                f"propagation.energy_shift_au: expected 'auto' or a number, "
                f"got {shift_text!r}"
            ) from None
    nu_max = pr.int("nu_max", default=10)
    if nu_max < 0:
        raise ConfigError("propagation.nu_max must be >= 0")
    if pr.has("eigen_segment_fs"):
        eigen_segment = units.fs_to_au(pr.float("eigen_segment_fs"))
        if eigen_segment <= 0:
            raise ConfigError("propagation.eigen_segment_fs must be positive")
    else:
        eigen_segment = None
    schedule = PropagationSchedule(
        t_final=t_final, dt=dt, snapshot=snapshot, strategy=strategy,
        energy_shift=energy_shift, nu_max=nu_max, eigen_segment=eigen_segment,
    )

    # ---- cross-checks requiring the curves
    vg = molecule.ground.build(rgrid)
    ve = molecule.excited.build(rgrid)
    molecule.dipole.build(rgrid)  # fail now, not mid-run, if the file is bad
    fc_gap = _vertical_gap(rgrid, vg.values, ve.values)
    if abs(fc_gap - omega_c) > units.ev_to_au(0.05):
        log.warning(
            "vertical gap at the ground-curve minimum is %.4f eV but the "
            "cavity is at %.4f eV (off by more than 0.05 eV); the "
            "molecule-cavity resonance condition is not met",
            units.au_to_ev(fc_gap), units.au_to_ev(omega_c),
        )

    return SimulationConfig(
        composition=composition, cavity=cavity, laser=laser, atom=atom,
        molecule=molecule, grid=grid, schedule=schedule, fc_gap=fc_gap,
    )


def _vertical_gap(rgrid, v_ground, v_excited):
    """Excited-minus-ground energy at the ground-curve minimum.

    The minimum is refined off-lattice by a parabola through the three grid
    points around the discrete argmin; both curves are evaluated there with
    the same local quadratic model.
    """
    i0 = int(np.argmin(v_ground))
    if i0 == 0 or i0 == rgrid.n - 1:
        return float(v_excited[i0] - v_ground[i0])
    sl = slice(i0 - 1, i0 + 2)
    x = rgrid.points[sl]
    cg = np.polyfit(x, v_ground[sl], 2)
    if cg[0] <= 0:  # degenerate / flat: keep the grid value
        return float(v_excited[i0] - v_ground[i0])
    r0 = -cg[1] / (2.0 * cg[0])
    r0 = min(max(r0, x[0]), x[-1])
    ce = np.polyfit(x, v_excited[sl], 2)
    return float(np.polyval(ce, r0) - np.polyval(cg, r0))


# ----------------------------------------------------------------------- echo


def _fmt(v):
    return "%.12g" % v


def echo(cfg):
    """Canonical resolved document: atomic units, fixed order, %.12g."""
    out = io.StringIO()
    w = out.write
    w("# resolved configuration (atomic units unless suffixed otherwise)\n")
    w(f"# derived: tau_au = {_fmt(cfg.cavity.tau)}, "
      f"q_factor = {_fmt(cfg.cavity.q_factor)}, "
      f"fc_gap_ev = {_fmt(units.au_to_ev(cfg.fc_gap))}\n")
    w("[system]\n")
    w(f"composition = {cfg.composition}\n")
    w("\n[cavity]\n")
    w(f"omega_c_au = {_fmt(cfg.cavity.omega_c)}\n")
    w(f"g_rel = {_fmt(cfg.cavity.g_rel)}\n")
    w(f"kappa_au = {_fmt(cfg.cavity.kappa)}\n")
    w(f"n_max = {cfg.cavity.n_max}\n")
    w("\n[laser]\n")
    w(f"omega_l_au = {_fmt(cfg.laser.omega_l)}\n")
    w(f"e0_au = {_fmt(cfg.laser.e0)}\n")
    w(f"duration_au = {_fmt(cfg.laser.duration)}\n")
    w(f"t_start_au = {_fmt(cfg.laser.t_start)}\n")
    if cfg.atom is not None:
        w("\n[atom]\n")
        w(f"a1_au = {_fmt(cfg.atom.a1)}\n")
        w(f"a2_au = {_fmt(cfg.atom.a2)}\n")
        w(f"a3_au = {_fmt(cfg.atom.a3)}\n")
        w(f"d13_au = {_fmt(cfg.atom.d13)}\n")
        w(f"d23_au = {_fmt(cfg.atom.d23)}\n")
        w(f"d12_au = {_fmt(cfg.atom.d12)}\n")
    w("\n[molecule]\n")
    w(f"mass_me = {_fmt(cfg.molecule.mass)}\n")
    for prefix, spec in (("ground", cfg.molecule.ground),
                         ("excited", cfg.molecule.excited)):
        if spec.kind == "morse":
            w(f"{prefix}_de_ha = {_fmt(spec.de)}\n")
            w(f"{prefix}_a_invbohr = {_fmt(spec.a)}\n")
            w(f"{prefix}_re_bohr = {_fmt(spec.re)}\n")
            w(f"{prefix}_offset_ha = {_fmt(spec.offset)}\n")
        else:
            w(f"{prefix}_file = {spec.given}\n")
    if cfg.molecule.dipole.kind == "constant":
        w(f"dipole_au = {_fmt(cfg.molecule.dipole.value)}\n")
    else:
        w(f"dipole_file = {cfg.molecule.dipole.given}\n")
    w("\n[grid]\n")
    w(f"r_min_bohr = {_fmt(cfg.grid.r_min)}\n")
    w(f"r_max_bohr = {_fmt(cfg.grid.r_max)}\n")
    w(f"n_points = {cfg.grid.n}\n")
    w("\n[propagation]\n")
    w(f"t_final_au = {_fmt(cfg.schedule.t_final)}\n")
    w(f"dt_au = {_fmt(cfg.schedule.dt)}\n")
    w(f"snapshot_au = {_fmt(cfg.schedule.snapshot)}\n")
    w(f"strategy = {cfg.schedule.strategy}\n")
    w(f"energy_shift_au = {_fmt(cfg.schedule.energy_shift)}\n")
    w(f"nu_max = {cfg.schedule.nu_max}\n")
    if cfg.schedule.eigen_segment is not None:
        w(f"eigen_segment_fs = "
          f"{_fmt(units.au_to_fs(cfg.schedule.eigen_segment))}\n")
    return out.getvalue()


# ------------------------------------------------------------------- loading


def resolve_config_path(ref):
    """Map 'builtin:<name>' to the shipped configs, else treat as a path."""
    if isinstance(ref, str) and ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        res = resources.files("cavdyn") / "configs" / f"{name}.cfg"
        if not res.is_file():
            shipped = sorted(
                p.stem for p in (resources.files("cavdyn") / "configs").iterdir()
            )
            raise ConfigError(
                f"no builtin configuration {name!r}; available: {shipped}"
            )
        return Path(str(res))
    return Path(ref)


def load_config(ref):
    """Read a config file (or builtin:<name>); returns (text, SimulationConfig)."""
    path = resolve_config_path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {str(path)!r}: {exc}") from exc
    return text, parse_config(text, base_dir=path.parent)
