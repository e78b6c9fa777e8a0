"""Run configurations and the end-to-end transport scenarios.

Every scenario is a pure function of a :class:`RunConfig`; the CLI only adds
file output. Sweeps fan out over ``AMTRANSPORT_WORKERS`` processes and keep
grid order in their results.
"""
from __future__ import annotations

import copy
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import jsonschema
import numpy as np

from . import effective, fock, lindblad
from .errors import ConfigError, PhysicsError
from .lattice import (LatticeSpec, fit_tunneling, onsite_interaction, site_energy, tunneling)
from .modulation import ModulationScheme, modulated_hamiltonian, stationary_hamiltonian

SCHEMA_VERSION = 1

TABLE1_DELTAS = (
    (0.0, 0.1, 0.0, 0.0),
    (0.2, 0.0, -0.2, 0.0),
    (0.0, 0.1, 0.3, -0.3),
    (-0.1, 0.3, -0.4, 0.2),
)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_numlist = {"type": "array", "items": _num}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "lattice"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_sites"],
            "properties": {
                "n_sites": {"type": "integer", "minimum": 2},
                "delta": {"anyOf": [_numlist, {"type": "null"}]},
                "v_ext_site": {"anyOf": [_numlist, {"type": "null"}]},
                "lattice_spacing_nm": _pos,
                "scattering_length_nm": {"type": "number", "minimum": 0},
                "atom_mass_amu": _pos,
                "v_perp": _pos,
                "v_min": _pos,
                "v_max": _pos,
            },
        },
        "occupancy": {"type": "integer", "minimum": 1, "maximum": 4},
        "reservoirs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"j_over_kappa": _pos},
        },
        "modulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["none", "polychromatic", "monochromatic"]},
                "frequencies": {"anyOf": [_numlist, {"type": "null"}]},
                "alpha": {"anyOf": [_num, {"enum": ["resonant", "offset"]}, {"type": "null"}]},
                "phases": {"anyOf": [_numlist, {"type": "null"}]},
                "envelope": {"enum": ["rescaled", "clamped"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max_in_kappa_units": _pos,
                "rel_tol": _pos,
                "abs_tol": _pos,
                "steady_tol": _pos,
                "samples": {"type": "integer", "minimum": 2},
                "max_step_fraction": _pos,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "normalization": {"enum": ["ideal_flat", "none"]},
                "include_effective": {"type": "boolean"},
            },
        },
        "grids": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "depth": _numlist,
                "vmax": _numlist,
                "alpha": _numlist,
                "alpha_points": {"type": "integer", "minimum": 2},
                "table1": {"type": "array", "items": _numlist},
            },
        },
    },
}

DEFAULTS = {
    "version": SCHEMA_VERSION,
    "lattice": {
        "n_sites": 5,
        "delta": list(TABLE1_DELTAS[3]),
        "v_ext_site": None,
        "lattice_spacing_nm": 640.0,
        "scattering_length_nm": 5.2,
        "atom_mass_amu": 86.909180527,
        "v_perp": 50.0,
        "v_min": 15.0,
        "v_max": 50.0,
    },
    "occupancy": 1,
    "reservoirs": {"j_over_kappa": 15.0},
    "modulation": {"kind": "polychromatic", "frequencies": None, "alpha": None,
                   "phases": None, "envelope": "rescaled"},
    "solver": {"t_max_in_kappa_units": 50.0, "rel_tol": 1e-8, "abs_tol": 1e-10,
               "steady_tol": 1e-4, "samples": 401, "max_step_fraction": 0.05},
    "outputs": {"normalization": "ideal_flat", "include_effective": True},
    "grids": {
        "depth": [15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
        "vmax": [15.5, 16.0, 17.0, 18.0, 19.0, 20.0, 21.0, 23.0, 26.0, 30.0, 40.0, 50.0],
        "alpha": [],
        "alpha_points": 25,
        "table1": [list(r) for r in TABLE1_DELTAS],
    },
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``data`` holds the full JSON document with defaults filled."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise ConfigError(f"config invalid at {path}: {exc.message}") from None
        data = _merge(DEFAULTS, raw)
        if "delta" not in raw["lattice"] and "v_ext_site" not in raw["lattice"]:
            data["lattice"]["delta"] = [0.0] * (data["lattice"]["n_sites"] - 1)
        elif "v_ext_site" in raw["lattice"] and "delta" not in raw["lattice"]:
            data["lattice"]["delta"] = None
        cfg = cls(data)
        cfg.lattice  # noqa: B018 - constructing the spec validates physics-free invariants
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def updated(self, **sections) -> "RunConfig":
        """Copy with nested sections merged in, e.g. ``updated(lattice={"v_min": 5})``."""
        return RunConfig.from_dict(_merge(self.data, sections))

    # -- derived objects -------------------------------------------------------
    @cached_property
    def lattice(self) -> LatticeSpec:
        lat = dict(self.data["lattice"])
        try:
            return LatticeSpec(**lat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def occupancy(self) -> int:
        return self.data["occupancy"]

    @property
    def j_over_kappa(self) -> float:
        return self.data["reservoirs"]["j_over_kappa"]

    @property
    def solver(self) -> dict:
        return self.data["solver"]


@dataclass
class GainReport:
    delta: tuple
    i_stationary: float
    i_modulated: float
    i_ideal: float
    i_effective: float | None = None
    error: str | None = None
    driven: bool = True

    @property
    def gain(self) -> float:
        """Undefined (NaN) without a drive or with a vanishing baseline."""
        if not self.driven or not self.i_stationary or self.i_stationary <= 0:
            return math.nan
        return self.i_modulated / self.i_stationary

    @property
    def percent_recovered(self) -> float:
        return self.i_modulated / self.i_ideal if self.i_ideal else math.nan

    @property
    def heff_percent_error(self) -> float:
        if self.i_effective is None or not self.i_modulated:
            return math.nan
        return abs(self.i_effective - self.i_modulated) / self.i_modulated

    def row(self) -> dict:
        out = asdict(self)
        out.update(gain=self.gain, percent_recovered=self.percent_recovered,
                   heff_percent_error=self.heff_percent_error)
        return out


class Experiment:
    """All derived physics objects of one configuration.

    ``kappa`` is tied to the fitted tunneling at ``v_min``:
    ``kappa = J_max / j_over_kappa``.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spec = cfg.lattice
        self.fit = fit_tunneling(self.spec)
        self.basis = fock.FockBasis(self.spec.n_sites, cfg.occupancy)
        self.res = lindblad.ReservoirSpec(kappa=self.fit.j_max / cfg.j_over_kappa)

    @property
    def kappa(self) -> float:
        return self.res.kappa

    @cached_property
    def mean_u(self) -> float:
        """Period-averaged interaction of a monochromatic drive (independent of its frequency)."""
        ref = ModulationScheme.monochromatic(1.0, self.spec.v_min, self.spec.v_max, self.fit.beta,
                                             envelope=self._envelope)
        return ref.mean_interaction(self.spec)

    @property
    def _envelope(self) -> str:
        return self.cfg.data["modulation"]["envelope"]

    def resolve_alpha(self, alpha) -> float:
        delta2 = self.spec.link_offsets[0]
        if alpha == "resonant":
            return abs(delta2 - self.mean_u)
        if alpha == "offset":
            return abs(delta2)
        if alpha is None:
            raise ConfigError("monochromatic modulation needs 'alpha'")
        return abs(float(alpha))

    @cached_property
    def scheme(self) -> ModulationScheme:
        mod = self.cfg.data["modulation"]
        kind = mod["kind"]
        common = dict(v_min=self.spec.v_min, v_max=self.spec.v_max, beta=self.fit.beta)
        if kind == "none":
            return ModulationScheme.unmodulated(**common)
        phases = mod["phases"]
        if kind == "monochromatic":
            return ModulationScheme.monochromatic(
                self.resolve_alpha(mod["alpha"]), **common,
                phase=None if phases is None else phases[0], envelope=mod["envelope"])
        freqs = mod["frequencies"] if mod["frequencies"] is not None else self.spec.link_offsets
        return ModulationScheme.polychromatic(freqs, **common, phases=phases,
                                              envelope=mod["envelope"])

    def max_step(self, scheme: ModulationScheme | None = None) -> float:
        """A twentieth of the shortest period among drive, offsets and interaction."""
        scheme = scheme or self.scheme
        scales = [scheme.fastest_frequency(), *np.abs(self.spec.link_offsets)]
        if self.cfg.occupancy > 1:
            scales.append(onsite_interaction(self.spec, self.spec.v_max))
        fastest = max(scales)
        if fastest == 0:
            return np.inf
        return self.cfg.solver["max_step_fraction"] * 2 * np.pi / fastest

    # -- hamiltonians --------------------------------------------------------
    def stationary_h(self):
        return stationary_hamiltonian(self.basis, self.spec, self.fit)

    def ideal_h(self):
        flat = self.spec.replace(delta=(0.0,) * (self.spec.n_sites - 1), v_ext_site=None)
        return stationary_hamiltonian(self.basis, flat, self.fit)

    def driven_h(self, scheme: ModulationScheme | None = None):
        return modulated_hamiltonian(self.basis, self.spec, scheme or self.scheme, self.fit)

    def effective_model(self, scheme: ModulationScheme | None = None):
        scheme = scheme or self.scheme
        if self.cfg.occupancy == 1:
            return effective.build_effective_single(self.spec, self.fit)
        if self.spec.n_sites == 2 and scheme.kind == "monochromatic":
            return effective.build_effective_two_site(self.spec, self.fit, self.mean_u,
                                                      scheme.frequencies[0])
        raise PhysicsError("no effective model is derived for this lattice and occupancy")

    # -- currents ----------------------------------------------------------
    def static_current(self, h) -> float:
        return lindblad.current(lindblad.stationary_state(h, self.basis, self.res),
                                self.basis, self.res)

    @cached_property
    def i_stationary(self) -> float:
        return self.static_current(self.stationary_h())

    @cached_property
    def i_ideal(self) -> float:
        return self.static_current(self.ideal_h())

    def i_effective(self, scheme=None) -> float:
        return self.static_current(self.effective_model(scheme).hamiltonian(self.basis))

    def periodic_state(self, scheme: ModulationScheme | None = None):
        scheme = scheme or self.scheme
        return lindblad.periodic_steady_state(
            self.driven_h(scheme), self.basis, self.res, scheme.common_period(),
            max_step=self.max_step(scheme))

    def i_modulated(self, scheme: ModulationScheme | None = None) -> float:
        scheme = scheme or self.scheme
        if scheme.is_static:
            # a static drive leaves the lattice at v_min
            return self.i_stationary
        return self.periodic_state(scheme).mean_current

    def gain_report(self) -> GainReport:
        i_mod = self.i_modulated()
        i_eff = None
        if self.cfg.data["outputs"]["include_effective"] and not self.scheme.is_static:
            i_eff = self.i_effective()
        return GainReport(tuple(self.spec.link_offsets), self.i_stationary, i_mod,
                          self.i_ideal, i_eff, driven=not self.scheme.is_static)

    def normalization(self) -> float | None:
        if self.cfg.data["outputs"]["normalization"] == "none":
            return None
        return self.i_ideal

    def evolve(self, t_final: float | None = None, n_samples: int | None = None):
        """Full driven trace and, when available, its effective-model trace.

        A periodic drive is evolved stroboscopically through its one-period
        propagator, which keeps the cost independent of ``t_final``.
        """
        t_final = t_final or self.cfg.solver["t_max_in_kappa_units"] / self.kappa
        n = n_samples or self.cfg.solver["samples"]
        opts = dict(n_samples=n, rtol=self.cfg.solver["rel_tol"],
                    atol=self.cfg.solver["abs_tol"], max_step=self.max_step())
        if self.scheme.is_static:
            full = lindblad.propagate(self.stationary_h(), self.basis, self.res, t_final, **opts)
        else:
            full = lindblad.propagate_periodic(self.driven_h(), self.basis, self.res,
                                               self.scheme.common_period(), t_final,
                                               n_samples=n, max_step=self.max_step())
        eff = None
        if self.cfg.data["outputs"]["include_effective"] and not self.scheme.is_static:
            # flat and static: no drive period to resolve
            opts["max_step"] = np.inf
            eff = lindblad.propagate(self.effective_model().hamiltonian(self.basis), self.basis,
                                     self.res, t_final, **opts)
        return full, eff


# -- worker pool -------------------------------------------------------------

def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("AMTRANSPORT_WORKERS", "1")))
    except ValueError:
        return 1


def _pool_map(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- scenarios ---------------------------------------------------------------

def params_table(cfg: RunConfig, depths=None) -> tuple[list, object]:
    """Rows ``(V, omega_1, U, J)``; J by quadrature. Returns ``(rows, fit)``."""
    spec = cfg.lattice
    depths = cfg.data["grids"]["depth"] if depths is None else depths
    fit = fit_tunneling(spec)
    rows = [(float(v), site_energy(spec, 0, v), onsite_interaction(spec, v), tunneling(spec, v))
            for v in depths]
    return rows, fit


def _table_row(args):
    cfg, delta = args
    try:
        exp = Experiment(cfg.updated(lattice={"delta": list(delta), "v_ext_site": None}))
        return exp.gain_report()
    except Exception as exc:  # a failed row must not abort the table
        nan = math.nan
        return GainReport(tuple(delta), nan, nan, nan, None, error=f"{type(exc).__name__}: {exc}")


def table1(cfg: RunConfig, deltas=None) -> list[GainReport]:
    deltas = cfg.data["grids"]["table1"] if deltas is None else deltas
    return _pool_map(_table_row, [(cfg, tuple(d)) for d in deltas])


def _vmax_point(args):
    cfg, vmax = args
    exp = Experiment(cfg)
    scheme = ModulationScheme(**{**asdict(exp.scheme), "v_max": float(vmax)})
    return exp.i_modulated(scheme)


def sweep_vmax(cfg: RunConfig, grid=None) -> list[tuple]:
    """Steady current versus the maximum depth, normalized to the configured ``v_max``.

    The exponential law (and hence beta) stays the one fitted on the
    configured window; only the waveform's upper depth changes.
    """
    grid = cfg.data["grids"]["vmax"] if grid is None else grid
    ref_v = cfg.lattice.v_max
    values = _pool_map(_vmax_point, [(cfg, v) for v in [*grid, ref_v]])
    ref = values[-1]
    return [(float(v), i, i / ref) for v, i in zip(grid, values[:-1])]


def _alpha_point(args):
    cfg, alpha = args
    exp = Experiment(cfg)
    scheme = ModulationScheme.monochromatic(alpha, exp.spec.v_min, exp.spec.v_max, exp.fit.beta,
                                            envelope=exp._envelope)
    return exp.i_modulated(scheme)


def alpha_grid(cfg: RunConfig, exp: Experiment | None = None) -> tuple[np.ndarray, float, float]:
    exp = exp or Experiment(cfg)
    a_off = exp.resolve_alpha("offset")
    a_res = exp.resolve_alpha("resonant")
    grid = cfg.data["grids"]["alpha"]
    if not grid:
        grid = np.linspace(0.0, 1.2 * a_res, cfg.data["grids"]["alpha_points"])
    grid = np.asarray(grid, dtype=float)
    # the resonances replace any grid point that only differs by rounding
    near = np.isclose(grid[:, None], [a_off, a_res], rtol=0, atol=1e-9).any(axis=1)
    return np.unique(np.concatenate([grid[~near], [a_off, a_res]])), a_off, a_res


def sweep_alpha(cfg: RunConfig, grid=None) -> dict:
    """Two-site monochromatic frequency scan with the two resonances marked."""
    exp = Experiment(cfg)
    if exp.spec.n_sites != 2:
        raise PhysicsError("the frequency scan is defined for two-site lattices")
    auto, a_off, a_res = alpha_grid(cfg, exp)
    grid = auto if grid is None else np.asarray(grid, dtype=float)
    currents = _pool_map(_alpha_point, [(cfg, float(a)) for a in grid])
    marks = []
    for a in grid:
        if np.isclose(a, a_off, rtol=0, atol=1e-12):
            marks.append("delta2")
        elif np.isclose(a, a_res, rtol=0, atol=1e-12):
            marks.append("delta2-meanU")
        else:
            marks.append("")
    return {"alpha": grid, "current": np.array(currents), "marker": marks,
            "i_stationary": exp.i_stationary, "mean_u": exp.mean_u,
            "alpha_offset": a_off, "alpha_resonant": a_res}


# -- csv ---------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return f"{x:.12g}"


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
