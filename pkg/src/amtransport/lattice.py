"""Depth-dependent Bose-Hubbard parameters of a 1-D optical lattice.

Internal units: hbar = 1, E_r = 1, lengths in units of the lattice spacing.
With these choices the atomic mass is ``m = pi**2 / 2`` and every energy
returned here is in recoil units.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy.integrate import quad
from scipy.optimize import curve_fit

from .errors import ConfigError, FitError, PhysicsError, QuadratureError

RB87_MASS_AMU = 86.909180527

# mass in units where hbar = E_r = a_l = 1
_MASS = np.pi**2 / 2

GAUSSIAN_DEPTH_FLOOR = 2.0

# largest acceptable relative miss of the exponential law
RESIDUAL_LIMIT = 0.10


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry, atomic constants and site offsets of an N-site lattice.

    Exactly one of ``delta`` (N-1 link offsets, ``omega_j - omega_{j-1}``) or
    ``v_ext_site`` (N absolute site offsets) describes the external
    potential. Energies are in recoil units.
    """

    n_sites: int
    delta: tuple | None = None
    v_ext_site: tuple | None = None
    lattice_spacing_nm: float = 640.0
    scattering_length_nm: float = 5.2
    atom_mass_amu: float = RB87_MASS_AMU
    v_perp: float = 50.0
    v_min: float = 15.0
    v_max: float = 50.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ConfigError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if self.delta is not None and self.v_ext_site is not None:
            raise ConfigError("give either delta or v_ext_site, not both")
        if self.delta is not None:
            object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
            if len(self.delta) != self.n_sites - 1:
                raise ConfigError(
                    f"delta needs {self.n_sites - 1} entries, got {len(self.delta)}")
        if self.v_ext_site is not None:
            object.__setattr__(self, "v_ext_site", tuple(float(v) for v in self.v_ext_site))
            if len(self.v_ext_site) != self.n_sites:
                raise ConfigError(
                    f"v_ext_site needs {self.n_sites} entries, got {len(self.v_ext_site)}")
        if self.v_min <= 0 or self.v_max <= 0:
            raise ConfigError("lattice depths must be positive")
        if self.v_min > self.v_max:
            raise ConfigError(f"v_min={self.v_min} exceeds v_max={self.v_max}")
        if self.lattice_spacing_nm <= 0 or self.atom_mass_amu <= 0:
            raise ConfigError("lattice spacing and mass must be positive")
        if self.scattering_length_nm < 0 or self.v_perp <= 0:
            raise ConfigError("scattering length must be >= 0 and v_perp > 0")
        big = [d for d in self.link_offsets if abs(d) >= self.v_min / 10]
        if big:
            warnings.warn(
                f"offsets {big} are not small compared to v_min={self.v_min}; "
                "the tight-binding parameters may be unreliable", stacklevel=3)

    @property
    def site_offsets(self) -> np.ndarray:
        """External offsets V_ext(x_j) per site, first site at zero if built from delta."""
        if self.v_ext_site is not None:
            return np.array(self.v_ext_site)
        if self.delta is None:
            return np.zeros(self.n_sites)
        return np.concatenate([[0.0], np.cumsum(self.delta)])

    @property
    def link_offsets(self) -> np.ndarray:
        return np.diff(self.site_offsets)

    @property
    def recoil_energy_joules(self) -> float:
        m = self.atom_mass_amu * constants.atomic_mass
        a = self.lattice_spacing_nm * 1e-9
        return constants.hbar**2 * np.pi**2 / (2 * m * a**2)

    @property
    def recoil_frequency_hz(self) -> float:
        return self.recoil_energy_joules / constants.h

    def replace(self, **changes) -> "LatticeSpec":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class BoseHubbardParams:
    """Site energies, interactions (length N) and link tunnelings (length N-1)."""

    omega: np.ndarray
    u: np.ndarray
    j: np.ndarray
    depth: float | None = None

    def __post_init__(self):
        for name in ("omega", "u", "j"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.u.shape != self.omega.shape or self.j.shape != (self.omega.size - 1,):
            raise PhysicsError(
                f"inconsistent parameter lengths: omega {self.omega.shape}, "
                f"u {self.u.shape}, j {self.j.shape}")

    @property
    def n_sites(self) -> int:
        return self.omega.size


@dataclass(frozen=True)
class TunnelingFit:
    """``J(V) ~ j_max * exp(-beta * (V - v_min))`` on ``[v_min, v_max]``.

    ``residual`` is the largest relative deviation of the law from the
    quadrature values on the fit grid.
    """

    j_max: float
    beta: float
    v_min: float
    v_max: float
    residual: float = field(default=np.nan, compare=False)

    def __call__(self, depth):
        return self.j_max * np.exp(-self.beta * (np.asarray(depth) - self.v_min))


def site_energy(spec: LatticeSpec, site: int, depth: float) -> float:
    if depth <= 0:
        raise PhysicsError(f"depth must be positive, got {depth}")
    if not 0 <= site < spec.n_sites:
        raise IndexError(f"site {site} out of range for {spec.n_sites} sites")
    return 2 * np.sqrt(depth) + spec.site_offsets[site]


def onsite_interaction(spec: LatticeSpec, depth):
    """Harmonic-well closed form ``sqrt(8 pi) (a_s/a_l) sqrt(V_perp) V**(1/4)``."""
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0):
        raise PhysicsError("depth must be positive")
    ratio = spec.scattering_length_nm / spec.lattice_spacing_nm
    out = np.sqrt(8 * np.pi) * ratio * np.sqrt(spec.v_perp) * depth**0.25
    return float(out) if out.ndim == 0 else out


def _gaussian_width(depth):
    # harmonic approximation of V sin^2(pi x): hbar*omega_ho = 2 sqrt(V)
    return 1.0 / np.sqrt(_MASS * 2 * np.sqrt(depth))


@lru_cache(maxsize=4096)
def _tunneling_quad(depth: float) -> float:
    sigma = _gaussian_width(depth)
    norm = (np.pi * sigma**2) ** -0.25

    def integrand(x):
        left = norm * np.exp(-x**2 / (2 * sigma**2))
        right = norm * np.exp(-(x - 1.0) ** 2 / (2 * sigma**2))
        kinetic = -(x**2 / sigma**4 - 1 / sigma**2) * left / (2 * _MASS)
        return right * (kinetic + depth * np.sin(np.pi * x) ** 2 * left)

    lo, hi = -5 * sigma, 1.0 + 5 * sigma
    val, err, info, *msg = quad(integrand, lo, hi, epsrel=1e-8, epsabs=0.0,
                                limit=400, points=[0.0, 0.5, 1.0], full_output=True)
    if msg:
        raise QuadratureError(
            f"tunneling quadrature did not converge at V={depth}: "
            f"value={val:.6g}, error estimate={err:.3g}, subintervals={info['last']}")
    return abs(val)


def tunneling(spec: LatticeSpec, depth: float) -> float:
    """Nearest-neighbour overlap of harmonic ground states, by quadrature.

    Evaluates ``|<psi_j| p^2/2m + V sin^2(pi x) |psi_{j-1}>|`` with Gaussian
    wavefunctions on neighbouring wells. The result does not depend on the
    atomic constants once expressed in recoil units.
    """
    if depth < GAUSSIAN_DEPTH_FLOOR:
        raise PhysicsError(
            f"Gaussian well ansatz needs V >= {GAUSSIAN_DEPTH_FLOOR} E_r, got {depth}")
    return _tunneling_quad(float(depth))


def fit_tunneling(spec: LatticeSpec, n_points: int = 36,
                  max_residual: float | None = None) -> TunnelingFit:
    """Fit ``J_max exp(-beta (V - v_min))`` to the quadrature J on a uniform grid.

    ``j_max`` is pinned to the quadrature value at ``v_min``; ``beta`` is the
    least-squares decay rate in linear J space, which weights the shallow end
    of the window where transport happens. ``max_residual`` turns the
    recorded residual into a hard check.
    """
    return _fit_tunneling(spec.v_min, spec.v_max, int(n_points), max_residual)


@lru_cache(maxsize=256)
def _fit_tunneling(v_min, v_max, n_points, max_residual):
    if not v_min < v_max:
        raise FitError(f"need v_min < v_max to fit, got [{v_min}, {v_max}]")
    if n_points < 30:
        raise FitError("fit grid needs at least 30 points")
    grid = np.linspace(v_min, v_max, n_points)
    js = np.array([_tunneling_quad(float(v)) for v in grid])
    j_max = js[0]
    slope0 = -np.polyfit(grid - v_min, np.log(js), 1)[0]
    (beta,), _ = curve_fit(lambda v, b: j_max * np.exp(-b * (v - v_min)),
                           grid, js, p0=[slope0])
    fitted = j_max * np.exp(-beta * (grid - v_min))
    residual = float(np.max(np.abs(fitted / js - 1)))
    if max_residual is not None and residual > max_residual:
        raise FitError(
            f"exponential law misses quadrature J by {residual:.1%} "
            f"(allowed {max_residual:.1%}) on [{v_min}, {v_max}]")
    return TunnelingFit(j_max=float(j_max), beta=float(beta), v_min=v_min,
                        v_max=v_max, residual=residual)


def params_at_depth(spec: LatticeSpec, depth: float, exact: bool = False,
                    fit: TunnelingFit | None = None) -> BoseHubbardParams:
    """Assemble omega_j, U_j, J_j at lattice depth ``depth``.

    J comes from the exponential fit unless ``exact`` forces quadrature.
    """
    if depth < spec.v_min:
        raise PhysicsError(f"depth {depth} below v_min={spec.v_min}")
    omega = [site_energy(spec, s, depth) for s in range(spec.n_sites)]
    u = np.full(spec.n_sites, onsite_interaction(spec, depth))
    if exact:
        j = tunneling(spec, depth)
    else:
        j = float((fit or fit_tunneling(spec))(depth))
    return BoseHubbardParams(omega=omega, u=u, j=np.full(spec.n_sites - 1, j),
                             depth=float(depth))
