"""Lattice-depth waveforms V(t) and the time-dependent parameters they induce.

The polychromatic waveform is

    V(t) = v_min - (1/beta) ln[ (1/M) sum_{k=1..M} cos^2(delta_k t / 2 + phi_k) ]

so that with ``J(V) = J_max exp(-beta (V - v_min))`` the tunneling follows
the average of the M cosines squared. Two ways of keeping V below ``v_max``
are offered:

``"rescaled"`` (default)
    the log argument is mapped affinely onto ``[e^{-beta (v_max - v_min)}, 1]``
    so V(t) sweeps exactly ``[v_min, v_max]`` as the cosine average sweeps
    ``[0, 1]``. The tunneling stays an affine image of the cosine average.
``"clamped"``
    V(t) is cut at ``v_max``; the tunneling factor becomes
    ``max(cosine average, e^{-beta (v_max - v_min)})``.

Both coincide when ``v_max - v_min`` is large.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import gcd

import numpy as np
from scipy.integrate import quad

from . import fock
from .errors import ConfigError, PhysicsError
from .lattice import (BoseHubbardParams, LatticeSpec, TunnelingFit, fit_tunneling,
                      onsite_interaction, params_at_depth)

KINDS = ("none", "polychromatic", "monochromatic")
ENVELOPES = ("rescaled", "clamped")

# frequencies are exact multiples of this quantum (E_r)
FREQUENCY_QUANTUM = 1e-3
DUPLICATE_TOL = 1e-9


def unique_offsets(offsets, tol: float = DUPLICATE_TOL) -> tuple:
    """Distinct nonzero ``|delta|`` values, sorted."""
    out = []
    for d in sorted(abs(float(x)) for x in offsets):
        if d > tol and (not out or d - out[-1] > tol):
            out.append(d)
    return tuple(out)


@dataclass(frozen=True)
class ModulationScheme:
    kind: str
    frequencies: tuple = ()
    v_min: float = 15.0
    v_max: float = 50.0
    beta: float = 0.24
    phases: tuple | None = None
    envelope: str = "rescaled"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown modulation kind {self.kind!r}")
        if self.envelope not in ENVELOPES:
            raise ConfigError(f"unknown envelope {self.envelope!r}")
        freqs = tuple(abs(float(f)) for f in self.frequencies)
        object.__setattr__(self, "frequencies", freqs)
        if self.kind == "polychromatic":
            if not freqs or min(freqs) <= DUPLICATE_TOL:
                raise PhysicsError("polychromatic drive needs M >= 1 nonzero frequencies")
            if unique_offsets(freqs) != tuple(sorted(freqs)):
                raise ConfigError(f"duplicate frequencies in {freqs}")
        elif self.kind == "monochromatic":
            if len(freqs) != 1:
                raise ConfigError("monochromatic drive takes exactly one frequency")
        elif freqs:
            raise ConfigError("kind 'none' takes no frequencies")
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
            if len(self.phases) != len(freqs):
                raise ConfigError("need one phase per frequency")
        if self.v_min > self.v_max:
            raise ConfigError(f"v_min={self.v_min} exceeds v_max={self.v_max}")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def unmodulated(cls, v_min: float = 15.0, v_max: float = 50.0, beta: float = 0.24):
        return cls("none", (), v_min, v_max, beta)

    @classmethod
    def polychromatic(cls, offsets, v_min=15.0, v_max=50.0, beta=0.24,
                      phases=None, envelope="rescaled"):
        """One cosine per distinct nonzero ``|delta|`` in ``offsets``."""
        return cls("polychromatic", unique_offsets(offsets), v_min, v_max, beta,
                   phases, envelope)

    @classmethod
    def monochromatic(cls, alpha, v_min=15.0, v_max=50.0, beta=0.24,
                      phase=None, envelope="rescaled"):
        phases = None if phase is None else (phase,)
        return cls("monochromatic", (abs(float(alpha)),), v_min, v_max, beta,
                   phases, envelope)

    @classmethod
    def for_lattice(cls, spec: LatticeSpec, fit: TunnelingFit | None = None,
                    kind: str = "polychromatic", alpha: float | None = None, **kw):
        fit = fit or fit_tunneling(spec)
        common = dict(v_min=spec.v_min, v_max=spec.v_max, beta=fit.beta)
        if kind == "none":
            return cls.unmodulated(**common)
        if kind == "monochromatic":
            if alpha is None:
                raise ConfigError("monochromatic drive needs alpha")
            return cls.monochromatic(alpha, **common, **kw)
        return cls.polychromatic(spec.link_offsets, **common, **kw)

    # -- waveform -----------------------------------------------------------
    @property
    def M(self) -> int:
        return len(self.frequencies)

    @property
    def floor(self) -> float:
        """Smallest tunneling factor, ``exp(-beta (v_max - v_min))``."""
        return float(np.exp(-self.beta * (self.v_max - self.v_min)))

    @property
    def is_static(self) -> bool:
        return self.kind == "none" or self.v_max == self.v_min or max(self.frequencies) == 0

    def cosine_average(self, t):
        """``(1/M) sum_k cos^2(delta_k t / 2 + phi_k)``; 1 for an unmodulated lattice."""
        t = np.asarray(t, dtype=float)
        if self.kind == "none":
            return np.ones_like(t)
        phases = self.phases or (0.0,) * self.M
        acc = np.zeros_like(t)
        for f, ph in zip(self.frequencies, phases):
            acc = acc + np.cos(0.5 * f * t + ph) ** 2
        return acc / self.M

    def tunneling_factor(self, t):
        """``J(t) / J_max``."""
        g = self.cosine_average(t)
        if self.kind == "none":
            return g
        if self.envelope == "clamped":
            return np.maximum(g, self.floor)
        return self.floor + (1.0 - self.floor) * g

    def depth_at(self, t):
        """Lattice depth V(t) in E_r, always inside ``[v_min, v_max]``."""
        if self.kind == "none":
            return np.full_like(np.asarray(t, dtype=float), self.v_min)
        f = self.tunneling_factor(t)
        with np.errstate(divide="ignore"):
            v = self.v_min - np.log(f) / self.beta
        return np.minimum(v, self.v_max)

    def common_period(self) -> float:
        """Smallest T with V(t + T) = V(t); raises for an unmodulated lattice."""
        if self.is_static:
            raise PhysicsError("an unmodulated lattice has no drive period")
        if self.kind == "monochromatic":
            return 2 * np.pi / self.frequencies[0]
        ints = []
        for f in self.frequencies:
            k = round(f / FREQUENCY_QUANTUM)
            if k == 0 or abs(f - k * FREQUENCY_QUANTUM) > DUPLICATE_TOL:
                raise PhysicsError(
                    f"frequency {f} is not a multiple of {FREQUENCY_QUANTUM} E_r; "
                    "the drive would be aperiodic")
            ints.append(k)
        return 2 * np.pi / (reduce(gcd, ints) * FREQUENCY_QUANTUM)

    def fastest_frequency(self) -> float:
        return max(self.frequencies, default=0.0)

    # -- interactions ---------------------------------------------------------
    def interaction_at(self, spec: LatticeSpec, t):
        return onsite_interaction(spec, self.depth_at(t))

    def mean_interaction(self, spec: LatticeSpec) -> float:
        """Period average of U(V(t))."""
        if self.is_static:
            return onsite_interaction(spec, self.v_min)
        T = self.common_period()
        val, _ = quad(lambda t: float(self.interaction_at(spec, t)), 0.0, T,
                      epsrel=1e-6, epsabs=0.0, limit=2000)
        return val / T


def stationary_hamiltonian(basis: fock.FockBasis, spec: LatticeSpec,
                           fit: TunnelingFit | None = None, depth: float | None = None,
                           gauge: bool = True):
    """Hamiltonian of the unmodulated lattice at ``depth`` (default ``v_min``)."""
    p = params_at_depth(spec, spec.v_min if depth is None else depth, fit=fit)
    if gauge:
        p = fock.gauge_out_uniform(p)
    return fock.build_hamiltonian(basis, p)


def modulated_hamiltonian(basis: fock.FockBasis, spec: LatticeSpec,
                          scheme: ModulationScheme, fit: TunnelingFit | None = None,
                          gauge: bool = True) -> list:
    """Time-dependent Hamiltonian as ``[(H0, None), (H_k, c_k(t)), ...]``.

    Offsets are static, interactions follow ``U(V(t))`` and every link's
    tunneling is scaled by :meth:`ModulationScheme.tunneling_factor`. With
    ``gauge=False`` the site-uniform ``2 sqrt(V(t))`` energy is kept as an
    extra term.
    """
    fit = fit or fit_tunneling(spec)
    base = params_at_depth(spec, spec.v_min, fit=fit)
    sparse = basis.dim > fock.DENSE_MAX_DIM
    offsets = BoseHubbardParams(omega=spec.site_offsets, u=np.zeros(basis.n_sites),
                                j=np.zeros(basis.n_sites - 1))
    static = fock.build_hamiltonian(basis, offsets, sparse=sparse)
    hop = sum(-j * fock.hopping_operator(basis, k, sparse) for k, j in enumerate(base.j))
    terms = [(static, None), (hop, scheme.tunneling_factor)]
    if basis.n_max > 1:
        h_int = 0.5 * sum(fock.interaction_operator(basis, s, sparse)
                          for s in range(basis.n_sites))
        terms.append((h_int, lambda t: scheme.interaction_at(spec, t)))
    if not gauge:
        terms.append((fock.total_number(basis, sparse),
                      lambda t: 2 * np.sqrt(scheme.depth_at(t))))
    return terms
