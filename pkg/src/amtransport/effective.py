"""Stationary effective lattices for the secularly averaged driven dynamics.

Under the polychromatic drive the hopping on a link is multiplied by
``1/2 + (1/4M) sum_k (e^{i delta_k t} + e^{-i delta_k t})``. In the frame
rotating with the site offsets a flat link keeps the constant ``J/2`` and a
link with offset ``delta_j`` keeps the one co-rotating term, ``J/(4M)``.
Dropping every oscillating term leaves a flat, time-independent lattice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock
from .errors import PhysicsError
from .lattice import BoseHubbardParams, LatticeSpec, TunnelingFit, onsite_interaction
from .modulation import DUPLICATE_TOL, unique_offsets

RULE_FLAT = "flat link: J/2"
RULE_OFFSET = "offset link: J/(4M)"
RULE_TWO_SITE = "two-site |2,0>-|1,1> resonance: J/4"


@dataclass(frozen=True)
class EffectiveModel:
    params: BoseHubbardParams
    provenance: tuple
    n_max: int = 1

    def hamiltonian(self, basis: fock.FockBasis):
        return fock.build_hamiltonian(basis, self.params)

    @property
    def is_flat(self) -> bool:
        return float(np.ptp(self.params.omega)) == 0.0


def build_effective_single(spec: LatticeSpec, fit: TunnelingFit,
                           mean_u: float | None = None) -> EffectiveModel:
    """Flat lattice with ``J/2`` on flat links and ``J/(4M)`` on offset links.

    Meant for single occupancy, where the interaction never acts; ``mean_u``
    (default ``U(v_min)``) is carried along for completeness.
    """
    offsets = spec.link_offsets
    M = len(unique_offsets(offsets))
    if M == 0:
        raise PhysicsError("lattice has no nonzero offsets, there is nothing to drive")
    j = []
    rules = []
    for d in offsets:
        if abs(d) <= DUPLICATE_TOL:
            j.append(fit.j_max / 2)
            rules.append(RULE_FLAT)
        else:
            j.append(fit.j_max / (4 * M))
            rules.append(RULE_OFFSET)
    u = onsite_interaction(spec, spec.v_min) if mean_u is None else mean_u
    params = BoseHubbardParams(omega=np.zeros(spec.n_sites), u=np.full(spec.n_sites, u), j=j)
    return EffectiveModel(params, tuple(rules), n_max=1)


def build_effective_two_site(spec: LatticeSpec, fit: TunnelingFit, mean_u: float,
                             alpha: float, tol: float = 1e-6) -> EffectiveModel:
    """Two-site, double-occupancy model for a drive at ``|delta_2 - <U>|``.

    In the frame co-rotating with the drive, site 2 sits ``<U>`` above site 1,
    which makes ``|2,0>`` and ``|1,1>`` degenerate; the resonant sideband
    carries ``J/4``.
    """
    if spec.n_sites != 2:
        raise PhysicsError("the two-site effective model needs exactly two sites")
    delta2 = spec.link_offsets[0]
    if abs(abs(alpha) - abs(delta2 - mean_u)) > tol:
        raise PhysicsError(
            f"alpha={alpha} is not the resonant |delta_2 - <U>| = {abs(delta2 - mean_u)}")
    params = BoseHubbardParams(omega=[0.0, mean_u], u=[mean_u, mean_u], j=[fit.j_max / 4])
    return EffectiveModel(params, (RULE_TWO_SITE,), n_max=2)


@dataclass(frozen=True)
class Resonance:
    frequency: float
    transition: str
    dominant: bool


def resonance_frequencies(spec: LatticeSpec, mean_u: float, n_max: int) -> list:
    """Candidate drive frequencies that restore transport across each link.

    ``|delta_j|`` resonates the single-particle hop; with double occupancy
    ``|delta_j - <U>|`` resonates ``|..2,0..> <-> |..1,1..>``, which is the
    channel the pump actually feeds and is flagged dominant. Only the
    two-site case is backed by direct simulation; for longer chains this is
    a per-link heuristic.
    """
    out = []
    for link, d in enumerate(spec.link_offsets, start=1):
        single = Resonance(abs(d), f"|1,0>-|0,1> across link {link}", n_max == 1)
        out.append(single)
        if n_max >= 2:
            out.append(Resonance(abs(d - mean_u), f"|2,0>-|1,1> across link {link}", True))
    return out
