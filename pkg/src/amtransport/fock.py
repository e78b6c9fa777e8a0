"""Truncated occupation-number basis and Bose-Hubbard operators on it."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import PhysicsError
from .lattice import BoseHubbardParams

# Operators on spaces up to this dimension are returned dense.
DENSE_MAX_DIM = 64


@dataclass(frozen=True)
class FockBasis:
    """All occupation vectors with ``0 <= n_j <= n_max``.

    States are ordered lexicographically with site 0 varying slowest, which
    matches ``np.kron`` ordering of single-site factors.
    """

    n_sites: int
    n_max: int
    states: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_sites < 1 or self.n_max < 1:
            raise PhysicsError("need at least one site and n_max >= 1")
        states = np.array(list(itertools.product(range(self.n_max + 1), repeat=self.n_sites)),
                          dtype=int)
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** self.n_sites

    def index(self, state) -> int:
        state = np.asarray(state)
        if state.shape != (self.n_sites,) or state.min() < 0 or state.max() > self.n_max:
            raise ValueError(f"{tuple(state)} is not a state of {self}")
        return int(np.ravel_multi_index(tuple(state), (self.n_max + 1,) * self.n_sites))

    def state(self, k: int) -> tuple:
        return tuple(int(n) for n in self.states[k])

    def total_number(self) -> np.ndarray:
        """Total particle number of every basis state."""
        return self.states.sum(axis=1)

    def label(self, k: int) -> str:
        return "|" + ",".join(map(str, self.state(k))) + ">"


def _densify(op, sparse):
    if sparse is None:
        sparse = op.shape[0] > DENSE_MAX_DIM
    return op.tocsr() if sparse else op.toarray()


def annihilation(basis: FockBasis, site: int, sparse: bool | None = None):
    """Matrix of ``a_site`` with a hard cutoff at ``n_max``."""
    if not 0 <= site < basis.n_sites:
        raise IndexError(f"site {site} out of range for {basis.n_sites} sites")
    d = basis.n_max + 1
    a1 = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d))
    left = sp.identity(d**site)
    right = sp.identity(d ** (basis.n_sites - site - 1))
    return _densify(sp.kron(sp.kron(left, a1), right), sparse)


def creation(basis: FockBasis, site: int, sparse: bool | None = None):
    return _densify(sp.csr_matrix(annihilation(basis, site, True).T), sparse)


def number(basis: FockBasis, site: int, sparse: bool | None = None):
    occ = basis.states[:, site].astype(float)
    return _densify(sp.diags(occ), sparse)


def total_number(basis: FockBasis, sparse: bool | None = None):
    return _densify(sp.diags(basis.total_number().astype(float)), sparse)


def hopping_operator(basis: FockBasis, link: int, sparse: bool | None = None):
    """``a_{link+1}^dag a_link + h.c.`` for the link between sites ``link`` and ``link+1``."""
    a_l = annihilation(basis, link, True)
    a_r = annihilation(basis, link + 1, True)
    op = a_r.T @ a_l
    return _densify(op + op.T, sparse)


def interaction_operator(basis: FockBasis, site: int, sparse: bool | None = None):
    """``a^dag a^dag a a = n (n - 1)`` on one site."""
    n = basis.states[:, site].astype(float)
    return _densify(sp.diags(n * (n - 1)), sparse)


def build_hamiltonian(basis: FockBasis, p: BoseHubbardParams, sparse: bool | None = None):
    """Bose-Hubbard Hamiltonian with tunneling entering as ``-J``."""
    if p.n_sites != basis.n_sites:
        raise PhysicsError(f"parameters for {p.n_sites} sites, basis has {basis.n_sites}")
    occ = basis.states.astype(float)
    diag = occ @ p.omega + 0.5 * (occ * (occ - 1)) @ p.u
    h = sp.diags(diag).tocsr()
    for link, j in enumerate(p.j):
        if j != 0:
            h = h - j * hopping_operator(basis, link, True)
    return _densify(h, sparse)


def gauge_out_uniform(p: BoseHubbardParams) -> BoseHubbardParams:
    """Shift all site energies so the first one is zero.

    A site-uniform energy commutes with everything in the master equation
    (the pump and drain dissipators are U(1) invariant), so only the
    differences ``omega_j - omega_{j-1}`` matter.
    """
    return replace(p, omega=p.omega - p.omega[0])


def is_hermitian(op, tol: float = 1e-12) -> bool:
    m = op.toarray() if sp.issparse(op) else np.asarray(op)
    scale = max(np.linalg.norm(m), 1e-300)
    return np.linalg.norm(m - m.conj().T) / scale < tol


def dump_operator(op, path) -> None:
    """Write nonzero entries as ``row col re im`` lines, 0-based, row-major order."""
    coo = sp.coo_matrix(op)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"% {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for k in order:
            v = complex(coo.data[k])
            fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")


def load_operator(path) -> sp.csr_matrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        n, m = int(header[1]), int(header[2])
        rows, cols, vals = [], [], []
        for line in fh:
            r, c, re, im = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(re) + 1j * float(im))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))
