"""Lindblad master equation with a pump on the first site and a drain on the last.

    d rho/dt = -i [H(t), rho]
               + kappa (a_1^dag rho a_1 - {a_1 a_1^dag, rho} / 2)
               + kappa (a_N rho a_N^dag - {a_N^dag a_N, rho} / 2)

Density matrices are vectorized column-stacked (``rho.ravel(order="F")``), so
``vec(A rho B) = kron(B.T, A) vec(rho)``.

A Hamiltonian may be given as

* a matrix (static),
* a list of ``(operator, coefficient)`` pairs where ``coefficient`` is
  ``None`` or a callable of time, meaning ``H(t) = sum_k c_k(t) H_k``,
* a plain callable ``t -> matrix`` (slowest path).

Propagation is restricted to the part of Liouville space reachable from the
initial state. For number-conserving Hamiltonians started from the vacuum
this is the block of density matrices diagonal in total particle number.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import fock
from .errors import (DegenerateSteadyStateError, IntegrationError, PhysicsError, SolverError,
                     SteadyStateError)


@dataclass(frozen=True)
class ReservoirSpec:
    """Identical zero-temperature reservoirs; sites are 0-based (``-1`` is the last).

    ``None`` switches a reservoir off; without a drain the current is zero.
    """

    kappa: float
    source_site: int | None = 0
    drain_site: int | None = -1

    def __post_init__(self):
        if not self.kappa > 0:
            raise PhysicsError(f"kappa must be positive, got {self.kappa}")

    def sites(self, basis: fock.FockBasis) -> tuple:
        n = basis.n_sites
        return tuple(None if s is None else s % n for s in (self.source_site, self.drain_site))

    def drain_occupation(self, basis: fock.FockBasis) -> np.ndarray:
        _, drn = self.sites(basis)
        if drn is None:
            return np.zeros(basis.dim)
        return basis.states[:, drn].astype(float)


@dataclass
class CurrentTrace:
    """Current ``I(t) = kappa <n_drain>`` sampled on ``times``."""

    times: np.ndarray
    current: np.ndarray
    steady_value: float | None = None
    converged: bool = False
    final_state: np.ndarray | None = field(default=None, repr=False)

    def normalized(self, reference: float | None) -> np.ndarray:
        if not reference:
            return np.full_like(self.current, np.nan)
        return self.current / reference

    def to_csv(self, path, reference: float | None = None) -> None:
        """Write ``t,current,current_normalized`` with 12 significant digits."""
        norm = self.normalized(reference)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "current", "current_normalized"])
            for row in zip(self.times, self.current, norm):
                w.writerow([f"{x:.12g}" for x in row])


@dataclass
class PeriodicSteadyState:
    """Asymptotic periodic state: ``rho`` at the start of a drive period."""

    rho: np.ndarray
    period: float
    mean_current: float
    times: np.ndarray
    current: np.ndarray
    multiplier_error: float


# -- superoperators ---------------------------------------------------------

def _sparse(op):
    return op.tocsr() if sp.issparse(op) else sp.csr_matrix(np.asarray(op))


def spre(a):
    a = _sparse(a)
    return sp.kron(sp.identity(a.shape[0]), a, format="csr")


def spost(a):
    a = _sparse(a)
    return sp.kron(a.T, sp.identity(a.shape[0]), format="csr")


def commutator_superop(h):
    """Superoperator of ``rho -> -i [h, rho]``."""
    return (-1j * (spre(h) - spost(h))).tocsr()


def jump_operators(basis: fock.FockBasis, res: ReservoirSpec) -> list:
    src, drn = res.sites(basis)
    out = []
    if src is not None:
        out.append(fock.creation(basis, src, sparse=True))
    if drn is not None:
        out.append(fock.annihilation(basis, drn, sparse=True))
    return out


def dissipator(basis: fock.FockBasis, res: ReservoirSpec):
    out = sp.csr_matrix((basis.dim**2, basis.dim**2), dtype=complex)
    for c in jump_operators(basis, res):
        cdc = (c.conj().T @ c).tocsr()
        out = out + res.kappa * (sp.kron(c.conj(), c) - 0.5 * spre(cdc) - 0.5 * spost(cdc))
    return out.tocsr()


def liouvillian(h, basis: fock.FockBasis, res: ReservoirSpec):
    """Sparse ``dim^2 x dim^2`` generator for a static Hamiltonian."""
    _check_dim(h, basis)
    return (commutator_superop(h) + dissipator(basis, res)).tocsr()


def liouvillian_apply(h, basis: fock.FockBasis, res: ReservoirSpec, rho):
    """``d rho / dt`` evaluated directly in matrix form."""
    _check_dim(h, basis)
    rho = np.asarray(rho)
    if rho.shape != (basis.dim, basis.dim):
        raise PhysicsError(f"rho has shape {rho.shape}, basis dimension is {basis.dim}")
    h = h.toarray() if sp.issparse(h) else np.asarray(h)
    out = -1j * (h @ rho - rho @ h)
    for c in jump_operators(basis, res):
        c = c.toarray()
        cd = c.conj().T
        out += res.kappa * (c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c))
    return out


def _check_dim(h, basis):
    if h.shape != (basis.dim, basis.dim):
        raise PhysicsError(f"operator shape {h.shape} does not match basis dimension {basis.dim}")


# -- states and observables -------------------------------------------------

def vacuum(basis: fock.FockBasis) -> np.ndarray:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def current(rho, basis: fock.FockBasis, res: ReservoirSpec) -> float:
    """``kappa Tr(a_N^dag a_N rho)``."""
    return float(res.kappa * np.real(np.diagonal(rho) @ res.drain_occupation(basis)))


def density_diagnostics(rho) -> dict:
    rho = np.asarray(rho)
    herm = np.linalg.norm(rho - rho.conj().T) / max(np.linalg.norm(rho), 1e-300)
    return {
        "trace_error": float(abs(np.trace(rho) - 1)),
        "hermiticity": float(herm),
        "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()),
        "purity": float(np.real(np.trace(rho @ rho))),
    }


def _normalize_state(vec, dim):
    rho = vec.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def stationary_state(h, basis: fock.FockBasis, res: ReservoirSpec,
                     residual_tol: float = 1e-10, degeneracy_tol: float = 1e-15):
    """Kernel of the Liouvillian of a static Hamiltonian.

    The smallest right singular vector of the dense generator, made Hermitian
    and trace-normalized. Raises if the second smallest singular value is
    also numerically zero (more than one stationary state).
    """
    L = liouvillian(h, basis, res).toarray()
    _, s, vh = np.linalg.svd(L)
    if s[-2] <= degeneracy_tol * s[0]:
        raise DegenerateSteadyStateError(
            f"Liouvillian kernel is degenerate: smallest singular values {s[-3:]}")
    rho = _normalize_state(vh[-1].conj(), basis.dim)
    resid = np.linalg.norm(L @ rho.ravel(order="F"))
    if resid > residual_tol:
        raise SolverError(f"stationary state residual {resid:.3g} exceeds {residual_tol}")
    return rho


# -- time-dependent generators ----------------------------------------------

class Generator:
    """``L(t) = sum_k c_k(t) L_k`` restricted to an invariant index set."""

    def __init__(self, hamiltonian, basis: fock.FockBasis, res: ReservoirSpec, rho0=None):
        self.basis = basis
        self.res = res
        dim = basis.dim
        self.dim = dim
        self._callable = None
        static = dissipator(basis, res)
        timed = []
        if callable(hamiltonian):
            self._callable = hamiltonian
        elif isinstance(hamiltonian, (list, tuple)):
            for op, coeff in hamiltonian:
                _check_dim(op, basis)
                if coeff is None:
                    static = static + commutator_superop(op)
                else:
                    timed.append((commutator_superop(op), coeff))
        else:
            _check_dim(hamiltonian, basis)
            static = static + commutator_superop(hamiltonian)

        rho0 = vacuum(basis) if rho0 is None else np.asarray(rho0, dtype=complex)
        v0 = rho0.ravel(order="F")
        if self._callable is None:
            keep = self._reachable(v0 != 0, [static] + [m for m, _ in timed])
        else:
            keep = np.arange(dim * dim)
        self.keep = keep
        self.static = static[keep][:, keep].tocsr()
        self.timed = [(m[keep][:, keep].tocsr(), c) for m, c in timed]
        self.v0 = v0[keep]

        diag_idx = np.arange(dim) * (dim + 1)
        full_w = np.zeros(dim * dim)
        full_w[diag_idx] = res.kappa * res.drain_occupation(basis)
        full_tr = np.zeros(dim * dim)
        full_tr[diag_idx] = 1.0
        self.current_weights = full_w[keep]
        self.trace_weights = full_tr[keep]

    @staticmethod
    def _reachable(mask, mats):
        pattern = sum(abs(m) for m in mats).tocsr()
        pattern.data[:] = 1.0
        reach = mask.astype(float)
        while True:
            nxt = ((pattern @ reach + reach) > 0).astype(float)
            if np.array_equal(nxt, reach):
                return np.flatnonzero(reach)
            reach = nxt

    @property
    def size(self) -> int:
        return self.keep.size

    def rhs(self, t, y):
        if self._callable is not None:
            rho = y.reshape(self.dim, self.dim, order="F")
            h = self._callable(t)
            h = h.toarray() if sp.issparse(h) else np.asarray(h)
            out = -1j * (h @ rho - rho @ h) + (self.static @ y).reshape(self.dim, self.dim,
                                                                         order="F")
            return out.ravel(order="F")
        out = self.static @ y
        for m, c in self.timed:
            out = out + c(t) * (m @ y)
        return out

    def rhs_batch(self, n_cols):
        def f(t, y):
            return self.rhs(t, y.reshape(self.size, n_cols)).ravel()
        return f

    def full_state(self, v) -> np.ndarray:
        full = np.zeros(self.dim * self.dim, dtype=complex)
        full[self.keep] = v
        return full.reshape(self.dim, self.dim, order="F")

    def currents(self, ys) -> np.ndarray:
        return np.real(self.current_weights @ ys)


def _solve(fun, t_span, y0, t_eval, rtol, atol, max_step, method):
    sol = solve_ivp(fun, t_span, y0, method=method, t_eval=t_eval, rtol=rtol, atol=atol,
                    max_step=max_step)
    if sol.status != 0:
        raise IntegrationError(f"integration failed on {t_span}: {sol.message}")
    return sol


def propagate(hamiltonian, basis: fock.FockBasis, res: ReservoirSpec, t_final: float,
              rho0=None, times=None, n_samples: int = 401, rtol: float = 1e-8,
              atol: float = 1e-10, max_step: float = np.inf,
              method: str = "DOP853") -> CurrentTrace:
    """Integrate the master equation from ``rho0`` (default vacuum) to ``t_final``.

    The current is recorded on ``times`` (default ``n_samples`` uniform
    points). ``max_step`` caps the adaptive step; callers pass a fraction of
    the fastest drive period.
    """
    gen = Generator(hamiltonian, basis, res, rho0)
    if times is None:
        times = np.linspace(0.0, t_final, n_samples)
    times = np.asarray(times, dtype=float)
    sol = _solve(gen.rhs, (0.0, t_final), gen.v0.astype(complex), times, rtol, atol,
                 max_step, method)
    return CurrentTrace(times=sol.t, current=gen.currents(sol.y),
                        final_state=gen.full_state(sol.y[:, -1]))


def _period_mean(t, y):
    return np.trapezoid(y, t) / (t[-1] - t[0])


def period_averages(trace: CurrentTrace, period: float, samples: int = 64) -> np.ndarray:
    """Mean current over each complete period ``[kT, (k+1)T]`` covered by the trace."""
    n = int(np.floor((trace.times[-1] - trace.times[0]) / period + 1e-9))
    out = []
    for k in range(n):
        t = trace.times[0] + period * (k + np.linspace(0, 1, samples + 1))
        out.append(_period_mean(t, np.interp(t, trace.times, trace.current)))
    return np.array(out)


def _converged_at(means, rel_tol, n_consecutive):
    streak = 0
    for k in range(1, len(means)):
        ok = means[k] != 0 and abs(means[k] - means[k - 1]) / abs(means[k]) < rel_tol
        streak = streak + 1 if ok else 0
        if streak >= n_consecutive:
            return k
    return None


def steady_current(source, period: float, basis: fock.FockBasis | None = None,
                   res: ReservoirSpec | None = None, rel_tol: float = 1e-4,
                   n_consecutive: int = 3, t_max: float | None = None,
                   samples_per_period: int = 64, rtol: float = 1e-8, atol: float = 1e-10,
                   max_step: float = np.inf, return_trace: bool = False):
    """Period-averaged steady-state current.

    ``source`` is either a recorded :class:`CurrentTrace` or a Hamiltonian (in
    which case ``basis`` and ``res`` are required and the system is evolved
    from the vacuum one period at a time). Converged once the relative change
    between successive period means stays below ``rel_tol`` for
    ``n_consecutive`` periods; the value returned is the last complete period
    mean. The default time budget is ``50 / kappa``.
    """
    if isinstance(source, CurrentTrace):
        means = period_averages(source, period, samples_per_period)
        k = _converged_at(means, rel_tol, n_consecutive)
        if k is None:
            raise SteadyStateError("period-averaged current did not converge", source)
        source.steady_value, source.converged = float(means[-1]), True
        return (source.steady_value, source) if return_trace else source.steady_value

    if basis is None or res is None:
        raise TypeError("basis and res are required when evolving a Hamiltonian")
    gen = Generator(source, basis, res)
    t_max = 50.0 / res.kappa if t_max is None else t_max
    y = gen.v0.astype(complex)
    means, ts, cs = [], [], []
    t0 = 0.0
    while t0 < t_max:
        grid = t0 + period * np.linspace(0, 1, samples_per_period + 1)
        sol = _solve(gen.rhs, (t0, grid[-1]), y, grid, rtol, atol, max_step, "DOP853")
        cur = gen.currents(sol.y)
        means.append(_period_mean(grid, cur))
        ts.append(grid[:-1])
        cs.append(cur[:-1])
        y = sol.y[:, -1]
        t0 = grid[-1]
        k = _converged_at(means[-(n_consecutive + 1):], rel_tol, n_consecutive)
        if k is not None:
            trace = CurrentTrace(np.concatenate(ts), np.concatenate(cs), float(means[-1]),
                                 True, gen.full_state(y))
            return (trace.steady_value, trace) if return_trace else trace.steady_value
    trace = CurrentTrace(np.concatenate(ts), np.concatenate(cs), None, False, gen.full_state(y))
    raise SteadyStateError(
        f"period-averaged current not converged by t={t0:.4g} (last means {means[-3:]})", trace)


def _period_map(gen: Generator, period: float, rtol, atol, max_step) -> np.ndarray:
    """One-period propagator on the generator's sector, one column per basis vector."""
    n = gen.size
    sol = _solve(gen.rhs_batch(n), (0.0, period), np.eye(n, dtype=complex).ravel(), None,
                 rtol, atol, max_step, "DOP853")
    return sol.y[:, -1].reshape(n, n)


def propagate_periodic(hamiltonian, basis: fock.FockBasis, res: ReservoirSpec, period: float,
                       t_final: float, rho0=None, times=None, n_samples: int = 401,
                       rtol: float = 1e-10, atol: float = 1e-12,
                       max_step: float = np.inf) -> CurrentTrace:
    """Same trace as :func:`propagate` for a Hamiltonian of period ``period``.

    The one-period propagator ``P`` is integrated once; the state at ``k T``
    is ``P^k rho0`` and each sample at ``k T + s`` applies the propagator over
    ``[0, s]``, obtained in a single sweep through the sorted offsets. Cost is
    independent of ``t_final``.
    """
    gen = Generator(hamiltonian, basis, res, rho0)
    if times is None:
        times = np.linspace(0.0, t_final, n_samples)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("sample times must be nonnegative and sorted")
    prop = _period_map(gen, period, rtol, atol, max_step)
    k = np.floor(times / period + 1e-12).astype(int)
    s = np.clip(times - k * period, 0.0, None)

    # rows w . U(s) for every distinct offset
    offsets, inverse = np.unique(s, return_inverse=True)
    n = gen.size
    u = np.eye(n, dtype=complex)
    rows = np.empty((offsets.size, n), dtype=complex)
    t_prev = 0.0
    for i, t_next in enumerate(offsets):
        if t_next > t_prev:
            sol = _solve(gen.rhs_batch(n), (t_prev, t_next), u.ravel(), None, rtol, atol,
                         max_step, "DOP853")
            u = sol.y[:, -1].reshape(n, n)
            t_prev = t_next
        rows[i] = gen.current_weights @ u

    # states at period starts, reused across samples
    strob = np.empty((k.max() + 1, n), dtype=complex)
    strob[0] = gen.v0
    for j in range(1, strob.shape[0]):
        strob[j] = prop @ strob[j - 1]
    cur = np.real(np.einsum("ij,ij->i", rows[inverse], strob[k]))

    y_end = strob[k[-1]]
    if s[-1] > 0:
        y_end = _solve(gen.rhs, (0.0, s[-1]), y_end, None, rtol, atol, max_step,
                       "DOP853").y[:, -1]
    return CurrentTrace(times=times, current=cur, final_state=gen.full_state(y_end))


def periodic_steady_state(hamiltonian, basis: fock.FockBasis, res: ReservoirSpec,
                          period: float, rtol: float = 1e-10, atol: float = 1e-12,
                          max_step: float = np.inf, samples: int = 2048) -> PeriodicSteadyState:
    """Fixed point of the one-period propagator and its period-averaged current.

    Builds the stroboscopic map on the sector reachable from the vacuum by
    integrating every basis vector over one period, takes its eigenvector
    with multiplier 1, then evolves that state once more to sample the
    current over the period.
    """
    gen = Generator(hamiltonian, basis, res)
    n = gen.size
    prop = _period_map(gen, period, rtol, atol, max_step)
    _, _, vh = np.linalg.svd(prop - np.eye(n))
    v = vh[-1].conj()
    rho = _normalize_state(gen.full_state(v).ravel(order="F"), basis.dim)
    v = rho.ravel(order="F")[gen.keep]
    err = float(np.linalg.norm(prop @ v - v) / np.linalg.norm(v))
    grid = np.linspace(0.0, period, samples + 1)
    sol = _solve(gen.rhs, (0.0, period), v, grid, rtol, atol, max_step, "DOP853")
    cur = gen.currents(sol.y)
    return PeriodicSteadyState(rho=rho, period=period, mean_current=float(_period_mean(grid, cur)),
                               times=grid, current=cur, multiplier_error=err)
