"""Acceptance criteria, one PASS/FAIL line each.

Every criterion prints a single summary line (visible with ``pytest -v -s``
or in the terminal summary) and then asserts on all of its sub-checks at
the stated tolerances.
"""
import time

import numpy as np
import pytest

from amtransport import effective, fock, lattice, lindblad
from amtransport import experiments as ex
from amtransport.errors import PhysicsError
from amtransport.lattice import BoseHubbardParams
from amtransport.modulation import ModulationScheme

ROW4 = [-0.1, 0.3, -0.4, 0.2]
TWO_SITE = {"version": 1, "lattice": {"n_sites": 2, "delta": [0.1]}, "occupancy": 2,
            "modulation": {"kind": "monochromatic", "alpha": "resonant"}}


def within_factor(value, target, factor):
    return target / factor <= value <= target * factor


def report(capsys, number, title, checks):
    failed = [name for name, ok, _ in checks if not ok]
    detail = "; ".join(f"{name}={info}" for name, _, info in checks)
    status = "FAIL" if failed else "PASS"
    line = f"{status} criterion {number} ({title}): {detail}"
    if failed:
        line += f"  [out of tolerance: {', '.join(failed)}]"
    with capsys.disabled():
        print("\n" + line)
    assert not failed, line


def test_criterion_1_parameter_engine(capsys):
    lattice._tunneling_quad.cache_clear()
    lattice._fit_tunneling.cache_clear()
    start = time.perf_counter()
    fit = lattice.fit_tunneling(lattice.LatticeSpec(n_sites=5, delta=ROW4))
    elapsed = time.perf_counter() - start
    report(capsys, 1, "tunneling fit", [
        ("J_max", 3e-3 <= fit.j_max <= 9e-3, f"{fit.j_max:.4g} E_r (want [3e-3, 9e-3])"),
        ("beta", 0.18 <= fit.beta <= 0.30, f"{fit.beta:.4g}/E_r (want [0.18, 0.30])"),
        ("residual", fit.residual < 0.10, f"{fit.residual:.1%} (want < 10%)"),
        ("runtime", elapsed < 1.0, f"{elapsed:.2f}s (want < 1s)"),
    ])


def test_criterion_2_stationary_suppression(capsys):
    start = time.perf_counter()
    exp = ex.Experiment(ex.RunConfig())
    factor = exp.i_ideal / exp.i_stationary
    elapsed = time.perf_counter() - start
    report(capsys, 2, "stationary suppression", [
        ("suppression", 1e8 <= factor <= 1e10, f"{factor:.3g} (want [1e8, 1e10])"),
        ("runtime", elapsed < 10, f"{elapsed:.1f}s (want < 10s)"),
    ])


TABLE1_EXPECTED = [  # gain, recovered, effective-model error
    (5.6e6, 0.64, 0.010),
    (3.3e7, 0.46, 0.015),
    (4.7e6, 0.13, 0.001),
    (9.8e8, 0.78, 0.002),
]


def test_criterion_3_table1(capsys):
    start = time.perf_counter()
    reports = ex.table1(ex.RunConfig())
    elapsed = time.perf_counter() - start
    checks = []
    for k, (r, (gain, rec, err)) in enumerate(zip(reports, TABLE1_EXPECTED), start=1):
        checks += [
            (f"row{k}.gain", r.error is None and within_factor(r.gain, gain, 5),
             f"{r.gain:.3g}/{gain:.2g}"),
            (f"row{k}.recovered", abs(r.percent_recovered - rec) <= 0.10,
             f"{r.percent_recovered:.1%}/{rec:.0%}"),
            (f"row{k}.heff", r.heff_percent_error <= 2 * err,
             f"{r.heff_percent_error:.2%}/<={2 * err:.1%}"),
        ]
    checks.append(("runtime", elapsed < 600, f"{elapsed:.0f}s"))
    report(capsys, 3, "Table I", checks)


def test_criterion_4_vmax_sweep(capsys):
    start = time.perf_counter()
    rows = ex.sweep_vmax(ex.RunConfig(), [17.0, 20.0, 23.0])
    elapsed = time.perf_counter() - start
    checks = [(f"vmax={v:g}", abs(norm - want) <= 0.08, f"{norm:.1%}/{want:.0%}")
              for (v, _, norm), want in zip(rows, (0.38, 0.79, 0.91))]
    checks.append(("runtime", elapsed < 600, f"{elapsed:.0f}s"))
    report(capsys, 4, "V_max sweep", checks)


def test_criterion_5_two_site_double_occupancy(capsys):
    start = time.perf_counter()
    exp = ex.Experiment(ex.RunConfig.from_dict(TWO_SITE))
    common = dict(v_min=exp.spec.v_min, v_max=exp.spec.v_max, beta=exp.fit.beta)
    resonant = ModulationScheme.monochromatic(exp.resolve_alpha("resonant"), **common)
    offset = ModulationScheme.monochromatic(exp.resolve_alpha("offset"), **common)
    i_res = exp.i_modulated(resonant)
    i_off = exp.i_modulated(offset)
    ratio = i_res / i_off
    i_eff = exp.i_effective(resonant)
    eff_err = abs(i_eff - i_res) / i_res
    elapsed = time.perf_counter() - start
    target = 1.7e5 / 7.3e3
    report(capsys, 5, "two-site double occupancy", [
        ("ratio", within_factor(ratio, target, 3),
         f"{ratio:.3g} (gains {i_res / exp.i_stationary:.3g} vs {i_off / exp.i_stationary:.3g};"
         f" want {target:.3g} within x3)"),
        ("heff", eff_err <= 0.15, f"{eff_err:.2%} (want <= 15%)"),
        ("runtime", elapsed < 300, f"{elapsed:.1f}s"),
    ])


def test_criterion_6_stress_case(capsys):
    cfg = ex.RunConfig().updated(lattice={"v_min": 5.0}, reservoirs={"j_over_kappa": 29})
    (r,) = ex.table1(cfg, [ROW4])
    assert r.error is None, r.error
    report(capsys, 6, "V_min = 5 E_r stress case", [
        ("gain", within_factor(r.gain, 4.7e5, 5), f"{r.gain:.3g} (want 4.7e5 within x5)"),
        ("recovered", abs(r.percent_recovered - 0.71) <= 0.10,
         f"{r.percent_recovered:.1%} (want 71% +- 10)"),
        ("heff", r.heff_percent_error <= 0.45, f"{r.heff_percent_error:.1%} (want <= 45%)"),
    ])


# -- criterion 7: properties with no reference-number dependence --------------

def _stationary_cases():
    fit = lattice.fit_tunneling(lattice.LatticeSpec(n_sites=2))
    j = fit.j_max
    cases = {}
    for n in (2, 3, 5):
        cases[f"flat{n}"] = (fock.FockBasis(n, 1),
                             BoseHubbardParams(np.zeros(n), np.full(n, 0.57), np.full(n - 1, j)))
    cases["offset3"] = (fock.FockBasis(3, 1), BoseHubbardParams([0, 0.01, 0.004], [0.57] * 3,
                                                                [j, j]))
    cases["double2"] = (fock.FockBasis(2, 2), BoseHubbardParams([0, 0.002], [0.003] * 2, [j]))
    for k, delta in enumerate(ex.TABLE1_DELTAS, start=1):
        model = effective.build_effective_single(lattice.LatticeSpec(n_sites=5, delta=delta), fit)
        cases[f"effective{k}"] = (fock.FockBasis(5, 1), model.params)
    return j, cases


def _property_checks():
    rng = np.random.default_rng(7)
    checks = []
    j, cases = _stationary_cases()
    res = lindblad.ReservoirSpec(kappa=j / 15)

    # trace and Hermiticity of the generator, operator identities
    worst_tr = worst_herm = worst_comm = worst_adj = worst_hn = 0.0
    for basis, p in cases.values():
        h = fock.build_hamiltonian(basis, p, sparse=False)
        x = rng.normal(size=(basis.dim,) * 2) + 1j * rng.normal(size=(basis.dim,) * 2)
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        d = lindblad.liouvillian_apply(h, basis, res, rho)
        worst_tr = max(worst_tr, abs(np.trace(d)) / np.linalg.norm(d))
        worst_herm = max(worst_herm, np.linalg.norm(d - d.conj().T) / np.linalg.norm(d))
        n = np.diag(basis.total_number().astype(float))
        worst_hn = max(worst_hn, np.linalg.norm(h @ n - n @ h))
        for s in range(basis.n_sites):
            a = np.asarray(fock.annihilation(basis, s, sparse=False))
            ad = np.asarray(fock.creation(basis, s, sparse=False))
            worst_adj = max(worst_adj, np.max(np.abs(a - ad.conj().T)))
            below = basis.states[:, s] < basis.n_max
            comm = a @ ad - ad @ a
            worst_comm = max(worst_comm, np.max(np.abs(comm[np.ix_(below, below)]
                                                       - np.eye(below.sum()))))
    checks.append(("trace", worst_tr < 1e-12, f"{worst_tr:.1e}"))
    checks.append(("hermiticity", worst_herm < 1e-12, f"{worst_herm:.1e}"))
    checks.append(("[a,a+]=1 below cutoff", worst_comm < 1e-14, f"{worst_comm:.1e}"))
    checks.append(("a=(a+)^H", worst_adj == 0.0, f"{worst_adj:.1e}"))
    checks.append(("[H,N]", worst_hn < 1e-12, f"{worst_hn:.1e}"))

    # unitary-limit purity
    basis, p = cases["double2"]
    h = fock.build_hamiltonian(basis, BoseHubbardParams([0, 0.1], [0.6, 0.6], [0.05]))
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    closed = lindblad.ReservoirSpec(kappa=1.0, source_site=None, drain_site=None)
    tr = lindblad.propagate(h, basis, closed, 1e3, rho0=np.outer(psi, psi.conj()), rtol=1e-10,
                            atol=1e-12)
    purity = lindblad.density_diagnostics(tr.final_state)["purity"]
    checks.append(("purity", abs(purity - 1) < 1e-8, f"{abs(purity - 1):.1e}"))

    # gauge invariance under a uniform shift
    basis = fock.FockBasis(2, 2)
    p = lattice.params_at_depth(lattice.LatticeSpec(n_sites=2, delta=(0.1,)), 15.0)
    res2 = lindblad.ReservoirSpec(kappa=p.j[0] / 15)
    cur = [lindblad.current(lindblad.stationary_state(fock.build_hamiltonian(basis, q), basis,
                                                      res2), basis, res2)
           for q in (p, fock.gauge_out_uniform(p))]
    gauge = abs(cur[0] / cur[1] - 1)
    checks.append(("gauge", gauge < 1e-6, f"{gauge:.1e}"))

    # propagation versus kernel on every stationary case
    worst = 0.0
    for basis, p in cases.values():
        h = fock.build_hamiltonian(basis, p)
        res_p = lindblad.ReservoirSpec(kappa=np.max(p.j) / 15)
        i_k = lindblad.current(lindblad.stationary_state(h, basis, res_p), basis, res_p)
        ev = np.linalg.eigvals(lindblad.liouvillian(h, basis, res_p).toarray())
        t_end = 30.0 / np.sort(-ev.real)[1]
        tr = lindblad.propagate(h, basis, res_p, t_end, n_samples=3, rtol=1e-10, atol=1e-14)
        worst = max(worst, abs(tr.current[-1] / i_k - 1))
    checks.append(("propagate-vs-kernel", worst < 1e-6, f"{worst:.1e} over {len(cases)}"))

    # rule exhaustiveness
    fit = lattice.TunnelingFit(1.0, 0.24, 15, 50)
    exhaustive = True
    for delta in [*ex.TABLE1_DELTAS, (0.05, -0.05, 0.0, 0.7, 0.0)]:
        m = effective.build_effective_single(
            lattice.LatticeSpec(n_sites=len(delta) + 1, delta=delta), fit)
        exhaustive &= len(m.provenance) == len(delta) and all(
            (r == effective.RULE_FLAT) == (d == 0) for d, r in zip(delta, m.provenance))
        exhaustive &= m.is_flat
    try:
        effective.build_effective_single(lattice.LatticeSpec(n_sites=3, delta=(0, 0)), fit)
        exhaustive = False
    except PhysicsError:
        pass
    checks.append(("rules", exhaustive, "exhaustive" if exhaustive else "gap"))

    # flat single-particle spectrum
    basis = fock.FockBasis(5, 1)
    h = np.asarray(fock.build_hamiltonian(basis, cases["flat5"][1], sparse=False))
    one = basis.total_number() == 1
    ev = np.linalg.eigvalsh(h[np.ix_(one, one)])
    exact = np.sort(-2 * j * np.cos(np.arange(1, 6) * np.pi / 6))
    spec_err = np.max(np.abs(ev - exact))
    checks.append(("spectrum", spec_err < 1e-10, f"{spec_err:.1e}"))
    return checks


def test_criterion_7_property_suite(capsys):
    report(capsys, 7, "property suite", _property_checks())
