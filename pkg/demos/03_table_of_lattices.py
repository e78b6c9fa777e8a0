"""Current gain, recovered fraction and effective-model error for four lattices.

Set AMTRANSPORT_WORKERS to evaluate the rows in parallel.
"""
from amtransport import RunConfig
from amtransport.experiments import table1

print(f"{'offsets (E_r)':<26}{'gain':>10}{'recovered':>11}{'H_eff error':>13}")
for r in table1(RunConfig()):
    label = "[" + ", ".join(f"{d:g}" for d in r.delta) + "]"
    if r.error:
        print(f"{label:<26} failed: {r.error}")
        continue
    print(f"{label:<26}{r.gain:>10.3g}{r.percent_recovered:>11.1%}{r.heff_percent_error:>13.2%}")

# Stress case: a shallower lattice (V_min = 5 E_r, interactions assumed tuned
# away) with the reservoirs slowed to J/kappa = 29.
stress = RunConfig().updated(lattice={"v_min": 5.0}, reservoirs={"j_over_kappa": 29})
(r,) = table1(stress, [[-0.1, 0.3, -0.4, 0.2]])
print(f"V_min = 5 E_r: gain {r.gain:.3g}, recovered {r.percent_recovered:.1%}, "
      f"H_eff error {r.heff_percent_error:.1%}")
