"""How much depth modulation is needed?

The waveform is capped at V_max; the current is shown relative to the
V_max = 50 E_r result. A few recoil energies of depth change already
recover most of the transport.
"""
from amtransport import RunConfig
from amtransport.experiments import sweep_vmax

for envelope in ("rescaled", "clamped"):
    cfg = RunConfig().updated(modulation={"envelope": envelope})
    print(f"envelope = {envelope}")
    for vmax, _, norm in sweep_vmax(cfg, [16.0, 17.0, 20.0, 23.0, 30.0]):
        print(f"  V_max = {vmax:4.0f} E_r (dV = {vmax - 15:4.0f})  {norm:6.1%}  " + "#" * round(40 * norm))
