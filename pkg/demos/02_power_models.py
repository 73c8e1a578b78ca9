"""
Power-component models in isolation
===================================

The power network is built from three closed-form pieces, each usable on
its own: current-dependent converter efficiency (LUT interpolation), the
battery operating point i*(voc - i*rs) = p, and coulomb counting. This
script sweeps each one and prints small tables.
"""

from vplat import Battery, DcDcConverter, EfficiencyLUT, MaxPowerExceeded
from vplat.common import SEC

# --- converter efficiency vs output current -----------------------------------

lut = EfficiencyLUT(
    i_out_a=[5e-5, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2],
    eta=[0.82, 0.86, 0.88, 0.89, 0.885, 0.86, 0.835, 0.815, 0.79],
    name="core-rail converter",
)
conv = DcDcConverter("core_dcdc", v_out=1.8, lut=lut, placement="bus_to_rail")

print("core-rail converter (1.8 V out)")
print("  p_out [mW]   i_out [mA]   eta      p_in [mW]")
for p_out in [0.0, 0.5e-3, 2e-3, 5e-3, 13e-3, 31e-3]:
    i_out = p_out / conv.v_out
    p_in = conv.input_power(p_out)
    eta = conv.efficiency_at(p_out) if p_out else float("nan")
    print(f"  {p_out * 1e3:9.2f}   {i_out * 1e3:9.3f}   {eta:.4f}   {p_in * 1e3:8.3f}")

# --- battery operating point ----------------------------------------------------

battery = Battery(
    capacity_coulomb=115.2,  # 32 mAh
    voc_soc=[0.0, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
    voc_v=[3.0, 3.3, 3.45, 3.62, 3.72, 3.85, 4.05, 4.2],
    rs_soc=[0.0, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
    rs_ohm=[1.4, 0.95, 0.7, 0.45, 0.36, 0.31, 0.29, 0.28],
)

print("\nbattery operating point at soc=1.0 (voc=4.2 V, rs=0.28 ohm)")
print("  demand [mW]   i [mA]     v_term [V]")
for p in [0.0, 1e-3, 5e-3, 50e-3, 1.0]:
    i, v = battery.operating_point(p)
    print(f"  {p * 1e3:11.1f}   {i * 1e3:8.4f}   {v:.5f}")

try:
    battery.operating_point(20.0)
except MaxPowerExceeded as exc:
    print(f"  demand 20 W -> {exc}")

# --- coulomb counting -------------------------------------------------------------

print("\ncoulomb counting: 1 mA for one hour from a 32 mAh battery")
before = battery.soc
battery.draw(1e-3, 3600 * SEC)
print(f"  dSoC = {(before - battery.soc) * 100:.3f} %  (expected 3.6 C / 115.2 C = 3.125 %)")

# The discharge accelerates at low state of charge because rs(soc) grows:
print("\nper-interval dSoC under a constant 5 mW load (rs rises as soc falls)")
fresh = Battery(1.0, battery.voc_soc, battery.voc_v, battery.rs_soc, battery.rs_ohm, soc=1.0)
while fresh.soc > 0.15:
    start = fresh.soc
    for _ in range(50):
        i, _ = fresh.operating_point(5e-3)
        fresh.draw(i, SEC)
    print(f"  soc {start:.2f} -> {fresh.soc:.2f}: dSoC/50s = {(start - fresh.soc):.5f}")
