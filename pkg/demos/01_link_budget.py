"""Walk the radio chain: transmit power -> received power -> achievable
rate -> energy per model transmission, over a sweep of link distances.

Run with: python demos/01_link_budget.py
"""

from dflsim.radio import RadioParams, channel_gain_db, dbm_to_watts, link_budget

# a node drawn from the middle of the default ranges: 15 dBm, 10 MHz
params = RadioParams(
    p_tx=dbm_to_watts(15.0),
    bandwidth=10e6,
    freq=1e9,
    env_exp=2.0,
    d_max=2000.0,
)
PAYLOAD_BITS = 87_000

print(f"transmit power {params.p_tx * 1e3:.2f} mW, bandwidth {params.bandwidth / 1e6:.0f} MHz, "
      f"carrier {params.freq / 1e9:.1f} GHz, range {params.d_max / 1e3:.0f} km")
print(f"payload per transmission: {PAYLOAD_BITS} bits\n")

print(f"{'distance':>10}  {'path gain':>10}  {'rx power':>12}  {'rate':>12}  "
      f"{'energy':>12}  {'scaled':>7}")
for d in (50, 200, 500, 1000, 1500, 2000):
    lb = link_budget(params, float(d), PAYLOAD_BITS)
    print(f"{d:>8} m  {channel_gain_db(params, float(d)):>8.1f} dB  "
          f"{lb.p_rx * 1e12:>9.3f} pW  {lb.rate / 1e6:>8.2f} Mb/s  "
          f"{lb.energy * 1e6:>9.1f} uJ  {lb.energy_scaled:>7.3f}")

print("\nenergy grows with distance because the rate collapses; at the range")
print("edge the scaled energy is exactly 1, the worst case a link can cost.")
