"""Capacity against ranging accuracy for a few pilot designs at 0 dB.

Sparser pilots leave more resources for data but weaken both the channel
estimate and the delay bound. A reduced sweep (400 trials) keeps this quick;
``ofdmpilots pareto`` runs the full grid.

    python3 demos/pilot_tradeoff.py
"""
from ofdmpilots.channel import ChannelSpec
from ofdmpilots.harness import best_per_param, default_scenario, run_pareto_sweep

scn = default_scenario(channel=ChannelSpec.rayleigh(2), snr_db=(0.0,), trials=400, ranging_draws=200)
res = run_pareto_sweep(scn, layout_params=(4, 8, 12), alphas=(0.5, 0.6, 0.7, 0.8))

print(f"{'dp_sc':>5} {'alpha':>5} {'capacity':>9} {'outage':>7} {'RMSE m':>8}")
for r in res.rows:
    print(f"{r.layout_param:5d} {r.alpha:5.2f} {r.cap_mean_bpshz:9.3f} {r.p_outage:7.3f} {r.rmse_m:8.2f}")

print("\nbest alpha per pilot spacing:")
for p, r in sorted(best_per_param(res, 0.0).items()):
    print(f"  dp_sc={p:2d}: alpha={r.alpha:.2f}  C={r.cap_mean_bpshz:.3f} b/s/Hz  RMSE={r.rmse_m:.1f} m")
