"""
Replay and packet-drop attacks
==============================

A replay attacker plays back a recorded window of packets. The recorded
watermark no longer matches the one the estimator removes, so the cross
test fires. A packet-drop attacker instead blocks every packet; the
estimator keeps using its last received output and the inflated
innovation bound absorbs much of the resulting residual, so the auto test
climbs towards its threshold without always crossing it.
"""

# %%
import numpy as np

from etdw import DosConfig, ReplayConfig, ScenarioConfig, run_scenario

for seed in range(3):
    rep = run_scenario(ScenarioConfig(seed=seed, attack=ReplayConfig(400, 200, 200))).summary
    print(f"replay  seed {seed}: alarm {rep['alarm_step']} via {rep['alarm_tests']}")

# %%
for seed in range(3):
    res = run_scenario(ScenarioConfig(seed=seed, attack=DosConfig(400), on_violation="continue"))
    t = res.trace
    ratio = np.nanmax(t.stat2[399:] / t.th2[399:])
    print(f"drop    seed {seed}: alarm {res.summary['alarm_step']}, first violation "
          f"{res.summary['violation_step']}, best auto statistic/threshold {ratio:.3f}")
