"""
Fitting detector thresholds
===========================

Thresholds follow ``sqrt((1 + iota) kappa ln(i) / i)``. Here kappa is fitted
on attack-free runs so every observed statistic, scaled by a safety factor,
stays below its threshold after the burn-in.
"""

# %%
import numpy as np

from etdw import ETDW_TEST_PARAMS, ScenarioConfig, calibrate_scenario, thresholds

cal = calibrate_scenario(ScenarioConfig(), runs=6, slack=1.2)
p = cal.params
print(f"fitted kappa1={p.kappa1:.2e} kappa2={p.kappa2:.2e} added={p.added:.2e}")
print(f"reference kappa1={ETDW_TEST_PARAMS.kappa1:.2e} kappa2={ETDW_TEST_PARAMS.kappa2:.2e} "
      f"added={ETDW_TEST_PARAMS.added:.2e}")

# %%
# How the thresholds shrink with the sample count
# -----------------------------------------------
for i in (100, 400, 1000, 2000):
    th1, th2 = thresholds(i, p)
    print(f"i={i:5d}  theta1={th1:.2e}  theta2+added={th2:.2e}")

# %%
# A fitted detector can be used directly in a scenario.
from etdw import run_scenario

res = run_scenario(ScenarioConfig(seed=11, detector=p))
print("alarm on a fresh attack-free seed:", res.summary["alarm_step"])
print("log-rate shape check:", np.isclose(thresholds(400, p)[0] / thresholds(100, p)[0],
                                           np.sqrt(np.log(400) / 400 / (np.log(100) / 100))))
