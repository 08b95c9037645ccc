"""
Scoring pooled forecasts
========================

Quantile scores, interval scores and the CRPS of a few pools, and a skill
score against quantile averaging.
"""

import numpy as np

from angular_pool import (
    HUB_LEVELS,
    angular_combine_exact,
    crps,
    horizontal_combine,
    interval_score,
    mqs,
    quantile_score,
    skill_score,
    vertical_combine,
)
from angular_pool.verify import gaussian_cdf

# pinball loss: under-prediction at a high level costs more
print(quantile_score(0.9, 10, 12), quantile_score(0.9, 10, 8))

# Winkler score of a 95% interval missed by one unit
print(interval_score(0.05, 1, 3, 4))

# three forecasters of the same quantity, scored on simulated outcomes
rng = np.random.default_rng(0)
members = [gaussian_cdf(m, s, HUB_LEVELS) for m, s in [(0.0, 0.5), (0.4, 0.8), (-0.3, 1.2)]]
pools = {
    "horizontal": horizontal_combine(members),
    "vertical": vertical_combine(members),
    "angular 60": angular_combine_exact(members, 60),
}
outcomes = rng.normal(0.0, 0.7, 500)

scores = {name: np.array([mqs(F, x) for x in outcomes]) for name, F in pools.items()}
for name, F in pools.items():
    mean_crps = np.mean([crps(F, x) for x in outcomes])
    print(f"{name:11s} MQS {scores[name].mean():.4f}  CRPS {mean_crps:.4f}")

# skill: percentage improvement over the benchmark, geometric mean of ratios
for name in ("vertical", "angular 60"):
    print(f"{name} skill vs horizontal: {skill_score(scores[name], scores['horizontal']):+.2f}%")
