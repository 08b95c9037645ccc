"""
Pooling two forecasts along different directions
================================================

Two Gaussian forecasts, one centred at -0.15 and one at 0.15, both with
standard deviation 0.1, are discretized at the 23 usual quantile levels and
pooled vertically, horizontally and along angled lines.
"""

import numpy as np

from angular_pool import (
    HUB_LEVELS,
    angular_combine_exact,
    angular_combine_grid,
    horizontal_combine,
    sup_distance,
    vertical_combine,
)
from angular_pool.verify import gaussian_cdf

left = gaussian_cdf(-0.15, 0.1, HUB_LEVELS)
right = gaussian_cdf(0.15, 0.1, HUB_LEVELS)
pair = [left, right]
print(left)

# vertical pooling averages probabilities: a wide, two-humped mixture
V = vertical_combine(pair)
# horizontal pooling averages quantiles: a Gaussian with sd 0.1 again
H = horizontal_combine(pair)
print(f"vertical   mean {V.mean:+.4f}  sd {np.sqrt(V.variance):.4f}")
print(f"horizontal mean {H.mean:+.4f}  sd {np.sqrt(H.variance):.4f}")

# angular pools sit in between; every one keeps the average of the means
for theta in (15, 45, 75, 85, 88):
    A = angular_combine_exact(pair, theta)
    print(f"angle {theta:2d}   mean {A.mean:+.1e}  sd {np.sqrt(A.variance):.4f}")

# the line-intersection grid agrees with the exact route
G = angular_combine_grid(pair, 45, m=1001)
print("grid vs exact at 45 degrees:", sup_distance(G, angular_combine_exact(pair, 45)))

# density at the centre and a little to each side, on a finer discretization
levels = np.linspace(0, 1, 2001)[1:-1]
fine = [gaussian_cdf(-0.15, 0.1, levels), gaussian_cdf(0.15, 0.1, levels)]
h = 0.01
for theta in (45, 88):
    A = angular_combine_exact(fine, theta)
    dens = [(A.cdf(x + h) - A.cdf(x - h)) / (2 * h) for x in (-0.05, 0.0, 0.05)]
    shape = "dip at the centre" if dens[1] < min(dens[0], dens[2]) else "single peak"
    print(f"angle {theta}: density {np.round(dens, 3)} -> {shape}")
