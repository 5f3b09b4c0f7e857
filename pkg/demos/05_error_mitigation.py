"""Readout correction plus zero-noise extrapolation on the decaying charge.

The readout model is unfolded with a calibration matrix (simplex-constrained
least squares); gate noise is amplified by tripling every CNOT and the
expectation value is extrapolated linearly back to zero amplification.
Mitigation helps at shallow depth and fades once the noise has accumulated.
"""

import numpy as np

from trotterchain.cli import ExperimentConfig, mitigation_table

config = ExperimentConfig(
    n_sites=4,
    depth_max=15,
    charges=((1, "plus"),),
    noise={"kind": "depolarizing", "p1": 0.0013, "p2": 0.013, "readout_flip": 0.02},
    shots_total=100_000,
)

rows = mitigation_table(config)
print("values normalized by the noiseless charge (exact = 1):")
print("   d   unmitigated      mitigated     |err| raw  |err| mit")
for d, unmit, unmit_sd, mit, mit_sd, exact in rows:
    print(
        f"  {d:2d}  {unmit:+.4f}+-{unmit_sd:.4f}  {mit:+.4f}+-{mit_sd:.4f}"
        f"   {abs(unmit - exact):.4f}    {abs(mit - exact):.4f}"
    )

gaps = [(d, abs(m - u), float(np.hypot(us, ms))) for d, u, us, m, ms, _ in rows]
lost = next((d for d, gap, sd in gaps if gap <= sd), None)
print(f"\nmitigated and unmitigated become statistically indistinguishable at d = {lost}")
