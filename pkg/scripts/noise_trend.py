"""Expected fidelity per N_c group under the calibrated noise model (no sampling)."""
from collections import defaultdict

import numpy as np

from qrewind.gateset import input_states, select_pairs
from qrewind.harness import noisy_output_state
from qrewind.qalg import matrix_power, normalize, state_fidelity
from qrewind.tomography import NoiseModel

noise = NoiseModel.calibrated(shots_per_setting=100_000)
groups = defaultdict(list)
for pair in select_pairs(0.9):
    for s in input_states():
        for n in (1, 2, 3):
            rho, _ = noisy_output_state(pair, s.vector, n, noise)
            target = normalize(matrix_power(pair.U, -n) @ s.vector)
            groups[round(pair.nc, 9)].append(state_fidelity(rho, target))

print(" N_c        F_expected  samples")
for nc in sorted(groups):
    print(f"{nc:.6f}   {np.mean(groups[nc]):.5f}     {len(groups[nc])}")
