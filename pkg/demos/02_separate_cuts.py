# Separate lifted cover cuts at the McCormick point and check that they
# cut it off while holding on sampled feasible points of their row.
import numpy as np

from bilicover import SeparationConfig, build_mccormick, format_cut, generate_instance, sample_feasible, separate_all, solve
from bilicover.oracle import row_instance

inst = generate_instance(100, 100, 0.05, "MixedSigns", seed=2)
pt = solve(build_mccormick(inst)).point
cuts = separate_all(inst, pt, SeparationConfig(rng_seed=0), iteration=1)
print(len(cuts), "violated cuts")

for cut in cuts[:5]:
    smp = sample_feasible(row_instance(cut.row), 2000, np.random.default_rng(0), proposal="mixed")
    worst = cut.lhs_local(smp.x, smp.y).min()
    print(f"row {cut.row.row_index:3d}  lhs at LP point {cut.lhs(pt):8.4f}  min on samples {worst:.6f}")
    print("   ", format_cut(cut))
