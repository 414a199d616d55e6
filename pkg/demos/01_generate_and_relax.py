# Generate a sparse instance, solve its McCormick relaxation and look at
# how badly the relaxation approximates the products.
import numpy as np

from bilicover import build_mccormick, generate_instance, solve

inst = generate_instance(100, 100, 0.05, "NonNegative", seed=1)
print(f"m={inst.m} n={inst.n} mean row size={inst.mean_row_size:.2f}")

sol = solve(build_mccormick(inst))
pt = sol.point
print("McCormick bound:", round(sol.z, 6))

# rows whose true bilinear value falls short of the rhs at the LP point
A, d = inst.dense_rows()
short = (pt.x * pt.y) @ A.T - d
print("rows violated by the LP point:", int(np.sum(short < -1e-6)), "of", inst.m)
