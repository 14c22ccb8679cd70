"""How tightly quadratic forms on random unit vectors track the normalized trace.

Run: python3 demos/concentration.py
"""
from soficize.sphere import GridConfig, concentration_grid

cfg = GridConfig(dims=[64, 256, 1024], cs=[0.1, 0.3, 0.5], n_samples=4000, seed=11)
print("   d     c   empirical   guaranteed")
for r in concentration_grid(cfg):
    print(f"{r.d:5d}  {r.c:.1f}   {r.empirical_success:.4f}      {r.paper_bound:.4f}")
