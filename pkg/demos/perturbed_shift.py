"""Sofify a noisy conjugated cyclic shift and compare with eigenvalue rounding.

Run: python3 demos/perturbed_shift.py [dim] [seed]
"""
import itertools
import sys

from soficize.harness import RunConfig, run

dim = int(sys.argv[1]) if len(sys.argv) > 1 else 512
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 42

cfg = RunConfig(kind="perturbed-shift", dim=dim, noise=0.05, e_radius=3, epsilon=0.5, seed=seed)
counter = itertools.count(1)
rep = run(cfg, progress=lambda e: print(f"  step {next(counter):2d}: block trace {e['tr_p']:4d}, "
                                         f"nu {e['nu_achieved']:.3g}, draws {e['search_draws']}"))
d = rep.to_dict()
print(f"input defect on E: composition {d['input_defect']['max_composition']:.3g}, "
      f"trace {d['input_defect']['max_trace']:.3g}")
print(f"route: {d.get('route')}, certificate: {rep.certificate}")
if "max_distance" in d:
    print(f"pipeline max |a(g) - b(g)|^2_HS / d on E: {d['max_distance']:.4g} (target {cfg.epsilon**2})")
if d["oracle"].get("max_distance") is not None:
    print(f"eigenvalue rounding on E:                {d['oracle']['max_distance']:.4g}")
print(f"identity tail fraction: {d.get('tail_fraction', 0):.3f}")
print(f"desk schedule breaks {len(d.get('schedule_violations', []))} strict constraints")
