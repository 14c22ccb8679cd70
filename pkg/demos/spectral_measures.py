"""Equidistribution of Haar eigenvalues and the power-trace discrepancy bound.

Run: python3 demos/spectral_measures.py
"""
import numpy as np

from soficize.linalg import haar_unitary
from soficize.spectra import ds_power_trace_bound, localized_ds, Eigen
from soficize.torus import AtomicTorusMeasure, ds_n, mix

N, M = 8, 64
for d in (64, 256, 1024):
    u = haar_unitary(d, np.random.default_rng([7, d]))
    ds, et = ds_power_trace_bound(u, M, N)
    print(f"d={d:5d}: DS_{N} = {ds:.4f}, bound from traces of powers = {et:.3f}")

# a shift spectrum localizes badly on a subspace spanned by few eigenvectors
d = 256
u = np.roll(np.eye(d), 1, axis=0)
eig = Eigen.of(u)
few = eig.vectors[:, :4]
print(f"cyclic shift, d={d}: DS on the whole space {localized_ds(eig, np.eye(d), N):.4f}, "
      f"on 4 eigenvectors {localized_ds(eig, few, N):.4f}")

# mixing two measures never increases DS beyond the worse one
a = AtomicTorusMeasure([0.1, 0.6], [0.5, 0.5])
b = AtomicTorusMeasure([0.3, 0.9], [0.5, 0.5])
m = mix([a, b], [0.5, 0.5])
print(f"DS_4: a {ds_n(a, 4):.3f}, b {ds_n(b, 4):.3f}, mixture {ds_n(m, 4):.3f}")
