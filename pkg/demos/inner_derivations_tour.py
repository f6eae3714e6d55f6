"""Connections along inner derivations ad_a = [a, .].

Checks the kernel condition for commutant endomorphisms, shows what breaks
when it fails, and compares a bracket-preserving map with one that is not.

    python demos/inner_derivations_tour.py
"""

import math

from nctorus.algebra import add, commutator, generator, one, star
from nctorus.geometry import diagonal_metric, flat_metric
from nctorus.inner_derivations import (
    InnerDerivation,
    MuMap,
    basis_compatibility_residual,
    default_probes,
    inner_curvature,
    kernel_residual,
    make_commutant_mu,
)
from nctorus.module import AlgebraMatrix

THETA = 1 / math.pi
u1, u2 = generator(THETA, 1), generator(THETA, 2)
g = diagonal_metric(add(one(THETA, 3.0), add(u1, star(u1))), add(one(THETA, 3.0), add(u2, star(u2))))
a, b = default_probes(THETA)[:2]

print("kernel condition nu gamma + gamma nu* = 0")
for coeffs in ([1.0], [0, 1], [0.5, -1, 1]):
    nu = make_commutant_mu(coeffs, g)
    print(f"  nu = i f(gamma), f coefficients {coeffs}: residual {kernel_residual(nu, g):.1e}, "
          f"basis compatibility {basis_compatibility_residual(nu, g):.1e}")
nu = AlgebraMatrix.identity(THETA)
print(f"  nu = I (self-adjoint): residual {kernel_residual(nu, g):.2f}, "
      f"basis compatibility {basis_compatibility_residual(nu, g):.2f}")

print("inner curvature on the flat metric with mu(a) = -a I")
flat = flat_metric(THETA)
probes = default_probes(THETA)
mu = MuMap([(d, AlgebraMatrix.diag(d.a_tilde, d.a_tilde).scale(-1)) for d in probes])
for x in probes:
    for y in probes:
        br = InnerDerivation(commutator(y.a_tilde, x.a_tilde))
        mu = mu.extend(br, AlgebraMatrix.diag(br.a_tilde, br.a_tilde).scale(-1))
worst = max(inner_curvature(flat, mu, x, y).norm() for x in probes for y in probes)
print(f"  max norm over probe pairs {worst:.1e}")

print("a map that does not respect brackets")
gamma = g.entries
br = InnerDerivation(commutator(b.a_tilde, a.a_tilde))
bad = MuMap([(a, AlgebraMatrix.identity(THETA, c=1j)), (b, gamma.scale(1j)), (br, (gamma @ gamma).scale(1j))])
print(f"  norm of R(ad_a, ad_b) = {inner_curvature(g, bad, a, b).norm():.3g}")
