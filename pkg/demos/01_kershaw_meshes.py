"""Kershaw meshes: how the anisotropy parameter degrades element quality."""
import numpy as np

from semprecond import KershawParams, compute_metrics, generate_kershaw

E = 12
print(f"{'eps':>6} {'SJ min':>8} {'SJ avg':>8} {'AR max':>9} {'AR avg':>8} {'h min':>9}")
for eps in (1.0, 0.3, 0.05):
    mesh = generate_kershaw(KershawParams(eps, E))
    m = compute_metrics(mesh, 1)
    print(f"{eps:6.2f} {m.scaled_jacobian[0]:8.3f} {m.scaled_jacobian[2]:8.3f} "
          f"{m.aspect_ratio[1]:9.1f} {m.aspect_ratio[2]:8.1f} {m.gll_spacing[0]:9.2e}")

# the map keeps the x coordinate and shears y, z layer by layer
mesh = generate_kershaw(KershawParams(0.3, 6))
corners = mesh.corner_coords
print("\nelement 0 corners (eps=0.3):")
print(np.round(corners[0], 4))
