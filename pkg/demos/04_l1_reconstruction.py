# Reconstruction by weighted l1-analysis regularization.
#
# Instead of inverting the scan directly, solve
#
#     minimize  || SH f ||_{1,w}  +  1/2 || R f - y ||^2   subject to  f >= 0
#
# where SH is the shearlet analysis operator, R the scan operator, and w
# puts larger weights on finer scales.  An ADMM splitting alternates a
# conjugate-gradient linear solve with soft-thresholding of the shearlet
# coefficients and a clip to nonnegative images.  On a missing-wedge scan
# this beats FBP by a wide margin: the penalty kills the streaks, and the
# nonnegativity constraint even restores part of the unmeasured wedge.

import numpy as np

from lti import (
    NoiseSpec,
    ShearletAnalysis,
    admm_solve,
    build_system,
    default_geometry,
    evaluate,
    fbp,
    make_circle,
    preset_params,
    simulate_measurements,
)

n = 64
phi = np.radians(50.0)
geometry = default_geometry(n, phi)
truth = make_circle(n, 0.3, 1.0)
y = simulate_measurements(truth, geometry, NoiseSpec(0.01, seed=1), oversample=2)

system = build_system(n)
params = preset_params("ellipses50", n_scales=len(system.levels))
print(
    f"preset ellipses50: rho0={params.rho0}, rho1={params.rho1}, "
    f"scale weights {tuple(round(w, 4) for w in params.scale_weights)}"
)

image, state = admm_solve(y, geometry, ShearletAnalysis(system), params)

for name, recon in (("fbp", fbp(y, geometry, n)), ("l1-shearlet", image)):
    row = evaluate(name, recon, truth)
    print(f"{name:12s} RE {row.re:.4f}  PSNR {row.psnr:5.2f} dB  SSIM {row.ssim:.4f}")

# The objective settles monotonically after the first few alternations.
history = state.objective_history
marks = [0, 1, 2, 4, 9, 24, len(history) - 1]
print("\nobjective along the iterations:")
for k in marks:
    print(f"  iter {k + 1:3d}: {history[k]:.6f}")
