# Which shearlet subbands does a limited-angle scan actually see?
#
# By the Fourier slice theorem a scan with half-angle phi measures exactly
# the frequencies whose direction lies within phi of the first axis.  A
# shearlet subband is "visible" when its frequency support meets that wedge
# and "invisible" otherwise — invisible subbands are untouched by the data,
# no matter the solver.  Three classifiers are compared: the support rule
# (intersects the wedge), the orientation rule (nominal direction within
# phi), and a measurement-driven quantile rule that ranks subbands by how
# much energy one atom of each deposits in the sinogram.

import numpy as np

from lti import (
    build_system,
    default_geometry,
    orientation_classify,
    quantile_classify,
    radon_forward,
    subband_orientation,
    wedge_classify,
)

n = 64
phi = np.radians(50.0)
system = build_system(n)
geometry = default_geometry(n, phi)

masks = {
    "wedge-support": wedge_classify(system, phi),
    "orientation": orientation_classify(system, phi),
    "quantile": quantile_classify(
        system, lambda image: radon_forward(image, geometry), phi
    ),
}
for name, mask in masks.items():
    print(f"{name:14s} visible {mask.n_visible:2d}/{system.n_subbands}")

# Per-subband view.  The three rules agree except near the wedge boundary:
# subbands whose support straddles it are kept by the generous support rule
# but dropped by the orientation rule, and the quantile rule sides with one
# or the other depending on how much of the support is measured.
print("\nscale shear cone  orient     " + "  ".join(f"{k:>13s}" for k in masks))
for pos, band in enumerate(system.index):
    theta = (
        "   --  "
        if band.is_lowpass
        else f"{np.degrees(subband_orientation(system, band)):6.1f} "
    )
    flags = "  ".join(
        f"{'visible' if m.flags[pos] else '      .':>13s}" for m in masks.values()
    )
    print(f"  {band.scale:3d} {band.shear:5d} {band.cone:4d}  {theta}  {flags}")
