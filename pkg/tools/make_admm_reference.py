"""Regenerate the frozen reference minimum for the 32x32 disk problem.

Solves the same discrete objective as the ADMM solver —
``||SH f||_{1,w} + 1/2 ||R f - y||^2  s.t. f >= 0`` on a fixed noiseless
disk scan — with an unrelated first-order method (a primal-dual hybrid
gradient scheme on the stacked operator ``K = [R; SH]``), run far past
practical convergence.  The resulting objective value is pinned in
``tests/test_acceptance.py``; rerun this script only if the pinned problem
itself changes, and update the constant there.

Usage:  python3 tools/make_admm_reference.py [iterations]
"""

import sys
import time

import numpy as np

from lti.phantom import make_circle
from lti.shearlet import build_system
from lti.solver import ShearletAnalysis, objective, preset_params
from lti.tomo import default_geometry, radon_adjoint, radon_forward

N = 32
HALF_ANGLE = np.radians(50.0)
N_ANGLES = 51
RADIUS_FRAC = 0.30


def pinned_problem():
    """The exact problem instance the acceptance test re-solves."""
    geometry = default_geometry(N, HALF_ANGLE, n_angles=N_ANGLES)
    disk = make_circle(N, RADIUS_FRAC, 1.0)
    y = radon_forward(disk, geometry)
    params = preset_params("ellipses50", 1)
    system = build_system(N, (0,))
    return geometry, y, ShearletAnalysis(system), params


def operator_norm(geometry, n, iterations=100, seed=0):
    """Largest singular value of the scan operator, by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    for _ in range(iterations):
        x = radon_adjoint(radon_forward(x, geometry), geometry, n)
        x /= np.linalg.norm(x)
    return float(np.sqrt(np.linalg.norm(radon_forward(x, geometry)) ** 2))


def solve_reference(iterations=100_000):
    geometry, y, L, params = pinned_problem()
    weights = np.broadcast_to(
        L.coefficient_weights(params), (N, N, L.system.n_subbands)
    )
    # Step sizes: tau * sigma * ||K||^2 <= 1 with ||K||^2 = ||R||^2 + 1
    # (the frame is Parseval, so its operator norm is exactly 1).
    norm_sq = operator_norm(geometry, N) ** 2 + 1.0
    tau = sigma = 0.99 / np.sqrt(norm_sq)

    f = np.zeros((N, N))
    f_bar = f.copy()
    p = np.zeros_like(y)
    q = np.zeros_like(weights)
    for k in range(iterations):
        p = (p + sigma * (radon_forward(f_bar, geometry) - y)) / (1.0 + sigma)
        q = np.clip(q + sigma * L.forward(f_bar), -weights, weights)
        f_new = np.maximum(
            f - tau * (radon_adjoint(p, geometry, N) + L.adjoint(q)), 0.0
        )
        f_bar = 2.0 * f_new - f
        f = f_new
    return f, objective(f, y, geometry, L, params)


def main():
    iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
    start = time.time()
    f, value = solve_reference(iterations)
    print(f"iterations: {iterations}")
    print(f"elapsed:    {time.time() - start:.1f}s")
    print(f"objective:  {value!r}")
    print(f"max pixel:  {f.max():.6f}")


if __name__ == "__main__":
    main()
