"""Criticality solving and geodesics over policy-lever space.

Run as: python3 demos/03_geodesics.py
"""

import math

import numpy as np

from grovekit import (
    Functional,
    christoffel,
    cyclic_group,
    dihedral_group,
    direct_product,
    euclidean_metric,
    first_variation,
    integrate_geodesic,
    lever_metric,
    optimal_policy_path,
    policy_information,
    solve_critical,
    sphere_metric,
    word_distance_cost,
)

print("== criticality on a quadratic bowl and Rosenbrock ==")
bowl = Functional(lambda t: float((t - np.array([1.0, -2.0])) @
                                  (t - np.array([1.0, -2.0]))), 2, "bowl")
theta = solve_critical(bowl, [5.0, 5.0], tol=1e-8)
print("bowl minimum:", theta, "residual",
      np.linalg.norm(first_variation(bowl, theta)))
rosen = Functional(
    lambda t: float((1 - t[0]) ** 2 + 100 * (t[1] - t[0] ** 2) ** 2),
    2, "rosenbrock")
theta = solve_critical(rosen, [-1.2, 1.0], tol=1e-4)
print("rosenbrock minimum:", theta)

print("\n== connection coefficients on the 2-sphere ==")
point = [0.7, 0.3]
gamma = christoffel(sphere_metric(), point)
print(f"Gamma^theta_phiphi = {gamma[0, 1, 1]:.6f} "
      f"(closed form {-math.sin(0.7) * math.cos(0.7):.6f})")

print("\n== geodesics ==")
flat = integrate_geodesic(euclidean_metric(2), [0, 0], [1.0, 0.5], 200, 0.005)
print("euclidean endpoint:", flat.end, "(straight line)")
equator = integrate_geodesic(sphere_metric(), [math.pi / 2, 0.0],
                             [0.0, 1.0], 500, 0.004)
drift = np.max(np.abs(equator.points[:, 0] - math.pi / 2))
print(f"equator drift over 500 steps: {drift:.2e}")
energies = equator.energies(sphere_metric())
print(f"energy drift: {np.max(np.abs(energies - energies[0])):.2e}")

print("\n== policy information over finite groups ==")
eps = 0.2
for name, group in (("C4", cyclic_group(4)), ("D4", dihedral_group(4)),
                    ("C4 x C2", direct_product(cyclic_group(4),
                                               cyclic_group(2)))):
    pcf = word_distance_cost(group)
    print(f"{name}: |G| = {group.order}, "
          f"I(P) = {policy_information(pcf, eps):.3f}")

print("\n== lever metric and the optimal policy path ==")
pcf = word_distance_cost(dihedral_group(4))
metric = lever_metric(pcf)
print("lever metric eigenvalues:",
      np.linalg.eigvalsh(metric(np.zeros(metric.dimension))))
path = optimal_policy_path(pcf, np.zeros(metric.dimension), steps=40)
print("path start", path.start, "-> end", path.end)
