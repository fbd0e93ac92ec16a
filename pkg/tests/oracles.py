"""Independent oracles used by the test and acceptance suites.

Everything here is deliberately written from closed forms, without touching
the package's layer evaluation or degree machinery, so that agreement is a
genuine cross-check rather than a tautology.
"""
import numpy as np


# ---------------------------------------------------------------------------
# one-dimensional brute-force oracle for the antipodal line


def omega_profile(s, eps):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    lo = s <= eps / 3
    mid = (s > eps / 3) & (s < 2 * eps / 3)
    out = np.where(lo, 0.5 * s ** 2 - eps ** 2 / 9, out)
    out = np.where(mid, -0.5 * (s - 2 * eps / 3) ** 2, out)
    return out


def smoothstep_cubic(u):
    return 3 * u ** 2 - 2 * u ** 3


def mu_profile(s, eps):
    s = np.asarray(s, dtype=float)
    u = np.clip((s - 2 * eps / 3) / (eps / 3), 0.0, 1.0)
    return np.where(s > 2 * eps / 3, smoothstep_cubic(u), 0.0)


def perturbed_line_potential(v, eps, sign):
    """Closed form of the perturbed profile for phi = sign * x^2 / 2 on the
    line, tube around the origin: phi(mu(|v|) v) + omega(|v|)."""
    s = np.abs(np.asarray(v, dtype=float))
    inside = s < eps
    retracted = mu_profile(s, eps) * v
    return np.where(inside,
                    sign * 0.5 * retracted ** 2 + omega_profile(s, eps),
                    sign * 0.5 * np.asarray(v) ** 2)


def line_component_degree(sign, eps, bbox, n=200001):
    """Boundary-sign degree of the perturbed field on the positive half line.

    Differentiates the closed-form potential numerically on a dense grid and
    compares endpoint signs; also asserts the grid sees no spurious boundary
    sign ambiguity.
    """
    v = np.linspace(1e-6, bbox, n)
    psi = perturbed_line_potential(v, eps, sign)
    dv = v[1] - v[0]
    deriv = np.gradient(psi, dv)
    left = np.sign(deriv[2])
    right = np.sign(deriv[-3])
    assert left != 0 and right != 0
    return int((right - left) / 2)


def line_theta_oracle(sign, eps, bbox=2.0):
    """(origin slot, free-row entry) for phi = sign x^2/2 over the line."""
    return 1, line_component_degree(sign, eps, bbox)


# ---------------------------------------------------------------------------
# winding numbers, hand rolled


def polyline_winding(field_fn, loop_pts):
    vals = field_fn(loop_pts)
    ang = np.arctan2(vals[:, 1], vals[:, 0])
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    assert np.max(np.abs(d)) < np.pi / 2, "refine the loop"
    return float(np.sum(d) / (2 * np.pi))


def circle_winding(field_fn, radius, n=4096, center=(0.0, 0.0)):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    loop = np.stack([center[0] + radius * np.cos(th),
                     center[1] + radius * np.sin(th)], axis=1)
    return polyline_winding(field_fn, loop)


# ---------------------------------------------------------------------------
# Morse-count oracle on a box (dense scan + analytic polish)


def grid_sign_changes_1d(field_fn, lo, hi, n=100001):
    xs = np.linspace(lo, hi, n)[:, None]
    vals = field_fn(xs)[:, 0]
    signs = np.sign(vals)
    crossings = np.nonzero(np.diff(signs) != 0)[0]
    return xs[crossings, 0], signs


def quotient_orbit_count(zeros, indices, weyl_mats, tol=1e-6):
    """Group stratum zeros into Weyl orbits; returns per-orbit index sum.

    Asserts that orbit mates carry equal indices and that all orbits have
    the same size (a free action on each component).
    """
    zeros = np.atleast_2d(zeros)
    remaining = list(range(len(zeros)))
    orbit_indices = []
    sizes = set()
    while remaining:
        i = remaining.pop(0)
        members = [i]
        for w in weyl_mats:
            img = zeros[i] @ w.T
            for j in list(remaining):
                if np.linalg.norm(zeros[j] - img) <= tol:
                    assert indices[j] == indices[i]
                    members.append(j)
                    remaining.remove(j)
        sizes.add(len(members))
        orbit_indices.append(indices[i])
    return sum(orbit_indices), sizes
