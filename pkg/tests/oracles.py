"""
Independent reference implementations used as test oracles.

These are deliberately plain loops over scalars and explicit inverses so they
share no code path with the library.
"""

import math

import numpy as np


def random_spd(rng, k, lo=0.2, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return q @ np.diag(rng.uniform(lo, hi, k)) @ q.T


def kernel(center, inv_disp, z):
    total = 0.0
    k = len(center)
    for a in range(k):
        for b in range(k):
            total += (z[a] - center[a]) * inv_disp[a][b] * (z[b] - center[b])
    return math.exp(-total)


def ts_output(centers, inv_disps, consequents, z):
    """Normalized firing-weighted average of affine rule outputs, one rule at a time."""
    num = 0.0
    den = 0.0
    for c, s, a in zip(centers, inv_disps, consequents):
        r = kernel(c, s, z)
        eta = a[0] + sum(a[m + 1] * z[m] for m in range(len(z)))
        num += r * eta
        den += r
    return num / den


def volume(inv_disp):
    return float(np.linalg.det(np.linalg.inv(inv_disp)))


def posteriors(centers, inv_disps, supports, z):
    joint = []
    for c, s, n in zip(centers, inv_disps, supports):
        v = volume(s)
        like = (2.0 * math.pi * v) ** -0.5 * kernel(c, s, z)
        joint.append(like * n / sum(supports))
    total = sum(joint)
    return [p / total for p in joint]


def covariance_update(inv_disp, center_old, z, support):
    """Update the covariance itself, then invert it explicitly."""
    alpha = 1.0 / (support + 1)
    center = center_old + alpha * (z - center_old)
    d = (z - center).reshape(-1, 1)
    cov = np.linalg.inv(inv_disp)
    cov_new = (1.0 - alpha) * cov + alpha * (1.0 - alpha) * (d @ d.T)
    return center, np.linalg.inv(cov_new)


def cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def batch_stats(xs):
    n = len(xs)
    mean = sum(xs) / n
    return mean, sum((x - mean) ** 2 for x in xs) / n


def square_wave(a, f, t):
    phase = t * f - math.floor(t * f)
    return a if phase < 0.5 else -a
