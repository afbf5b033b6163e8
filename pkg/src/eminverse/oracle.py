"""
Brute-force reference implementations, used by the test-suite only.

Nothing here calls into the optimized modules: the bump profile, kernel,
self-cell value, delta sequence and its transform are re-derived with plain
loops and adaptive quadrature.  Only the data containers are shared.
Every routine refuses instances beyond desk scale.
"""

import cmath
import math

import numpy as np
from scipy import integrate

from .errors import InstanceTooLarge

__all__ = [
    "oracle_apply_T",
    "oracle_born_f_radial",
    "oracle_reconstruct",
    "oracle_pair_integral",
]

MAX_CELLS = 512
MAX_TERMS = 4096


def _p_and_grad(medium, k, y):
    p = 0j
    grad = [0j, 0j, 0j]
    for b in medium.bumps:
        d = [y[a] - b.center[a] for a in range(3)]
        s = 1.0 - (d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / b.radius**2
        if s <= 0:
            continue
        p += k * k * b.amplitude * s**b.power
        coef = k * k * b.amplitude * b.power * s ** (b.power - 1) * (-2.0 / b.radius**2)
        for a in range(3):
            grad[a] += coef * d[a]
    return p, grad


def _self_cell(h, k):
    a = (3.0 * h**3 / (4.0 * math.pi)) ** (1.0 / 3.0)
    re = integrate.quad(lambda r: r * math.cos(k * r), 0.0, a, epsabs=1e-15, epsrel=1e-13)[0]
    im = integrate.quad(lambda r: r * math.sin(k * r), 0.0, a, epsabs=1e-15, epsrel=1e-13)[0]
    return complex(re, im)


def oracle_apply_T(grid, medium, wave, E):
    """Nested-loop evaluation of ``T E``."""
    n = len(grid.centers)
    if n > MAX_CELLS:
        raise InstanceTooLarge(f"{n} cells > {MAX_CELLS}")
    k = wave.k
    h3 = grid.h**3
    pts = [tuple(float(c) for c in x) for x in grid.centers]
    pq = []
    for y in pts:
        p, grad = _p_and_grad(medium, k, y)
        pq.append((p, [g / (k * k + p) for g in grad]))
    s_self = _self_cell(grid.h, k)

    out = np.zeros((n, 3), dtype=complex)
    for i in range(n):
        xi = pts[i]
        acc = [0j, 0j, 0j]
        for j in range(n):
            p, q = pq[j]
            Ej = E[j]
            if i == j:
                for a in range(3):
                    acc[a] += s_self * p * Ej[a]
                continue
            yj = pts[j]
            d = [xi[0] - yj[0], xi[1] - yj[1], xi[2] - yj[2]]
            r = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            g = cmath.exp(1j * k * r) / (4.0 * math.pi * r)
            qE = q[0] * Ej[0] + q[1] * Ej[1] + q[2] * Ej[2]
            dg = g * (1j * k - 1.0 / r) / r
            for a in range(3):
                acc[a] += g * h3 * p * Ej[a] + dg * d[a] * h3 * qE
        out[i] = acc
    return out


def oracle_born_f_radial(bump, wave, xi_norm):
    """``4 pi int_0^rho r^2 p(r) sinc(xi r) dr`` for one bump centred at the origin."""
    k = wave.k
    rho, m, c = bump.radius, bump.power, bump.amplitude

    def prof(r):
        return k * k * (1.0 - r * r / rho**2) ** m

    if xi_norm == 0:
        kern = lambda r: r * r * prof(r)
    else:
        kern = lambda r: r * r * prof(r) * math.sin(xi_norm * r) / (xi_norm * r) if r > 0 else 0.0
    val = integrate.quad(kern, 0.0, rho, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return 4.0 * math.pi * c * val


def _delta(r, N, R, k):
    if r > 2 * R:
        return 0.0
    b = 2.0 * k * r / (2 * N + 3)
    if b == 0:
        ratio = 1.0
    elif b < 0.02:
        ratio = 1.0 - b * b / 10.0 + b**4 / 280.0 - b**6 / 15120.0 + b**8 / 1330560.0
    else:
        ratio = (math.sin(b) - b * math.cos(b)) / (b**3 / 3.0)
    return (1 - r * r / (4 * R * R)) ** N * (N / (4 * math.pi * R * R)) ** 1.5 * ratio ** (2 * N + 3)


def _a(z, N, R, k):
    if z == 0:
        f = lambda r: 4 * math.pi * r * r * _delta(r, N, R, k)
    else:
        f = lambda r: 4 * math.pi * r * _delta(r, N, R, k) * math.sin(z * r) / z
    return integrate.quad(f, 0.0, 2 * R, epsabs=1e-14, epsrel=1e-12, limit=400)[0]


def oracle_reconstruct(data, points, config):
    """Naive triple loop over (beta node, alpha node, point).

    The filter is recomputed for every term; the normalization follows
    ``config.normalization`` (``"unit"``: the pair measure's exact constant
    ``k^2 / (16 pi^4)``; ``"literal"``: ``k^2 / (32 pi^4)``).
    """
    points = np.atleast_2d(np.asarray(points, float))
    A = data.alpha_quadrature
    B = data.beta_quadrature
    terms = len(A.weights) * len(B.weights) * len(points)
    if terms > MAX_TERMS:
        raise InstanceTooLarge(f"{terms} terms > {MAX_TERMS}")
    k = data.wave.k
    const = k * k / ((16.0 if config.normalization == "unit" else 32.0) * math.pi**4)
    out = np.zeros(len(points), dtype=complex)
    for m, x in enumerate(points):
        acc = 0j
        for i, (b, wb) in enumerate(zip(B.nodes, B.weights)):
            for j, (a, wa) in enumerate(zip(A.nodes, A.weights)):
                xi = [k * (a[c] - b[c]) for c in range(3)]
                z = math.sqrt(xi[0] ** 2 + xi[1] ** 2 + xi[2] ** 2)
                h = z * _a(z, config.N, config.R, k) * const
                phase = cmath.exp(-1j * (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]))
                acc += wb * wa * data.f[i, j] * h * phase
        out[m] = acc
    return out


def oracle_pair_integral(F, k, n=64):
    """``(2 pi / k^2) int_{|xi| <= 2k} F(|xi|) / |xi| d xi`` for radial ``F``.

    This is the ball-side value of a double sphere integral of ``F(k|a - b|)``.
    """
    val = integrate.quad(lambda t: 4 * math.pi * t * F(t), 0.0, 2 * k,
                         epsabs=1e-14, epsrel=1e-13, limit=n)[0]
    return 2 * math.pi / k**2 * val
