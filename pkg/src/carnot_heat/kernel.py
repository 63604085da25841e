"""Heat kernel evaluation for H-type groups.

The kernel at time t (Re t > 0, including complex t) is computed by
oscillatory quadrature of its radial center-frequency representation:
an integral over lambda in R^m of a product of a Gaussian-in-x factor
and a sinh-power weight, oscillating like exp(2*pi*i*<lambda, z/t>).
Everything is radial in lambda, so the m-dimensional integral reduces
to a half-line integral with a cosine (m = 1) or scaled Bessel (m >= 2)
factor.  Gauss-Legendre panels resolve both the oscillation and the
exponential tail; evaluations that cannot be resolved within the node
budget are refused rather than silently degraded.
"""

import math

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import jve as _jve

from .algebra import GroupPoint, HTypeStructure, build_structure, _check_point
from .errors import InvalidDimensionError, QuadratureError, TruncationError
from .grid import GridFunction, centered_origins

_LOG_4PI = math.log(4.0 * math.pi)
_GL_CACHE = {}


def _gauss_legendre(order):
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (x, w)
    return _GL_CACHE[order]


def _panel_nodes(lam, npan, order):
    """Nodes and weights of `npan` equal Gauss-Legendre panels on [0, lam]."""
    x, w = _gauss_legendre(order)
    width = lam / npan
    starts = width * np.arange(npan)
    rr = (starts[:, None] + 0.5 * width * (x[None, :] + 1.0)).ravel()
    ww = np.broadcast_to(0.5 * width * w[None, :], (npan, order)).ravel().copy()
    return rr, ww


def _log_sinh(u):
    """log(sinh(u)) for u > 0 without overflow."""
    u = np.asarray(u, dtype=float)
    small = u < 1.0
    safe = np.where(small, 1.0, u)
    return np.where(small, np.log(np.sinh(np.where(small, u, 1.0))),
                    safe + np.log1p(-np.exp(-2.0 * safe)) - math.log(2.0))


def _r_coth(r):
    """r * coth(2*pi*r), continuous at r = 0 (value 1/(2*pi))."""
    r = np.asarray(r, dtype=float)
    u = 2.0 * np.pi * r
    small = u < 1e-4
    series = (1.0 + u * u / 3.0) / (2.0 * np.pi)
    safe = np.where(small, 1.0, u)
    return np.where(small, series, r / np.tanh(safe))


def _scaled_bessel_ratio(order_nu, zeta):
    """jtilde(zeta) * exp(-|Im zeta|) where jtilde(z) = J_nu(z) / z^nu.

    jtilde is entire and even; the exponential scaling keeps the value
    bounded for complex arguments.  Small |zeta| uses the power series.
    """
    zeta = np.asarray(zeta, dtype=complex)
    absz = np.abs(zeta)
    small = absz < 1e-6
    c0 = 1.0 / (2.0 ** order_nu * _gamma(order_nu + 1.0))
    series = c0 * (1.0 - zeta * zeta / (4.0 * (order_nu + 1.0)))
    series = series * np.exp(-np.abs(zeta.imag))
    safe = np.where(small, 1.0, zeta)
    full = _jve(order_nu, safe) / safe ** order_nu
    return np.where(small, series, full)


class KernelProfile:
    """Radial center-frequency profile of the unit-time kernel at fixed x.

    Calling the profile at u >= 0 gives
        exp(-(pi/2) * u * coth(2*pi*u) * |x|^2) * (u / (4*pi*sinh(2*pi*u)))^n
    with the continuous limit (1/(8*pi^2))^n * exp(-|x|^2/4) at u = 0.
    The kernel value at (x, z) is the m-dimensional radial Fourier
    transform of this profile evaluated at |z|.
    """

    def __init__(self, x_norm, n):
        if n < 1:
            raise InvalidDimensionError("n must be >= 1, got %r" % (n,))
        self.x_norm = float(x_norm)
        self.n = int(n)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        if np.any(u < 0):
            raise ValueError("profile argument must be >= 0")
        xsq = self.x_norm * self.x_norm
        gauss = np.exp(-0.5 * np.pi * _r_coth(u) * xsq)
        v = 2.0 * np.pi * u
        small = v < 1e-4
        log_body = np.where(
            small,
            -math.log(8.0 * np.pi ** 2) - v * v / 6.0,
            np.log(np.where(small, 1.0, u)) - _LOG_4PI - _log_sinh(np.where(small, 1.0, v)),
        )
        out = gauss * np.exp(self.n * log_body)
        return float(out[0]) if scalar else out

    def at_zero(self):
        return (8.0 * np.pi ** 2) ** (-self.n) * math.exp(-0.25 * self.x_norm ** 2)


def radial_fourier(profile, m, z_norm, rel_tol=1e-12, order=24):
    """m-dimensional Fourier transform of a radial profile at radius z_norm.

    Computes the integral over R^m of profile(|lambda|) exp(2 pi i <lambda, zeta>)
    for any |zeta| = z_norm, assuming the profile decays fast enough for the
    integral to converge absolutely.  The integration range is grown until the
    profile has decayed below rel_tol of its value near zero.
    """
    if m < 1:
        raise InvalidDimensionError("m must be >= 1, got %r" % (m,))
    z_norm = abs(float(z_norm))
    scale = abs(profile(0.0)) + abs(profile(0.5)) + 1e-300
    r_max = 1.0
    while abs(profile(r_max)) > rel_tol * 1e-4 * scale:
        r_max *= 2.0
        if r_max > 1e6:
            raise QuadratureError("profile does not decay; transform refused")
    cycles = r_max * z_norm
    npan = int(max(16, 2.0 * r_max, 2.0 * cycles))
    rr, ww = _panel_nodes(r_max, npan, order)
    vals = profile(rr)
    if m == 1:
        return 2.0 * float(np.sum(ww * vals * np.cos(2.0 * np.pi * rr * z_norm)))
    nu = 0.5 * m - 1.0
    bess = _scaled_bessel_ratio(nu, 2.0 * np.pi * rr * z_norm).real
    front = 2.0 * np.pi * (2.0 * np.pi) ** nu
    return front * float(np.sum(ww * vals * bess * rr ** (m - 1)))


class KernelEvaluator:
    """Adaptive quadrature evaluator for the heat kernel of one structure.

    Evaluations are planned from the decay margin of the integrand: the
    sinh-power weight contributes exponential decay 2*pi*n, the Gaussian
    factor adds (pi/2)|x|^2 Re(1/t), and the oscillatory factor can eat
    2*pi*|z|*|Im(1/t)| of it.  If the margin is below `min_margin` the
    evaluation is refused (QuadratureError); otherwise the integration
    length and panel count are chosen so the truncated tail is below
    1e-14 of scale and every oscillation period gets >= 2 panels.
    """

    def __init__(self, structure, order=16, refine=1.0, node_budget=2_000_000,
                 min_margin=0.05):
        if not isinstance(structure, HTypeStructure):
            raise TypeError("structure must be an HTypeStructure")
        if order < 4:
            raise InvalidDimensionError("quadrature order must be >= 4")
        self.structure = structure
        self.order = int(order)
        self.refine = float(refine)
        self.node_budget = int(node_budget)
        self.min_margin = float(min_margin)
        # tail bound sanity: exp(-45) ~ 2.9e-20 leaves headroom below 1e-14
        assert 45.0 > -math.log(1e-14)

    def _plan(self, w, xsq, znorm):
        n = self.structure.n
        alpha = (2.0 * np.pi * n + 0.5 * np.pi * xsq * w.real
                 - 2.0 * np.pi * znorm * abs(w.imag))
        # margin is checked by the caller; clamp only to keep planning finite
        lam = 45.0 / np.maximum(alpha, 1e-3)
        cycles = znorm * abs(w.real) * lam + 0.25 * xsq * abs(w.imag) * lam
        npan = np.maximum(8.0, np.maximum(2.0 * lam, 2.0 * cycles)) * self.refine
        return alpha, lam, npan

    def evaluate(self, t, xsq, znorm):
        """Kernel value at squared horizontal norm xsq, center norm znorm."""
        out = self.evaluate_batch(t, np.array([xsq], dtype=float),
                                  np.array([znorm], dtype=float))
        return complex(out[0])

    def evaluate_batch(self, t, xsq, znorm):
        """Vectorized kernel values; xsq and znorm must have the same shape."""
        t = complex(t)
        if not (t.real > 0):
            raise QuadratureError("kernel time must have positive real part")
        xsq = np.asarray(xsq, dtype=float)
        znorm = np.abs(np.asarray(znorm, dtype=float))
        if xsq.shape != znorm.shape:
            raise ValueError("xsq and znorm shapes differ")
        if np.any(xsq < 0):
            raise ValueError("xsq must be >= 0")
        shape = xsq.shape
        pairs = np.stack([xsq.ravel(), znorm.ravel()], axis=1)
        uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
        w = 1.0 / t
        alpha, lam, npan = self._plan(w, uniq[:, 0], uniq[:, 1])
        if np.any(alpha <= self.min_margin):
            k = int(np.argmin(alpha))
            raise QuadratureError(
                "oscillation exceeds decay margin (margin %.3g at |x|^2=%.3g, "
                "|z|=%.3g, t=%s); refusing evaluation"
                % (alpha[k], uniq[k, 0], uniq[k, 1], t))
        if np.any(npan * self.order > self.node_budget):
            k = int(np.argmax(npan))
            raise QuadratureError(
                "node budget exceeded (%d nodes needed at |x|^2=%.3g, |z|=%.3g, "
                "t=%s); refusing evaluation"
                % (int(npan[k] * self.order), uniq[k, 0], uniq[k, 1], t))
        order_idx = np.argsort(npan, kind="stable")
        vals = np.empty(uniq.shape[0], dtype=complex)
        pos = 0
        n_uniq = uniq.shape[0]
        while pos < n_uniq:
            # chunk so peak temporary arrays stay around ~1e6 entries
            probe_nodes = int(npan[order_idx[min(pos + 1, n_uniq - 1)]]) * self.order
            chunk = max(1, min(512, 1_000_000 // max(probe_nodes, 1)))
            idx = order_idx[pos:pos + chunk]
            pos += chunk
            vals[idx] = self._chunk_values(w, uniq[idx, 0], uniq[idx, 1],
                                           float(np.max(lam[idx])),
                                           int(np.ceil(np.max(npan[idx]))))
        vals *= t ** (-(self.structure.n + self.structure.m))
        return vals[inverse].reshape(shape)

    def _chunk_values(self, w, xsq, znorm, lam, npan):
        n = self.structure.n
        m = self.structure.m
        rr, ww = _panel_nodes(lam, npan, self.order)
        log_body = n * (np.log(rr) - _LOG_4PI - _log_sinh(2.0 * np.pi * rr))
        gauss_rate = 0.5 * np.pi * _r_coth(rr)
        zeta = (2.0 * np.pi * w) * rr[None, :] * znorm[:, None]
        abs_im = np.abs(zeta.imag)
        core = np.exp(-gauss_rate[None, :] * xsq[:, None] * w
                      + log_body[None, :] + abs_im)
        if m == 1:
            osc = 0.5 * (np.exp(1j * zeta - abs_im) + np.exp(-1j * zeta - abs_im))
            return 2.0 * (core * osc) @ ww
        nu = 0.5 * m - 1.0
        bess = _scaled_bessel_ratio(nu, zeta)
        front = 2.0 * np.pi * (2.0 * np.pi) ** nu
        return front * (core * bess * rr[None, :] ** (m - 1)) @ ww


_EVALUATOR_CACHE = {}


def default_evaluator(structure):
    key = (structure.n, structure.m)
    ev = _EVALUATOR_CACHE.get(key)
    if ev is None or ev.structure is not structure:
        cached = _EVALUATOR_CACHE.get(key)
        if cached is not None and cached.structure.n == structure.n \
                and cached.structure.m == structure.m:
            return cached
        ev = KernelEvaluator(structure)
        _EVALUATOR_CACHE[key] = ev
    return ev


def eval_kernel(structure, t, point, evaluator=None):
    """Heat kernel value at a group point for time t (Re t > 0)."""
    _check_point(structure, point)
    ev = evaluator if evaluator is not None else default_evaluator(structure)
    xsq = float(np.dot(point.x, point.x))
    znorm = float(np.linalg.norm(point.z))
    return ev.evaluate(t, xsq, znorm)


def heisenberg_center_slice(t, z_norm):
    """Closed form of the kernel on the center axis for n = m = 1.

    Derived by residue summation of the center-frequency integral:
    p_t(0, z) = t^-2 / (32 pi) * sech(pi z / (2 t))^2.
    Valid for complex t with Re t > 0.
    """
    t = complex(t)
    if not (t.real > 0):
        raise QuadratureError("kernel time must have positive real part")
    arg = 0.5 * np.pi * np.asarray(z_norm, dtype=complex) / t
    val = t ** (-2.0) / (32.0 * np.pi) * np.cosh(arg) ** (-2.0)
    if t.imag == 0.0:
        val = val.real
    if np.ndim(z_norm) == 0:
        return val[()] if isinstance(val, np.ndarray) else val
    return val


def _decay_time(s_total):
    """Effective real decay time of the kernel at possibly complex time.

    Exponential center decay rates scale with Re(1/t); for real t this is
    t itself.
    """
    w = 1.0 / complex(s_total)
    if w.real <= 0:
        raise QuadratureError("kernel time must have positive real part")
    return 1.0 / w.real


def center_extent_for_time(s_total, rel_cut=1e-8):
    """Center-axis half-width beyond which the kernel at time s_total has
    decayed below rel_cut of its peak along the center axis itself.

    From the sech^2 center-slice law: 4 exp(-pi z / s) = rel_cut.  Note the
    decay away from the x = 0 axis is slower; grids that must control the
    whole z-boundary face should use z_extent_for_time instead.
    """
    return _decay_time(s_total) * (math.log(4.0 / rel_cut) / math.pi)


def z_extent_for_time(s_total, rel_cut=1e-8):
    """Center half-width beyond which the kernel at time s_total is below
    rel_cut of its peak uniformly in x.

    The worst x slice decays at half the center-axis rate (the same
    exp(-pi z / 2s) law as the x-integrated marginal, prefactor ~0.3
    measured against quadrature); this solves 0.3 exp(-pi Z / 2s) = rel_cut.
    """
    return _decay_time(s_total) * (2.0 / math.pi) * math.log(0.3 / rel_cut)


def sample_kernel(structure, t, counts, spacings, origins=None, evaluator=None,
                  metadata=None):
    """Sample the heat kernel at time t on a regular grid.

    Returns a GridFunction over all 2n + m axes; the grid is centered at
    the group identity unless origins are given.
    """
    counts = tuple(int(c) for c in counts)
    spacings = tuple(float(h) for h in spacings)
    dim = 2 * structure.n + structure.m
    if len(counts) != dim or len(spacings) != dim:
        raise InvalidDimensionError(
            "expected %d axes, got %d counts / %d spacings"
            % (dim, len(counts), len(spacings)))
    if origins is None:
        origins = centered_origins(counts, spacings)
    origins = tuple(float(o) for o in origins)
    axes = [origins[i] + spacings[i] * np.arange(counts[i]) for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    xsq = np.zeros(counts, dtype=float)
    for i in range(2 * structure.n):
        xsq += mesh[i] * mesh[i]
    zsq = np.zeros(counts, dtype=float)
    for i in range(2 * structure.n, dim):
        zsq += mesh[i] * mesh[i]
    znorm = np.sqrt(zsq)
    ev = evaluator if evaluator is not None else default_evaluator(structure)
    values = ev.evaluate_batch(t, xsq, znorm)
    meta = {"kernel_time": t, "quadrature_order": ev.order}
    if metadata:
        meta.update(metadata)
    return GridFunction(structure, counts, spacings, origins, values, meta)


def grid_mass(grid):
    """Trapezoid integral of the grid values over the full box."""
    vals = grid.values
    for i in range(vals.ndim - 1, -1, -1):
        vals = np.trapezoid(vals, dx=grid.spacings[i], axis=i)
    return complex(vals)


def kernel_mass_constant(n):
    """Total integral of the kernel over the group: (2 pi)^-n, any t."""
    return (2.0 * np.pi) ** (-n)


def convolution_partner_grid(structure, t, f, rel_cut=1e-14, x_rel_cut=1e-8,
                             evaluator=None):
    """Sample the kernel at time t on a grid fit to convolve against f.

    The x axes use an odd lattice of integer multiples of f's spacings
    (the difference of two f lattice points always lands on it).  Their
    half width is f's own extent plus the kernel's Gaussian decay extent
    at time t, capped at twice f's extent since argument differences
    never reach further; this keeps slowly spreading kernels (large or
    nearly imaginary t) covered wherever they still matter.  The center
    axes keep f's spacings but run out to the worst-x decay extent of the
    kernel at time t plus f's own center half-width, so twisted lookups
    leaving the grid only drop values below rel_cut of the peak.
    """
    two_n = 2 * structure.n
    dim = two_n + structure.m
    re_w = (1.0 / complex(t)).real
    if re_w <= 0:
        raise QuadratureError("kernel time must have positive real part")
    x_decay = np.sqrt(4.0 * np.log(1.0 / x_rel_cut) / re_w)
    counts = []
    spacings = []
    origins = []
    for a in range(two_n):
        h = f.spacings[a]
        extent = max(abs(f.origins[a]),
                     abs(f.origins[a] + h * (f.counts[a] - 1)))
        half = min(2.0 * extent, extent + x_decay)
        k = int(np.ceil(half / h))
        counts.append(2 * k + 1)
        spacings.append(h)
        origins.append(-k * h)
    for a in range(two_n, dim):
        h = f.spacings[a]
        f_half = max(abs(f.origins[a]),
                     abs(f.origins[a] + h * (f.counts[a] - 1)))
        half = z_extent_for_time(t, rel_cut) + f_half
        k = int(np.ceil(half / h))
        counts.append(2 * k + 1)
        spacings.append(h)
        origins.append(-k * h)
    ev = evaluator if evaluator is not None else default_evaluator(structure)
    return sample_kernel(structure, t, tuple(counts), tuple(spacings),
                         origins=tuple(origins), evaluator=ev)


def check_semigroup(structure, t1, t2, counts, spacings, evaluator=None):
    """Convolve kernels at times t1 and t2 and compare with time t1 + t2.

    The convolution identity carries the group's mass normalization:
    p_{t1} * p_{t2} = (2 pi)^-n p_{t1+t2}.  The second factor is sampled
    on a difference-aligned, center-extended grid so the twisted lookups
    stay inside it; boundary values above 1e-6 of either factor's peak
    raise TruncationError instead of returning a polluted error.
    """
    from .operators import group_convolve

    if not (t1 > 0 and t2 > 0):
        raise QuadratureError("semigroup check needs real positive times")
    ev = evaluator if evaluator is not None else default_evaluator(structure)
    f = sample_kernel(structure, t1, counts, spacings, evaluator=ev)
    g = convolution_partner_grid(structure, t2, f, evaluator=ev)
    for grid in (f, g):
        b = grid.boundary_max()
        if b > 1e-6 * float(np.max(np.abs(grid.values))):
            raise TruncationError(
                "boundary level %.3g of peak too large for semigroup check" % b)
    conv = group_convolve(structure, f, g)
    direct = sample_kernel(structure, t1 + t2, counts, spacings, evaluator=ev)
    target = kernel_mass_constant(structure.n) * direct.values
    err = np.abs(conv.values - target)
    return {
        "max_abs_error": float(np.max(err)),
        "peak": float(np.max(np.abs(target))),
        "relative": float(np.max(err) / np.max(np.abs(target))),
    }


def check_heat_equation(structure, t, h, x_extent, z_extent, h_center=None,
                        delta=1e-4, evaluator=None):
    """Residual of the heat equation for the sampled kernel at time t.

    The time derivative is a centered difference over +-delta; the spatial
    generator is the direct-stencil sub-Laplacian.  Returns the maximum
    interior residual normalized by the kernel peak, which contracts like
    h^2 / t^2 for the second-order stencils.
    """
    from .operators import sublaplacian

    ev = evaluator if evaluator is not None else default_evaluator(structure)
    if h_center is None:
        h_center = 0.5 * h
    dim = 2 * structure.n + structure.m
    counts = []
    spacings = []
    for i in range(dim):
        if i < 2 * structure.n:
            half = int(round(x_extent / h))
            counts.append(2 * half + 1)
            spacings.append(float(h))
        else:
            half = int(round(z_extent / h_center))
            counts.append(2 * half + 1)
            spacings.append(float(h_center))
    counts = tuple(counts)
    spacings = tuple(spacings)
    mid = sample_kernel(structure, t, counts, spacings, evaluator=ev)
    lo = sample_kernel(structure, t - delta, counts, spacings, evaluator=ev)
    hi = sample_kernel(structure, t + delta, counts, spacings, evaluator=ev)
    dt = (hi.values - lo.values) / (2.0 * delta)
    lap = sublaplacian(structure, mid)
    resid = np.abs(dt - lap.values)
    interior = ~np.isnan(lap.values.real)
    peak = float(np.max(np.abs(mid.values)))
    max_resid = float(np.max(resid[interior]))
    return {
        "max_residual": max_resid / peak,
        "max_residual_abs": max_resid,
        "peak": peak,
        "counts": counts,
        "spacings": spacings,
    }


def check_radon_reduction(n, m, x_norm, s_values, w_extent=None, order=16,
                          rel_cut=1e-15):
    """Verify collapse of the m-center kernel to the 1-center kernel.

    Integrating the kernel of the (n, m) structure over an (m-1)-plane of
    center directions orthogonal to a unit vector reproduces the kernel of
    the (n, 1) structure at the remaining coordinate.  Radially this reads
    omega_{m-2} * int_0^W P_{n,m}(x, sqrt(s^2 + w^2)) w^{m-2} dw
    = c * P_{n,1}(x, s) and the check fits c at the first abscissa and
    reports the worst relative deviation across the rest.
    """
    if m < 2:
        raise InvalidDimensionError("reduction needs m >= 2")
    s_values = np.asarray(s_values, dtype=float)
    struct_m = build_structure(n, m)
    struct_1 = build_structure(n, 1)
    ev_m = default_evaluator(struct_m)
    ev_1 = default_evaluator(struct_1)
    if w_extent is None:
        # center decay of the unit-time kernel is at least exp(-pi |z|)
        w_extent = -math.log(rel_cut) / math.pi
    npan = int(max(16, 2 * w_extent, 2 * np.max(np.abs(s_values)) + 8))
    wn, wq = _panel_nodes(w_extent, npan, order)
    zn = np.sqrt(s_values[:, None] ** 2 + wn[None, :] ** 2)
    xsq = np.full_like(zn, x_norm * x_norm)
    inner = ev_m.evaluate_batch(1.0, xsq, zn).real
    omega = 2.0 * np.pi ** (0.5 * (m - 1)) / _gamma(0.5 * (m - 1))
    rhs = omega * (inner * wn[None, :] ** (m - 2)) @ wq
    lhs = ev_1.evaluate_batch(
        1.0, np.full_like(s_values, x_norm * x_norm), np.abs(s_values)).real
    c_fit = float(lhs[0] / rhs[0])
    dev = np.abs(lhs - c_fit * rhs) / np.abs(lhs)
    return {
        "c": c_fit,
        "max_rel_dev": float(np.max(dev)),
        "s_values": s_values,
        "lhs": lhs,
        "rhs": rhs,
    }


def _estimate_env(structure, eps, t, xsq, znorm, side):
    n, m = structure.n, structure.m
    if side == "upper":
        quad = (1.0 - eps) * xsq + np.pi * eps * znorm
    else:
        quad = (1.0 + eps) * xsq + (20.0 * np.pi / eps) * znorm
    return float(t) ** (-(n + m)) * np.exp(-quad / (4.0 * float(t)))


def check_gaussian_estimates(structure, eps, t, x_extent, z_extent,
                             points_per_axis=13, evaluator=None):
    """Sandwich the kernel between split-exponent Gaussian envelopes.

    For real t the kernel is bounded above by C * t^-(n+m)
    exp(-((1-eps)|x|^2 + pi eps |z|) / 4t) and below by the matching
    envelope with exponents (1+eps, 20 pi / eps).  For complex t only the
    upper bound survives, with t^-(n+m) replaced by Re(t)^-(n+m) and the
    exponent taken as Re of the complex quadratic form.  Returns the
    smallest admissible constant over the sampled box and over the doubled
    box, so the caller can assert stability under box growth.
    """
    ev = evaluator if evaluator is not None else default_evaluator(structure)
    if not (0 < eps < 1):
        raise ValueError("eps must be in (0, 1)")
    t = complex(t)

    def constant(xe, ze):
        xn = np.linspace(0.0, xe, points_per_axis)
        zn = np.linspace(0.0, ze, points_per_axis)
        xg, zg = np.meshgrid(xn, zn, indexing="ij")
        vals = ev.evaluate_batch(t, xg ** 2, zg)
        if abs(t.imag) < 1e-300:
            p = vals.real
            upper = _estimate_env(structure, eps, t.real, xg ** 2, zg, "upper")
            lower = _estimate_env(structure, eps, t.real, xg ** 2, zg, "lower")
            c = max(1.0, float(np.max(p / upper)), float(np.max(lower / p)))
        else:
            nm = structure.n + structure.m
            quad = (1.0 - eps) * xg ** 2 + np.pi * eps * zg
            env = t.real ** (-nm) * np.exp(-(quad * (0.25 / t)).real)
            c = max(1.0, float(np.max(np.abs(vals) / env)))
        return c

    c1 = constant(x_extent, z_extent)
    c2 = constant(2.0 * x_extent, 2.0 * z_extent)
    out = {"constant": c1, "constant_doubled": c2,
           "drift": abs(c2 - c1) / c1}
    if abs(t.imag) < 1e-300:
        out["distance_band"] = _distance_band(structure, t.real, x_extent,
                                              z_extent, points_per_axis, ev)
    return out


def _distance_band(structure, t, x_extent, z_extent, points_per_axis, ev):
    """Ratio band of the kernel against the distance-based profile
    (1 + d)^{2n+m-1} / (1 + (|x| d)^{n - 1/2}) exp(-d^2 / 4) at unit time,
    carried to time t by the parabolic scaling."""
    from .geometry import _norm_distance

    n, m = structure.n, structure.m
    xn = np.linspace(0.0, x_extent, points_per_axis)
    zn = np.linspace(0.0, z_extent, points_per_axis)
    xg, zg = np.meshgrid(xn, zn, indexing="ij")
    vals = ev.evaluate_batch(t, xg ** 2, zg).real
    rt = math.sqrt(t)
    ratios = []
    for i in range(points_per_axis):
        for j in range(points_per_axis):
            d = _norm_distance(xg[i, j] / rt, zg[i, j] / t).d
            prof = ((1.0 + d) ** (2 * n + m - 1)
                    / (1.0 + (xg[i, j] / rt * d) ** (n - 0.5))
                    * math.exp(-0.25 * d * d)) * t ** (-(n + m))
            ratios.append(vals[i, j] / prof)
    ratios = np.asarray(ratios)
    return {"min": float(np.min(ratios)), "max": float(np.max(ratios)),
            "spread": float(np.max(ratios) / np.min(ratios))}
