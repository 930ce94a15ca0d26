"""Constant-coefficient (Laplace) layer operators on a closed smooth curve.

Sign conventions used throughout: with the fundamental solution
G(x, y) = log|x - y| / 2pi, the layer potentials carry a leading minus,

    single layer  S rho(y) = -int_S G(x, y) rho(x) dS(x)
    double layer  D tau(y) = -int_S dG/dn(x) (x, y) tau(x) dS(x)

so the unit double-layer density integrates to -1 inside, -1/2 on and 0
outside the boundary.  Direct values on the curve use the spectrally
accurate product quadrature for the periodic log singularity; the smooth
double-layer diagonal is curvature/2.
"""

from __future__ import annotations

import numpy as np

from .geometry import BoundaryCurve, trig_cardinal

TWO_PI = 2.0 * np.pi

#: Safety coefficient in the upsampled near evaluation: the trapezoid error
#: for a target at distance d decays like exp(-N d / max|x'|).
NEAR_DECAY_MARGIN = 28.0
NEAR_UPSAMPLE_CAP = 1 << 19


class QuadratureError(RuntimeError):
    """A quadrature rule was used outside its validity region."""


def laplace_kernel(x, y):
    """Fundamental-solution value and x-gradient at distinct points.

    Returns (log|x-y|/2pi, (x-y)/(2pi |x-y|^2)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r2 = (d * d).sum(axis=-1)
    if np.any(r2 == 0.0):
        raise QuadratureError("laplace_kernel called with coincident points")
    value = 0.5 * np.log(r2) / TWO_PI
    grad_x = d / (TWO_PI * r2[..., None])
    return value, grad_x


# ---------------------------------------------------------------------------
# Direct values on the curve
# ---------------------------------------------------------------------------

def kress_log_weights(n: int) -> np.ndarray:
    """Product-rule weights R[i, j] for the periodic log kernel.

    Integrates f(tau) * log(4 sin^2((t_i - tau)/2)) over [0, 2pi) exactly
    for trigonometric polynomials of degree < n/2.
    """
    i = np.arange(n)
    d = (TWO_PI / n) * (i[:, None] - i[None, :])
    m = np.arange(1, n // 2)
    R = -(4 * np.pi / n) * (np.cos(d[..., None] * m) / m).sum(axis=-1)
    R -= (4 * np.pi / (n * n)) * np.cos((n // 2) * d)
    return R


def single_layer_matrix(curve: BoundaryCurve) -> np.ndarray:
    """Direct-value single-layer matrix (nodal density -> nodal values)."""
    n = curve.n
    x = curve.points
    dx = x[:, None, :] - x[None, :, :]
    r2 = (dx * dx).sum(-1)
    dt = curve.t[:, None] - curve.t[None, :]
    s2 = 4.0 * np.sin(dt / 2) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = 0.5 * np.log(r2 / s2)
    np.fill_diagonal(smooth, np.log(curve.speeds))
    R = kress_log_weights(n)
    M = -(0.5 * R + (TWO_PI / n) * smooth) / TWO_PI
    return M * curve.speeds[None, :]


def double_layer_matrix(curve: BoundaryCurve) -> np.ndarray:
    """Direct-value double-layer matrix; diagonal is curvature/2.

    The sign convention is pinned by the Gauss identity: row sums must be
    -1/2 to quadrature accuracy.  A gross defect (sign or diagonal-constant
    error) raises.
    """
    M = _dipole_matrix(curve, normals_at="source")
    defect = float(np.abs(M.sum(axis=1) + 0.5).max())
    if defect > 0.05:
        raise QuadratureError(
            f"double-layer Gauss identity defect {defect:.3g}; "
            "sign or diagonal convention is broken")
    return M


def adjoint_double_layer_matrix(curve: BoundaryCurve) -> np.ndarray:
    """Direct values of the normal derivative of the single layer."""
    return _dipole_matrix(curve, normals_at="target")


def _dipole_matrix(curve: BoundaryCurve, normals_at: str) -> np.ndarray:
    n = curve.n
    x = curve.points
    dx = x[None, :, :] - x[:, None, :]        # x_j - x_i
    r2 = (dx * dx).sum(-1)
    np.fill_diagonal(r2, 1.0)
    if normals_at == "source":
        D = (dx * curve.normals[None, :, :]).sum(-1) / r2
    else:
        D = -(dx * curve.normals[:, None, :]).sum(-1) / r2
    np.fill_diagonal(D, curve.curvatures / 2)
    return -(1.0 / TWO_PI) * D * curve.weights[None, :]


# ---------------------------------------------------------------------------
# Off-boundary evaluation (plain trapezoid and upsampled near rules)
# ---------------------------------------------------------------------------

def _upsample_counts(curve: BoundaryCurve, dists: np.ndarray) -> np.ndarray:
    """Node counts making the trapezoid rule converged at each distance.

    Counts are n * 2^k so the coarse nodes embed in the fine lattice.
    """
    need = NEAR_DECAY_MARGIN * curve.max_speed() / np.maximum(dists, 1e-300)
    ratio = np.maximum(need / curve.n, 1.0)
    k = np.ceil(np.log2(ratio)).astype(int)
    k = np.minimum(k, max(int(np.log2(max(NEAR_UPSAMPLE_CAP // curve.n, 1))), 0))
    return curve.n * (1 << k)


def _refined_nodes(curve: BoundaryCurve, N: int):
    t = TWO_PI * np.arange(N) / N
    x = curve.spec.boundary_point(t)
    speeds = curve.spec.boundary_speed(t)
    normals = curve.spec.boundary_normal(t)
    return t, x, speeds, normals


def resample_density(curve: BoundaryCurve, values: np.ndarray, N: int) -> np.ndarray:
    """Trigonometric interpolation of nodal values onto N uniform nodes."""
    n = curve.n
    if N == n:
        return np.asarray(values, dtype=float)
    spec = np.fft.rfft(np.asarray(values, dtype=float))
    spec[n // 2] *= 0.5          # split the Nyquist mode when upsampling
    return np.fft.irfft(spec, N) * (N / n)


def layer_kernel_values(kind, y, x, normals):
    """Weighted kernel factor for a layer of the given kind at target y.

    kind "s": -G(x, y); "d": -dG/dn(x); "gs": -grad_y G (two components).
    """
    d = x - y[None, :]
    r2 = (d * d).sum(-1)
    if kind == "s":
        return -0.25 * np.log(r2) / np.pi
    if kind == "d":
        return -((d * normals).sum(-1) / r2) / TWO_PI
    if kind == "gs":
        return (d / r2[:, None]) / TWO_PI   # -grad_y G = +(x-y)/(2pi r^2)
    raise ValueError(f"unknown layer kind {kind!r}")


def layer_eval(curve: BoundaryCurve, kind: str, density: np.ndarray,
               targets, near: bool = True):
    """Layer potential of a nodal density at off-boundary targets.

    With ``near=True``, targets close to the curve are handled by
    trigonometric upsampling of the density and kernel; with ``near=False``
    the plain trapezoid rule on the curve nodes is used unconditionally.
    Gradient kind "gs" returns an (m, 2) array.
    """
    tg = np.atleast_2d(np.asarray(targets, dtype=float))
    rho = np.asarray(density, dtype=float)
    vec = kind == "gs"
    out = np.zeros((len(tg), 2)) if vec else np.zeros(len(tg))

    if not near:
        w = curve.weights
        for i, y in enumerate(tg):
            K = layer_kernel_values(kind, y, curve.points, curve.normals)
            out[i] = (K * (rho * w)[:, None]).sum(0) if vec else K @ (rho * w)
        return out

    dists = curve.distance_to(tg)
    counts = _upsample_counts(curve, dists)
    for N in np.unique(counts):
        idx = np.nonzero(counts == N)[0]
        t, x, speeds, normals = _refined_nodes(curve, int(N))
        rho_N = resample_density(curve, rho, int(N))
        w = speeds * (TWO_PI / N) * rho_N
        for i in idx:
            K = layer_kernel_values(kind, tg[i], x, normals)
            out[i] = (K * w[:, None]).sum(0) if vec else K @ w
    return out


def layer_matrix_at_targets(curve: BoundaryCurve, kind: str, targets) -> np.ndarray:
    """Matrix mapping nodal density values to layer values at targets.

    Near targets are handled by upsampling: the kernel row on the fine
    nodes is folded back onto the coarse nodes through the closed-form
    trigonometric cardinal, evaluated as a circular correlation via FFT.
    """
    tg = np.atleast_2d(np.asarray(targets, dtype=float))
    n = curve.n
    out = np.empty((len(tg), n))
    dists = curve.distance_to(tg)
    counts = _upsample_counts(curve, dists)
    for N in np.unique(counts):
        idx = np.nonzero(counts == N)[0]
        N = int(N)
        t, x, speeds, normals = _refined_nodes(curve, N)
        w = speeds * (TWO_PI / N)
        if N == n:
            for i in idx:
                out[i] = layer_kernel_values(kind, tg[i], x, normals) * w
            continue
        q = N // n
        kappa = trig_cardinal(TWO_PI * np.arange(N) / N, n)
        fk = np.conj(np.fft.rfft(kappa))
        for i in idx:
            g = layer_kernel_values(kind, tg[i], x, normals) * w
            corr = np.fft.irfft(np.fft.rfft(g) * fk, N)
            out[i] = corr[::q]
    return out
