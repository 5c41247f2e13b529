"""Energy teleportation in a (1+1)-D massless scalar field.

Alice couples a detector to the field momentum with a delta switching at t = 0
through the smearing lambda(x); the detector is handed to Bob who couples it
to the field amplitude at t = T through mu(x). The renormalised energy density
after Bob's coupling is

    T00(x, t) = 1/4 lam'(x-t)^2 + 1/4 lam'(x+t)^2
              + 1/4 mu(x-(t-T))^2 + 1/4 mu(x+(t-T))^2
              + kappa [mu(x-(t-T)) PV(x-t) + mu(x+(t-T)) PV(x+t)],

with kappa = exp(-2 |alpha|) <sigma_y> / (2 pi) and
PV(c) = P.V. int lam'(y) / (y - c) dy.

Three smearing families are supported: a smooth compactly supported bump
('bump'), a Gaussian ('gauss') and a Lorentzian ('lorentz').
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize

from .errors import NumericalError, ValidationError

FAMILIES = ("bump", "gauss", "lorentz")
SQRT2PI = math.sqrt(2 * math.pi)
GAUSS_CUT = 14.0  # Gaussian tails beyond 14 delta are below 1e-42
LORENTZ_CUT = 1e7  # sinh-mapped Lorentzian nodes reach 1e7 delta


@dataclass(frozen=True)
class Smearing:
    family: str
    delta: float
    amplitude: float = 1.0
    center: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown smearing family {self.family!r}; expected one of {FAMILIES}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if not (math.isfinite(self.amplitude) and math.isfinite(self.center)):
            raise ValidationError("amplitude and center must be finite")

    @property
    def half_width(self) -> float:
        """Half-length of the support (bump) or of the numerically relevant core (gauss, lorentz)."""
        if self.family == "bump":
            return self.sigma / 2 + math.pi * self.delta
        if self.family == "gauss":
            return GAUSS_CUT * self.delta
        return math.inf

    def support(self) -> tuple:
        return self.center - self.half_width, self.center + self.half_width

    def scale(self) -> float:
        """Characteristic length, used for grid resolution."""
        return self.delta


@dataclass(frozen=True)
class FieldScenario:
    alice: Smearing
    bob: Smearing
    t_signal: float
    sigma_y_expect: float = 1.0
    norm_alpha: float | None = None

    def __post_init__(self):
        if not self.t_signal > 0:
            raise ValidationError(f"t_signal must be positive, got {self.t_signal}")
        if abs(self.sigma_y_expect) > 1:
            raise ValidationError(f"<sigma_y> must lie in [-1, 1], got {self.sigma_y_expect}")
        if self.norm_alpha is None:
            object.__setattr__(self, "norm_alpha", scenario_alpha(self.alice))
        elif self.norm_alpha < 0:
            raise ValidationError("norm_alpha must be >= 0")

    @property
    def kappa(self) -> float:
        return math.exp(-2 * self.norm_alpha) * self.sigma_y_expect / (2 * math.pi)

    def well_time(self) -> float:
        """Evaluation time at which Bob's left-moving packet has cleared the right-moving well."""
        reach = _core_width(self.alice) + _core_width(self.bob)
        return self.t_signal + 10.0 * reach

    def with_sign(self, sign: float) -> "FieldScenario":
        return replace(self, sigma_y_expect=float(sign))


@dataclass(frozen=True)
class WellMetrics:
    depth: float
    width: float
    delta_x: float
    delta_e: float
    center: float = 0.0
    empty: bool = False

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")
        if self.depth > 0 and not self.width > 0:
            raise ValidationError("a nonempty well needs positive width")


@dataclass(frozen=True)
class ScalingLaw:
    upsilon: float
    n_dims: int = 2

    def __post_init__(self):
        if self.n_dims != 2:
            raise ValidationError(f"only n_dims = 2 is supported, got {self.n_dims}")
        if not (self.upsilon > 0 and math.isfinite(self.upsilon)):
            raise ValidationError(f"upsilon must be positive, got {self.upsilon}")

    @property
    def xi(self) -> float:
        return self.n_dims / 2


def _core_width(s: Smearing) -> float:
    if s.family == "bump":
        return s.sigma + 2 * math.pi * s.delta
    return 12.0 * s.delta


# smearing profiles -----------------------------------------------------------

def _sech2(v):
    e = np.exp(-2 * np.abs(v))
    return 4 * e / (1 + e) ** 2


def _step(u, order: int):
    """S(u) = (1 - tanh(cot u)) / 2 on (0, pi) and its first two derivatives."""
    cot = np.cos(u) / np.sin(u)
    if order == 0:
        return 0.5 * (1 - np.tanh(cot))
    csc2 = 1 / np.sin(u) ** 2
    if order == 1:
        return 0.5 * _sech2(cot) * csc2
    return _sech2(cot) * csc2 * (np.tanh(cot) * csc2 - cot)


def _bump(z, sigma, delta, order):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    half = sigma / 2
    left = (z > -half - math.pi * delta) & (z < -half)
    right = (z > half) & (z < half + math.pi * delta)
    if order == 0:
        out[(z >= -half) & (z <= half)] = 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ul = (half + math.pi * delta + z[left]) / delta
        ur = (half + math.pi * delta - z[right]) / delta
        sign = -1.0 if order == 1 else 1.0
        out[left] = _step(ul, order) / delta**order
        out[right] = sign * _step(ur, order) / delta**order if order else _step(ur, 0)
    return out


def _gauss(z, delta, order):
    g = np.exp(-z**2 / (2 * delta**2)) / SQRT2PI
    if order == 0:
        return g
    if order == 1:
        return -z / delta**2 * g
    return (z**2 / delta**4 - 1 / delta**2) * g


def _lorentz(z, delta, order):
    q = z / delta
    d = 1 + q**2
    if order == 0:
        return 1 / (math.pi * d)
    if order == 1:
        return -2 * q / (math.pi * delta * d**2)
    return 2 * (3 * q**2 - 1) / (math.pi * delta**2 * d**3)


def smearing_eval(s: Smearing, x, derivative_order: int = 0):
    """lambda(x), lambda'(x) or lambda''(x) in closed form; scalar in, scalar out."""
    if derivative_order not in (0, 1, 2):
        raise ValidationError(f"derivative_order must be 0, 1 or 2, got {derivative_order}")
    z = np.asarray(x, dtype=float) - s.center
    if s.family == "bump":
        v = _bump(np.atleast_1d(z), s.sigma, s.delta, derivative_order).reshape(z.shape)
    elif s.family == "gauss":
        v = _gauss(z, s.delta, derivative_order)
    else:
        v = _lorentz(z, s.delta, derivative_order)
    v = s.amplitude * v
    return float(v) if np.ndim(v) == 0 else v


# Alice's injected energy -----------------------------------------------------

def alice_energy_density(scn: FieldScenario, x, t: float):
    """Energy density between Alice's and Bob's couplings (0 <= |t| < T)."""
    if t >= scn.t_signal:
        raise ValidationError(f"alice_energy_density needs t < T = {scn.t_signal}, got {t}")
    x = np.asarray(x, dtype=float)
    lp = smearing_eval(scn.alice, x - t, 1)
    lm = smearing_eval(scn.alice, x + t, 1)
    return 0.25 * lp**2 + 0.25 * lm**2


def alice_total_energy(s: Smearing) -> float:
    """1/2 int lambda'(y)^2 dy by adaptive quadrature."""
    lo, hi = s.support()
    f = lambda y: smearing_eval(s, y, 1) ** 2
    if s.family == "lorentz":
        val = quad(f, -np.inf, s.center, epsabs=0, epsrel=1e-12, limit=200)[0]
        val += quad(f, s.center, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
    else:
        val = quad(f, lo, hi, points=[s.center - s.sigma / 2, s.center + s.sigma / 2],
                   epsabs=0, epsrel=1e-12, limit=400)[0]
    return 0.5 * val


# |alpha| ---------------------------------------------------------------------

def _fourier_cos(s: Smearing, k: float) -> float:
    """Real Fourier transform of the (even) smearing about its center."""
    f = lambda z: smearing_eval(s, s.center + z, 0)
    tol = 1e-13 * abs(s.amplitude) * s.delta
    if s.family == "lorentz":
        if k == 0:
            return 2 * quad(f, 0, np.inf, epsabs=tol, epsrel=1e-12, limit=400)[0]
        return 2 * quad(f, 0, np.inf, weight="cos", wvar=k, epsabs=tol, limlst=100)[0]
    half = s.half_width
    pts = [s.sigma / 2] if s.family == "bump" and s.sigma > 0 else None
    if k == 0:
        return 2 * quad(f, 0, half, points=pts, epsabs=tol, epsrel=1e-12, limit=400)[0]
    return 2 * quad(f, 0, half, weight="cos", wvar=k, epsabs=tol, epsrel=1e-10, limit=200)[0]


def norm_alpha(s: Smearing, method: str = "fourier", rtol: float = 1e-9) -> float:
    """|alpha| = (1/4pi) int dk |k| |lambda_hat(k)|^2.

    'fourier' integrates the squared transform in k in blocks of growing size
    until the tail block drops below rtol; 'hilbert' uses the equivalent
    real-space form -(1/2pi) int lambda(x) PV(x) dx on the quadrature nodes of
    pv_grid and is much faster.
    """
    if s.amplitude == 0:
        return 0.0
    if method == "hilbert":
        y, w = _nodes(s)
        return float(-np.sum(w * smearing_eval(s, y, 0) * pv_grid(s, y)) / (2 * math.pi))
    if method != "fourier":
        raise ValidationError(f"unknown norm_alpha method {method!r}")
    g = lambda k: k * _fourier_cos(s, k) ** 2
    block = 4.0 / s.delta
    total, lo = 0.0, 0.0
    with warnings.catch_warnings():
        # convergence is judged by the block-tail test below, not by quad's own flags
        warnings.simplefilter("ignore", IntegrationWarning)
        for _ in range(60):
            part = quad(g, lo, lo + block, epsabs=1e-3 * rtol * abs(total), epsrel=1e-10, limit=100)[0]
            total += part
            lo += block
            if abs(part) <= rtol * abs(total) and lo * s.delta > 8:
                return float(total / (2 * math.pi))
            block *= 1.5
    raise NumericalError("norm_alpha: spectral tail bound not met")


def scenario_alpha(s: Smearing) -> float:
    """|alpha| as used when building scenarios: spectral quadrature, or the real-space form for the bump."""
    return norm_alpha(s, "hilbert" if s.family == "bump" else "fourier")


def norm_alpha_closed_form(s: Smearing) -> float:
    """Analytic |alpha| for the Gaussian and Lorentzian families (delta independent in 1+1 D)."""
    if s.family == "gauss":
        return s.amplitude**2 / (4 * math.pi)
    if s.family == "lorentz":
        return s.amplitude**2 / (8 * math.pi)
    raise ValidationError("no closed form for the bump family")


# principal value -------------------------------------------------------------

def pv_integral(s: Smearing, c: float, a: float | None = None, tol: float = 1e-6) -> float:
    """P.V. int lambda'(y)/(y - c) dy by window subdivision.

    Outside |y - c| < a the folded integrand (lambda'(c+u) - lambda'(c-u))/u is
    integrated by adaptive quadrature; inside the window the integral is replaced
    by 2 a lambda''(c). The window starts at a (default delta/20) and is halved
    until successive results agree to tol relative.
    """
    if a is None:
        a = s.delta / 20
    if not a > 0:
        raise ValidationError("PV window a must be positive")
    if a > s.delta / 10:
        raise ValidationError(f"PV window a = {a} exceeds delta/10 = {s.delta / 10}")
    if s.amplitude == 0:
        return 0.0
    scale = abs(s.amplitude) / s.delta
    g = lambda u: (smearing_eval(s, c + u, 1) - smearing_eval(s, c - u, 1)) / u
    d = abs(c - s.center)
    pts = sorted({p for p in (d - s.sigma / 2 - math.pi * s.delta, d - s.sigma / 2, d,
                              d + s.sigma / 2, d + s.sigma / 2 + math.pi * s.delta) if p > 0})

    def once(win):
        if s.family == "lorentz":
            mid = d + 50 * s.delta
            inner = [p for p in pts if win < p < mid]
            v = quad(g, win, mid, points=inner or None, epsabs=1e-14 * scale, epsrel=1e-12, limit=400)[0]
            v += quad(g, mid, np.inf, epsabs=1e-14 * scale, epsrel=1e-12, limit=400)[0]
        else:
            top = d + s.half_width
            if top <= win:
                v = 0.0
            else:
                inner = [p for p in pts if win < p < top]
                v = quad(g, win, top, points=inner or None, epsabs=1e-14 * scale, epsrel=1e-12, limit=400)[0]
        return v + 2 * win * smearing_eval(s, c, 2)

    prev = once(a)
    for _ in range(30):
        a /= 2
        cur = once(a)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-3 * scale):
            return float(cur)
        prev = cur
    raise NumericalError("pv_integral: window halving did not converge")


_GL_CACHE: dict = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _nodes(s: Smearing, refine: int = 1):
    """Composite Gauss-Legendre nodes and weights covering the smearing."""
    t, wt = _gl(12 * refine)
    if s.family == "lorentz":
        umax = math.asinh(LORENTZ_CUT)
        edges = np.linspace(-umax, umax, int(2 * umax / 0.25) + 1)
        mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
        u = (mid[:, None] + half[:, None] * t).ravel()
        wu = (half[:, None] * wt).ravel()
        return s.center + s.delta * np.sinh(u), wu * s.delta * np.cosh(u)
    if s.family == "gauss":
        breaks = np.linspace(-GAUSS_CUT, GAUSS_CUT, int(4 * GAUSS_CUT) + 1) * s.delta
    else:
        h, r = s.sigma / 2, math.pi * s.delta
        ramp = np.linspace(0, r, 17)
        plateau = np.linspace(-h, h, int(math.ceil(2 * h / s.delta)) + 1)[1:-1] if h > 0 else []
        breaks = np.concatenate([-h - r + ramp, plateau, h + ramp])
    mid, half = (breaks[1:] + breaks[:-1]) / 2, (breaks[1:] - breaks[:-1]) / 2
    keep = half > 0
    mid, half = mid[keep], half[keep]
    y = (mid[:, None] + half[:, None] * t).ravel()
    w = (half[:, None] * wt).ravel()
    return s.center + y, w


def pv_grid(s: Smearing, c, refine: int = 1, chunk: int = 4_000_000):
    """Vectorised P.V. int lambda'(y)/(y - c) dy for an array of singular points.

    Uses singularity subtraction on a fixed composite Gauss-Legendre rule:
    int_lo^hi (lambda'(y) - lambda'(c))/(y - c) dy + lambda'(c) log|(hi - c)/(c - lo)|,
    exact for the truncated domain and smooth at y = c. refine multiplies the
    node count and serves as a convergence check.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    shape = c.shape
    c = c.ravel()
    if s.amplitude == 0:
        return np.zeros(shape)
    y, w = _nodes(s, refine)
    lo, hi = s.support() if s.family != "lorentz" else (s.center - s.delta * LORENTZ_CUT,
                                                        s.center + s.delta * LORENTZ_CUT)
    lpy = smearing_eval(s, y, 1)
    lpc = smearing_eval(s, c, 1)
    inside = (c > lo) & (c < hi) & (lpc != 0)
    sub = np.where(inside, lpc, 0.0)
    out = np.empty(c.size)
    step = max(1, chunk // y.size)
    hmin = np.min(np.diff(np.sort(y))) if y.size > 1 else s.delta
    for i in range(0, c.size, step):
        cc = c[i:i + step, None]
        d = y[None, :] - cc
        near = np.abs(d) < 1e-6 * hmin
        with np.errstate(divide="ignore", invalid="ignore"):
            f = (lpy[None, :] - sub[i:i + step, None]) / d
        if near.any():
            mid = (y[None, :] + cc) / 2
            f = np.where(near, smearing_eval(s, np.where(near, mid, s.center), 2), f)
        out[i:i + step] = f @ w
    ci = c[inside]
    out[inside] += sub[inside] * np.log((hi - ci) / (ci - lo))
    return out.reshape(shape)


# energy density --------------------------------------------------------------

def energy_density_terms(scn: FieldScenario, x, t: float, refine: int = 1) -> dict:
    """Alice, Bob and QET contributions to T00 at time t >= T."""
    if t < scn.t_signal:
        raise ValidationError(f"energy_density needs t >= T = {scn.t_signal}, got {t}")
    x = np.asarray(x, dtype=float)
    dt = t - scn.t_signal
    alice = 0.25 * smearing_eval(scn.alice, x - t, 1) ** 2 + 0.25 * smearing_eval(scn.alice, x + t, 1) ** 2
    mu_r = smearing_eval(scn.bob, x - dt, 0)
    mu_l = smearing_eval(scn.bob, x + dt, 0)
    bob = 0.25 * mu_r**2 + 0.25 * mu_l**2
    qet = np.zeros_like(np.asarray(mu_r, dtype=float))
    k = scn.kappa
    if k != 0:
        for mu, c in ((mu_r, x - t), (mu_l, x + t)):
            mu = np.atleast_1d(mu)
            c = np.broadcast_to(c, mu.shape)
            sel = mu != 0
            term = np.zeros(mu.shape)
            if sel.any():
                term[sel] = k * mu[sel] * pv_grid(scn.alice, c[sel], refine)
            qet = qet + term.reshape(np.shape(qet))
    return {"alice": alice, "bob": bob, "qet": qet}


def energy_density(scn: FieldScenario, x, t: float, refine: int = 1):
    terms = energy_density_terms(scn, x, t, refine)
    total = terms["alice"] + terms["bob"] + terms["qet"]
    return float(total) if np.ndim(total) == 0 else total


def default_grid(scn: FieldScenario, t: float, points: int = 4096) -> np.ndarray:
    """x in [-L, L] covering every light-cone translate of both supports."""
    reach = max(abs(scn.alice.center), abs(scn.bob.center)) + _core_width(scn.alice) + _core_width(scn.bob)
    half = reach + t + 5 * scn.alice.delta
    return np.linspace(-half, half, points)


def well_grid(scn: FieldScenario, t: float, per_delta: int = 60, span: float = 8.0) -> np.ndarray:
    """Local grid around the right-moving well co-moving with Bob's smearing."""
    xc = scn.bob.center + (t - scn.t_signal)
    half = scn.bob.sigma / 2 + span * scn.bob.delta
    if scn.bob.family == "bump":
        half = scn.bob.sigma / 2 + math.pi * scn.bob.delta + span / 4 * scn.bob.delta
    dmin = min(scn.alice.delta, scn.bob.delta)
    n = int(math.ceil(2 * half / dmin * per_delta)) + 1
    return np.linspace(xc - half, xc + half, n)


# well metrics ----------------------------------------------------------------

def _crossing(x0, x1, f0, f1):
    return x0 + (x1 - x0) * f0 / (f0 - f1)


def profile_metrics(x, rho) -> WellMetrics:
    """Contiguous negative region around the minimum of a sampled density profile."""
    x, rho = np.asarray(x, dtype=float), np.asarray(rho, dtype=float)
    i = int(np.argmin(rho))
    if not rho[i] < 0:
        return WellMetrics(0.0, 0.0, 0.0, 0.0, empty=True)
    lo = i
    while lo > 0 and rho[lo - 1] < 0:
        lo -= 1
    hi = i
    while hi < len(x) - 1 and rho[hi + 1] < 0:
        hi += 1
    if lo == 0 or hi == len(x) - 1:
        raise NumericalError("negative region touches the grid edge; widen the grid")
    xl = _crossing(x[lo - 1], x[lo], rho[lo - 1], rho[lo])
    xr = _crossing(x[hi], x[hi + 1], rho[hi], rho[hi + 1])
    xs = np.concatenate([[xl], x[lo:hi + 1], [xr]])
    fs = np.concatenate([[0.0], rho[lo:hi + 1], [0.0]])
    de = float(np.sum((fs[1:] + fs[:-1]) * np.diff(xs)) / 2)
    xc = float(x[i])
    if 0 < i < len(x) - 1:  # parabolic refinement of the minimum position
        den = rho[i - 1] - 2 * rho[i] + rho[i + 1]
        if den > 0:
            xc += 0.5 * (x[i + 1] - x[i]) * (rho[i - 1] - rho[i + 1]) / den
    return WellMetrics(depth=float(-rho[i]), width=float(xr - xl), delta_x=float(min(xc - xl, xr - xc)),
                       delta_e=de, center=xc)


def well_metrics(scn: FieldScenario, t: float | None = None, grid=None, refine: int = 1) -> WellMetrics:
    """Depth, width, distance to the nearest positive region and integrated negative energy."""
    if t is None:
        t = scn.well_time()
    if grid is None:
        # widen the default window until the negative region is enclosed
        for span in (8.0, 16.0, 32.0, 64.0):
            try:
                return well_metrics(scn, t, well_grid(scn, t, span=span), refine)
            except NumericalError:
                continue
        raise NumericalError("negative region not enclosed within 64 delta of the well")
    grid = np.asarray(grid, dtype=float)
    dx = float(np.max(np.diff(grid)))
    dmin = min(scn.alice.delta, scn.bob.delta)
    if dx > dmin / 50 * (1 + 1e-9):
        raise ValidationError(f"grid spacing {dx:g} does not resolve delta = {dmin:g} (need >= 50 points per delta)")
    return profile_metrics(grid, energy_density(scn, grid, t, refine))


# optimisation ----------------------------------------------------------------

PARAM_NAMES = ("x_b", "delta_a", "delta_b", "sigma_a", "sigma_b", "t_signal", "lambda0", "mu0")


def default_bounds(family: str) -> dict:
    t = 15.29
    b = {"x_b": (t - 4.0, t + 4.0), "delta_a": (1.0, 1.0), "delta_b": (1.0, 1.0),
         "t_signal": (t, t), "lambda0": (0.1, 4.0), "mu0": (0.01, 6.0)}
    if family == "bump":
        b.update(sigma_a=(0.0, 4.0), sigma_b=(0.0, 4.0))
    return b


def _build(family: str, p: dict, sign: float = 1.0, na: float | None = None) -> FieldScenario:
    alice = Smearing(family, p["delta_a"], p["lambda0"], 0.0, p.get("sigma_a", 0.0))
    bob = Smearing(family, p["delta_b"], p["mu0"], p["x_b"], p.get("sigma_b", 0.0))
    if na is None:
        na = norm_alpha_closed_form(alice) if family != "bump" else norm_alpha(alice, "hilbert")
    return FieldScenario(alice, bob, p["t_signal"], sign, na)


def _profile(scn: FieldScenario, n: int = 161):
    """Right-moving co-moving profile (Alice + Bob + QET) as a function of xi = x - (t - T)."""
    b = scn.bob
    half = b.sigma / 2 + (math.pi + 0.5) * b.delta if b.family == "bump" else 6 * b.delta
    xi = np.linspace(b.center - half, b.center + half, n)
    c = xi - scn.t_signal
    base = 0.25 * smearing_eval(scn.alice, c, 1) ** 2 + 0.25 * smearing_eval(b, xi, 0) ** 2
    return xi, base, smearing_eval(b, xi, 0) * pv_grid(scn.alice, c)


def optimize_scenario(family: str, bounds: dict | None = None, seed: int = 0, objective: str = "depth",
                      restarts: int = 8, maxiter: int = 600) -> FieldScenario:
    """Nelder-Mead search over the free parameters for the deepest (or largest |Delta E|) well.

    Parameters with equal lower and upper bounds are held fixed. The sign of
    <sigma_y> is chosen per candidate so that the QET terms are negative where
    they matter. Restart 0 starts at the box centre, the others at seeded
    uniform draws; the best result wins, ties broken by restart order.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}")
    if objective not in ("depth", "delta_e"):
        raise ValidationError(f"unknown objective {objective!r}")
    box = default_bounds(family)
    for key, val in (bounds or {}).items():
        if key not in PARAM_NAMES or (family != "bump" and key in ("sigma_a", "sigma_b")):
            raise ValidationError(f"unknown or inapplicable parameter {key!r} for family {family!r}")
        lo, hi = map(float, val)
        if lo > hi:
            raise ValidationError(f"empty bound for {key}: {val}")
        box[key] = (lo, hi)
    free = [k for k in PARAM_NAMES if k in box and box[k][0] < box[k][1]]
    fixed = {k: box[k][0] for k in box if k not in free}
    lo = np.array([box[k][0] for k in free])
    hi = np.array([box[k][1] for k in free])

    def params(v):
        p = dict(fixed)
        p.update(zip(free, map(float, np.clip(v, lo, hi))))
        return p

    def score(p):
        """Returns (value to minimise, best sign)."""
        scn = _build(family, p)
        xi, base, q = _profile(scn)
        amp = math.exp(-2 * scn.norm_alpha) / (2 * math.pi)
        best = (math.inf, 1.0)
        for sign in (1.0, -1.0):
            rho = base + sign * amp * q
            if objective == "depth":
                val = float(np.min(rho))
            else:
                m = profile_metrics(np.concatenate([[xi[0] - 1], xi, [xi[-1] + 1]]),
                                    np.concatenate([[1.0], rho, [1.0]]))
                val = m.delta_e
            best = min(best, (val, sign))
        return best

    rng = np.random.default_rng(seed)
    starts = [(lo + hi) / 2] + [rng.uniform(lo, hi) for _ in range(restarts - 1)]
    if maxiter == 0 or not free:
        p = params(starts[0])
        return _finalise(family, p, score(p)[1])
    best = None
    for x0 in starts:
        res = minimize(lambda v: score(params(v))[0], x0, method="Nelder-Mead",
                       bounds=list(zip(lo, hi)),
                       options={"maxiter": maxiter, "xatol": 1e-7, "fatol": 1e-12, "adaptive": True})
        if best is None or res.fun < best.fun:
            best = res
    p = params(best.x)
    return _finalise(family, p, score(p)[1])


def _finalise(family, p, sign) -> FieldScenario:
    scn = _build(family, p, sign)
    return replace(scn, norm_alpha=scenario_alpha(scn.alice))


# scaling ---------------------------------------------------------------------

def _scaled(s: Smearing, ups: float, amp: float) -> Smearing:
    return Smearing(s.family, s.delta / ups, s.amplitude * amp, s.center / ups, s.sigma / ups)


def scaling_transform(scn: FieldScenario, law: ScalingLaw, recompute_alpha: bool = True) -> FieldScenario:
    """lambda(x) -> Y^{(n-2)/2} lambda(Y x), mu(x) -> Y^{n/2} mu(Y x), T -> T / Y."""
    u = law.upsilon
    alice = _scaled(scn.alice, u, u ** ((law.n_dims - 2) / 2))
    bob = _scaled(scn.bob, u, u ** law.xi)
    na = scenario_alpha(alice) if recompute_alpha else scn.norm_alpha
    return FieldScenario(alice, bob, scn.t_signal / u, scn.sigma_y_expect, na)


def scaling_study(scn: FieldScenario, upsilons, per_delta: int = 60) -> list:
    """Well metrics of the rescaled scenario for each Upsilon, evaluated at the rescaled well time."""
    base = well_metrics(scn, scn.well_time(), well_grid(scn, scn.well_time(), per_delta))
    if base.empty:
        raise ValidationError("scaling_study needs a scenario with a nonempty well")
    rows = []
    for u in upsilons:
        s = scaling_transform(scn, ScalingLaw(float(u)))
        t = s.well_time()
        m = well_metrics(s, t, well_grid(s, t, per_delta))
        rows.append({"upsilon": float(u), "depth": m.depth, "width": m.width, "delta_x": m.delta_x,
                     "delta_e": m.delta_e, "norm_alpha": s.norm_alpha,
                     "de_dx": m.delta_e * m.delta_x})
    return rows


def fit_exponents(rows: list) -> dict:
    """Log-log slopes of width, depth, delta_x and |delta_e| against Upsilon."""
    lu = np.log([r["upsilon"] for r in rows])
    out = {}
    for key in ("width", "depth", "delta_x"):
        out[key] = float(np.polyfit(lu, np.log([r[key] for r in rows]), 1)[0])
    out["delta_e"] = float(np.polyfit(lu, np.log([abs(r["delta_e"]) for r in rows]), 1)[0])
    return out
