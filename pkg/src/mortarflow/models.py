"""Absorption-function families as pure functions of saturation.

Two families describe how water moves through the pore space, both built
around a potential B(s) whose spatial Laplacian drives the moisture
evolution; its derivative B'(s) acts as a saturation-dependent diffusivity
(cm²/s), compactly supported on [s_R, s_S]:

* the *cubic* family: B' is a symmetric concave parabola on [s_R, s_S]
  with peak D, so B is a clipped cubic with plateau (2/3)·D·(s_S − s_R);

* the *kP* family: permeability k(s) and capillary pressure P_c(s) are
  modelled separately and combined through B'(s) = −k(s)·P'_c(s)/μ, an
  asymmetric concave bump whose exact integral is available in closed form.

All functions accept scalars or numpy arrays of saturation and are pure;
parameter objects are frozen and validated on construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError, _require


@dataclass(frozen=True)
class CubicParams:
    """Parameters of the cubic absorption family.

    s_R : residual saturation (hydraulic continuity threshold)
    s_S : maximum saturation reached at imbibition
    D   : peak diffusivity, cm²/s, attained at s = (s_R + s_S)/2
    """

    s_R: float
    s_S: float
    D: float

    def __post_init__(self):
        _require(0.0 <= self.s_R < self.s_S <= 1.0,
                 f"need 0 <= s_R < s_S <= 1, got s_R={self.s_R}, s_S={self.s_S}")
        _require(self.D > 0.0, f"D must be positive, got {self.D}")


@dataclass(frozen=True)
class KPParams:
    """Parameters of the permeability/capillary-pressure absorption family.

    s_R, s_S : saturation support as in the cubic family
    alpha    : capillary-pressure exponent, in (0, 1)
    c        : capillary-pressure scale, g/(cm·s²)
    K_s      : permeability at saturation, cm²
    gamma    : permeability curvature exponent, with gamma - alpha - 1 > 0

    Only the product C = K_s·c enters the potential and diffusivity, so
    imbibition data alone cannot identify K_s and c separately; P_c uses c
    alone and k uses K_s alone.
    """

    s_R: float
    s_S: float
    alpha: float
    c: float
    K_s: float
    gamma: float

    def __post_init__(self):
        _require(0.0 <= self.s_R < self.s_S <= 1.0,
                 f"need 0 <= s_R < s_S <= 1, got s_R={self.s_R}, s_S={self.s_S}")
        _require(0.0 < self.alpha < 1.0, f"alpha must be in (0, 1), got {self.alpha}")
        _require(self.c > 0.0, f"c must be positive, got {self.c}")
        _require(self.K_s > 0.0, f"K_s must be positive, got {self.K_s}")
        _require(self.gamma > 0.0, f"gamma must be positive, got {self.gamma}")
        _require(self.gamma - self.alpha - 1.0 > 0.0,
                 f"need gamma - alpha - 1 > 0, got gamma={self.gamma}, alpha={self.alpha}")
        # Denominator of the closed-form potential, (e)(e+1)(e+2) with
        # e = gamma - alpha; fixed per parameter set, must be nonzero.
        e = self.gamma - self.alpha
        den = e * (e + 1.0) * (e + 2.0)
        if den == 0.0 or not np.isfinite(den):
            raise ValidationError(f"degenerate potential denominator {den} for gamma={self.gamma}, alpha={self.alpha}")
        object.__setattr__(self, "_den", den)

    @property
    def C(self) -> float:
        """Combined coefficient K_s·c, g·cm/s²: the only way K_s and c enter B."""
        return self.K_s * self.c


def _check_saturation(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValidationError("saturation must lie in [0, 1]")
    return s


def _scalar_like(out: np.ndarray, template) -> "float | np.ndarray":
    return float(out) if np.isscalar(template) or np.ndim(template) == 0 else out


def cubic_potential(s, p: CubicParams):
    """Potential B(s) of the cubic family, cm²/s.

    Zero below s_R, the cubic -2D(s_R-s)²(s_R-3s_S+2s) / (3(s_R-s_S)²) on
    [s_R, s_S], then constant (2/3)·D·(s_S-s_R); continuous everywhere.
    """
    sv = _check_saturation(s)
    plateau = (2.0 / 3.0) * p.D * (p.s_S - p.s_R)
    out = np.full(sv.shape, plateau)
    out[sv < p.s_R] = 0.0
    mid = (sv >= p.s_R) & (sv <= p.s_S)
    sm = sv[mid]
    out[mid] = -(2.0 * p.D * (p.s_R - sm) ** 2 * (p.s_R - 3.0 * p.s_S + 2.0 * sm)) / (
        3.0 * (p.s_R - p.s_S) ** 2
    )
    return _scalar_like(out, s)


def cubic_diffusivity(s, p: CubicParams):
    """Diffusivity B'(s) of the cubic family: a concave parabola clipped at 0.

    max(0, -4D(s_R-s)(s_S-s)/(s_R-s_S)²): compact support [s_R, s_S], roots
    at both ends, peak value exactly D at the midpoint.
    """
    sv = _check_saturation(s)
    out = np.maximum(0.0, -4.0 * p.D * (p.s_R - sv) * (p.s_S - sv) / (p.s_R - p.s_S) ** 2)
    return _scalar_like(out, s)


def kp_permeability(s, p: KPParams):
    """Permeability k(s), cm²: 0 up to s_R, K_s·((s-s_R)/(s_S-s_R))^gamma, K_s beyond s_S."""
    sv = _check_saturation(s)
    out = np.zeros(sv.shape)
    out[sv >= p.s_S] = p.K_s
    mid = (sv > p.s_R) & (sv < p.s_S)
    out[mid] = p.K_s * ((sv[mid] - p.s_R) / (p.s_S - p.s_R)) ** p.gamma
    return _scalar_like(out, s)


def kp_capillary_pressure(s, p: KPParams):
    """Capillary pressure P_c(s) = c·(s-s_S)²/(s-s_R)^alpha, g/(cm·s²).

    Defined on (s_R, s_S]: zero at s_S, strictly decreasing, diverging as
    s -> s_R+. Saturations outside the domain are rejected.
    """
    sv = np.asarray(s, dtype=float)
    if np.any(sv <= p.s_R):
        raise ValidationError(f"capillary pressure is singular at and below s_R={p.s_R}")
    if np.any(sv > p.s_S):
        raise ValidationError(f"capillary pressure is undefined above s_S={p.s_S}")
    out = p.c * (sv - p.s_S) ** 2 / (sv - p.s_R) ** p.alpha
    return _scalar_like(out, s)


def kp_capillary_pressure_deriv(s, p: KPParams):
    """dP_c/ds on the open interval (s_R, s_S); negative throughout.

    -c·(s-s_S)·(2s_R - 2s - alpha·s_S + alpha·s) / (s-s_R)^(alpha+1).
    """
    sv = np.asarray(s, dtype=float)
    if np.any(sv <= p.s_R) or np.any(sv >= p.s_S):
        raise ValidationError(f"capillary-pressure slope is defined only on ({p.s_R}, {p.s_S})")
    out = -p.c * (sv - p.s_S) * (2.0 * p.s_R - 2.0 * sv - p.alpha * p.s_S + p.alpha * sv) / (
        sv - p.s_R
    ) ** (p.alpha + 1.0)
    return _scalar_like(out, s)


def kp_diffusivity(s, p: KPParams, mu: float):
    """Diffusivity B'(s) = -k(s)·P'_c(s)/mu of the kP family, cm²/s.

    Clipped at zero and compactly supported on [s_R, s_S]; the support
    edges return exactly 0 (the exponent gamma-alpha-1 > 0 makes the
    limits vanish).
    """
    _require(mu > 0.0, f"mu must be positive, got {mu}")
    sv = _check_saturation(s)
    out = np.zeros(sv.shape)
    mid = (sv > p.s_R) & (sv < p.s_S)
    sm = sv[mid]
    w = sm - p.s_R
    out[mid] = np.maximum(
        0.0,
        p.K_s
        * (p.c / mu)
        * w ** (p.gamma - p.alpha - 1.0)
        / (p.s_S - p.s_R) ** p.gamma
        * (sm - p.s_S)
        * (2.0 * p.s_R + sm * (p.alpha - 2.0) - p.alpha * p.s_S),
    )
    return _scalar_like(out, s)


def kp_potential(s, p: KPParams, mu: float):
    """Potential B(s) of the kP family: the exact integral of the diffusivity.

    With w = s - s_R, a = s_R - s_S and e = gamma - alpha the interior
    branch integrates in closed form to

        B(s) = K_s·c / (mu·(s_S-s_R)^gamma) · w^e ·
               [ (alpha-2)·w²/(e+2) + 2(alpha-1)·a·w/(e+1) + alpha·a²/e ],

    which vanishes at s_R and reaches the plateau

        B(s_S) = 2·K_s·c·gamma·(s_S-s_R)^(2-alpha) / (mu·e·(e+1)·(e+2))

    held on [s_S, 1]. Continuous and nondecreasing.
    """
    _require(mu > 0.0, f"mu must be positive, got {mu}")
    sv = _check_saturation(s)
    e = p.gamma - p.alpha
    a = p.s_R - p.s_S
    den = p._den  # e*(e+1)*(e+2), validated at construction
    plateau = 2.0 * p.K_s * p.c * p.gamma * (p.s_S - p.s_R) ** (2.0 - p.alpha) / (mu * den)
    out = np.full(sv.shape, plateau)
    out[sv <= p.s_R] = 0.0
    mid = (sv > p.s_R) & (sv < p.s_S)
    w = sv[mid] - p.s_R
    bracket = (p.alpha - 2.0) * w * w / (e + 2.0) + 2.0 * (p.alpha - 1.0) * a * w / (e + 1.0) + p.alpha * a * a / e
    out[mid] = p.K_s * p.c / (mu * (p.s_S - p.s_R) ** p.gamma) * w**e * bracket
    return _scalar_like(out, s)


def kp_potential_quadrature(s, p: KPParams, mu: float, rtol: float = 1e-10) -> float:
    """Quadrature cross-check of :func:`kp_potential` (test oracle only).

    Integrates the diffusivity from s_R with adaptive Gauss–Kronrod
    quadrature. Never used on the solver hot path.
    """
    from scipy.integrate import quad

    s = float(s)
    _check_saturation(s)
    upper = min(s, p.s_S)
    if upper <= p.s_R:
        return 0.0
    val, _err = quad(
        lambda x: kp_diffusivity(x, p, mu), p.s_R, upper,
        epsabs=0.0, epsrel=rtol, limit=500,
    )
    return val


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def kp_max_diffusivity(p: KPParams, mu: float, s_tol: float = 1e-10) -> float:
    """Peak diffusivity of the kP family over [s_R, s_S], cm²/s.

    The maximizer of the asymmetric bump has no simple closed form, so the
    peak is bracketed by a 1024-point scan and refined by golden-section
    search to ``s_tol`` in saturation.
    """
    grid = np.linspace(p.s_R, p.s_S, 1024)
    vals = kp_diffusivity(grid, p, mu)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    # Golden-section on the unimodal bracket.
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = kp_diffusivity(x1, p, mu)
    f2 = kp_diffusivity(x2, p, mu)
    while hi - lo > s_tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = kp_diffusivity(x2, p, mu)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = kp_diffusivity(x1, p, mu)
    return float(max(f1, f2, vals[i]))


AbsorptionModel = CubicParams | KPParams


def max_diffusivity(model: AbsorptionModel, mu: float | None = None) -> float:
    """Peak of B' over the support: D for the cubic family, the scanned
    maximum for the kP family (which needs the viscosity)."""
    if isinstance(model, CubicParams):
        return model.D
    if isinstance(model, KPParams):
        if mu is None:
            raise ValidationError("the kP family needs the fluid viscosity mu to evaluate its diffusivity")
        return kp_max_diffusivity(model, mu)
    raise TypeError(f"unsupported absorption model {type(model).__name__}")


def potential(s, model: AbsorptionModel, mu: float | None = None):
    """Family-dispatching B(s); see :func:`cubic_potential` / :func:`kp_potential`."""
    if isinstance(model, CubicParams):
        return cubic_potential(s, model)
    if isinstance(model, KPParams):
        if mu is None:
            raise ValidationError("the kP family needs the fluid viscosity mu to evaluate its potential")
        return kp_potential(s, model, mu)
    raise TypeError(f"unsupported absorption model {type(model).__name__}")


def diffusivity(s, model: AbsorptionModel, mu: float | None = None):
    """Family-dispatching B'(s); see :func:`cubic_diffusivity` / :func:`kp_diffusivity`."""
    if isinstance(model, CubicParams):
        return cubic_diffusivity(s, model)
    if isinstance(model, KPParams):
        if mu is None:
            raise ValidationError("the kP family needs the fluid viscosity mu to evaluate its diffusivity")
        return kp_diffusivity(s, model, mu)
    raise TypeError(f"unsupported absorption model {type(model).__name__}")
