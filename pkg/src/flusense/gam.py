"""Negative-binomial GAM with one penalised cubic-spline smooth.

    y_t ~ NB(mu_t, kappa),   log mu_t = b0 + s(x_t) + b2 * lag_t

``s`` is a cubic B-spline with knots at quantiles of ``x`` and an integrated
squared second-derivative penalty, centred over the data so it is
identifiable next to the intercept. For fixed (lambda, kappa) the penalised
log-likelihood is concave in the coefficients (log link, kappa > 0) and is
maximised by Newton-form IRLS with step halving. lambda is picked by GCV
and kappa by golden-section search on the profile log-likelihood.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import gammaln

from .corpus import IsoWeek, WeeklySeries
from .io import write_csv

DEFAULT_K = 10
MAX_ITER = 200
COEF_TOL = 1e-8
KAPPA_BOUNDS = (1e-2, 1e8)
LOG10_LAMBDA_GRID = np.linspace(-6.0, 8.0, 29)


class GamError(ValueError):
    pass


class GamConvergenceError(RuntimeError):
    def __init__(self, msg: str, trace: Sequence[float]):
        super().__init__(f"{msg}; last penalised log-likelihoods: {list(trace)[-5:]}")
        self.trace = list(trace)


# -- spline basis -----------------------------------------------------------------

@dataclass(frozen=True)
class SplineBasis:
    knots: np.ndarray    # distinct knot locations, strictly increasing
    k: int               # number of basis functions
    penalty: np.ndarray  # k x k, integral of B_i'' B_j''
    degree: int = 3

    @property
    def knot_vector(self) -> np.ndarray:
        d = self.degree
        return np.concatenate([[self.knots[0]] * d, self.knots, [self.knots[-1]] * d])

    def design(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return BSpline.design_matrix(x, self.knot_vector, self.degree, extrapolate=True).toarray()


def _knot_locations(x: np.ndarray, k: int) -> np.ndarray:
    n_interior = k - 4
    lo, hi = float(x.min()), float(x.max())
    ux = np.unique(x)
    if n_interior <= 0:
        return np.array([lo, hi])
    probs = np.arange(1, n_interior + 1) / (n_interior + 1)
    inner = np.quantile(ux, probs)
    knots = np.concatenate([[lo], inner, [hi]])
    if np.any(np.diff(knots) <= 0):
        knots = np.linspace(lo, hi, n_interior + 2)
    return knots


def build_spline_basis(x: Sequence[float], k: int = DEFAULT_K) -> SplineBasis:
    """Cubic regression spline with ``k`` functions and a second-derivative penalty."""
    x = np.asarray(x, dtype=float)
    if k < 4:
        raise GamError("a cubic spline basis needs k >= 4")
    if np.unique(x).size < k:
        raise GamError(f"need at least {k} distinct covariate values, got {np.unique(x).size}")
    knots = _knot_locations(x, k)
    basis = SplineBasis(knots, k, np.zeros((k, k)))
    t = basis.knot_vector
    # B'' is piecewise linear, so 3-point Gauss-Legendre per interval is exact
    gx, gw = np.polynomial.legendre.leggauss(3)
    a, b = knots[:-1], knots[1:]
    half = (b - a) / 2
    xq = (a[:, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    wq = (half[:, None] * gw[None, :]).ravel()
    d2 = np.empty((xq.size, k))
    for i in range(k):
        coef = np.zeros(k)
        coef[i] = 1.0
        d2[:, i] = BSpline(t, coef, 3, extrapolate=True).derivative(2)(xq)
    S = d2.T @ (wq[:, None] * d2)
    S = (S + S.T) / 2
    return SplineBasis(knots, k, S)


# -- negative binomial pieces -----------------------------------------------------

def nb_loglik(y, mu, kappa: float) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    ll = (gammaln(y + kappa) - gammaln(kappa) - gammaln(y + 1)
          + kappa * (np.log(kappa) - np.log(kappa + mu))
          + _xlogy(y, mu) - y * np.log(kappa + mu))
    return float(np.sum(ll))


def _xlogy(a, b):
    return np.where(a == 0, 0.0, a * np.log(np.where(a == 0, 1.0, b)))


def nb_deviance(y, mu, kappa: float) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    term = _xlogy(y, y) - _xlogy(y, mu) - (y + kappa) * (np.log1p(y / kappa) - np.log1p(mu / kappa))
    return float(2 * np.sum(term))


def poisson_deviance(y, mu) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(2 * np.sum(_xlogy(y, y) - _xlogy(y, mu) - (y - mu)))


def nb_working(y, eta, kappa: float):
    """Score d l/d eta and Newton weight -d^2 l/d eta^2 for the log link."""
    mu = np.exp(eta)
    score = kappa * (y - mu) / (kappa + mu)
    weight = kappa * mu * (y + kappa) / (kappa + mu) ** 2
    return score, weight


# -- fitting ----------------------------------------------------------------------

class ModelSpec(str, enum.Enum):
    LAG_ONLY = "LagOnly"
    SMOOTH_ONLY = "SmoothOnly"
    SMOOTH_LAG = "Smooth+Lag"
    ADJUSTED_SMOOTH_LAG = "AdjustedSmooth+Lag"

    @property
    def smooth(self) -> bool:
        return self is not ModelSpec.LAG_ONLY

    @property
    def lag(self) -> bool:
        return self is not ModelSpec.SMOOTH_ONLY


@dataclass
class GamFit:
    beta0: float
    spline_coef: np.ndarray | None   # k coefficients on the B-spline basis (centring folded in)
    linear_coef: np.ndarray          # coefficients of the linear covariates (lag first)
    kappa: float
    lam: float | None
    edf: float
    y: np.ndarray
    fitted: np.ndarray
    loglik: float
    deviance: float
    null_deviance: float
    basis: SplineBasis | None = None
    x: np.ndarray | None = None
    smooth_values: np.ndarray | None = None
    n_iter: int = 0
    trace: list[float] = field(default_factory=list, repr=False)
    gradient_norm: float = 0.0
    spec: ModelSpec | None = None
    weeks: tuple[IsoWeek, ...] = ()

    @property
    def beta2(self) -> float | None:
        return float(self.linear_coef[0]) if self.linear_coef.size else None

    @property
    def residuals(self) -> np.ndarray:
        return self.y - self.fitted

    @property
    def deviance_explained(self) -> float:
        return deviance_explained(self)

    @property
    def rmse(self) -> float:
        return rmse(self)

    @property
    def aic(self) -> float:
        return aic(self)


@dataclass
class _Design:
    X: np.ndarray          # n x p, columns: intercept, linear..., smooth (centred)
    P: np.ndarray          # p x p diagonal penalty at unit lambda (zero off the smooth block)
    n_lin: int
    Z: np.ndarray | None   # k x (k-1): centred, rotated coefficients -> B-spline coefficients
    basis: SplineBasis | None


def _design(n: int, x, linear, k: int) -> _Design:
    cols = [np.ones(n)]
    lin = np.zeros((n, 0)) if linear is None else np.asarray(linear, dtype=float).reshape(n, -1)
    cols.extend(lin.T)
    p_par = 1 + lin.shape[1]
    if x is None:
        X = np.column_stack(cols)
        return _Design(X, np.zeros((p_par, p_par)), lin.shape[1], None, None)
    basis = build_spline_basis(x, k)
    B = basis.design(x)
    # sum-to-zero constraint over the data, absorbed by QR
    q, _ = np.linalg.qr(B.sum(axis=0).reshape(-1, 1), mode="complete")
    Z = q[:, 1:]
    Sz = Z.T @ basis.penalty @ Z
    # rotate onto the penalty eigenbasis so the penalty is diagonal
    d, U = np.linalg.eigh((Sz + Sz.T) / 2)
    d[d < 1e-10 * d.max()] = 0.0
    Z = Z @ U
    Bz = B @ Z
    # scale the penalty to the data so lambda is comparable across covariates
    scale = np.linalg.norm(Bz.T @ Bz, 1) / d.max()
    X = np.column_stack(cols + list(Bz.T))
    p = X.shape[1]
    P = np.zeros((p, p))
    P[p_par:, p_par:] = np.diag(d * scale)
    return _Design(X, P, lin.shape[1], Z, basis)


@dataclass
class _Inner:
    beta: np.ndarray
    mu: np.ndarray
    edf: float
    trace: list[float]
    n_iter: int
    grad_norm: float


def _pirls(y, D: _Design, lam: float, kappa: float, beta0: np.ndarray | None = None) -> _Inner:
    X = D.X
    n, p = X.shape
    Pl = lam * D.P
    pdiag = np.diag(Pl)
    pen = np.flatnonzero(pdiag > 0)
    E = np.zeros((pen.size, p))
    E[np.arange(pen.size), pen] = np.sqrt(pdiag[pen])

    def pen_ll(beta):
        eta = X @ beta
        if np.any(eta > 700):
            return -np.inf
        return nb_loglik(y, np.exp(eta), kappa) - 0.5 * beta @ Pl @ beta

    if beta0 is None:
        beta0 = np.zeros(p)
        beta0[0] = math.log(max(float(np.mean(y)), 1e-8))
    beta = beta0.copy()
    cur = pen_ll(beta)
    trace = [cur]
    it = 0
    converged = False
    while it < MAX_ITER:
        it += 1
        eta = X @ beta
        score, w = nb_working(y, eta, kappa)
        z = eta + score / w
        sw = np.sqrt(w)
        A = np.vstack([sw[:, None] * X, E])
        rhs = np.concatenate([sw * z, np.zeros(E.shape[0])])
        # column equilibration keeps the solve accurate when lambda is huge
        c = 1.0 / np.sqrt(np.sum(A * A, axis=0))
        new = c * np.linalg.lstsq(A * c, rhs, rcond=None)[0]
        val = pen_ll(new)
        halvings = 0
        while not val >= cur and halvings < 60:
            new = (new + beta) / 2
            val = pen_ll(new)
            halvings += 1
        if not val >= cur:
            new, val = beta, cur
        change = np.max(np.abs(new - beta)) / max(np.max(np.abs(new)), 1e-12)
        beta, cur = new, val
        trace.append(cur)
        if change < COEF_TOL:
            converged = True
            break
    if not converged:
        raise GamConvergenceError(f"penalised IRLS did not converge in {MAX_ITER} iterations", trace)
    eta = X @ beta
    score, w = nb_working(y, eta, kappa)
    grad = X.T @ score - Pl @ beta
    XtWX = X.T @ (w[:, None] * X)
    edf = float(np.trace(np.linalg.solve(XtWX + Pl, XtWX)))
    return _Inner(beta, np.exp(eta), edf, trace, it, float(np.max(np.abs(grad))))


def _golden(f: Callable[[float], float], a: float, b: float, tol: float = 1e-3) -> tuple[float, float]:
    """Maximise f on [a, b] by golden-section search. Returns (argmax, max)."""
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _gcv(y, inner: _Inner, kappa: float) -> float:
    n = y.size
    dev = nb_deviance(y, inner.mu, kappa)
    return n * dev / max(n - inner.edf, 1e-8) ** 2


def _fit_fixed_kappa(y, D: _Design, kappa: float, lam: float | None) -> tuple[_Inner, float | None]:
    if D.basis is None:
        return _pirls(y, D, 0.0, kappa), None
    if lam is not None:
        return _pirls(y, D, lam, kappa), lam
    cache: dict[float, tuple[float, _Inner]] = {}
    start = [None]

    def score(log10_lam: float) -> float:
        if log10_lam not in cache:
            inner = _pirls(y, D, 10.0 ** log10_lam, kappa, start[0])
            start[0] = inner.beta
            cache[log10_lam] = (_gcv(y, inner, kappa), inner)
        return -cache[log10_lam][0]

    grid = LOG10_LAMBDA_GRID
    vals = [score(v) for v in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    _golden(score, lo, hi, tol=1e-2)
    # smallest GCV over everything evaluated; ties go to the smaller lambda
    best = min(cache, key=lambda v: (cache[v][0], v))
    return cache[best][1], 10.0 ** best


def fit_gam(y, x=None, linear=None, k: int = DEFAULT_K, lam: float | None = None,
            kappa: float | None = None, min_extra: int = 5) -> GamFit:
    """Fit the NB-GAM to arbitrary data.

    ``x`` feeds the smooth (omit for a purely parametric model); ``linear`` is an
    (n,) or (n, m) block of linear covariates. ``lam``/``kappa`` fix the
    smoothing parameter / dispersion instead of estimating them.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise GamError("response must be finite and nonnegative")
    if x is not None and n < k + min_extra:
        raise GamError(f"series too short: {n} usable points, need at least {k + min_extra}")
    D = _design(n, x, linear, k)

    if kappa is not None:
        inner, lam_used = _fit_fixed_kappa(y, D, kappa, lam)
        kappa_used = float(kappa)
    else:
        memo: dict[float, tuple[float, _Inner, float | None]] = {}

        def profile(log_kappa: float) -> float:
            kap = math.exp(log_kappa)
            inner, lam_k = _fit_fixed_kappa(y, D, kap, lam)
            ll = nb_loglik(y, inner.mu, kap)
            memo[log_kappa] = (ll, inner, lam_k)
            return ll

        lo, hi = math.log(KAPPA_BOUNDS[0]), math.log(KAPPA_BOUNDS[1])
        best, _ = _golden(profile, lo, hi, tol=1e-3)
        _, inner, lam_used = memo[best]
        kappa_used = math.exp(best)

    beta = inner.beta
    n_lin = D.n_lin
    spline_coef = smooth_values = None
    if D.basis is not None:
        bz = beta[1 + n_lin:]
        spline_coef = D.Z @ bz
        smooth_values = D.X[:, 1 + n_lin:] @ bz
    mu = inner.mu
    return GamFit(
        beta0=float(beta[0]),
        spline_coef=spline_coef,
        linear_coef=np.asarray(beta[1:1 + n_lin]),
        kappa=kappa_used,
        lam=lam_used,
        edf=inner.edf,
        y=y,
        fitted=mu,
        loglik=nb_loglik(y, mu, kappa_used),
        deviance=nb_deviance(y, mu, kappa_used),
        null_deviance=nb_deviance(y, np.full(n, y.mean()), kappa_used),
        basis=D.basis,
        x=None if x is None else np.asarray(x, dtype=float),
        smooth_values=smooth_values,
        n_iter=inner.n_iter,
        trace=inner.trace,
        gradient_norm=inner.grad_norm,
    )


def null_fit(y, kappa: float) -> GamFit:
    """Intercept-only NB fit; its MLE is the sample mean for any kappa."""
    return fit_gam(y, kappa=kappa)


def deviance_explained(fit: GamFit, null: GamFit | None = None) -> float:
    """(null deviance - model deviance) / null deviance, both at the model's kappa."""
    dev_null = fit.null_deviance if null is None else nb_deviance(null.y, null.fitted, fit.kappa)
    if dev_null == 0:
        raise GamError("null deviance is zero; deviance explained is undefined")
    return (dev_null - fit.deviance) / dev_null


def rmse(fit: GamFit) -> float:
    """Root mean squared error on the log scale."""
    if np.any(fit.y <= 0):
        raise GamError("log-scale RMSE needs a strictly positive response")
    return float(np.sqrt(np.mean((np.log(fit.y) - np.log(fit.fitted)) ** 2)))


def aic(fit: GamFit) -> float:
    return -2.0 * fit.loglik + 2.0 * (fit.edf + 1.0)


# -- weekly series models ---------------------------------------------------------

LAG = 2


def fit_nbgam(series: WeeklySeries, spec: ModelSpec, k: int = DEFAULT_K, lam: float | None = None,
              kappa: float | None = None, response_scale: float = 1.0) -> GamFit:
    """Fit one of the four weekly model forms. The first two weeks are dropped for
    every form so all of them share a week set."""
    spec = ModelSpec(spec)
    ili = np.asarray(series.ili, dtype=float) * response_scale
    n = ili.size
    if n <= LAG:
        raise GamError("series too short for a lag-2 model")
    y = ili[LAG:]
    lag = ili[:-LAG] if spec.lag else None
    x = None
    if spec is ModelSpec.ADJUSTED_SMOOTH_LAG:
        if series.adjusted_irt is None:
            raise GamError("adjusted_irt has not been computed for this series")
        x = np.asarray(series.adjusted_irt, dtype=float)[LAG:]
    elif spec.smooth:
        x = np.asarray(series.irt, dtype=float)[LAG:]
    if y.size < k + 5:
        raise GamError(f"series too short: {y.size} usable weeks, need at least {k + 5}")
    fit = fit_gam(y, x=x, linear=lag, k=k, lam=lam, kappa=kappa)
    fit.spec = spec
    fit.weeks = tuple(series.weeks[LAG:])
    return fit


SUITE_HEADER = ("region", "spec", "deviance_explained", "rmse", "aic", "edf", "kappa", "lambda")
SUITE_SPECS = (ModelSpec.LAG_ONLY, ModelSpec.SMOOTH_ONLY, ModelSpec.SMOOTH_LAG, ModelSpec.ADJUSTED_SMOOTH_LAG)


@dataclass
class SuiteRow:
    region: str
    spec: ModelSpec
    fit: GamFit

    def as_row(self) -> tuple:
        f = self.fit
        return (self.region, self.spec.value, f.deviance_explained, f.rmse, f.aic, f.edf, f.kappa, f.lam)


def run_model_suite(north: WeeklySeries, south: WeeklySeries, k: int = DEFAULT_K,
                    response_scale: float = 1.0) -> list[SuiteRow]:
    rows = []
    for series in (north, south):
        if series.adjusted_irt is None:
            raise GamError(f"{series.region.value}: adjusted_irt has not been computed")
        for spec in SUITE_SPECS:
            rows.append(SuiteRow(series.region.value, spec,
                                fit_nbgam(series, spec, k=k, response_scale=response_scale)))
    return rows


def write_suite_csv(path, rows: Sequence[SuiteRow]):
    return write_csv(path, SUITE_HEADER, (r.as_row() for r in rows))


def write_curve_csv(path, fit: GamFit):
    return write_csv(path, ("week", "observed", "fitted"),
                     ((str(w), float(o), float(m)) for w, o, m in zip(fit.weeks, fit.y, fit.fitted)))
