"""The two competing N*(N) curves and how they are pinned to data.

Isotropic correlation (one common pairwise correlation rho):

    N*(N) = N / (1 + (N - 1) rho)

which saturates at 1/rho. Linear factor model, with holistic non-negative
coefficients a (mean squared loading), c (squared norm of the mean loading
vector) and d (mean residual variance):

    N*(N) = N (a N + d) / (c N + d)

which grows like (a/c) N. Only the ratios a/d and c/d are identifiable.
"""

from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

from .errors import ConvergenceError, ValidationError


@dataclass(frozen=True)
class IsotropicModel:
    rho: float
    n_max: int
    anchor_n_star: float
    sigma2: float = None

    def __post_init__(self):
        if self.n_max >= 2 and not (-1.0 / (self.n_max - 1) - 1e-12 <= self.rho <= 1.0 + 1e-12):
            raise ValidationError(
                f"rho={self.rho} outside [-1/(n_max-1), 1] for n_max={self.n_max}"
            )

    def __call__(self, n):
        return isotropic_nstar(n, self.rho)

    @property
    def limit(self):
        return isotropic_limit(self.rho)


@dataclass(frozen=True)
class FactorCurve:
    a: float
    c: float
    d: float
    imputed_k: int = None

    def __post_init__(self):
        for name in ("a", "c", "d"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"factor coefficient {name} must be finite and >= 0, got {v}")
        if self.c == 0 and self.d == 0:
            raise ValidationError("factor curve degenerate: c = d = 0")

    def __call__(self, n):
        return factor_curve_nstar(n, self)

    @property
    def a_over_d(self):
        return self.a / self.d if self.d > 0 else math.inf

    @property
    def c_over_d(self):
        return self.c / self.d if self.d > 0 else math.inf

    def scaled(self, lam):
        return FactorCurve(lam * self.a, lam * self.c, lam * self.d, self.imputed_k)


def _check_rho(n, rho):
    if n < 1:
        raise ValidationError(f"portfolio size must be positive, got {n}")
    if n >= 2 and not (-1.0 / (n - 1) <= rho <= 1.0):
        raise ValidationError(
            f"rho={rho} outside [-1/(N-1), 1] for N={n}: covariance not positive semi-definite"
        )


def isotropic_nstar(n, rho):
    """Effective degrees of freedom of an N-asset isotropic portfolio."""
    _check_rho(n, rho)
    if n == 1:
        return 1.0
    den = 1.0 + (n - 1) * rho
    # at the boundary rho = -1/(N-1) the portfolio is riskless
    return n / den if den > 0 else math.inf


def impute_isotropic(n_max, anchor_n_star, sigma2=None):
    """Solve the isotropic curve through the full-universe measurement.

    This is an extrapolation from one datum, not a fit: the curve passes
    through (1, 1) and (n_max, anchor_n_star) exactly.
    """
    if n_max < 2:
        raise ValidationError(f"n_max must be at least 2, got {n_max}")
    if not (0 < anchor_n_star <= n_max):
        raise ValidationError(f"anchor N* must lie in (0, {n_max}], got {anchor_n_star}")
    if anchor_n_star < 1:
        raise ValidationError(
            f"anchor N*={anchor_n_star} < 1 would need rho > 1; no isotropic curve fits it"
        )
    rho = (n_max / anchor_n_star - 1.0) / (n_max - 1)
    return IsotropicModel(rho=rho, n_max=int(n_max), anchor_n_star=float(anchor_n_star),
                          sigma2=sigma2)


def isotropic_limit(rho):
    """Large-portfolio limit 1/rho of the isotropic curve."""
    if not rho > 0:
        raise ValidationError(f"isotropic limit is finite only for rho > 0, got {rho}")
    return 1.0 / rho


def factor_curve_nstar(n, curve):
    if n < 1:
        raise ValidationError(f"portfolio size must be positive, got {n}")
    den = curve.c * n + curve.d
    if not den > 0:
        raise ValidationError("factor curve denominator vanishes (c = d = 0)")
    return n * (curve.a * n + curve.d) / den


def factor_asymptote(n, n_max, anchor_n_star):
    """Large-portfolio factor trend N*/N ~ 1/K through the final datum.

    Returns ``(k, value)``: the imputed factor count and the value at ``n``
    of the line through the origin and (n_max, anchor_n_star).
    """
    if not anchor_n_star > 0:
        raise ValidationError(f"anchor N* must be positive, got {anchor_n_star}")
    if n < 1 or n_max < 1:
        raise ValidationError(f"sizes must be positive, got n={n}, n_max={n_max}")
    k = max(1, int(math.floor(n_max / anchor_n_star + 0.5)))
    return k, n * anchor_n_star / n_max


# --- fitting -----------------------------------------------------------------

DEFAULT_STARTS = (
    (0.01, 0.05), (0.01, 0.3), (0.01, 1.0), (0.01, 3.0),
    (0.5, 0.05), (0.5, 0.3), (0.5, 1.0), (0.5, 3.0),
)


@dataclass(frozen=True)
class FactorFit:
    """Outcome of :func:`fit_factor_curve`.

    ``curve`` has d fixed at 1, so its a and c are the ratios a/d and c/d.
    Standard errors are for those ratios.
    """

    curve: FactorCurve
    a_over_d_se: float
    c_over_d_se: float
    covariance: np.ndarray = field(repr=False)
    loss: float
    sizes: tuple
    weighted: bool
    iterations: int
    converged_starts: int

    @property
    def a_over_d(self):
        return self.curve.a_over_d

    @property
    def c_over_d(self):
        return self.curve.c_over_d

    def values(self, sizes=None):
        sizes = self.sizes if sizes is None else sizes
        return {int(n): factor_curve_nstar(int(n), self.curve) for n in sizes}


def _curve_values(n, a, c):
    return n * (a * n + 1.0) / (c * n + 1.0)


def _levenberg_marquardt(residual, theta0, max_iterations, tolerance):
    """Minimise 0.5*|residual(theta)|^2 by damped Gauss-Newton.

    Numerical central-difference Jacobian; Marquardt diagonal scaling plus a
    small identity term so zero-gradient directions stay regular.
    Returns (theta, loss, iterations, converged).
    """
    theta = np.asarray(theta0, dtype=float)
    r = residual(theta)
    loss = float(r @ r)
    lam = 1e-3
    p = theta.size
    for it in range(1, max_iterations + 1):
        jac = np.empty((r.size, p))
        for k in range(p):
            h = 1e-6 * max(1.0, abs(theta[k]))
            step = np.zeros(p)
            step[k] = h
            jac[:, k] = (residual(theta + step) - residual(theta - step)) / (2 * h)
        jtj = jac.T @ jac
        grad = jac.T @ r
        accepted = False
        while lam < 1e16:
            a_mat = jtj + lam * (np.diag(np.diag(jtj)) + 1e-12 * np.eye(p))
            try:
                delta = np.linalg.solve(a_mat, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            r_new = residual(trial)
            loss_new = float(r_new @ r_new)
            if np.isfinite(loss_new) and loss_new <= loss:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction left at machine precision
            return theta, loss, it, True
        change = (loss - loss_new) / max(loss, 1e-300)
        theta, r, loss = trial, r_new, loss_new
        lam = max(lam / 10.0, 1e-12)
        if loss == 0.0 or change < tolerance:
            return theta, loss, it, True
    return theta, loss, max_iterations, False


def fit_factor_curve(summaries, fit_sizes=None, n_max=None, weighted=False,
                     max_iterations=500, tolerance=1e-10, starts=DEFAULT_STARTS):
    """Least-squares fit of N(aN + d)/(cN + d) to per-size mean N*.

    a and c are kept non-negative by optimising their square roots; d is
    fixed at 1 because the curve is unchanged by a common rescaling.

    ``weighted=False`` minimises plain squared deviations of the means;
    ``weighted=True`` divides each deviation by its standard error.
    ``fit_sizes`` defaults to 2 .. n_max - 1; without ``n_max`` the largest
    size present is taken to be the full universe.
    """
    by_size = {s.size: s for s in summaries}
    if fit_sizes is None:
        top = n_max if n_max is not None else max(by_size)
        fit_sizes = range(2, top)
    sizes = [int(n) for n in fit_sizes if int(n) in by_size]
    if len(sizes) < 4:
        raise ValidationError(f"need at least 4 sizes to fit 3 coefficients, got {len(sizes)}")
    n = np.array(sizes, dtype=float)
    y = np.array([by_size[k].mean for k in sizes])
    se = np.array([by_size[k].std_err for k in sizes])
    if np.any(se <= 0):
        bad = [k for k, e in zip(sizes, se) if e <= 0]
        raise ValidationError(f"standard errors must be positive; sizes {bad} are not")
    w = 1.0 / se if weighted else np.ones_like(se)

    def residual(theta):
        return w * (y - _curve_values(n, theta[0] ** 2, theta[1] ** 2))

    best = None
    n_converged = 0
    for a0, c0 in starts:
        theta, loss, iters, ok = _levenberg_marquardt(
            residual, [math.sqrt(a0), math.sqrt(c0)], max_iterations, tolerance
        )
        n_converged += ok
        if best is None or loss < best[1] or (loss == best[1] and ok and not best[3]):
            best = (theta, loss, iters, ok)
    theta, loss, iters, ok = best
    a, c = float(theta[0] ** 2), float(theta[1] ** 2)

    # the optimum often sits on the a = 0 or c = 0 face; resolve it exactly there
    for face in ("a", "c"):
        sub = _fit_on_face(face, residual, a, c, max_iterations, tolerance)
        if sub is not None and sub[1] <= loss:
            a, c, loss = sub[0][0], sub[0][1], sub[1]

    if not ok:
        raise ConvergenceError(
            f"factor curve fit did not converge in {max_iterations} iterations",
            best=FactorCurve(a, c, 1.0),
        )

    cov = _ratio_covariance(n, y, w, a, c, loss, weighted)
    return FactorFit(
        curve=FactorCurve(a, c, 1.0),
        a_over_d_se=float(math.sqrt(max(cov[0, 0], 0.0))),
        c_over_d_se=float(math.sqrt(max(cov[1, 1], 0.0))),
        covariance=cov,
        loss=float(loss),
        sizes=tuple(sizes),
        weighted=weighted,
        iterations=int(iters),
        converged_starts=int(n_converged),
    )


def _fit_on_face(face, residual, a, c, max_iterations, tolerance):
    if face == "a":
        def r1(t):
            return residual(np.array([0.0, t[0]]))
        start = [math.sqrt(max(c, 1e-6))]
    else:
        def r1(t):
            return residual(np.array([t[0], 0.0]))
        start = [math.sqrt(max(a, 1e-6))]
    theta, loss, _, ok = _levenberg_marquardt(r1, start, max_iterations, tolerance)
    if not ok:
        return None
    v = float(theta[0] ** 2)
    return ((0.0, v) if face == "a" else (v, 0.0)), loss


def _ratio_covariance(n, y, w, a, c, loss, weighted):
    # Jacobian of the weighted model with respect to (a/d, c/d), analytic
    den = c * n + 1.0
    d_a = w * n * n / den
    d_c = -w * n * n * (a * n + 1.0) / den**2
    jac = np.column_stack([d_a, d_c])
    cov = np.linalg.pinv(jac.T @ jac)
    if not weighted:
        dof = max(len(n) - 3, 1)
        cov = cov * (loss / dof)
    return cov


# --- plot data ----------------------------------------------------------------

CURVE_COLUMNS = ("n", "isotropic_value", "factor_fit_value", "asymptote_value")


def model_curve_rows(n_max, isotropic, factor_curve, anchor_n_star):
    rows = []
    for n in range(1, n_max + 1):
        _, asym = factor_asymptote(n, n_max, anchor_n_star)
        rows.append((n, isotropic_nstar(n, isotropic.rho), factor_curve_nstar(n, factor_curve), asym))
    return rows


def write_model_curves_csv(rows, dest):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for n, iso, fac, asym in rows:
            w.writerow([n, repr(float(iso)), repr(float(fac)), repr(float(asym))])

    if isinstance(dest, io.TextIOBase):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)
