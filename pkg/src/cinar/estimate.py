"""Moment, least-squares, and likelihood estimation.

Three estimators for the dependence coefficients and innovation
parameters: Yule--Walker (sample-ACF linear system), conditional least
squares (closed-form normal equations), and conditional maximum
likelihood (constrained optimization through a smooth bijection), plus
finite-difference observed-information standard errors.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import expit, logit, softmax

from ._kernels import mixture_site_values, thinning_convolution_table
from .diagnose import information_criteria
from .acf import sample_acf, sample_acvf
from .errors import CinarError, NumericalError, ValidationError
from .innovations import NbMarginalInnovation, PoissonInnovation
from .model import CinarParams, lagged_stack, validate_params

__all__ = [
    "FitDiagnostics",
    "FitResult",
    "yw_estimate",
    "cls_estimate",
    "cml_loglik",
    "cml_estimate",
    "fd_hessian",
    "observed_fisher_se",
]

_SQRT_EPS = np.sqrt(np.finfo(float).eps)
_CBRT_EPS = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class FitDiagnostics:
    """Optimizer bookkeeping; trivial for the closed-form estimators."""

    n_iter: int
    converged: bool
    grad_norm: Optional[float] = None


@dataclass(frozen=True)
class FitResult:
    """Estimates in lexicographic theta order followed by innovation parameters.

    ``estimates`` holds (theta_ij over S, mu_eps[, i_eps]); ``names``
    labels each coordinate.  Standard errors, log-likelihood, and the
    information criteria are populated by CML only.  ``admissible`` says
    whether the point satisfies the model constraints; the closed-form
    estimators never clamp, so it can be False.
    """

    method: str
    names: tuple
    estimates: np.ndarray
    admissible: bool
    diagnostics: FitDiagnostics
    std_errors: Optional[np.ndarray] = None
    loglik: Optional[float] = None
    aic: Optional[float] = None
    bic: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("YW", "CLS", "CML"):
            raise ValidationError(f"unknown method tag {self.method!r}")
        est = np.asarray(self.estimates, dtype=float).copy()
        if est.shape != (len(self.names),):
            raise ValidationError("estimates and names must have equal length")
        est.setflags(write=False)
        object.__setattr__(self, "estimates", est)
        if self.method != "CML":
            if (self.std_errors is not None or self.loglik is not None
                    or self.aic is not None or self.bic is not None):
                raise ValidationError(
                    "std_errors/loglik/aic/bic are populated by CML only"
                )
        if self.std_errors is not None:
            se = np.asarray(self.std_errors, dtype=float).copy()
            if se.shape != est.shape:
                raise ValidationError("std_errors must align with estimates")
            se.setflags(write=False)
            object.__setattr__(self, "std_errors", se)

    @property
    def n_theta(self):
        return sum(1 for n in self.names if n.startswith("theta"))

    @property
    def theta(self):
        return self.estimates[: self.n_theta]

    @property
    def alpha(self):
        return float(self.theta.sum())

    @property
    def mu_eps(self):
        return float(self.estimates[self.n_theta])

    @property
    def i_eps(self):
        """Innovation dispersion ratio, or None when not estimated."""
        if len(self.names) > self.n_theta + 1:
            return float(self.estimates[self.n_theta + 1])
        return None


def _theta_names(order):
    return tuple(f"theta_{i}{j}" for (i, j) in order.lags)


def _moments_admissible(theta, mu_eps, sigma2_eps=None):
    """Would a parameter point with these moments pass validation?"""
    ok = bool(np.all(theta >= 0.0)) and 0.0 < float(theta.sum()) < 1.0
    ok = ok and np.all(np.isfinite(theta)) and np.isfinite(mu_eps) and mu_eps > 0.0
    if sigma2_eps is not None:
        ok = ok and np.isfinite(sigma2_eps) and sigma2_eps > 0.0
    return ok


def _solve_checked(mat, rhs, message):
    if not np.all(np.isfinite(mat)) or np.linalg.cond(mat) > 1e12:
        raise NumericalError(message)
    return np.linalg.solve(mat, rhs)


# =============================================================================
# Yule--Walker
# =============================================================================


def yw_estimate(grid, order):
    """Moment estimator from the sample-ACF linear system over the lag set.

    Solves rho = P theta with P[(k,l),(i,j)] = rho(k-i, l-j), lex-negative
    entries mapped through rho(k,l) = rho(-k,-l); then mu_eps =
    mean*(1-alpha) and sigma2_eps = var*(1-alpha^2) - alpha*mu_eps.
    Estimates are reported verbatim, inadmissible or not.
    """
    table = sample_acf(grid, (order.p1, order.p2))
    lags = order.lags
    rho = np.array([table.value(k, l) for (k, l) in lags])
    pmat = np.array(
        [[table.value(k - i, l - j) for (i, j) in lags] for (k, l) in lags]
    )
    theta = _solve_checked(pmat, rho, "YW system singular")
    alpha = float(theta.sum())
    xbar = float(np.mean(grid.values))
    mu_eps = xbar * (1.0 - alpha)
    sigma2_x = sample_acvf(grid, 0, 0)
    sigma2_eps = sigma2_x * (1.0 - alpha**2) - alpha * mu_eps
    i_eps = sigma2_eps / mu_eps if mu_eps != 0.0 else float("nan")
    return FitResult(
        method="YW",
        names=_theta_names(order) + ("mu_eps", "i_eps"),
        estimates=np.concatenate([theta, [mu_eps, i_eps]]),
        admissible=_moments_admissible(theta, mu_eps, sigma2_eps),
        diagnostics=FitDiagnostics(n_iter=0, converged=True),
    )


# =============================================================================
# Conditional least squares
# =============================================================================


def cls_estimate(grid, order):
    """Closed-form least-squares fit of the conditional-mean regression.

    The normal equations of sum (X_st - mu - sum theta_ij X_{s-i,t-j})^2
    over the interior; solution ordered (theta lexicographic, mu_eps).
    Estimates are reported verbatim, inadmissible or not.
    """
    x, lagged = lagged_stack(grid.values, order)
    design = np.column_stack([lagged.astype(float), np.ones(x.size)])
    amat = design.T @ design
    bvec = design.T @ x.astype(float)
    coef = _solve_checked(amat, bvec, "CLS normal equations singular")
    theta, mu_eps = coef[:-1], float(coef[-1])
    return FitResult(
        method="CLS",
        names=_theta_names(order) + ("mu_eps",),
        estimates=coef,
        admissible=_moments_admissible(theta, mu_eps),
        diagnostics=FitDiagnostics(n_iter=0, converged=True),
    )


# =============================================================================
# Conditional maximum likelihood
# =============================================================================


def _loglik_core(x, lagged, alpha, phi, innovation):
    """Sum of log conditional probabilities; (-inf, bad-site index) on zeros."""
    table = thinning_convolution_table(
        alpha, innovation, int(lagged.max()), int(x.max())
    )
    p_site = mixture_site_values(table, lagged, phi, x)
    bad = np.flatnonzero(p_site <= 0.0)
    if bad.size:
        return -np.inf, bad
    return float(np.sum(np.log(p_site))), bad


def cml_loglik(params, grid):
    """Conditional log-likelihood of the grid's interior sites.

    Each term is the log of the mixture-of-convolutions conditional PMF.
    Returns -inf (with a site report) when some observed count has zero
    conditional probability, which can only happen with truncated-support
    innovation laws or severe underflow.
    """
    verdict = validate_params(params)
    if not verdict:
        raise ValidationError("invalid parameters: " + "; ".join(verdict.violations))
    x, lagged = lagged_stack(grid.values, params.order)
    value, bad = _loglik_core(x, lagged, params.alpha, params.phi, params.innovation)
    if bad.size:
        width = grid.n2 - params.order.p2
        r, c = divmod(int(bad[0]), width)
        warnings.warn(
            f"{bad.size} interior site(s) have zero conditional probability;"
            f" first at grid cell ({r + params.order.p1}, {c + params.order.p2})",
            stacklevel=2,
        )
    return value


def _normalize_family(family):
    tag = str(family).lower().replace("-", "").replace("_", "")
    if tag in ("poisson", "poi", "p"):
        return "poisson"
    if tag in ("nb", "nbmarginal", "negbin", "negativebinomial", "n"):
        return "nb"
    raise ValidationError(
        f"unknown innovation family {family!r}: use 'poisson' or 'nb'"
    )


def _make_innovation(family, mu_eps, i_eps, alpha):
    if family == "poisson":
        return PoissonInnovation(mu_eps)
    return NbMarginalInnovation.from_targets(mu_eps, i_eps, alpha)


def _pack(theta, mu_eps, i_eps, family):
    """Map interior parameters to the unconstrained optimizer space."""
    alpha = float(theta.sum())
    phi = theta / alpha
    z = [logit(alpha)]
    z.extend(np.log(phi[:-1]) - np.log(phi[-1]))
    z.append(np.log(mu_eps))
    if family == "nb":
        z.append(np.log(i_eps - 1.0))
    return np.asarray(z, dtype=float)


def _unpack(z, m, family):
    """Inverse of _pack: logistic alpha, softmax phi, exp mu, 1+exp dispersion."""
    alpha = float(expit(z[0]))
    logits = np.append(z[1:m], 0.0)
    theta = alpha * softmax(logits)
    mu_eps = float(np.exp(np.clip(z[m], -700.0, 700.0)))
    if family == "nb":
        i_eps = 1.0 + float(np.exp(np.clip(z[m + 1], -700.0, 700.0)))
    else:
        i_eps = None
    return theta, mu_eps, i_eps


def _project_interior(theta, mu_eps, i_eps, m):
    """Pull a possibly inadmissible start strictly inside the constraints."""
    theta = np.clip(np.nan_to_num(np.asarray(theta, dtype=float), nan=0.0),
                    1e-4, None)
    total = theta.sum()
    if total >= 1.0 - 1e-3:
        theta *= (1.0 - 1e-3) / total
    mu_eps = float(mu_eps) if np.isfinite(mu_eps) and mu_eps > 1e-4 else 1e-4
    if i_eps is None or not np.isfinite(i_eps) or i_eps < 1.01:
        i_eps = max(i_eps if i_eps is not None and np.isfinite(i_eps) else 0.0,
                    1.01)
    return theta[:m], mu_eps, i_eps


def _moment_dispersion(grid, alpha):
    """Innovation dispersion implied by the sample variance at a given alpha."""
    mu_eps = float(np.mean(grid.values)) * (1.0 - alpha)
    sigma2_eps = sample_acvf(grid, 0, 0) * (1.0 - alpha**2) - alpha * mu_eps
    if mu_eps <= 0 or not np.isfinite(sigma2_eps):
        return 1.5
    return sigma2_eps / mu_eps


def _initial_point(grid, order, family, init):
    """CLS start, falling back to YW, falling back to a neutral interior point."""
    m = order.n_lags
    if init is not None:
        theta = np.asarray(init.theta, dtype=float)
        if theta.size != m:
            raise ValidationError(
                f"init has {theta.size} dependence coefficients, order needs {m}"
            )
        mu_eps = init.mu_eps
        i_eps = init.i_eps
    else:
        try:
            fit = cls_estimate(grid, order)
        except CinarError:
            try:
                fit = yw_estimate(grid, order)
            except CinarError:
                fit = None
        if fit is not None:
            theta, mu_eps, i_eps = fit.theta, fit.mu_eps, fit.i_eps
        else:
            theta = np.full(m, 0.3 / m)
            mu_eps = max(float(np.mean(grid.values)) * 0.7, 1e-2)
            i_eps = 1.5
    if family == "nb" and i_eps is None:
        i_eps = _moment_dispersion(grid, float(np.clip(np.sum(theta), 0.0, 0.99)))
    return _project_interior(theta, mu_eps, i_eps, m)


def _central_grad(fn, z):
    """Central finite-difference gradient, step sqrt(eps)*(1+|z_i|)."""
    g = np.zeros_like(z)
    for i in range(z.size):
        h = _SQRT_EPS * (1.0 + abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (fn(zp) - fn(zm)) / (2.0 * h)
    return g


def _parse_fix_zero(fix_zero, order):
    """Indices into the lag set for coefficients pinned to zero."""
    lags = list(order.lags)
    fixed = []
    for item in fix_zero:
        if isinstance(item, str):
            digits = [c for c in item if c.isdigit()]
            if len(digits) != 2:
                raise ValidationError(
                    f"cannot parse fixed coefficient {item!r}; use e.g. 'theta_01'"
                )
            lag = (int(digits[0]), int(digits[1]))
        else:
            lag = (int(item[0]), int(item[1]))
        if lag not in lags:
            raise ValidationError(
                f"fixed coefficient {item!r} is not a lag of order "
                f"({order.p1},{order.p2})"
            )
        fixed.append(lags.index(lag))
    fixed = sorted(set(fixed))
    if len(fixed) >= len(lags):
        raise ValidationError("cannot fix every dependence coefficient to zero")
    return fixed


def cml_estimate(grid, order, family="poisson", init=None, multistart=False,
                 fix_zero=()):
    """Maximum conditional likelihood over the open constraint region.

    The constraints (theta_ij >= 0, sum < 1, mu_eps > 0, dispersion > 1
    for the NB family) are enforced through a smooth bijection to an
    unconstrained space, where a quasi-Newton search runs from the CLS
    (fallback YW, fallback neutral) start, or from ``init`` when given.
    ``fix_zero`` names lag coefficients pinned to exactly 0 (simplified
    models), e.g. ``("theta_11",)`` or ``[(1, 1)]``; they are excluded
    from the free parameters, the information criteria, and carry zero
    standard error.  ``multistart`` adds four fixed perturbed starts and
    keeps the best optimum.  Deterministic.
    """
    family = _normalize_family(family)
    m = order.n_lags
    fixed_idx = _parse_fix_zero(fix_zero, order)
    free_idx = np.array([k for k in range(m) if k not in fixed_idx], dtype=int)
    m_free = free_idx.size
    x, lagged = lagged_stack(grid.values, order)

    def scatter(theta_free):
        theta = np.zeros(m)
        theta[free_idx] = theta_free
        return theta

    def neg_loglik(z):
        theta_free, mu_eps, i_eps = _unpack(z, m_free, family)
        if not np.isfinite(mu_eps) or mu_eps <= 0 or mu_eps > 1e12:
            return 1e300
        alpha = float(theta_free.sum())
        try:
            innovation = _make_innovation(family, mu_eps, i_eps, alpha)
        except CinarError:
            return 1e300
        theta = scatter(theta_free)
        value, _ = _loglik_core(x, lagged, alpha, theta / alpha, innovation)
        return -value if np.isfinite(value) else 1e300

    theta0, mu0, i0 = _initial_point(grid, order, family, init)
    theta0_free, mu0, i0 = _project_interior(theta0[free_idx], mu0, i0, m_free)
    z0 = _pack(theta0_free, mu0, i0, family)
    starts = [z0]
    if multistart:
        offsets = np.array([0.5, -0.5, 1.0, -1.0])
        starts.extend(z0 + off for off in offsets)

    best = None
    total_iter = 0
    for start in starts:
        res = optimize.minimize(
            neg_loglik, start, method="BFGS",
            options={"gtol": 1e-8, "maxiter": 500},
        )
        total_iter += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res

    z_hat = best.x
    loglik_max = -neg_loglik(z_hat)
    grad = _central_grad(neg_loglik, z_hat)
    grad_norm = float(np.linalg.norm(grad, ord=np.inf))
    tol = 1e-5 * (1.0 + abs(loglik_max))
    if grad_norm > tol:
        polish = optimize.minimize(
            neg_loglik, z_hat, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        total_iter += int(polish.nit)
        if polish.fun <= best.fun:
            z_hat = polish.x
            loglik_max = -neg_loglik(z_hat)
            grad = _central_grad(neg_loglik, z_hat)
            grad_norm = float(np.linalg.norm(grad, ord=np.inf))
    converged = grad_norm <= tol

    theta_free, mu_eps, i_eps = _unpack(z_hat, m_free, family)
    theta = scatter(theta_free)
    alpha = float(theta.sum())
    innovation_params = [mu_eps] if family == "poisson" else [mu_eps, i_eps]
    estimates = np.concatenate([theta, innovation_params])
    names = _theta_names(order) + (
        ("mu_eps",) if family == "poisson" else ("mu_eps", "i_eps")
    )
    params_hat = CinarParams(
        order, theta, _make_innovation(family, mu_eps, i_eps, alpha)
    )

    def free_loglik(vec):
        inn = _make_innovation(
            family, float(vec[m_free]),
            float(vec[m_free + 1]) if family == "nb" else None,
            float(vec[:m_free].sum()),
        )
        full = scatter(vec[:m_free])
        value, _ = _loglik_core(
            x, lagged, float(vec[:m_free].sum()), full / full.sum(), inn
        )
        return value

    vec_free = np.concatenate([theta_free, innovation_params])
    try:
        se_free = _se_from_loglik(
            free_loglik, vec_free, n_theta=m_free, has_dispersion=family == "nb"
        )
        std_errors = np.zeros(estimates.size)
        std_errors[np.concatenate([free_idx, np.arange(m, estimates.size)])] = se_free
    except CinarError:
        std_errors = None
    aic, bic = information_criteria(
        loglik_max, vec_free.size, grid.n1, grid.n2, x.size
    )
    return FitResult(
        method="CML",
        names=names,
        estimates=estimates,
        admissible=bool(validate_params(params_hat)),
        diagnostics=FitDiagnostics(
            n_iter=total_iter, converged=converged, grad_norm=grad_norm
        ),
        std_errors=std_errors,
        loglik=loglik_max,
        aic=aic,
        bic=bic,
    )


# =============================================================================
# Observed-information standard errors
# =============================================================================


def fd_hessian(fn, x0):
    """Central finite-difference Hessian, step cbrt(eps)*(1+|x_i|) per axis."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    h = _CBRT_EPS * (1.0 + np.abs(x0))
    hess = np.empty((n, n))
    f0 = fn(x0)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (fn(x0 + ei) - 2.0 * f0 + fn(x0 - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                fn(x0 + ei + ej) - fn(x0 + ei - ej)
                - fn(x0 - ei + ej) + fn(x0 - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def _params_vector(params):
    """(theta lex, mu_eps[, i_eps]) plus the family tag for rebuilding."""
    mu_eps, sigma2_eps = params.innovation.moments()
    if isinstance(params.innovation, NbMarginalInnovation):
        return np.concatenate([params.theta, [mu_eps, sigma2_eps / mu_eps]]), "nb"
    if isinstance(params.innovation, PoissonInnovation):
        return np.concatenate([params.theta, [mu_eps]]), "poisson"
    raise ValidationError(
        "standard errors support the Poisson and NB innovation families only"
    )


def _se_from_loglik(fn, vec, n_theta=None, has_dispersion=False):
    """Boundary-guarded FD-Hessian standard errors at a stationary point.

    When ``n_theta`` is given, refuses vectors whose finite-difference
    stencil would cross a constraint boundary (theta >= 0, mu_eps > 0,
    dispersion > 1).
    """
    if n_theta is not None:
        steps = _CBRT_EPS * (1.0 + np.abs(vec))
        lo = vec - steps
        if (np.any(lo[:n_theta] < 0) or lo[n_theta] <= 0
                or (has_dispersion and lo[n_theta + 1] <= 1)):
            raise NumericalError(
                "estimate too close to the constraint boundary for"
                " finite-difference standard errors"
            )
    hess = fd_hessian(fn, vec)
    neg = -hess
    eigvals = np.linalg.eigvalsh(neg)
    if not np.all(np.isfinite(eigvals)) or eigvals.min() <= 0.0:
        raise NumericalError(
            "not at a maximum / flat direction: negative-Hessian eigenvalues "
            + np.array2string(eigvals, precision=6)
        )
    cov = np.linalg.inv(neg)
    return np.sqrt(np.diag(cov))


def observed_fisher_se(params, grid, loglik_fn=None):
    """Standard errors from the negative Hessian of the log-likelihood.

    The Hessian is taken by central finite differences in the original
    parametrization (theta lex, mu_eps[, i_eps]) at ``params``; standard
    errors are the square roots of the diagonal of its negative inverse.
    ``loglik_fn`` (a map from that vector to a real) replaces the model
    log-likelihood when given.
    """
    vec, family = _params_vector(params)
    m = params.order.n_lags
    n_theta = None
    if loglik_fn is None:
        n_theta = m
        x, lagged = lagged_stack(grid.values, params.order)

        def loglik_fn(v):
            theta = v[:m]
            alpha = float(theta.sum())
            innovation = _make_innovation(
                family, float(v[m]), float(v[m + 1]) if family == "nb" else None,
                alpha,
            )
            value, _ = _loglik_core(x, lagged, alpha, theta / alpha, innovation)
            return value

    return _se_from_loglik(
        loglik_fn, vec, n_theta=n_theta, has_dispersion=family == "nb"
    )
