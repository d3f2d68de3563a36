"""Full-covariance Gaussian mixtures fitted by EM.

All densities are handled in log space. Covariances are factorised once
per model with a Cholesky decomposition, and every log density is computed
from the triangular solve, never by exponentiating and taking logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .embedding import PhaseSpace
from .errors import (
    DegenerateComponentError,
    DegenerateFitError,
    DomainError,
    InsufficientPointsError,
    NonPositiveDefiniteError,
)
from .kmeans import kmeans

LOG_2PI = np.log(2.0 * np.pi)
# components with less total responsibility than this are reset
DEGENERATE_MASS = 1e-10
RELATIVE_RIDGE = 1e-6


@dataclass(frozen=True)
class FitConfig:
    """EM settings.

    ``reg=None`` means a ridge of ``1e-6 * trace(global covariance) / dim``.
    ``tol`` is the relative change in total log-likelihood that stops EM.
    """

    n_components: int = 10
    n_init: int = 10
    max_iter: int = 200
    tol: float = 1e-6
    reg: float | None = None
    seed: int = 0
    max_resets: int = 3

    def __post_init__(self):
        if self.n_components < 1:
            raise DomainError("n_components must be >= 1")
        if self.n_init < 1:
            raise DomainError("n_init must be >= 1")
        if self.max_iter < 0:
            raise DomainError("max_iter must be >= 0")
        if not self.tol > 0:
            raise DomainError("tol must be > 0")
        if self.reg is not None and self.reg < 0:
            raise DomainError("reg must be >= 0")


@dataclass(frozen=True)
class FitMeta:
    log_likelihood: float
    n_iter: int
    seed: int
    reg: float
    converged: bool = False
    n_resets: int = 0
    history: tuple[float, ...] = ()
    reset_iters: tuple[int, ...] = ()

    @property
    def initial_log_likelihood(self):
        return self.history[0] if self.history else self.log_likelihood


def _cholesky(sigma, which=""):
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NonPositiveDefiniteError(f"covariance{which} is not positive definite") from None
    if not np.all(np.isfinite(chol)) or np.any(np.diag(chol) <= 0):
        raise NonPositiveDefiniteError(f"covariance{which} is not positive definite")
    return chol


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Mixture weights ``(M,)``, means ``(M, dim)``, covariances ``(M, dim, dim)``."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    meta: FitMeta | None = None
    _chol: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        mu = np.array(self.means, dtype=float)
        cov = np.array(self.covariances, dtype=float)
        m = w.size
        if mu.ndim == 1:
            mu = mu.reshape(m, -1)
        dim = mu.shape[1]
        if cov.ndim == 2 and m == 1:
            cov = cov[None]
        if mu.shape != (m, dim) or cov.shape != (m, dim, dim):
            raise DomainError(
                f"inconsistent shapes: weights {w.shape}, means {mu.shape}, covariances {cov.shape}"
            )
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise DomainError(f"weights must be a probability vector (sum={w.sum()!r})")
        if not np.allclose(cov, cov.transpose(0, 2, 1), rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise DomainError("covariances must be symmetric")
        chol = np.empty_like(cov)
        for k in range(m):
            chol[k] = _cholesky(cov[k], f" {k}")
        for a in (w, mu, cov, chol):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def n_components(self):
        return self.weights.size

    @property
    def dim(self):
        return self.means.shape[1]

    def with_meta(self, meta):
        return replace(self, meta=meta, _chol=None)

    def same_parameters(self, other):
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.covariances, other.covariances)
        )


def _as_points(points):
    if isinstance(points, PhaseSpace):
        points = points.points
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _log_gaussian_chol(x, mu, chol):
    """Log N(x | mu, L L^T) for rows of ``x``."""
    z = solve_triangular(chol, (x - mu).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    half_logdet = np.log(np.diag(chol)).sum()
    return -0.5 * (x.shape[1] * LOG_2PI + maha) - half_logdet


def log_component_density(x, mu, sigma):
    """Log density of a multivariate normal at ``x``.

    ``x`` may be a single point ``(dim,)`` (returns a float) or a stack of
    points ``(n, dim)`` (returns an array).
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    xs = x.reshape(1, -1) if single else x
    if xs.shape[1] != mu.size or sigma.shape != (mu.size, mu.size):
        raise DomainError(
            f"dimension mismatch: x {xs.shape[1]}, mean {mu.size}, covariance {sigma.shape}"
        )
    out = _log_gaussian_chol(xs, mu, _cholesky(sigma))
    return float(out[0]) if single else out


def weighted_log_prob(points, model: GmmModel):
    """``log w_k + log N(x_i | mu_k, Sigma_k)`` as an ``(n, M)`` array."""
    x = _as_points(points)
    if x.shape[1] != model.dim:
        raise DomainError(f"points have dimension {x.shape[1]}, model has {model.dim}")
    out = np.empty((x.shape[0], model.n_components))
    with np.errstate(divide="ignore"):
        logw = np.log(model.weights)
    for k in range(model.n_components):
        out[:, k] = _log_gaussian_chol(x, model.means[k], model._chol[k]) + logw[k]
    return out


def log_mixture_density(x, model: GmmModel):
    """Log of the mixture density at one point ``(dim,)`` or each row of ``(n, dim)``."""
    arr = np.asarray(x.points if isinstance(x, PhaseSpace) else x, dtype=float)
    single = arr.ndim <= 1 and not (model.dim == 1 and arr.ndim == 1 and arr.size > 1)
    pts = arr.reshape(1, -1) if single else _as_points(arr)
    out = logsumexp(weighted_log_prob(pts, model), axis=1)
    return float(out[0]) if single else out


def _e_step(points, model):
    wlp = weighted_log_prob(points, model)
    log_norm = logsumexp(wlp, axis=1)
    return wlp - log_norm[:, None], float(log_norm.sum())


def e_step(points, model: GmmModel):
    """Responsibilities ``gamma[i, k]`` of component ``k`` for point ``i``."""
    log_resp, _ = _e_step(points, model)
    return np.exp(log_resp)


def _m_step(x, gamma, reg):
    n, dim = x.shape
    nk = gamma.sum(axis=0)
    degenerate = np.flatnonzero(nk < DEGENERATE_MASS)
    safe = np.where(nk < DEGENERATE_MASS, 1.0, nk)
    weights = nk / n
    weights = weights / weights.sum()
    means = (gamma.T @ x) / safe[:, None]
    covs = np.empty((gamma.shape[1], dim, dim))
    eye = np.eye(dim)
    for k in range(gamma.shape[1]):
        diff = x - means[k]
        c = (gamma[:, k, None] * diff).T @ diff / safe[k]
        covs[k] = 0.5 * (c + c.T) + reg * eye
    return weights, means, covs, degenerate


def m_step(points, gamma, reg=0.0) -> GmmModel:
    """Responsibility-weighted update of weights, means and covariances.

    ``reg`` is added to every covariance diagonal. Raises
    :class:`DegenerateComponentError` when a component has essentially no
    responsibility mass.
    """
    x = _as_points(points)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != x.shape[0]:
        raise DomainError(f"responsibilities {gamma.shape} do not match {x.shape[0]} points")
    weights, means, covs, degenerate = _m_step(x, gamma, reg)
    if degenerate.size:
        raise DegenerateComponentError(degenerate)
    return GmmModel(weights, means, covs)


def default_ridge(x):
    """Ridge proportional to the average per-coordinate variance."""
    x = _as_points(x)
    trace = float(np.var(x, axis=0).sum())
    if trace <= 0:
        # all points identical
        return RELATIVE_RIDGE
    return RELATIVE_RIDGE * trace / x.shape[1]


def _global_cov(x):
    diff = x - x.mean(axis=0)
    return diff.T @ diff / x.shape[0]


def fit_em(points, config: FitConfig = FitConfig(), init: GmmModel | None = None) -> GmmModel:
    """Fit a mixture with k-means initialised EM.

    Means start at the best k-means centroids (by inertia over
    ``config.n_init`` restarts), weights uniform, every covariance at the
    global covariance plus ridge. EM stops when the relative change in total
    log-likelihood drops below ``config.tol`` or after ``config.max_iter``
    M-steps. A component whose responsibility mass vanishes is re-seeded at
    the worst-explained point; more than ``config.max_resets`` such resets
    raise :class:`DegenerateFitError`.

    ``init`` replaces the k-means initialisation with a given model.
    """
    x = _as_points(points)
    n, dim = x.shape
    m = config.n_components
    if n < m:
        raise InsufficientPointsError(f"{n} points cannot support {m} mixture components")
    if not np.all(np.isfinite(x)):
        raise DomainError("points contain non-finite values")

    reg = default_ridge(x) if config.reg is None else float(config.reg)
    base_cov = _global_cov(x) + reg * np.eye(dim)
    if init is None:
        km = kmeans(x, m, config.n_init, config.seed)
        model = GmmModel(np.full(m, 1.0 / m), km.centroids, np.repeat(base_cov[None], m, axis=0))
    elif init.n_components != m or init.dim != dim:
        raise DomainError("initial model does not match n_components / point dimension")
    else:
        model = init

    log_resp, ll = _e_step(x, model)
    history = [ll]
    reset_iters = []
    n_iter = 0
    resets = 0
    converged = False
    while True:
        if len(history) >= 2 and (len(history) - 1) not in reset_iters:
            prev = history[-2]
            if abs(history[-1] - prev) <= config.tol * abs(prev):
                converged = True
                break
        if n_iter >= config.max_iter:
            break
        weights, means, covs, degenerate = _m_step(x, np.exp(log_resp), reg)
        n_iter += 1
        if degenerate.size:
            resets += 1
            if resets > config.max_resets:
                raise DegenerateFitError(
                    f"components {degenerate.tolist()} collapsed after {config.max_resets} resets"
                )
            worst = np.argsort(logsumexp(weighted_log_prob(x, model), axis=1), kind="stable")
            for slot, k in enumerate(degenerate):
                means[k] = x[worst[slot % n]]
                covs[k] = base_cov
                weights[k] = 1.0 / m
            weights = weights / weights.sum()
            reset_iters.append(len(history))
        model = GmmModel(weights, means, covs)
        log_resp, ll = _e_step(x, model)
        history.append(ll)

    meta = FitMeta(
        log_likelihood=history[-1],
        n_iter=n_iter,
        seed=int(config.seed),
        reg=reg,
        converged=converged,
        n_resets=resets,
        history=tuple(history),
        reset_iters=tuple(reset_iters),
    )
    return GmmModel(model.weights, model.means, model.covariances, meta)


def total_log_likelihood(points, model: GmmModel):
    return float(log_mixture_density(_as_points(points), model).sum())
