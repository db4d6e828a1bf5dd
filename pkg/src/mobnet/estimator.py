"""Coefficient estimation: maximum pseudo-likelihood and MC-MLE.

MPLE regresses the dyad edge indicators on their change statistics by
Newton-Raphson; for dyad-independent models this is the exact MLE.
MC-MLE refines it by Geyer-Thompson importance sampling: networks are
simulated at an anchor parameter, the importance-weighted likelihood
ratio is maximized under an effective-sample-size guard, and the anchor
is moved until the update stalls.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import sampler as _sampler
from . import kernels
from .errors import (
    ModelFileError,
    SeparationError,
    SingularModelError,
    TooFewNodesError,
)
from .graph import DirectedGraph, NodeTable
from .terms import (
    COVARIATE_TRANSFORM_NOTE,
    DYAD_DEPENDENT,
    ModelSpec,
    compile_terms,
    statistics,
)

_STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.10, "†"))


def significance_stars(p: float) -> str:
    for cut, mark in _STAR_LEVELS:
        if p < cut:
            return mark
    return ""


@dataclass
class FitResult:
    """Estimates plus the bookkeeping needed to reuse or report them."""

    theta: np.ndarray
    std_errors: np.ndarray
    odds_ratios: np.ndarray
    p_values: np.ndarray
    log_lik: float
    log_lik_basis: str
    aic: float
    bic: float
    method: str
    iterations: int
    converged: bool
    degeneracy_flag: bool
    labels: list[str]
    n_obs_dyads: int
    skipped_terms: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    mcmc: dict | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "labels": list(self.labels),
            "theta": [float(v) for v in self.theta],
            "std_errors": [float(v) for v in self.std_errors],
            "odds_ratios": [float(v) for v in self.odds_ratios],
            "p_values": [float(v) for v in self.p_values],
            "log_lik": float(self.log_lik),
            "log_lik_basis": self.log_lik_basis,
            "aic": float(self.aic),
            "bic": float(self.bic),
            "iterations": self.iterations,
            "converged": self.converged,
            "degeneracy_flag": self.degeneracy_flag,
            "n_obs_dyads": self.n_obs_dyads,
            "skipped_terms": list(self.skipped_terms),
            "notes": dict(self.notes),
            "mcmc": self.mcmc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            theta=np.asarray(d["theta"], dtype=np.float64),
            std_errors=np.asarray(d["std_errors"], dtype=np.float64),
            odds_ratios=np.asarray(d["odds_ratios"], dtype=np.float64),
            p_values=np.asarray(d["p_values"], dtype=np.float64),
            log_lik=d["log_lik"],
            log_lik_basis=d["log_lik_basis"],
            aic=d["aic"],
            bic=d["bic"],
            method=d["method"],
            iterations=d["iterations"],
            converged=d["converged"],
            degeneracy_flag=d["degeneracy_flag"],
            labels=list(d["labels"]),
            n_obs_dyads=d["n_obs_dyads"],
            skipped_terms=list(d.get("skipped_terms", [])),
            notes=dict(d.get("notes", {})),
            mcmc=d.get("mcmc"),
        )

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        return cls.from_dict(json.loads(text))


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _wald_p(theta: np.ndarray, se: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.abs(theta) / se, np.inf)
    return np.array([math.erfc(zi / math.sqrt(2.0)) if np.isfinite(zi) else 0.0 for zi in z])


def _finish(theta, se, log_lik, basis, method, iters, converged, labels,
            n_obs, skipped, mcmc=None, degeneracy=False):
    k = len(theta)
    return FitResult(
        theta=theta,
        std_errors=se,
        odds_ratios=np.exp(theta),
        p_values=_wald_p(theta, se),
        log_lik=log_lik,
        log_lik_basis=basis,
        aic=2.0 * k - 2.0 * log_lik,
        bic=k * math.log(n_obs) - 2.0 * log_lik,
        method=method,
        iterations=iters,
        converged=converged,
        degeneracy_flag=degeneracy,
        labels=labels,
        n_obs_dyads=n_obs,
        skipped_terms=skipped,
        notes={"covariate_transform": COVARIATE_TRANSFORM_NOTE},
        mcmc=mcmc,
    )


def mple(
    g: DirectedGraph,
    nodes: NodeTable | None,
    spec: ModelSpec,
    max_iter: int = 100,
    grad_tol: float = 1e-8,
) -> FitResult:
    """Maximum pseudo-likelihood fit (exact MLE when dyads are independent).

    Builds the n(n-1) x k change-statistic matrix and solves the logistic
    regression by Newton-Raphson to gradient norm < ``grad_tol``.
    Standard errors come from the inverse observed information; for
    dyad-dependent models they are approximate and labeled as such.
    """
    if g.n < 3:
        raise TooFewNodesError(f"estimation needs n >= 3, got {g.n}")
    resolved, skipped = spec.resolve(nodes)
    c = compile_terms(resolved, nodes, g.n)
    x, y = kernels.design_matrix(g.adj, c.kinds, c.eas, c.rs, c.node_vals)
    y = y.astype(np.float64)
    n_obs, k = x.shape

    # rank check up front: a constant column is fine on its own (the
    # density term), but any linear dependence breaks the information
    if np.linalg.matrix_rank(x.T @ x) < k:
        variances = x.var(axis=0)
        suspects = [c.labels[i] for i in np.flatnonzero(variances < 1e-12)]
        raise SingularModelError(
            "singular information matrix; constant or collinear terms: "
            + (", ".join(suspects) if suspects else "(no constant columns)")
        )

    theta = np.zeros(k)
    info = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = x @ theta
        mu = _sigmoid(eta)
        grad = x.T @ (y - mu)
        w = mu * (1.0 - mu)
        info = x.T @ (x * w[:, None])
        if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > 30.0:
            worst = int(np.argmax(np.abs(theta)))
            raise SeparationError(c.labels[worst])
        if np.max(np.abs(grad)) < grad_tol:
            converged = True
            break
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as e:
            raise SingularModelError(f"information matrix not invertible: {e}") from e
        theta = theta + step
    if not converged:
        # one last gradient check at the final iterate
        eta = x @ theta
        mu = _sigmoid(eta)
        grad = x.T @ (y - mu)
        if np.max(np.abs(grad)) < grad_tol:
            converged = True
        elif np.max(np.abs(theta)) > 20.0:
            raise SeparationError(c.labels[int(np.argmax(np.abs(theta)))])
    se = np.sqrt(np.diag(np.linalg.inv(info)))
    eta = x @ theta
    log_lik = float(np.sum(y * eta) - np.sum(np.logaddexp(0.0, eta)))
    dep = any(t.kind in DYAD_DEPENDENT for t in resolved)
    basis = "pseudo-likelihood" + (" (approximate: dyad-dependent terms)" if dep else "")
    return _finish(
        theta, se, log_lik, basis, "MPLE", iterations, converged,
        c.labels, n_obs, skipped,
    )


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    return m + math.log(float(np.sum(np.exp(v - m))))


def _softmax(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - np.max(v))
    return e / e.sum()


def _weighted_cov(gmat: np.ndarray, w: np.ndarray) -> np.ndarray:
    mean = w @ gmat
    d = gmat - mean
    return d.T @ (d * w[:, None])


def mcmle(
    g: DirectedGraph,
    nodes: NodeTable | None,
    spec: ModelSpec,
    init: FitResult | None = None,
    config: _sampler.SamplerConfig | None = None,
    max_outer: int = 20,
    theta_tol: float = 1e-3,
    estimate_log_lik: bool = True,
) -> FitResult:
    """Geyer-Thompson Monte-Carlo MLE, initialized from the MPLE.

    Each outer iteration samples ``config.sample_size`` networks at the
    anchor, maximizes the importance-weighted likelihood ratio with
    Newton steps (halved whenever the effective sample size of the
    weights would drop below M/10), then re-anchors.  Stops when the
    anchor update is below ``theta_tol`` on every coordinate, or below
    twice its Monte-Carlo standard error (an absolute threshold alone is
    out of reach at finite sample sizes: the update wanders by MC noise).

    When the observed statistic vector falls outside the sampled range
    on any coordinate for two consecutive iterations the model is
    declared degenerate: ``degeneracy_flag`` is set and estimation stops
    without claiming convergence.
    """
    if init is None:
        init = mple(g, nodes, spec)
    if config is None:
        config = _sampler.SamplerConfig(sample_size=400)
    resolved, skipped = spec.resolve(nodes)
    labels = resolved.labels()
    k = len(resolved)
    g_obs = statistics(g, nodes, resolved)
    theta0 = np.asarray(init.theta if isinstance(init, FitResult) else init,
                        dtype=np.float64).copy()
    if theta0.shape[0] != k:
        raise ModelFileError(
            f"init has {theta0.shape[0]} coefficients for {k} terms"
        )
    n_obs = g.n * (g.n - 1)
    m = config.sample_size

    ss = np.random.SeedSequence(config.seed)
    outer_seeds = ss.generate_state(max_outer + 32)

    degenerate_streak = 0
    degeneracy = False
    converged = False
    outer = 0
    gmat = None
    last_anchor = theta0.copy()
    theta = theta0.copy()
    for outer in range(1, max_outer + 1):
        cfg = _sampler.SamplerConfig(
            burn_in=config.burn_in,
            interval=config.interval,
            sample_size=m,
            seed=int(outer_seeds[outer - 1]),
            proposal=config.proposal,
        )
        last_anchor = theta0.copy()
        gmat = _sampler.simulate_stats(resolved, theta0, nodes, cfg, g)
        lo = gmat.min(axis=0)
        hi = gmat.max(axis=0)
        if np.any(g_obs < lo) or np.any(g_obs > hi):
            degenerate_streak += 1
            if degenerate_streak >= 2:
                degeneracy = True
                break
        else:
            degenerate_streak = 0

        # inner maximization of delta -> delta.g_obs - log mean exp(delta.g_m)
        delta = np.zeros(k)
        centered = gmat - g_obs
        for _ in range(50):
            lw = centered @ delta
            w = _softmax(lw)
            grad = g_obs - w @ gmat
            cov = _weighted_cov(gmat, w)
            try:
                step = np.linalg.solve(cov + 1e-10 * np.eye(k), grad)
            except np.linalg.LinAlgError:
                step = grad
            # objective, for step halving
            obj = float(delta @ g_obs) - (_logsumexp(gmat @ delta) - math.log(m))
            scale = 1.0
            for _ in range(30):
                cand = delta + scale * step
                lw_c = gmat @ cand
                obj_c = float(cand @ g_obs) - (_logsumexp(lw_c) - math.log(m))
                w_c = _softmax(centered @ cand)
                ess = 1.0 / float(np.sum(w_c**2))
                if obj_c >= obj and ess >= m / 10.0:
                    break
                scale *= 0.5
            else:
                break
            delta = delta + scale * step
            if np.max(np.abs(scale * step)) < 1e-9:
                break
        theta = theta0 + delta
        w_end = _softmax(centered @ delta)
        ess_end = 1.0 / float(np.sum(w_end**2))
        cov_end = _weighted_cov(gmat, w_end)
        try:
            update_se = np.sqrt(np.abs(np.diag(np.linalg.inv(cov_end))) / ess_end)
        except np.linalg.LinAlgError:
            update_se = np.zeros(k)
        if np.all(np.abs(delta) < np.maximum(theta_tol, 2.0 * update_se)):
            converged = True
            break
        theta0 = theta

    # importance weights at the final estimate relative to the anchor the
    # last sample was drawn at; Fisher information is the weighted
    # covariance of the sampled statistics
    w = _softmax(gmat @ (theta - last_anchor))
    cov = _weighted_cov(gmat, w)
    var = np.diag(cov).copy()
    # a statistic with no variance under the fitted model carries zero
    # information: its coefficient is unidentified (typically the observed
    # value sits on the statistic's attainable boundary and the estimate
    # runs off to -inf), so its Wald SE is infinite
    dead = var <= 1e-12 * max(float(var.max(initial=0.0)), 1.0)
    se = np.full(k, np.inf)
    live = ~dead
    if live.any():
        sub = cov[np.ix_(live, live)]
        try:
            se[live] = np.sqrt(np.diag(np.linalg.inv(sub)))
        except np.linalg.LinAlgError:
            se[live] = np.nan
    boundary_terms = [labels[i] for i in np.flatnonzero(dead)]

    if estimate_log_lik and not degeneracy:
        log_lik = _bridge_log_lik(
            g, nodes, resolved, theta, g_obs, config, int(outer_seeds[-1])
        )
        basis = "monte-carlo bridge"
    else:
        log_lik = float("nan")
        basis = "not estimated"
    mcmc_info = {
        "sample_size": m,
        "outer_iterations": outer,
        "ess": float(1.0 / np.sum(w**2)),
        "seed": config.seed,
        "boundary_terms": boundary_terms,
    }
    return _finish(
        theta, se, log_lik, basis, "MCMLE", outer, converged,
        labels, n_obs, skipped, mcmc=mcmc_info, degeneracy=degeneracy,
    )


def _independent_log_lik(g, nodes, spec, theta):
    """Exact log-likelihood of the dyad-independent part of the model."""
    c = compile_terms(spec, nodes, g.n)
    x, y = kernels.design_matrix(g.adj, c.kinds, c.eas, c.rs, c.node_vals)
    eta = x @ theta
    return float(np.sum(y * eta) - np.sum(np.logaddexp(0.0, eta)))


def _bridge_log_lik(g, nodes, spec, theta, g_obs, config, seed, n_bridges: int = 8):
    """Path estimate of the log-likelihood at theta.

    Anchors at the dyad-independent submodel (dependent coordinates
    zeroed), whose partition function is closed form, then accumulates
    log Z ratios along a straight line to theta via importance sampling.
    """
    dep_mask = np.array([t.kind in DYAD_DEPENDENT for t in spec])
    theta_ref = np.where(dep_mask, 0.0, theta)
    ll_ref = _independent_log_lik(g, nodes, spec, theta_ref)
    log_z_gap = 0.0
    m_b = max(64, config.sample_size // 4)
    seeds = np.random.SeedSequence(seed).generate_state(n_bridges)
    for b in range(n_bridges):
        lam0 = b / n_bridges
        lam1 = (b + 1) / n_bridges
        t0 = theta_ref + lam0 * (theta - theta_ref)
        t1 = theta_ref + lam1 * (theta - theta_ref)
        cfg = _sampler.SamplerConfig(
            burn_in=config.burn_in,
            interval=config.interval,
            sample_size=m_b,
            seed=int(seeds[b]),
            proposal=config.proposal,
        )
        gmat = _sampler.simulate_stats(spec, t0, nodes, cfg, g)
        log_z_gap += _logsumexp(gmat @ (t1 - t0)) - math.log(m_b)
    # ll_ref = theta_ref . g_obs - log Z(theta_ref)
    log_z_ref = float(theta_ref @ g_obs) - ll_ref
    return float(theta @ g_obs) - (log_z_ref + log_z_gap)


def report(fit: FitResult) -> str:
    """Human-readable coefficient table with significance stars and ORs."""
    rows = []
    width = max([len(lb) for lb in fit.labels] + [14])
    header = f"{'term':<{width}}  {'estimate (SE)':>24}  {'OR':>10}"
    rows.append(header)
    rows.append("-" * len(header))
    for i, lb in enumerate(fit.labels):
        est = f"{fit.theta[i]:.3f} ({fit.std_errors[i]:.3f}){significance_stars(fit.p_values[i]):<3}"
        rows.append(f"{lb:<{width}}  {est:>24}  {fit.odds_ratios[i]:>10.3f}")
    for lb in fit.skipped_terms:
        rows.append(f"{lb:<{width}}  {'N/A':>24}  {'N/A':>10}")
    rows.append("-" * len(header))
    rows.append(
        f"method: {fit.method}   converged: {fit.converged}"
        + ("   DEGENERATE" if fit.degeneracy_flag else "")
    )
    rows.append(f"log-likelihood: {fit.log_lik:.3f} ({fit.log_lik_basis})")
    rows.append(f"AIC: {fit.aic:.3f}   BIC: {fit.bic:.3f}   dyads: {fit.n_obs_dyads}")
    if "covariate_transform" in fit.notes:
        rows.append(f"covariate transform: {fit.notes['covariate_transform']}")
    rows.append("significance: *** p<0.001, ** p<0.01, * p<0.05, † p<0.10")
    return "\n".join(rows) + "\n"
