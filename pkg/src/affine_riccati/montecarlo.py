"""Path simulation of affine jump-diffusions and statistical oracles.

Scheme
------
Full-truncation Euler for the diffusion part: the nonnegative coordinates are
clamped at zero inside every coefficient evaluation and after every step.
Jumps with magnitude >= ``jump_trunc`` are sampled exactly - compound-Poisson
for the constant measure, Poisson thinning with the intensity frozen at the
left endpoint X_{i,t-} for the state-linear measures.  Smaller jumps are
replaced by their first-order drift compensation: compensated coordinates
lose the tail truncation drift, uncompensated coordinates gain the mean of
the discarded small jumps.  No variance correction is added.

Randomness
----------
All draws derive from counter-based Philox streams keyed by
(seed, step, purpose, round).  Each stream yields one uniform per path (row
p always belongs to path p), and every variate is produced from uniforms by
inverse CDF or by per-path rejection rounds, so a path's noise depends only
on its own rows.  Parallel workers replay the same tables and slice their
rows; reductions run in fixed path order, so parallel and serial runs are
bit-identical, as are reruns with identical options.

Paths whose state magnitude passes 1e12 are flagged exploded and frozen, not
errored; exponential-moment estimates over an ensemble with exploded paths
are reported as lower bounds.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError
from .esscher import IDENTITY_TOL, TiltSpec
from .model import AffineModel, eval_F, eval_R, validate_model
from .riccati import SolveOptions, solve_minimal, solve_riccati

__all__ = [
    "SimOptions",
    "PathEnsemble",
    "simulate_paths",
    "estimate_exp_moment",
    "affine_formula_check",
    "martingale_gap",
    "MomentEstimate",
    "FormulaReport",
    "GapReport",
]

EXPLOSION_CAP = 1e12

# stream purposes
_P_GAUSS_CONST = 1
_P_GAUSS_LIN = 2
_P_CASCADE_WAIT = 3
_P_CASCADE_PICK = 4
_P_SIZE = 200        # + jump source index


@dataclass(frozen=True)
class SimOptions:
    """Euler scheme configuration."""

    x0: np.ndarray
    T: float
    dt: float = 1e-3
    npaths: int = 10_000
    seed: int = 0
    jump_trunc: float = 1e-3
    record_stride: Optional[int] = None

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.T <= 0:
            raise ConfigError("T must be > 0")
        if self.npaths < 1:
            raise ConfigError("npaths must be >= 1")
        if not (0.0 < self.jump_trunc <= 1.0):
            raise ConfigError("jump_trunc must lie in (0, 1]")
        if self.record_stride is not None and self.record_stride < 1:
            raise ConfigError("record_stride must be >= 1")

    @property
    def nsteps(self) -> int:
        return max(1, math.ceil(self.T / self.dt))

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return self.record_stride
        return max(1, self.nsteps // 100)


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths on a common grid plus per-path survival flags."""

    times: np.ndarray         # (k,)
    states: np.ndarray        # (npaths, k, d)
    survived: np.ndarray      # (npaths,) bool
    seed: int
    options: SimOptions

    @property
    def npaths(self) -> int:
        return self.states.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    def summary_csv(self, fh) -> None:
        """Ensemble summary: path,T,X_1..X_d,survived."""
        close = False
        if isinstance(fh, (str, bytes)):
            fh = open(fh, "w")
            close = True
        try:
            d = self.states.shape[2]
            cols = ",".join(f"X_{k + 1}" for k in range(d))
            fh.write(f"path,T,{cols},survived\n")
            T = self.times[-1]
            for p in range(self.npaths):
                row = [str(p), f"{T:.17g}"]
                row += [f"{x:.17g}" for x in self.states[p, -1]]
                row.append("1" if self.survived[p] else "0")
                fh.write(",".join(row) + "\n")
        finally:
            if close:
                fh.close()


def _uniforms(seed: int, step: int, purpose: int, shape, extra=()):
    """Uniforms from the Philox stream keyed by (seed, step, purpose, *extra)."""
    ss = np.random.SeedSequence((seed, step, purpose) + tuple(extra))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.random(shape)


def _sample_tail_values(measure, eps, rows, seed, step, purpose, jump_round, npaths):
    """One tail jump size for each flagged path, by per-path rejection rounds."""
    out = np.zeros(npaths)
    need = rows.copy()
    attempt = 0
    while np.any(need):
        if attempt >= 500:
            raise ConfigError("tail jump sampling exceeded the rejection round cap")
        # full tables keep row p owned by path p; the transform only runs on
        # the rows still waiting for a value
        u = _uniforms(seed, step, purpose, (npaths, 2), extra=(jump_round, attempt))
        idx = np.nonzero(need)[0]
        prop, acc = measure.tail_proposal(eps, u[idx])
        take = u[idx, 1] <= acc
        out[idx[take]] = prop[take]
        need[idx[take]] = False
        attempt += 1
    return out


def _diffusion_factor(a2: np.ndarray) -> Optional[np.ndarray]:
    """Factor L with L L^T = a2 (symmetric PSD), None when a2 = 0."""
    if not np.any(a2):
        return None
    w, V = np.linalg.eigh(a2)
    w = np.clip(w, 0.0, None)
    return V * np.sqrt(w)


def simulate_paths(model: AffineModel, opts: SimOptions) -> PathEnsemble:
    """Simulate an ensemble of paths of the affine model."""
    report = validate_model(model)
    if not report.ok:
        raise ConfigError("model fails validation: " + "; ".join(report))
    shape = model.shape
    d, m = shape.d, shape.m
    if opts.x0.shape != (d,):
        raise ConfigError(f"x0 must have length {d}")
    if np.any(opts.x0[:m] < 0):
        raise ConfigError("x0 must lie in the state space (nonnegative I-block)")

    nsteps = opts.nsteps
    h = opts.T / nsteps
    eps = opts.jump_trunc
    stride = opts.stride

    # precomputed scheme ingredients
    drift_const = model.b.astype(float).copy()
    mu0 = model.mu0
    lam0 = 0.0
    if not mu0.is_zero:
        lam0 = mu0.tail_mass(eps)
        drift_const[mu0.axis] += mu0.sim_drift_correction(eps, compensated=True)

    beta_sim = np.array(model.beta_I, copy=True)   # (m, d): per-unit-X_i drift
    lam_lin = np.zeros(m)
    for i in range(m):
        mu = model.mus[i]
        if mu.is_zero:
            continue
        lam_lin[i] = mu.tail_mass(eps)
        beta_sim[i, mu.axis] += mu.sim_drift_correction(
            eps, compensated=model.measure_compensated(i))

    L = _diffusion_factor(2.0 * model.a)
    alpha = model.alpha
    has_alpha = bool(np.any(alpha > 0))
    sqrt_h = math.sqrt(h)

    rec_idx = list(range(0, nsteps + 1, stride))
    if rec_idx[-1] != nsteps:
        rec_idx.append(nsteps)
    rec_pos = {s: k for k, s in enumerate(rec_idx)}
    times = np.array([s * h for s in rec_idx])

    npaths = opts.npaths
    states = np.empty((npaths, len(rec_idx), d))
    survived = np.ones(npaths, dtype=bool)
    states[:, 0, :] = opts.x0

    # jump sources: (measure, intensity coordinate or None for the constant part)
    sources = []
    if lam0 > 0.0:
        sources.append((mu0, None, lam0))
    for i in range(m):
        if lam_lin[i] > 0.0:
            sources.append((model.mus[i], i, lam_lin[i]))
    nsrc = len(sources)

    def run_block(lo: int, hi: int):
        X = np.tile(opts.x0, (hi - lo, 1))
        alive = np.ones(hi - lo, dtype=bool)
        for step in range(nsteps):
            Xp = X.copy()
            Xp[:, :m] = np.maximum(Xp[:, :m], 0.0)
            drift = drift_const + Xp[:, :m] @ beta_sim
            if shape.n:
                if drift.ndim == 1:
                    drift = np.tile(drift, (hi - lo, 1))
                drift[:, m:] += X[:, m:] @ model.beta_JJ.T
            X_new = X + h * np.atleast_2d(drift)

            if L is not None:
                Z = ndtri(_uniforms(opts.seed, step, _P_GAUSS_CONST, (npaths, d))[lo:hi])
                X_new += sqrt_h * (Z @ L.T)
            if has_alpha:
                Z2 = ndtri(_uniforms(opts.seed, step, _P_GAUSS_LIN, (npaths, m))[lo:hi])
                X_new[:, :m] += np.sqrt(2.0 * alpha * h * Xp[:, :m]) * Z2

            if nsrc:
                # exact within-step jump cascade: waiting times at the current
                # thinning intensity, re-frozen at each jump's left limit so
                # self-excitation inside the step is not lost
                Xj = Xp.copy()
                tau = np.zeros(hi - lo)
                waiting = alive.copy()
                rnd = 0
                while np.any(waiting):
                    if rnd >= 10_000:
                        alive &= ~waiting
                        break
                    inten = np.zeros((hi - lo, nsrc))
                    for s_idx, (mu, coord, lam) in enumerate(sources):
                        inten[:, s_idx] = lam if coord is None else \
                            np.maximum(Xj[:, coord], 0.0) * lam
                    itot = inten.sum(axis=1)
                    u_wait = _uniforms(opts.seed, step, _P_CASCADE_WAIT, npaths,
                                       extra=(rnd,))[lo:hi]
                    with np.errstate(divide="ignore"):
                        dtau = np.where(itot > 0.0, -np.log1p(-u_wait) / itot, math.inf)
                    tau = tau + dtau
                    jumping = waiting & (tau < h)
                    waiting = jumping
                    if not np.any(jumping):
                        break
                    u_pick = _uniforms(opts.seed, step, _P_CASCADE_PICK, npaths,
                                       extra=(rnd,))[lo:hi]
                    cdf = np.cumsum(inten, axis=1) / np.maximum(itot, 1e-300)[:, None]
                    pick = np.sum(u_pick[:, None] > cdf, axis=1)
                    for s_idx, (mu, coord, lam) in enumerate(sources):
                        rows_full = np.zeros(npaths, dtype=bool)
                        rows_full[lo:hi] = jumping & (pick == s_idx)
                        if not np.any(rows_full):
                            continue
                        sizes = _sample_tail_values(mu, eps, rows_full, opts.seed, step,
                                                    _P_SIZE + s_idx, rnd, npaths)[lo:hi]
                        sel = rows_full[lo:hi]
                        Xj[sel, mu.axis] += sizes[sel]
                    rnd += 1
                X_new += Xj - Xp

            X_new[:, :m] = np.maximum(X_new[:, :m], 0.0)
            blow = np.max(np.abs(X_new), axis=1) > EXPLOSION_CAP
            alive &= ~blow
            X = np.where(alive[:, None], X_new, X)

            if (step + 1) in rec_pos:
                states[lo:hi, rec_pos[step + 1], :] = X
        survived[lo:hi] = alive

    nthreads = int(os.environ.get("AFFINE_RICCATI_THREADS", "1") or "1")
    if nthreads > 1 and npaths >= 2 * nthreads:
        cuts = np.linspace(0, npaths, nthreads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(lambda c: run_block(c[0], c[1]), zip(cuts[:-1], cuts[1:])))
    else:
        run_block(0, npaths)

    return PathEnsemble(times=times, states=states, survived=survived,
                        seed=opts.seed, options=opts)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    exploded_fraction: float

    @property
    def lower_bound_only(self) -> bool:
        """Exploded paths count as +oo, so the mean is a lower bound."""
        return self.exploded_fraction > 0.0


def estimate_exp_moment(ensemble: PathEnsemble, u) -> MomentEstimate:
    """Sample mean and standard error of e^{<u, X_T>} over surviving paths."""
    u = np.asarray(u, dtype=float)
    alive = ensemble.survived
    vals = np.exp(ensemble.terminal[alive] @ u)
    n = vals.size
    if n == 0:
        return MomentEstimate(mean=math.inf, stderr=math.inf, exploded_fraction=1.0)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MomentEstimate(mean=mean, stderr=stderr,
                          exploded_fraction=1.0 - n / ensemble.npaths)


@dataclass(frozen=True)
class FormulaReport:
    applicable: bool
    mc_mean: float = math.nan
    mc_stderr: float = math.nan
    analytic: float = math.nan
    z: float = math.nan
    exploded_fraction: float = 0.0
    status: Optional[str] = None

    @property
    def flagged(self) -> bool:
        return self.applicable and abs(self.z) > 3.0

    def report_lines(self):
        if not self.applicable:
            return [f"applicable: no", f"status: {self.status}"]
        return [
            "applicable: yes",
            f"mc_mean: {self.mc_mean:.17g}",
            f"mc_stderr: {self.mc_stderr:.17g}",
            f"analytic: {self.analytic:.17g}",
            f"z: {self.z:.17g}",
            f"exploded_fraction: {self.exploded_fraction:.17g}",
            f"flagged: {'yes' if self.flagged else 'no'}",
        ]


def affine_formula_check(model: AffineModel, opts: SimOptions, u) -> FormulaReport:
    """Monte Carlo check of E[e^{<u, X_T>}] = e^{phi + <psi, x0>}."""
    u = np.asarray(u, dtype=float)
    sol = solve_riccati(model, u, SolveOptions(T=opts.T))
    if not sol.status.reached_horizon:
        return FormulaReport(applicable=False,
                             status=f"formula not applicable at this (u, T): {sol.status.label()}")
    analytic = math.exp(sol.phi_end + float(np.real(sol.psi_end) @ opts.x0))
    ens = simulate_paths(model, opts)
    est = estimate_exp_moment(ens, u)
    z = 0.0 if est.stderr == 0.0 and est.mean == analytic else \
        (est.mean - analytic) / est.stderr if est.stderr > 0 else math.inf
    return FormulaReport(applicable=True, mc_mean=est.mean, mc_stderr=est.stderr,
                         analytic=analytic, z=float(z),
                         exploded_fraction=est.exploded_fraction,
                         status=sol.status.label())


@dataclass(frozen=True)
class GapReport:
    mean: float
    stderr: float
    predicted: float
    martingale_value: float
    excludes_martingale: bool
    z_vs_predicted: float

    def report_lines(self):
        return [
            f"mean: {self.mean:.17g}",
            f"stderr: {self.stderr:.17g}",
            f"predicted: {self.predicted:.17g}",
            f"martingale_value: {self.martingale_value:.17g}",
            f"excludes_martingale: {'yes' if self.excludes_martingale else 'no'}",
            f"z_vs_predicted: {self.z_vs_predicted:.17g}",
        ]


def martingale_gap(model: AffineModel, spec: TiltSpec, opts: SimOptions,
                   ci_width: float = 3.0) -> GapReport:
    """Estimate E[S~_T] and compare against the martingale value e^{<theta,x0>}.

    The predicted mean comes from the minimal Riccati solution:
    e^{phi(T,theta) + <psi(T,theta), x0>}, which equals the martingale value
    exactly when the constant solution is the minimal one.
    """
    d = model.shape.d
    theta = spec.theta.reshape(d)
    F_theta = eval_F(model, theta)
    R_theta = eval_R(model, theta)
    if abs(F_theta - spec.l) > IDENTITY_TOL * (1.0 + abs(spec.l)):
        raise ConfigError("spec fails the algebraic condition F(theta) = l")
    if np.linalg.norm(R_theta - spec.lam) > IDENTITY_TOL * (1.0 + np.linalg.norm(spec.lam)):
        raise ConfigError("spec fails the algebraic condition R(theta) = lambda")

    ts, psi_min, phi_min, _ = solve_minimal(model, theta, SolveOptions(T=opts.T),
                                            l=spec.l, lam=spec.lam)
    predicted = math.exp(float(phi_min[-1]) + float(psi_min[-1] @ opts.x0))
    martingale_value = math.exp(float(theta @ opts.x0))

    ens = simulate_paths(model, opts)
    alive = ens.survived
    path = ens.states[alive]
    Lvals = spec.l + path @ spec.lam
    dts = np.diff(ens.times)
    integral = np.sum(0.5 * (Lvals[:, 1:] + Lvals[:, :-1]) * dts, axis=1)
    S_T = np.exp(-integral + path[:, -1, :] @ theta)
    n = S_T.size
    mean = float(np.mean(S_T))
    stderr = float(np.std(S_T, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    if stderr > 0:
        excludes = abs(mean - martingale_value) > ci_width * stderr
        z_pred = (mean - predicted) / stderr
    else:
        excludes = mean != martingale_value
        z_pred = 0.0 if mean == predicted else math.inf
    return GapReport(mean=mean, stderr=stderr, predicted=predicted,
                     martingale_value=martingale_value,
                     excludes_martingale=excludes, z_vs_predicted=float(z_pred))
