"""Probabilistic movement primitives over 3-D end-effector positions.

A primitive is a Gaussian over basis weights, one independent weight vector
per Cartesian axis sharing a single normalized Gaussian basis. Everything
here is functional: conditioning and re-timing return new models.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .basis import GaussianBasis, build_basis_matrix, eval_gaussian_basis, phase
from .demos import DemoSet, Demonstration, split_demoset
from .errors import (CovarianceRepairError, IllConditionedError, InsufficientDataError,
                     InvalidInputError, SingularConditioningError)

DEFAULT_LAMBDA = 1e-6
HARD_VARIANCE = 1e-10
REPAIR_TOL = 1e-10
# timing presets for conditioning, seconds over a 2 s horizon
TC1 = (0.0, 0.85, 1.0, 1.3, 1.6, 2.0)
TC2 = (0.0, 1.2, 1.4, 1.6, 1.8, 2.0)
TIMING_PRESETS = {"Tc1": TC1, "Tc2": TC2}
T1_SWITCH = 0.85
T_TOTAL = 2.0
K_REACH = 4
K_PUSH = 5


def _per_axis(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (3,)).copy()
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError(f"{name} must be finite and non-negative")
    return arr


def repair_covariance(S, tol=REPAIR_TOL):
    """Symmetrize ``S`` and zero eigenvalues in ``[-tol, 0)``.

    Eigenvalues below ``-tol`` mean something upstream is wrong and raise
    :class:`CovarianceRepairError` instead of being hidden.
    """
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    if w[0] < -tol:
        raise CovarianceRepairError(f"covariance has eigenvalue {w[0]:.3e} < -{tol:g}")
    if w[0] < 0:
        S = (V * np.clip(w, 0.0, None)) @ V.T
        S = 0.5 * (S + S.T)
    return S


@dataclass(frozen=True)
class ProMPModel:
    """Weight distribution plus observation noise for one primitive.

    ``mu_w`` has shape ``(3, k)``, ``Sigma_w`` shape ``(3, k, k)`` and
    ``Sigma_x`` shape ``(3,)``. ``T`` is the duration the phase is scaled to.
    """

    family: GaussianBasis
    mu_w: np.ndarray
    Sigma_w: np.ndarray
    Sigma_x: np.ndarray
    T: float

    def __post_init__(self):
        k = self.family.k
        mu = np.array(self.mu_w, dtype=float).reshape(3, k)
        S = np.array(self.Sigma_w, dtype=float).reshape(3, k, k)
        sx = _per_axis(self.Sigma_x, "Sigma_x")
        if not self.T > 0:
            raise InvalidInputError(f"duration must be positive, got {self.T}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(S))):
            raise InvalidInputError("non-finite weights")
        for d in range(3):
            if not np.allclose(S[d], S[d].T, rtol=0, atol=1e-12 + 1e-9 * np.abs(S[d]).max()):
                raise InvalidInputError("Sigma_w must be symmetric")
            if np.linalg.eigvalsh(S[d])[0] < -REPAIR_TOL:
                raise InvalidInputError("Sigma_w must be positive semi-definite")
        for a in (mu, S, sx):
            a.setflags(write=False)
        object.__setattr__(self, "mu_w", mu)
        object.__setattr__(self, "Sigma_w", S)
        object.__setattr__(self, "Sigma_x", sx)
        object.__setattr__(self, "T", float(self.T))

    @property
    def k(self):
        return self.family.k

    def basis(self, times):
        return build_basis_matrix(self.family, times, self.T)

    def with_duration(self, T):
        """Same weight distribution stretched over a new duration."""
        return replace(self, T=float(T))

    def with_covariance_floor(self, var):
        """Add ``var * I`` to every weight covariance."""
        if var == 0:
            return self
        return replace(self, Sigma_w=self.Sigma_w + var * np.eye(self.k)[None])


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray


@dataclass(frozen=True)
class TrajectoryDistribution:
    times: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    @property
    def std(self):
        return np.sqrt(self.var)


@dataclass(frozen=True)
class Waypoint:
    """Desired position at time ``t`` with per-axis variance ``Sigma_star``."""

    t: float
    X_star: np.ndarray
    Sigma_star: np.ndarray = HARD_VARIANCE

    def __post_init__(self):
        x = np.array(self.X_star, dtype=float).reshape(3)
        if not np.all(np.isfinite(x)) or not np.isfinite(self.t) or self.t < 0:
            raise InvalidInputError("waypoint needs a finite position and a time >= 0")
        x.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "X_star", x)
        object.__setattr__(self, "Sigma_star", _per_axis(self.Sigma_star, "Sigma_star"))


def fit_weights(demo: Demonstration, family: GaussianBasis, lam=DEFAULT_LAMBDA):
    """Ridge regression of one demonstration onto the basis.

    Returns an array of shape ``(3, k)``: ``(lam I + Psi^T Psi)^-1 Psi^T X``
    for each axis.
    """
    if lam < 0:
        raise InvalidInputError("regularizer must be non-negative")
    if len(demo) < family.k:
        raise InsufficientDataError(f"{len(demo)} samples cannot fit {family.k} weights")
    Psi = build_basis_matrix(family, demo.times, demo.T)
    A = Psi.T @ Psi + lam * np.eye(family.k)
    if lam == 0 and np.linalg.cond(A) > 1e12:
        raise IllConditionedError("normal equations are singular; use lambda > 0")
    return np.linalg.solve(A, Psi.T @ demo.points).T


def learn(demoset: DemoSet, family: GaussianBasis, lam=DEFAULT_LAMBDA) -> ProMPModel:
    """Estimate a primitive from demonstrations.

    The weight mean and unbiased covariance come from per-demonstration
    fits; ``Sigma_x`` is the mean squared reconstruction residual per axis.
    """
    if len(demoset) < 2:
        raise InsufficientDataError("need at least two demonstrations")
    W = []
    sq = np.zeros(3)
    count = 0
    for demo in demoset:
        w = fit_weights(demo, family, lam)
        Psi = build_basis_matrix(family, demo.times, demo.T)
        sq += ((Psi @ w.T - demo.points) ** 2).sum(axis=0)
        count += len(demo)
        W.append(w)
    W = np.array(W)
    mu = W.mean(axis=0)
    dev = W - mu
    S = np.einsum("nda,ndb->dab", dev, dev) / (len(W) - 1)
    S = 0.5 * (S + S.transpose(0, 2, 1))
    return ProMPModel(family, mu, S, sq / count, demoset.T)


def learn_segments(demoset: DemoSet, t1=T1_SWITCH, k1=K_REACH, k2=K_PUSH, h1=None, h2=None,
                   lam=DEFAULT_LAMBDA):
    """Reach and push primitives learnt on the two time zones split at ``t1``."""
    first, second = split_demoset(demoset, t1)
    return learn(first, GaussianBasis(k1, h1), lam), learn(second, GaussianBasis(k2, h2), lam)


def project_basis(model: ProMPModel, family: GaussianBasis, n_grid=201) -> ProMPModel:
    """Re-express a primitive on another basis by least squares over the phase.

    The weights map linearly, ``w' = A w`` with ``A = pinv(Psi') Psi`` on a
    dense phase grid, so the mean and covariance carry over exactly through
    ``A``. Used to give a segment room for more waypoints than it has
    basis functions.
    """
    z = np.linspace(0.0, 1.0, n_grid)
    P_old = eval_gaussian_basis(model.family, z)
    P_new = eval_gaussian_basis(family, z)
    A = np.linalg.lstsq(P_new, P_old, rcond=None)[0]
    mu = model.mu_w @ A.T
    S = np.einsum("ak,dkl,bl->dab", A, model.Sigma_w, A)
    S = np.array([repair_covariance(s) for s in S])
    return ProMPModel(family, mu, S, model.Sigma_x, model.T)


def _psi(model: ProMPModel, times):
    return eval_gaussian_basis(model.family, phase(np.atleast_1d(times), model.T))


def marginal(model: ProMPModel, times, noise=True) -> TrajectoryDistribution:
    """Per-axis Gaussian marginal of the position at each time.

    ``noise=False`` drops the observation variance ``Sigma_x``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    Psi = _psi(model, times)
    mean = Psi @ model.mu_w.T
    var = np.einsum("nk,dkl,nl->nd", Psi, model.Sigma_w, Psi)
    if noise:
        var = var + model.Sigma_x
    if np.any(var < -1e-12):
        raise CovarianceRepairError(f"negative marginal variance {var.min():.3e}")
    return TrajectoryDistribution(times, mean, np.clip(var, 0.0, None))


def condition(model: ProMPModel, wp: Waypoint) -> ProMPModel:
    """Gaussian conditioning of the weights on one desired observation."""
    if not 0 <= wp.t <= model.T + 1e-12 * max(1.0, model.T):
        raise InvalidInputError(f"waypoint time {wp.t} outside [0, {model.T}]")
    psi = _psi(model, wp.t)[0]
    mu = np.empty_like(model.mu_w)
    S = np.empty_like(model.Sigma_w)
    for d in range(3):
        Sd = model.Sigma_w[d]
        Spsi = Sd @ psi
        s = wp.Sigma_star[d] + psi @ Spsi
        if not s > 0:
            raise SingularConditioningError(
                f"axis {d}: zero prior variance at t={wp.t} and zero desired variance")
        innovation = wp.X_star[d] - psi @ model.mu_w[d]
        mu[d] = model.mu_w[d] + Spsi * (innovation / s)
        S[d] = repair_covariance(Sd - np.outer(Spsi, Spsi) / s)
    return replace(model, mu_w=mu, Sigma_w=S)


def condition_all(model: ProMPModel, wps) -> ProMPModel:
    for wp in wps:
        model = condition(model, wp)
    return model


@dataclass(frozen=True)
class CompositePrimitive:
    """Reach segment on ``[0, t1)`` followed by a push segment on ``[t1, T]``.

    Each segment sees its own phase in [0, 1]; ``mp1.T == t1`` and
    ``mp2.T == T - t1``.
    """

    mp1: ProMPModel
    mp2: ProMPModel
    t1: float

    @property
    def T(self):
        return self.t1 + self.mp2.T

    def split(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        first = times < self.t1
        return first, times[first], times[~first] - self.t1


def _merge(first, a, b, n):
    out = np.empty((n,) + a.shape[1:]) if a.size else np.empty((n,) + b.shape[1:])
    out[first] = a
    out[~first] = b
    return out


def _segment_marginal(model, times, noise):
    if times.size == 0:
        return np.empty((0, 3)), np.empty((0, 3))
    m = marginal(model, times, noise)
    return m.mean, m.var


def composite_marginal(comp: CompositePrimitive, times, noise=True) -> TrajectoryDistribution:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    first, ta, tb = comp.split(times)
    ma, va = _segment_marginal(comp.mp1, ta, noise)
    mb, vb = _segment_marginal(comp.mp2, tb, noise)
    n = times.size
    return TrajectoryDistribution(times, _merge(first, ma, mb, n), _merge(first, va, vb, n))


def compose(mp1: ProMPModel, mp2: ProMPModel, t1=T1_SWITCH, T=T_TOTAL, junction=None,
            junction_var=HARD_VARIANCE) -> CompositePrimitive:
    """Chain two primitives at ``t1`` and tie them to a common junction point.

    Both models are re-timed to their segment. When ``junction`` is None the
    midpoint of the reach end and the push start is used. Both segments are
    then conditioned on the junction so the mean is continuous at ``t1``.
    """
    if not 0 < t1 < T:
        raise InvalidInputError(f"switch time {t1} must lie in (0, {T})")
    a = mp1.with_duration(t1)
    b = mp2.with_duration(T - t1)
    if junction is None:
        junction = 0.5 * (marginal(a, [t1]).mean[0] + marginal(b, [0.0]).mean[0])
    a = condition(a, Waypoint(t1, junction, junction_var))
    b = condition(b, Waypoint(0.0, junction, junction_var))
    return CompositePrimitive(a, b, float(t1))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _draw_weights(model: ProMPModel, rng):
    w = np.empty_like(model.mu_w)
    for d in range(3):
        S = 0.5 * (model.Sigma_w[d] + model.Sigma_w[d].T)
        lam, V = np.linalg.eigh(S)
        if lam[0] < -REPAIR_TOL:
            raise CovarianceRepairError(f"cannot sample: eigenvalue {lam[0]:.3e}")
        z = rng.standard_normal(model.k)
        w[d] = model.mu_w[d] + V @ (np.sqrt(np.clip(lam, 0.0, None)) * z)
    return w


def _sample_segment(model, times, rng, noise):
    if times.size == 0:
        return np.empty((0, 3))
    w = _draw_weights(model, rng)
    pts = _psi(model, times) @ w.T
    if noise:
        pts = pts + rng.standard_normal(pts.shape) * np.sqrt(model.Sigma_x)
    return pts


def sample_trajectory(model, times, rng_seed=None, noise=False) -> Trajectory:
    """Draw one trajectory from a model or a composite primitive.

    Observation noise is left out unless ``noise`` is set.
    """
    rng = _rng(rng_seed)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if isinstance(model, CompositePrimitive):
        first, ta, tb = model.split(times)
        pa = _sample_segment(model.mp1, ta, rng, noise)
        pb = _sample_segment(model.mp2, tb, rng, noise)
        return Trajectory(times, _merge(first, pa, pb, times.size))
    return Trajectory(times, _sample_segment(model, times, rng, noise))


def model_to_dict(model: ProMPModel):
    return {
        "k": model.k,
        "centers": model.family.centers.tolist(),
        "h": model.family.h,
        "T": model.T,
        "mu_w": model.mu_w.tolist(),
        "Sigma_w": model.Sigma_w.tolist(),
        "Sigma_x": model.Sigma_x.tolist(),
    }


def model_from_dict(data) -> ProMPModel:
    family = GaussianBasis(data["k"], data["h"], data["centers"])
    return ProMPModel(family, data["mu_w"], data["Sigma_w"], data["Sigma_x"], data["T"])


def save_model(model: ProMPModel, path):
    # json writes repr(float), which round-trips every double exactly
    Path(path).write_text(json.dumps(model_to_dict(model)))


def load_model(path) -> ProMPModel:
    return model_from_dict(json.loads(Path(path).read_text()))
