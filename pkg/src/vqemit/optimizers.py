"""Minimization strategies over the noisy variational landscape.

Three routes to the minimum are provided, all driving the same objective:

* fit-then-minimize: learn the full landscape (see surrogate.py), then
  minimize the analytic fit classically at zero measurement cost;
* a sequential one-parameter optimizer that interpolates each axis slice by
  its exact 5-term trigonometric form and hops to the slice minimum;
* a derivative-free linear trust-region baseline spending exactly one
  objective evaluation per iteration.

Budget accounting is part of the contract: every objective evaluation
increments a counter exactly once, and the composed pipeline uses 90 noisy
plus 10 exactly known landscape samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .ansatz import (basis_functions, basis_gradient, basis_matrix,
                     exact_boundary_value, statevector, wrap_angle)
from .embedding import EhSolution, EmbeddingParams, map_to_qubits, qubit_observables
from .simulator import DensityMatrix, NoiseModel, derived_rng, estimate_energy
from .surrogate import LandscapeGPR
from . import ansatz as _ansatz

__all__ = [
    "Objective", "ExactObjective", "GaussianNoiseObjective", "SimulatorObjective",
    "BudgetExceeded", "OptimizationResult", "PipelineResult",
    "minimize_surrogate", "sequential_1d", "derivative_free_baseline",
    "mitigated_pipeline", "default_mesh", "MeasurementBackend",
    "ExactBackend", "GaussianNoiseBackend", "SimulatorBackend",
]

SEQ1D_OFFSETS = (-2 * np.pi / 5, -np.pi / 5, np.pi / 5, 2 * np.pi / 5)


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OptimizationResult:
    theta_star: np.ndarray
    value: float
    evals_used: int
    trace: list = field(default_factory=list)


# --------------------------------------------------------------------------
# measurement backends: evaluate named observables at angles
# --------------------------------------------------------------------------

class MeasurementBackend:
    """Produces (value, sigma) estimates of observables at circuit angles.

    Derived random streams are keyed by (seed, *prefix, *tag) so repeated
    runs and parallel evaluation orders agree bit for bit.
    """

    observable_names = ("energy", "docc", "f1", "f2")

    def __init__(self, params: EmbeddingParams):
        self.params = params
        self.h = map_to_qubits(params)
        self.observables = {"energy": self.h.sum, **qubit_observables(params)}

    def exact_value(self, name: str, theta) -> float:
        psi = statevector(theta)
        op = self.observables[name].matrix()
        return float(np.real(psi.conj() @ op @ psi))

    def boundary_value(self, name: str, theta1: float) -> float:
        return exact_boundary_value(theta1, self.observables[name])

    def measure(self, name: str, theta, tag: tuple[int, ...]) -> tuple[float, float]:
        raise NotImplementedError


class ExactBackend(MeasurementBackend):
    """Noise-free statevector evaluation (sigma reported as 0)."""

    def measure(self, name, theta, tag):
        return self.exact_value(name, theta), 0.0


class GaussianNoiseBackend(MeasurementBackend):
    """Exact value plus independent Gaussian noise of width sigma_alpha."""

    def __init__(self, params, sigma_alpha: float, seed: int, prefix: tuple[int, ...] = ()):
        super().__init__(params)
        self.sigma_alpha = float(sigma_alpha)
        self.seed = int(seed)
        self.prefix = tuple(prefix)

    def measure(self, name, theta, tag):
        rng = derived_rng(self.seed, *self.prefix, *tag)
        value = self.exact_value(name, theta) + rng.normal(0.0, self.sigma_alpha)
        return float(value), self.sigma_alpha


class SimulatorBackend(MeasurementBackend):
    """Density-matrix simulation with gate noise, shots and readout mitigation."""

    def __init__(self, params, noise: NoiseModel, seed: int,
                 prefix: tuple[int, ...] = (), mitigate: bool = True):
        super().__init__(params)
        self.noise = noise
        self.seed = int(seed)
        self.prefix = tuple(prefix)
        self.mitigate = mitigate

    def measure(self, name, theta, tag):
        rec = estimate_energy(theta, self.observables[name], _ansatz.build_circuit,
                              self.noise, rng_key=(self.seed, *self.prefix, *tag),
                              mitigate=self.mitigate)
        return rec.estimate, rec.stderr


_OBS_INDEX = {"energy": 0, "docc": 1, "f1": 2, "f2": 3}


class Objective:
    """Counting wrapper exposing one observable of a backend as f(theta).

    evaluate() increments eval_count exactly once per call and enforces an
    optional evaluation budget.
    """

    def __init__(self, backend: MeasurementBackend, name: str = "energy",
                 budget: int | None = None):
        self.backend = backend
        self.name = name
        self.budget = budget
        self.eval_count = 0

    def evaluate(self, theta, tag: tuple[int, ...] | None = None) -> tuple[float, float]:
        if self.budget is not None and self.eval_count >= self.budget:
            raise BudgetExceeded(f"budget of {self.budget} evaluations exhausted")
        if tag is None:
            tag = (self.eval_count,)
        self.eval_count += 1
        return self.backend.measure(self.name, theta, (_OBS_INDEX[self.name], *tag))


def ExactObjective(params: EmbeddingParams, budget=None) -> Objective:
    return Objective(ExactBackend(params), budget=budget)


def GaussianNoiseObjective(params, sigma_alpha, seed, budget=None) -> Objective:
    return Objective(GaussianNoiseBackend(params, sigma_alpha, seed), budget=budget)


def SimulatorObjective(params, noise, seed, budget=None, mitigate=True) -> Objective:
    return Objective(SimulatorBackend(params, noise, seed, mitigate=mitigate), budget=budget)


# --------------------------------------------------------------------------
# analytic minimization of the fitted landscape
# --------------------------------------------------------------------------

def _tie_break_key(theta, value, tol):
    t1, t2 = theta
    return (round(value / tol) * tol,
            round(abs(t1) / tol) * tol, round(abs(t2) / tol) * tol,
            round(t1 / tol) * tol, round(t2 / tol) * tol)


def minimize_surrogate(model: LandscapeGPR, seed_grid: int = 20,
                       n_polish: int = 40) -> OptimizationResult:
    """Multi-start descent of the fitted landscape over [-pi, pi]^2.

    Starts are the best `n_polish` points of a seed_grid x seed_grid lattice
    (plus the axes origin), each polished with bounded quasi-Newton descent
    using the closed-form gradient. Among minima of equal value the point
    with the smallest (|t1|, |t2|) wins, remaining ties resolving to the
    smallest (t1, t2). No objective evaluations are charged.
    """
    xi = model.coef_

    def fun(x):
        return float(basis_functions(x) @ xi)

    def jac(x):
        return basis_gradient(np.asarray(x)[None, :])[0].T @ xi

    grid = np.linspace(-np.pi, np.pi, seed_grid, endpoint=False)
    seeds = np.array([(a, b) for a in grid for b in grid] + [(0.0, 0.0)])
    values = basis_matrix(seeds) @ xi
    order = np.argsort(values, kind="stable")[:n_polish]

    candidates = []
    for k in order:
        res = _scipy_minimize(fun, seeds[k], jac=jac, method="L-BFGS-B",
                              bounds=[(-np.pi, np.pi)] * 2,
                              options=dict(ftol=1e-16, gtol=1e-12, maxiter=200))
        candidates.append((np.asarray(res.x), float(res.fun)))
    best_val = min(v for _, v in candidates)
    tol = 1e-9 * (1.0 + abs(best_val))
    near = [(th, v) for th, v in candidates if v <= best_val + tol]
    th, v = min(near, key=lambda c: _tie_break_key(c[0], c[1], 1e-9))
    return OptimizationResult(theta_star=th, value=v, evals_used=0, trace=[])


# --------------------------------------------------------------------------
# sequential one-parameter optimizer
# --------------------------------------------------------------------------

def _power_basis_1d(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.stack([c**i * s ** (4 - i) for i in range(5)], axis=-1)


def _fourier_transform_matrix() -> np.ndarray:
    # exact change of basis from the 5 half-angle powers to
    # [1, cos t, sin t, cos 2t, sin 2t], built from 5 canonical nodes
    nodes = np.array([0.0, 1.0, 2.0, -1.3, 2.9])
    m = _power_basis_1d(nodes)
    f = np.stack([np.ones(5), np.cos(nodes), np.sin(nodes),
                  np.cos(2 * nodes), np.sin(2 * nodes)], axis=1)
    return np.linalg.solve(f, m)


_P2F = _fourier_transform_matrix()


def minimize_slice(coeffs: np.ndarray, t_ref: float = 0.0) -> tuple[float, float]:
    """Global minimum on [-pi, pi] of sum_i c_i cos^i(t/2) sin^(4-i)(t/2).

    Critical points come from the roots of the degree-4 polynomial obtained
    by writing the derivative in z = exp(i t). Among minima of numerically
    equal value the one nearest t_ref is returned, which keeps a converged
    optimizer from hopping between degenerate minima.
    """
    a0, a1, b1, a2, b2 = _P2F @ np.asarray(coeffs, dtype=float)

    def g(t):
        return a0 + a1 * np.cos(t) + b1 * np.sin(t) + a2 * np.cos(2 * t) + b2 * np.sin(2 * t)

    poly = np.array([b2 + 1j * a2, (b1 + 1j * a1) / 2, 0.0,
                     (b1 - 1j * a1) / 2, b2 - 1j * a2])
    scale = np.abs(poly).max()
    if scale < 1e-13:           # constant slice: stay put
        return float(t_ref), float(g(t_ref))
    lead = np.flatnonzero(np.abs(poly) > 1e-14 * scale)[0]
    roots = np.roots(poly[lead:])
    cand = [float(np.angle(z)) for z in roots if abs(abs(z) - 1.0) < 1e-6]
    cand += [-np.pi, np.pi]
    vals = np.array([g(t) for t in cand])
    best = float(vals.min())
    tol = 1e-8 * (1.0 + abs(best))
    near = [t for t, v in zip(cand, vals) if v <= best + tol]
    t = min(near, key=lambda x: abs(wrap_angle(x - t_ref)))
    return float(t), float(g(t))


def sequential_1d(obj: Objective, theta0, iterations: int, initial_value: float,
                  value_bound: float | None = None) -> OptimizationResult:
    """Coordinate-wise minimization using exact 5-term slice interpolation.

    Each iteration sweeps both parameters; a sweep of one parameter costs 4
    objective evaluations at offsets +-pi/5 and +-2pi/5 of that parameter
    (the current point's value is carried over, not re-measured), so an
    iteration costs 8 evaluations in total. `initial_value` must supply the
    value at theta0; starting from (0, 0) it is exactly known classically.

    Carried values are clipped to +-value_bound (e.g. the operator 1-norm),
    which keeps interpolation through noisy data from running away.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    theta = np.array([wrap_angle(theta0[0]), wrap_angle(theta0[1])], dtype=float)
    current = float(initial_value)
    start = obj.eval_count
    trace: list = [(theta.copy(), current)]
    for _ in range(iterations):
        for p in (0, 1):
            offsets = np.asarray(SEQ1D_OFFSETS)
            for attempt in (0, 1):
                pts = np.concatenate([[theta[p]],
                                      [wrap_angle(theta[p] + o) for o in offsets]])
                design = _power_basis_1d(pts)
                cond = np.linalg.cond(design)
                if cond < 1e10:
                    break
                offsets = offsets + np.pi / 50  # resample once on a singular fit
            else:
                raise np.linalg.LinAlgError("singular 1-D fit after resampling")
            vals = [current]
            for t in pts[1:]:
                q = theta.copy()
                q[p] = t
                v, _ = obj.evaluate(q)
                vals.append(v)
            coeffs = np.linalg.solve(design, np.array(vals))
            t_new, v_new = minimize_slice(coeffs, t_ref=theta[p])
            theta[p] = wrap_angle(t_new)
            current = v_new if value_bound is None else float(np.clip(v_new, -value_bound, value_bound))
            trace.append((theta.copy(), current))
    return OptimizationResult(theta_star=theta.copy(), value=current,
                              evals_used=obj.eval_count - start, trace=trace)


# --------------------------------------------------------------------------
# derivative-free linear trust-region baseline
# --------------------------------------------------------------------------

def derivative_free_baseline(obj: Objective, theta0, max_evals: int = 20,
                             rho0: float = 0.5) -> OptimizationResult:
    """Linear-model trust-region search, one evaluation per iteration.

    A 3-point simplex carries a linear interpolation model; each iteration
    steps from the incumbent against the model gradient by the trust radius
    (clipped to the box), spends its single evaluation there and adapts the
    radius on success or failure. Degenerate simplices spend the iteration's
    evaluation on a repair point instead. Stops at exactly max_evals.
    """
    if max_evals < 3:
        raise ValueError("max_evals must be >= 3")
    lo, hi = -np.pi, np.pi

    def clip(x):
        return np.clip(x, lo, hi)

    start = obj.eval_count
    pts = [clip(np.asarray(theta0, dtype=float))]
    pts.append(clip(pts[0] + np.array([rho0, 0.0])))
    pts.append(clip(pts[0] + np.array([0.0, rho0])))
    vals = [obj.evaluate(p)[0] for p in pts]
    trace = [(p.copy(), v) for p, v in zip(pts, vals)]
    rho = rho0
    while obj.eval_count - start < max_evals:
        best = min(range(3), key=lambda i: vals[i])
        worst = max(range(3), key=lambda i: vals[i])
        p_arr = np.array(pts)
        area = abs(np.cross(p_arr[1] - p_arr[0], p_arr[2] - p_arr[0]))
        if area < 1e-10:
            # repair a flat simplex; this consumes the iteration's evaluation
            x_new = clip(pts[best] + rho * np.array([-0.7, 1.0]))
        else:
            design = np.column_stack([np.ones(3), p_arr])
            coef = np.linalg.lstsq(design, np.array(vals), rcond=None)[0]
            g = coef[1:]
            gn = np.linalg.norm(g)
            step = np.array([rho, 0.0]) if gn < 1e-14 else -rho * g / gn
            x_new = clip(pts[best] + step)
        v_new = obj.evaluate(x_new)[0]
        trace.append((x_new.copy(), v_new))
        if v_new < vals[best]:
            pts[worst], vals[worst] = x_new, v_new
            rho = min(rho * 1.1, 1.0)
        elif v_new < vals[worst]:
            pts[worst], vals[worst] = x_new, v_new
            rho *= 0.6
        else:
            rho *= 0.5
    best = min(range(3), key=lambda i: vals[i])
    return OptimizationResult(theta_star=np.asarray(pts[best]), value=float(vals[best]),
                              evals_used=obj.eval_count - start, trace=trace)


# --------------------------------------------------------------------------
# learn-then-minimize pipeline
# --------------------------------------------------------------------------

def default_mesh() -> tuple[np.ndarray, np.ndarray]:
    """(90 noisy points, 10 exact boundary points) of the pi/5 lattice."""
    vals = [np.pi / 5 * a for a in range(-5, 5)]
    noisy = [(a, b) for a in vals for b in vals if b != 0.0]
    exact = [(a, 0.0) for a in vals]
    return np.array(noisy), np.array(exact)


@dataclass
class PipelineResult:
    opt: OptimizationResult
    estimate: EhSolution
    models: dict
    n_noisy_evals: int
    n_exact_evals: int
    snapped_to_boundary: bool


def _clip_solution(energy, docc, f1, f2) -> EhSolution:
    # fitted estimates may leave the physical ranges by noise; clip them
    return EhSolution(energy=float(energy),
                      docc=float(np.clip(docc, 0.0, 1.0)),
                      f1=float(np.clip(f1, -0.5, 0.5)),
                      f2=float(np.clip(f2, 0.0, 1.0)))


def mitigated_pipeline(params: EmbeddingParams, backend: MeasurementBackend,
                       sigma_alpha: float | None = None, t: float = 0.0,
                       snap_z: float = 3.0, mesh=None) -> PipelineResult:
    """Learn all observable landscapes from the mesh, then minimize the energy.

    The 90 off-boundary mesh points are measured with the backend; the 10
    boundary points enter as exact (sigma = 0) constraints. Fit weights use
    a uniform sigma_alpha (default 0.2 |D|) unless the backend reports its
    own uncertainties. After minimizing the energy fit, the exactly known
    boundary minimum is preferred whenever the interior minimum does not
    undercut it by more than snap_z posterior standard deviations: an
    insignificant interior dip is fit noise, while the boundary value is
    certain. All observables are reported at the chosen angles.
    """
    if sigma_alpha is None:
        sigma_alpha = 0.2 * abs(params.d_hyb)
    noisy_pts, exact_pts = default_mesh() if mesh is None else mesh
    names = MeasurementBackend.observable_names

    values = {n: [] for n in names}
    sigmas = {n: [] for n in names}
    for i, th in enumerate(noisy_pts):
        for n in names:
            v, s = backend.measure(n, th, (_OBS_INDEX[n], i))
            values[n].append(v)
            sigmas[n].append(s)
    exact_vals = {n: [backend.boundary_value(n, t1) for t1, _ in exact_pts] for n in names}

    thetas = np.vstack([noisy_pts, exact_pts])
    models = {}
    for n in names:
        y = np.concatenate([values[n], exact_vals[n]])
        sig = np.concatenate([np.full(len(noisy_pts), sigma_alpha),
                              np.zeros(len(exact_pts))])
        models[n] = LandscapeGPR(t=t).fit(thetas, y, sigma=sig)

    opt = minimize_surrogate(models["energy"])

    # exactly known boundary restriction: coefficients with full cos power in t2
    xi = models["energy"].coef_
    boundary_coeffs = np.array([xi[5 * i + 4] for i in range(5)])
    t1_b, v_b = minimize_slice(boundary_coeffs, t_ref=0.0)
    std_at = float(np.sqrt(max(models["energy"].predict_variance(opt.theta_star[None, :])[0], 0.0)))
    snapped = opt.value >= v_b - snap_z * std_at
    if snapped:
        opt = OptimizationResult(theta_star=np.array([t1_b, 0.0]), value=float(v_b),
                                 evals_used=opt.evals_used, trace=opt.trace)

    theta_star = opt.theta_star[None, :]
    if snapped:
        # on the boundary line every fitted observable reproduces its exact value
        obs_at = {n: backend.boundary_value(n, float(opt.theta_star[0])) for n in names}
    else:
        obs_at = {n: float(models[n].predict(theta_star)[0]) for n in names}
        obs_at["energy"] = opt.value
    estimate = _clip_solution(obs_at["energy"], obs_at["docc"], obs_at["f1"], obs_at["f2"])
    return PipelineResult(opt=opt, estimate=estimate, models=models,
                          n_noisy_evals=len(noisy_pts), n_exact_evals=len(exact_pts),
                          snapped_to_boundary=snapped)
