"""Weighted least-squares landscape learning over the 25-function basis.

The landscape of the two-parameter circuit lies exactly in the span of the
basis in :mod:`vqemit.ansatz`, so learning it is linear regression with
per-sample noise levels. Samples with sigma = 0 are exactly known and are
imposed as hard equality constraints on the coefficients (null-space
elimination); noisy samples enter the normal equations with weights
1/sigma^2. An optional ridge term t * M built from the analytic Gram matrix
of the basis regularizes underdetermined fits.

The fitted model is Gaussian in the coefficients, so predictions carry a
posterior variance that vanishes along directions pinned by constraints.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ansatz import N_BASIS, basis_matrix

__all__ = ["LandscapeGPR", "FitError", "gram_matrix", "TrainingSet"]

DUMP_VERSION = "vqemit-surrogate-v1"


class FitError(RuntimeError):
    """The regression problem is rank deficient or self-contradictory."""


def _theta_integral(a: int, b: int) -> float:
    """Closed form of int_{-pi}^{pi} cos^a(t/2) sin^b(t/2) dt.

    Zero for odd b; otherwise 2 B((b+1)/2, (a+1)/2) by the half-angle
    substitution (a Wallis-type integral).
    """
    if b % 2 == 1:
        return 0.0
    return 2.0 * math.gamma((b + 1) / 2) * math.gamma((a + 1) / 2) / math.gamma((a + b) / 2 + 1)


def gram_matrix() -> np.ndarray:
    """(25, 25) overlap integrals of the basis over [-pi, pi]^2.

    Entries factor into two 1-D integrals; all entries with an odd total
    sine power vanish by symmetry.
    """
    one_d = np.zeros((5, 5))
    for i in range(5):
        for k in range(5):
            one_d[i, k] = _theta_integral(i + k, 8 - i - k)
    m = np.zeros((N_BASIS, N_BASIS))
    for i in range(5):
        for j in range(5):
            for k in range(5):
                for l in range(5):
                    m[5 * i + j, 5 * k + l] = one_d[i, k] * one_d[j, l]
    return m


class TrainingSet:
    """Angle/value/noise triples feeding a landscape fit.

    sigma = 0 marks an exactly known value; the exact flag is implied by it.
    """

    def __init__(self, thetas, values, sigmas):
        self.thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        self.values = np.asarray(values, dtype=float).ravel()
        self.sigmas = np.asarray(sigmas, dtype=float).ravel()
        if not (len(self.thetas) == len(self.values) == len(self.sigmas)):
            raise ValueError("thetas, values and sigmas must have equal length")
        if self.thetas.shape[1] != 2:
            raise ValueError("thetas must be (n, 2)")
        if (self.sigmas < 0).any():
            raise ValueError("sigmas must be nonnegative")

    @property
    def exact_mask(self) -> np.ndarray:
        return self.sigmas == 0.0

    def __len__(self):
        return len(self.values)


class LandscapeGPR(RegressorMixin, BaseEstimator):
    """Heteroscedastic linear fit of the variational landscape.

    Parameters
    ----------
    t : float, default 0.0
        Ridge strength multiplying the analytic Gram matrix. The default
        recovers plain generalized least squares; with t > 0 the model stays
        well posed even with no data (shrinking predictions to zero).
    exact_handling : {"constraint", "floor"}, default "constraint"
        How sigma = 0 samples are treated: as hard linear equality
        constraints, or by flooring sigma at `sigma_floor` and fitting them
        like (very precise) noisy data.
    sigma_floor : float, default 1e-8
        Noise floor used by the "floor" mode.
    variance_mode : {"posterior", "second-moment"}, default "posterior"
        "posterior" returns T' Cov(xi) T. "second-moment" additionally
        subtracts the squared predictive mean, mirroring a covariance
        formula that treats the coefficient second moment as if the mean
        were zero; it is retained only for comparison and can go negative.

    Attributes
    ----------
    coef_ : (25,) fitted basis coefficients.
    coef_cov_ : (25, 25) coefficient covariance (PSD on the unconstrained
        subspace, exactly zero along constrained directions).
    condition_number_ : float, conditioning of the reduced weighted design.
    n_constraints_ : int, rank of the equality-constraint system.
    """

    def __init__(self, t: float = 0.0, exact_handling: str = "constraint",
                 sigma_floor: float = 1e-8, variance_mode: str = "posterior"):
        self.t = t
        self.exact_handling = exact_handling
        self.sigma_floor = sigma_floor
        self.variance_mode = variance_mode

    # ------------------------------------------------------------------ fit

    def fit(self, X, y, sigma=None):
        X = check_array(X)
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[1] != 2:
            raise ValueError("X must be (n_samples, 2) angle pairs")
        if len(y) != len(X):
            raise ValueError("X and y length mismatch")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.exact_handling not in ("constraint", "floor"):
            raise ValueError(f"unknown exact_handling {self.exact_handling!r}")
        if self.variance_mode not in ("posterior", "second-moment"):
            raise ValueError(f"unknown variance_mode {self.variance_mode!r}")
        sigma = np.ones(len(y)) if sigma is None else np.asarray(sigma, dtype=float).ravel()
        if len(sigma) != len(y):
            raise ValueError("sigma length mismatch")
        if (sigma < 0).any():
            raise ValueError("sigma must be nonnegative")

        exact = sigma == 0.0
        if self.exact_handling == "floor":
            sigma = np.where(exact, self.sigma_floor, sigma)
            exact = np.zeros_like(exact)

        T = basis_matrix(X)
        t_exact, y_exact = T[exact], y[exact]
        t_noisy, y_noisy, s_noisy = T[~exact], y[~exact], sigma[~exact]

        xi_p, nullspace, n_constraints = self._apply_constraints(t_exact, y_exact)
        dim = nullspace.shape[1]

        w = 1.0 / s_noisy if len(s_noisy) else np.empty(0)
        design = (t_noisy * w[:, None]) @ nullspace if len(s_noisy) else np.zeros((0, dim))
        rhs = w * (y_noisy - t_noisy @ xi_p) if len(s_noisy) else np.empty(0)

        a_red = design.T @ design
        j_red = design.T @ rhs
        if self.t > 0:
            m = gram_matrix()
            a_red = a_red + self.t * (nullspace.T @ m @ nullspace)
            j_red = j_red - self.t * (nullspace.T @ m @ xi_p)

        # rank-revealing solve with a condition report
        u, s, vt = np.linalg.svd(a_red) if dim else (np.zeros((0, 0)), np.empty(0), np.zeros((0, 0)))
        if dim:
            rank = int(np.sum(s > s[0] * 1e-12)) if s.size and s[0] > 0 else 0
            if rank < dim:
                raise FitError(
                    f"rank-deficient normal equations ({rank}/{dim} free directions "
                    "determined); add samples in general position or set t > 0")
            self.condition_number_ = float(s[0] / s[-1])
            a_inv = (vt.T / s) @ u.T
            z = a_inv @ j_red
            cov_red = a_inv
        else:
            self.condition_number_ = 1.0
            z = np.empty(0)
            cov_red = np.zeros((0, 0))

        self.coef_ = xi_p + nullspace @ z
        self.coef_cov_ = nullspace @ cov_red @ nullspace.T
        self.n_constraints_ = n_constraints
        self.n_exact_ = int(np.count_nonzero(sigma == 0.0))
        self.constraint_thetas_ = X[sigma == 0.0].copy()
        self.constraint_values_ = y[sigma == 0.0].copy()
        return self

    def _apply_constraints(self, t_exact, y_exact):
        if len(t_exact) == 0:
            return np.zeros(N_BASIS), np.eye(N_BASIS), 0
        u, s, vt = np.linalg.svd(t_exact, full_matrices=True)
        rank = int(np.sum(s > max(s[0], 1.0) * 1e-12))
        coeff = (u.T @ y_exact)[:rank] / s[:rank]
        xi_p = vt[:rank].T @ coeff
        residual = np.abs(t_exact @ xi_p - y_exact).max()
        if residual > 1e-8 * max(1.0, np.abs(y_exact).max()):
            raise FitError(
                f"inconsistent exact constraints (residual {residual:.3g}); "
                "contradictory sigma=0 data")
        nullspace = vt[rank:].T
        return xi_p, nullspace, rank

    # -------------------------------------------------------------- predict

    def predict(self, X, return_std: bool = False):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        T = basis_matrix(X)
        mean = T @ self.coef_
        if not return_std:
            return mean
        var = self.predict_variance(X)
        return mean, np.sqrt(np.clip(var, 0.0, None))

    def predict_variance(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X)
        T = basis_matrix(X)
        var = np.einsum("ns,st,nt->n", T, self.coef_cov_, T)
        if self.variance_mode == "second-moment":
            var = var - (T @ self.coef_) ** 2
        return var

    # ------------------------------------------------- reproducibility dump

    def to_text(self) -> str:
        check_is_fitted(self, "coef_")
        lines = [DUMP_VERSION,
                 f"t {self.t!r}",
                 f"condition {self.condition_number_!r}",
                 "coef " + " ".join(repr(c) for c in self.coef_)]
        for row in self.coef_cov_:
            lines.append("cov " + " ".join(repr(c) for c in row))
        lines.append(f"constraints {len(self.constraint_thetas_)}")
        for (t1, t2), v in zip(self.constraint_thetas_, self.constraint_values_):
            lines.append(f"  {t1!r} {t2!r} {v!r}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "LandscapeGPR":
        lines = text.strip().splitlines()
        if lines[0].strip() != DUMP_VERSION:
            raise ValueError(f"unknown dump version {lines[0]!r}")
        model = cls()
        cov = []
        idx = 1
        n_con = 0
        while idx < len(lines):
            line = lines[idx].strip()
            idx += 1
            if line.startswith("t "):
                model.t = float(line.split()[1])
            elif line.startswith("condition "):
                model.condition_number_ = float(line.split()[1])
            elif line.startswith("coef "):
                model.coef_ = np.array([float(v) for v in line.split()[1:]])
            elif line.startswith("cov "):
                cov.append([float(v) for v in line.split()[1:]])
            elif line.startswith("constraints "):
                n_con = int(line.split()[1])
                thetas, values = [], []
                for _ in range(n_con):
                    a, b, v = lines[idx].split()
                    thetas.append((float(a), float(b)))
                    values.append(float(v))
                    idx += 1
                model.constraint_thetas_ = np.array(thetas).reshape(n_con, 2)
                model.constraint_values_ = np.array(values)
        model.coef_cov_ = np.array(cov)
        model.n_exact_ = n_con
        model.n_constraints_ = min(n_con, N_BASIS)
        return model
