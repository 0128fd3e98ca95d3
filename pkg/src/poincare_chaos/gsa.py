"""Variance-based and derivative-based sensitivity indices of an expansion.

All quantities are exact functions of the fitted coefficients and the
eigenvalue table: the output variance is sum_{alpha != 0} c_alpha^2
(Parseval), total and first-order Sobol' indices are ratios of coefficient
sums, and the weighted derivative measure of variable k is

    nu_k = sum_{alpha_k >= 1} lambda_{k, alpha_k} c_alpha^2,

which also bounds the total index: S_k_tot <= C_P(mu_k, w_k) nu_k / Var.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .chaos import ChaosExpansion
from .errors import ZeroVariance


def variance(expansion: ChaosExpansion) -> float:
    """Output variance of the surrogate, sum of squared non-constant coefficients."""
    return float(np.sum(expansion.coefficients[1:] ** 2))


def total_sobol(expansion: ChaosExpansion) -> np.ndarray:
    """Total Sobol' index per variable: mass of all terms involving it."""
    var = variance(expansion)
    if var <= 0.0:
        raise ZeroVariance("total Sobol' indices undefined for a constant surrogate")
    alpha = expansion.basis._alpha
    c2 = expansion.coefficients**2
    return np.array([c2[alpha[:, k] >= 1].sum() for k in range(expansion.basis.dimension)]) / var


def first_sobol(expansion: ChaosExpansion) -> np.ndarray:
    """First-order Sobol' index per variable: mass of the univariate terms only."""
    var = variance(expansion)
    if var <= 0.0:
        raise ZeroVariance("first-order Sobol' indices undefined for a constant surrogate")
    alpha = expansion.basis._alpha
    c2 = expansion.coefficients**2
    rank = (alpha > 0).sum(axis=1)
    out = np.empty(expansion.basis.dimension)
    for k in range(expansion.basis.dimension):
        out[k] = c2[(alpha[:, k] >= 1) & (rank == 1)].sum()
    return out / var


def dgsm(expansion: ChaosExpansion) -> np.ndarray:
    """Weighted derivative-based measure nu_k from the eigenvalue table."""
    alpha = expansion.basis._alpha
    lam = expansion.basis.eigenvalue_table
    c2 = expansion.coefficients**2
    out = np.empty(expansion.basis.dimension)
    for k in range(expansion.basis.dimension):
        sel = alpha[:, k] >= 1
        out[k] = np.sum(lam[k, alpha[sel, k]] * c2[sel])
    return out


@dataclass(frozen=True)
class GsaReport:
    variance: float
    total_sobol: np.ndarray
    first_sobol: np.ndarray
    dgsm: np.ndarray
    poincare_constants: np.ndarray
    bound_ratios: np.ndarray  # C_P * nu_k / variance, the upper bound on S_k_tot

    def to_rows(self) -> list[dict]:
        return [
            {
                "variable": k,
                "total_sobol": float(self.total_sobol[k]),
                "first_sobol": float(self.first_sobol[k]),
                "dgsm": float(self.dgsm[k]),
                "poincare_constant": float(self.poincare_constants[k]),
                "bound_margin": float(self.bound_ratios[k] - self.total_sobol[k]),
            }
            for k in range(self.total_sobol.size)
        ]

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"variance": self.variance, "rows": self.to_rows()}, fh, indent=2)

    def to_csv(self, path) -> None:
        rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)


def make_report(expansion: ChaosExpansion) -> GsaReport:
    var = variance(expansion)
    if var <= 0.0:
        raise ZeroVariance("sensitivity report undefined for a constant surrogate")
    nu = dgsm(expansion)
    cp = np.array([b.poincare_constant() for b in expansion.basis.bases])
    return GsaReport(
        variance=var,
        total_sobol=total_sobol(expansion),
        first_sobol=first_sobol(expansion),
        dgsm=nu,
        poincare_constants=cp,
        bound_ratios=cp * nu / var,
    )


def sobol_dgsm_bound(report: GsaReport, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Check S_k_tot <= C_P nu_k / Var per variable; returns (holds, margins)."""
    margins = report.bound_ratios - report.total_sobol
    return margins >= -tol, margins
