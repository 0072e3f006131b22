"""Model diagnostics: conditional law, Pearson residuals, PIT, AIC/BIC.

Fits a correctly-specified and a deliberately underdispersed model to the
same overdispersed data and shows how the diagnostics separate them.
"""

import numpy as np

from cinar import (
    CinarParams,
    ModelOrder,
    NbMarginalInnovation,
    PoissonInnovation,
    SimConfig,
    build_diagnostics,
    cml_estimate,
    conditional_pmf,
    simulate_cinar,
)

order = ModelOrder(1, 1)
truth = CinarParams(
    order, np.array([0.2, 0.2, 0.1]),
    NbMarginalInnovation.from_targets(mu_eps=1.0, i_eps=2.0, alpha=0.5),
)
grid = simulate_cinar(SimConfig(truth, 150, 150, seed=9))

# The conditional law at one site: a PMF over the next count given the
# three lagged neighbours.
pmf = conditional_pmf(truth, past=np.array([3, 1, 2]))
print("conditional PMF given past (3, 1, 2):")
print("  ", np.array2string(pmf.probs[:8], precision=4), "...")
print(f"   mean {pmf.mean:.3f}  variance {pmf.variance:.3f}")

for family in ("nb", "poisson"):
    fit = cml_estimate(grid, order, family=family)
    inn = (NbMarginalInnovation.from_targets(fit.mu_eps, fit.i_eps,
                                             float(fit.theta.sum()))
           if family == "nb" else PoissonInnovation(fit.mu_eps))
    fitted = CinarParams(order, fit.theta, inn)
    report = build_diagnostics(fitted, grid, loglik_max=fit.loglik,
                               n_params=fit.estimates.size)
    print(f"\n{family.upper()}-CML fit:")
    print(f"   residual mean {report.residual_mean:+.3f}"
          f"   variance {report.residual_variance:.3f}"
          f"   (want ~0 and ~1)")
    dev = np.max(np.abs(report.pit_bins - 1.0))
    print(f"   PIT bins {np.array2string(report.pit_bins, precision=2)}")
    print(f"   max PIT deviation {dev:.2f}   AIC {report.aic:.1f}"
          f"   BIC {report.bic:.1f}")

print("\nThe Poisson fit cannot carry the overdispersion: its residual"
      "\nvariance exceeds 1 and its PIT histogram bows upward at the ends.")
