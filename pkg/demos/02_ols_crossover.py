# %% [markdown]
# # When does least squares beat the moment estimator?
#
# For d < n the residual variance from an OLS fit is also unbiased.  Its
# variance 2 sigma^4 / (n (1 - d/n)) blows up as d approaches n, whereas the
# moment estimator degrades gracefully.  The ordering flips somewhere in
# between.

# %%
import numpy as np

from hdsnr import GaussianIsotropic, HalfUniformHalfNormal, SimulationConfig, run_experiment
from hdsnr.uncertainty import exact_covariance_identity, ols_asymptotic

n, R = 250, 300

# %%
print(f"{'d':>5}{'sd identity':>13}{'sd ols':>9}{'theory id':>11}{'theory ols':>12}")
for d in (25, 75, 125, 175, 225):
    cfg = SimulationConfig(n=n, d=d, sigma2=1.0, design=GaussianIsotropic(), beta_pattern=HalfUniformHalfNormal(1.0),
                           estimators=("identity", "ols"), replicates=R, master_seed=d)
    est = run_experiment(cfg).summary.estimators
    th_id = np.sqrt(exact_covariance_identity(1.0, 1.0, n, d).var_sigma2)
    th_ols = np.sqrt(ols_asymptotic(1.0, 1.0, n, d)[0])
    print(f"{d:>5}{est['identity']['sigma2'].sd:>13.4f}{est['ols']['sigma2'].sd:>9.4f}{th_id:>11.4f}{th_ols:>12.4f}")

# %% [markdown]
# Setting the two theoretical variances equal at sigma^2 = tau^2 gives the
# crossover ratio directly.

# %%
ratios = np.linspace(0.05, 0.95, 181)
gap = [ols_asymptotic(1, 1, 10_000, int(r * 10_000))[0] - exact_covariance_identity(1, 1, 10_000, int(r * 10_000)).var_sigma2
       for r in ratios]
print(f"crossover near d/n = {ratios[np.argmax(np.array(gap) > 0)]:.3f}")
