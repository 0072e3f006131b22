"""Internal vectorized building blocks shared by likelihood and diagnostics.

The conditional law of a site given its past is a phi-mixture over lags of
(thinned past) + innovation.  Everything downstream (conditional PMFs, the
conditional log-likelihood, PIT) reduces to lookups into the table

    C[n, x] = P( Binomial(n, alpha) + eps == x )        (or <= x),

built once per parameter value for all needed past counts n and outcomes x.
"""

import numpy as np
from scipy import stats
from scipy.linalg import toeplitz


def thinning_convolution_table(alpha, innovation, n_max, x_max, cumulative=False):
    """Table C of shape (n_max+1, x_max+1); see module docstring.

    ``C[n, x]`` is the PMF (CDF when ``cumulative``) at x of a Binomial(n,
    alpha)-thinned count plus an independent innovation draw.
    """
    n_max, x_max = int(n_max), int(x_max)
    z = np.arange(n_max + 1)
    b = stats.binom.pmf(z[None, :], z[:, None], alpha)  # b[n, zz]
    e = innovation.pmf_table(x_max)
    if cumulative:
        e = np.cumsum(e)
    col = np.zeros(n_max + 1)
    col[0] = e[0]
    t = toeplitz(col, e)  # t[zz, x] = e[x - zz] for x >= zz, else 0
    return b @ t


def mixture_site_values(table, lagged, phi, x_idx):
    """phi-mixture of table rows selected per site.

    ``lagged`` is (n_sites, m) past counts, ``x_idx`` (n_sites,) outcome
    indices; returns sum_j phi[j] * table[lagged[:, j], x_idx] per site.
    """
    out = np.zeros(lagged.shape[0])
    for j in range(lagged.shape[1]):
        out += phi[j] * table[lagged[:, j], x_idx]
    return out
