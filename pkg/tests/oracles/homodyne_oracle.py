"""Reference KS distances for balanced homodyne detection with coherent inputs.

Independent of the package: with a coherent signal ``α`` and real LO
amplitude ``β``, the two output ports hold independent coherent states of
amplitudes ``(α ± β)/√2``, so the photocount difference is a difference of
two Poisson variables. Its law is summed directly, the statistic
``(n1 − n2)/(2β)`` is compared with the normal quadrature law of mean
``Re α`` and variance 1/4, and the supremum is taken over both one-sided
limits at every atom.

Run as a script to print the values frozen in the test suite.
"""

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

NMAX = 400


def poisson_pmf(mu, nmax=NMAX):
    n = np.arange(nmax)
    if mu == 0:
        return (n == 0).astype(float)
    return np.exp(n * np.log(mu) - mu - gammaln(n + 1))


def difference_pmf(mu1, mu2, nmax=NMAX):
    """pmf of ``n1 − n2`` on ``k = −(nmax−1) … nmax−1``."""
    p1, p2 = poisson_pmf(mu1, nmax), poisson_pmf(mu2, nmax)
    ks = np.arange(-(nmax - 1), nmax)
    pmf = np.zeros(ks.size)
    for n1 in range(nmax):
        for n2 in range(nmax):
            pmf[n1 - n2 + nmax - 1] += p1[n1] * p2[n2]
    return ks, pmf


def ks_reference(alpha, beta):
    mu1 = abs(alpha + beta) ** 2 / 2
    mu2 = abs(alpha - beta) ** 2 / 2
    ks, pmf = difference_pmf(mu1, mu2)
    x = ks / (2 * beta)
    cdf_right = np.cumsum(pmf)
    cdf_left = cdf_right - pmf
    target = norm.cdf(x, loc=np.real(alpha), scale=0.5)
    return float(max(np.max(np.abs(cdf_right - target)), np.max(np.abs(cdf_left - target))))


if __name__ == "__main__":
    for b in (1.0, 2.0, 3.0, 4.0):
        print(f"vacuum beta={b}: {ks_reference(0.0, b)!r}")
    print(f"coherent alpha=3 beta=3: {ks_reference(3.0, 3.0)!r}")
