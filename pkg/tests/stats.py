"""Small statistical helpers shared by the test suite."""
from typing import Sequence

from scipy.stats import chi2


def chi_square_uniform_p(counts: Sequence[int]) -> float:
    """p-value of a chi-square goodness-of-fit test against uniform."""
    total = sum(counts)
    k = len(counts)
    expected = total / k
    statistic = sum((c - expected) ** 2 / expected for c in counts)
    return float(chi2.sf(statistic, df=k - 1))
