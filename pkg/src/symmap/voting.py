"""Correspondence-space voting: good-voter generation and distance voting.

A sample pair is a *good voter* when its two wave kernel signatures agree to
within a threshold.  A good voter supports a candidate pair when the four
endpoints satisfy the global intrinsic-distance criterion

    |d(x, y) - d(x', y')| <= eps * diameter   and
    |d(x, y') - d(y, x')| <= eps * diameter.

Because the biharmonic distance is symmetric, this predicate is unchanged
when the voter's endpoints swap roles, so a single evaluation covers both
voter orientations.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .descriptors import pairwise_wks_gaps, wks_distance


@dataclass(frozen=True)
class CandidatePair:
    """Unordered sample pair passing the signature-gap filter."""

    a: int
    b: int
    wks_gap: float


@dataclass(frozen=True)
class VotedPair:
    """Ordered pair with its global distance-based symmetry support."""

    source: int
    destination: int
    votes: int
    support_ratio: float
    supporting_pairs: tuple

    def reversed(self):
        return replace(self, source=self.destination, destination=self.source)


def generate_good_voters(samples, wks, t_wks=None, percentile=15.0):
    """All unordered sample pairs whose squared signature gap is below threshold.

    Parameters
    ----------
    samples : SampleSet
    wks : WksField
    t_wks : float, optional
        Absolute threshold on the squared signature distance.  When omitted it
        is the given ``percentile`` of all pairwise gaps, which keeps the
        filter mesh-independent.

    Returns
    -------
    list of CandidatePair, ordered by (a, b).  An empty result is signalled
    with a warning rather than an error.
    """
    ids = np.asarray(samples.vertex_ids, dtype=np.int64)
    if ids.size < 2:
        raise ValueError("need at least two samples")
    gaps = pairwise_wks_gaps(samples, wks)
    if t_wks is None:
        t_wks = float(np.percentile(gaps, percentile))
    out = []
    pos = 0
    for i in range(ids.size - 1):
        for j in range(i + 1, ids.size):
            gap = float(gaps[pos])
            pos += 1
            if gap <= t_wks:
                a, b = int(ids[i]), int(ids[j])
                if a > b:
                    a, b = b, a
                out.append(CandidatePair(a=a, b=b, wks_gap=gap))
    out.sort(key=lambda p: (p.a, p.b))
    if not out:
        warnings.warn("no good voters below the signature threshold", RuntimeWarning)
    return out


def wks_gap_threshold(samples, wks, percentile):
    """Percentile of all pairwise squared signature gaps."""
    return float(np.percentile(pairwise_wks_gaps(samples, wks), percentile))


def distance_vote(pair, voter, table, eps):
    """Whether ``voter`` supports ``pair`` under the intrinsic-distance test.

    ``pair`` and ``voter`` are (vertex, vertex) tuples drawn from the table's
    sample set; ``eps`` is relative to the biharmonic diameter of the table.
    The pair's orientation is fixed; the voter's orientation does not affect
    the outcome (the predicate is symmetric under swapping it).
    """
    x, xp = (int(pair[0]), int(pair[1])) if not isinstance(pair, CandidatePair) else (pair.a, pair.b)
    y, yp = (int(voter[0]), int(voter[1])) if not isinstance(voter, CandidatePair) else (voter.a, voter.b)
    if (x, xp) in ((y, yp), (yp, y)):
        raise ValueError("voter must differ from the pair")
    d = table.distances
    i = {v: table.index_of(v) for v in (x, xp, y, yp)}
    tol = eps * table.diameter
    return bool(
        abs(d[i[x], i[y]] - d[i[xp], i[yp]]) <= tol
        and abs(d[i[x], i[yp]] - d[i[y], i[xp]]) <= tol
    )


def _vote_matrix(candidates, table, eps):
    """Boolean support matrix: entry (i, j) says candidate j supports i."""
    n = len(candidates)
    idx = {int(v): i for i, v in enumerate(table.sample_ids)}
    ai = np.array([idx[c.a] for c in candidates])
    bi = np.array([idx[c.b] for c in candidates])
    d = table.distances
    tol = eps * table.diameter
    c1 = np.abs(d[ai[:, None], ai[None, :]] - d[bi[:, None], bi[None, :]]) <= tol
    c2 = np.abs(d[ai[:, None], bi[None, :]] - d[ai[None, :], bi[:, None]]) <= tol
    support = c1 & c2
    # a candidate is never its own voter, nor voted by its exact reverse
    same = (ai[:, None] == ai[None, :]) & (bi[:, None] == bi[None, :])
    swapped = (ai[:, None] == bi[None, :]) & (bi[:, None] == ai[None, :])
    support &= ~(same | swapped)
    return support


def run_voting(candidates, table, eps=0.02, min_support=0.30):
    """Count supporting voters for every candidate and keep the well-supported.

    Each candidate is voted on by all other candidates (self votes excluded);
    ``support_ratio`` is votes over eligible voters, defined as zero when
    there are no other candidates.  Pairs with support at or above
    ``min_support`` are returned sorted by support descending (ties by id),
    with source/destination fixed in the order given.
    """
    if not candidates:
        raise ValueError("no candidates to vote on")
    support = _vote_matrix(candidates, table, eps)
    eligible = len(candidates) - 1
    out = []
    for i, cand in enumerate(candidates):
        votes = int(support[i].sum())
        ratio = votes / eligible if eligible > 0 else 0.0
        if ratio >= min_support:
            out.append(
                VotedPair(
                    source=cand.a,
                    destination=cand.b,
                    votes=votes,
                    support_ratio=ratio,
                    supporting_pairs=tuple(int(j) for j in np.nonzero(support[i])[0]),
                )
            )
    out.sort(key=lambda p: (-p.support_ratio, p.source, p.destination))
    return out
