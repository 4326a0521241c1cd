"""NumPy implementations of the hot kernels; used when the compiled core is absent."""

import numpy as np

_POW2 = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))


def simhash64(projections, x):
    """64-bit signature: bit k set iff ``projections[k] @ x >= 0``."""
    bits = (np.asarray(projections) @ np.asarray(x)) >= 0.0
    return int(np.bitwise_or.reduce(_POW2[bits], initial=np.uint64(0)))


def simhash64_batch(projections, xs):
    bits = (np.asarray(xs) @ np.asarray(projections).T) >= 0.0
    out = np.zeros(bits.shape[0], dtype=np.uint64)
    for k in range(64):
        out |= np.where(bits[:, k], _POW2[k], np.uint64(0))
    return out


def best_match(vectors, rows, x):
    """Row with the highest dot product against ``x``; first row wins ties.

    Returns ``(position, similarity)`` where ``position`` indexes ``rows``, or
    ``(-1, nan)`` when ``rows`` is empty.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        return -1, float("nan")
    sims = vectors[rows] @ x
    pos = int(np.argmax(sims))
    return pos, float(sims[pos])


def evict_argmax(insert_s, hits, ids, alive, now_s, w_time, w_hits):
    """Slot with maximal ``w_time*age - w_hits*hits``; smallest id breaks ties."""
    alive = np.asarray(alive, dtype=bool)
    if not alive.any():
        return -1
    score = w_time * (now_s - np.asarray(insert_s)) - w_hits * np.asarray(hits)
    score = np.where(alive, score, -np.inf)
    best = score.max()
    tied = np.flatnonzero(score == best)
    return int(tied[np.argmin(np.asarray(ids)[tied])])


def hamming64(a, b):
    return int(a ^ b).bit_count()
