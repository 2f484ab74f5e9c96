"""Independent reference implementations used as test oracles.

These deliberately avoid the production code paths: the transform oracle is
an explicit GF(2) matrix multiply, the SC oracle is a plain recursive decoder
working on normalized bit probabilities (no LLR recursion), and the ML oracle
scores whole words in one shot.
"""

import numpy as np


def transform_matrix(N: int) -> np.ndarray:
    """G_N = B_N * F^{(x)n} built explicitly from Kronecker products."""
    n = int(np.log2(N))
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    Fn = np.array([[1]], dtype=np.int64)
    for _ in range(n):
        Fn = np.kron(Fn, F)
    B = np.zeros((N, N), dtype=np.int64)
    for i in range(N):
        rev = int(format(i, f"0{n}b")[::-1], 2)
        B[i, rev] = 1
    return (B @ Fn) % 2


def transform_oracle(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    return (u @ transform_matrix(u.shape[-1])) % 2


def sc_decode_reference(llr0: np.ndarray, is_free: np.ndarray, forced: np.ndarray):
    """Plain recursive SC over one length-N polar transform.

    Works on per-position log-probability pairs (log P(0), log P(1)) combined
    with logaddexp, so deep recursions never underflow.  llr0 is given in
    codeword (symbol) order for x = u * B_N * F^{(x)n}.  is_free[i] selects a
    hard decision (ties to 0); otherwise bit i is forced to forced[i].
    Returns the decided word u.
    """
    llr0 = np.asarray(llr0, dtype=np.float64)
    N = llr0.shape[0]
    n = int(np.log2(N))
    rev = np.array([int(format(i, f"0{n}b")[::-1], 2) for i in range(N)])
    # log sigmoid(+llr) = log P(0), log sigmoid(-llr) = log P(1)
    lp0 = np.minimum(llr0, 0.0) - np.log1p(np.exp(-np.abs(llr0)))
    lp1 = lp0 - llr0
    decisions = np.zeros(N, dtype=np.int8)
    counter = {"i": 0}

    def rec(l0: np.ndarray, l1: np.ndarray) -> np.ndarray:
        if l0.shape[0] == 1:
            i = counter["i"]
            if is_free[i]:
                u = 1 if l1[0] > l0[0] else 0
            else:
                u = int(forced[i])
            decisions[i] = u
            counter["i"] += 1
            return np.array([u], dtype=np.int8)
        half = l0.shape[0] // 2
        a0, a1 = l0[:half], l1[:half]
        b0, b1 = l0[half:], l1[half:]
        # upper branch: XOR of the two bits
        left0 = np.logaddexp(a0 + b0, a1 + b1)
        left1 = np.logaddexp(a0 + b1, a1 + b0)
        cw_left = rec(left0, left1)
        # lower branch: first-half observation carries cl ^ cr
        right0 = np.where(cw_left == 1, a1, a0) + b0   # cr = 0
        right1 = np.where(cw_left == 1, a0, a1) + b1   # cr = 1
        cw_right = rec(right0, right1)
        return np.concatenate([cw_left ^ cw_right, cw_right])

    rec(lp0[rev], lp1[rev])  # bit-reversal moves codeword order to transform order
    return decisions


def ml_word_oracle(llr0: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Brute-force most-likely word under independent per-position bit LLRs.

    candidates is (n_words, N) of u words; returns the u maximizing
    sum_j log P(x_j(u)) with x = transform_oracle(u).
    """
    x = transform_oracle(candidates).astype(np.float64)
    z = (1.0 - 2.0 * x) * np.asarray(llr0, dtype=np.float64)
    # log sigmoid(z), stable
    log_p = np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))
    scores = log_p.sum(axis=1)
    return candidates[int(np.argmax(scores))]
