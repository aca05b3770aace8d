"""Independent oracles used by the test suite.

These deliberately avoid the code paths they check: the eigensolver is a
hand-rolled cyclic Jacobi sweep (not numpy.linalg), and average precision
is recomputed directly from its textbook definition.
"""

import numpy as np


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns), descending order.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(A[p, q]))
                if abs(A[p, q]) < tol:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
                if theta == 0:
                    t = 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
        if off < tol:
            break
    vals = np.diag(A).copy()
    order = np.argsort(vals)[::-1]
    return vals[order], V[:, order]


def average_precision_oracle(ranked_ids, relevant_ids):
    """AP straight from the definition: mean over relevant items of the
    precision at that item's rank (0 for relevant items never ranked)."""
    relevant = set(relevant_ids)
    precisions = []
    seen_relevant = 0
    for rank, rid in enumerate(ranked_ids, start=1):
        if rid in relevant:
            seen_relevant += 1
            precisions.append(seen_relevant / rank)
    missing = len(relevant) - seen_relevant
    precisions.extend([0.0] * missing)
    return sum(precisions) / len(relevant)
