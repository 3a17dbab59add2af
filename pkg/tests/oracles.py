"""Independent reference implementations shared by the unit and acceptance tests."""

import itertools

import numpy as np
from hypothesis import strategies as st

from flusense.classifier import Kernel
from flusense.embeddings import sgns_loss_grad


def exact_dual(X, y, kernel, C):
    """Exact C-SVM by enumerating which multipliers sit at 0, at C, or strictly inside.

    For each pattern the equality-constrained QP on the free set is a linear KKT
    system; the best feasible stationary point is the global optimum because the
    dual is convex. Returns (alpha, b).
    """
    n = len(y)
    K = kernel.matrix(X, X)
    Q = K * np.outer(y, y)
    best = None
    for pattern in itertools.product((0, 1, 2), repeat=n):  # 0: at zero, 1: at C, 2: free
        a = np.array([0.0 if s == 0 else C for s in pattern])
        F = [i for i, s in enumerate(pattern) if s == 2]
        if F:
            m = len(F)
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Q[np.ix_(F, F)]
            A[:m, m] = y[F]
            A[m, :m] = y[F]
            fixed = [i for i in range(n) if i not in F]
            rhs = np.concatenate([1 - Q[np.ix_(F, fixed)] @ a[fixed], [-y[fixed] @ a[fixed]]])
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.linalg.norm(A @ sol - rhs) > 1e-9:
                continue
            a[F] = sol[:m]
        if abs(y @ a) > 1e-9 or np.any(a < -1e-12) or np.any(a > C + 1e-12):
            continue
        obj = 0.5 * a @ Q @ a - a.sum()
        if best is None or obj < best[0] - 1e-12:
            best = (obj, a.copy())
    a = np.clip(best[1], 0, C)
    f0 = K @ (a * y)  # decision value without the bias
    free = (a > 1e-9) & (a < C - 1e-9)
    if free.any():
        b = float(np.mean(y[free] - f0[free]))
    else:
        # any b in [lo, hi] satisfies KKT; take the midpoint
        up = ((y > 0) & (a < C - 1e-9)) | ((y < 0) & (a > 1e-9))
        low = ((y > 0) & (a > 1e-9)) | ((y < 0) & (a < C - 1e-9))
        yg = y - f0
        lo = yg[up].max() if up.any() else yg.min()
        hi = yg[low].min() if low.any() else yg.max()
        b = float((lo + hi) / 2)
    return a, b


def oracle_decision(X, y, kernel, a, b, P):
    return kernel.matrix(P, X) @ (a * y) + b


@st.composite
def small_problem(draw):
    n = draw(st.integers(2, 6))
    X = np.array(draw(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=n, max_size=n)))
    y = np.array(draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=n, max_size=n)))
    if np.all(y == y[0]):
        y[0] = -y[0]
    kernel = draw(st.sampled_from([Kernel("linear"), Kernel("rbf", 0.5), Kernel("rbf", 2.0)]))
    C = draw(st.sampled_from([0.1, 1.0, 10.0]))
    return X, y, kernel, C


PROBES = np.array([[x, z] for x in np.linspace(-2, 2, 5) for z in np.linspace(-2, 2, 5)])


def loss_only(v, u_pos, u_neg):
    return sgns_loss_grad(v, u_pos, u_neg)[0]


def central_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def planted_corpus():
    rng = np.random.default_rng(0)
    filler = [f"w{i}" for i in range(30)]
    docs = [["P", "Q"] * 3 for _ in range(60)]
    docs += [list(rng.choice(filler, 8)) for _ in range(200)]
    order = rng.permutation(len(docs))
    return [docs[i] for i in order]
