"""Independent reference implementations used to check the library.

Everything here is written from the defining formulas (direct sums, dense
linear solves), deliberately ignoring how the package computes the same
quantities, so agreement is meaningful.
"""

import numpy as np


def dft_oracle(frame: np.ndarray) -> np.ndarray:
    """O(N^2) DFT of one real frame straight from the definition."""
    n = frame.shape[0]
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    basis = np.exp(-2j * np.pi * k * t / n)
    return basis @ frame.astype(np.float64)


def dct2_ortho_oracle(row: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II of one vector as an explicit cosine sum."""
    x = np.asarray(row, dtype=np.float64)
    n = x.shape[0]
    out = np.empty(n)
    for k in range(n):
        s = 0.0
        for m in range(n):
            s += x[m] * np.cos(np.pi * k * (2 * m + 1) / (2 * n))
        scale = np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)
        out[k] = scale * s
    return out


def htk_mel_centers_hz(n_mels: int, sample_rate: int) -> np.ndarray:
    """Center frequencies of HTK-mel triangular filters spanning 0..Nyquist."""
    def to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    pts = np.linspace(to_mel(0.0), to_mel(sample_rate / 2.0), n_mels + 2)
    return to_hz(pts)[1:-1]


def lpc_toeplitz_oracle(frame: np.ndarray, order: int) -> np.ndarray:
    """LPC coefficients from a dense Toeplitz solve of the normal equations."""
    from scipy.linalg import solve_toeplitz

    x = np.asarray(frame, dtype=np.float64)
    n = x.shape[0]
    full = np.correlate(x, x, mode="full")
    r = full[n - 1:n + order].copy()
    r[0] *= 1.0 + 1e-9  # same regularizer the library applies
    return solve_toeplitz((r[:order], r[:order]), r[1:order + 1])


def pitch_peak_oracle(x: np.ndarray, sample_rate: int = 16000,
                      lo_ms: float = 2.5, hi_ms: float = 20.0) -> float:
    """Max normalized autocorrelation over the speech pitch-lag range."""
    n = x.shape[0]
    full = np.correlate(x, x, mode="full")
    r = full[n - 1:]
    if r[0] <= 0:
        return 0.0
    lo = int(lo_ms * sample_rate / 1000)
    hi = min(int(hi_ms * sample_rate / 1000), n - 1)
    return float(np.max(r[lo:hi + 1]) / r[0])


def numeric_gradient(loss_fn, param, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of loss_fn() w.r.t. one parameter tensor.

    loss_fn must rebuild its graph on every call and return a python float;
    param.data is perturbed in place and restored.
    """
    flat = param.data.reshape(-1)
    out = np.zeros_like(flat)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = loss_fn()
        flat[i] = keep - h
        fm = loss_fn()
        flat[i] = keep
        out[i] = (fp - fm) / (2.0 * h)
    return out.reshape(param.data.shape)


def gradcheck_rel_error(loss_fn, params, h: float = 1e-4) -> float:
    """Worst relative error between backprop and finite differences.

    Relative error is ||g_bp - g_fd|| / max(||g_bp||, ||g_fd||), computed
    per parameter. When both norms are under 1e-6 the gradient is genuinely
    zero (e.g. a bias the loss cannot see) and finite differences return
    pure roundoff, so such parameters count as agreeing.
    """
    loss = loss_fn()
    loss.backward(params=params)
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        p.grad = None
        numeric = numeric_gradient(lambda: float(loss_fn().data), p, h)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        if denom < 1e-6:
            continue
        worst = max(worst, np.linalg.norm(analytic - numeric) / denom)
    for p in params:
        p.grad = None
    return worst


def kmeans_1d_brute_force(points: np.ndarray, k: int):
    """Optimal 1-D k-means by dynamic programming over sorted split points.

    For sorted data the optimal clusters are contiguous runs, so exhaustive
    DP over split positions gives the global optimum. Returns (centroids,
    mean squared distance to assigned centroid).
    """
    xs = np.sort(np.asarray(points, dtype=np.float64))
    n = xs.shape[0]
    pre = np.concatenate(([0.0], np.cumsum(xs)))
    pre2 = np.concatenate(([0.0], np.cumsum(xs * xs)))

    def seg_cost(i, j):
        # sum of squared deviations of xs[i:j] about its mean
        m = j - i
        s = pre[j] - pre[i]
        s2 = pre2[j] - pre2[i]
        return s2 - s * s / m

    INF = float("inf")
    cost = np.full((k + 1, n + 1), INF)
    split = np.zeros((k + 1, n + 1), dtype=int)
    cost[0, 0] = 0.0
    for c in range(1, k + 1):
        for j in range(1, n + 1):
            for i in range(c - 1, j):
                v = cost[c - 1, i] + seg_cost(i, j)
                if v < cost[c, j]:
                    cost[c, j] = v
                    split[c, j] = i
    # recover centroids
    bounds = [n]
    j = n
    for c in range(k, 0, -1):
        j = split[c, j]
        bounds.append(j)
    bounds = bounds[::-1]
    cents = np.array([xs[bounds[i]:bounds[i + 1]].mean()
                      for i in range(k) if bounds[i + 1] > bounds[i]])
    return cents, cost[k, n] / n
