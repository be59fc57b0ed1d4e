"""Pure-numpy reference implementations of the lattice reductions."""
import numpy as np


def cone_shell_reduce(x_points, xi_points, mag, n_bins, inner_radius, outer_radius,
                      m_lo, n_shells, p, r, cell):
    """Per (angular bin, dyadic shell) max, weighted p-sum and point count.

    Bins are centred on the angles ``2*pi*k/n_bins``; shell ``m`` holds the
    points with ``2**(m + m_lo) <= |z| < 2**(m + m_lo + 1)``.
    """
    x = np.asarray(x_points, dtype=np.float64)[:, None]
    xi = np.asarray(xi_points, dtype=np.float64)[None, :]
    mag = np.asarray(mag, dtype=np.float64)
    rad = np.sqrt(x * x + xi * xi)
    keep = (rad >= inner_radius) & (rad < outer_radius)
    with np.errstate(divide="ignore"):
        m = np.floor(np.log2(np.where(keep, rad, 1.0))).astype(np.int64) - m_lo
    keep &= (m >= 0) & (m < n_shells)

    width = 2.0 * np.pi / n_bins
    theta = np.arctan2(np.broadcast_to(xi, rad.shape), np.broadcast_to(x, rad.shape))
    theta = np.where(theta < 0, theta + 2.0 * np.pi, theta)
    b = np.floor((theta + 0.5 * width) / width).astype(np.int64)
    b = np.where(b >= n_bins, b - n_bins, b)

    labels = np.where(keep, b * n_shells + m, -1).ravel()
    maxima, _, counts = binned_max_sum(labels, mag.ravel(), n_bins * n_shells)
    sums = np.zeros(n_bins * n_shells)
    if np.isfinite(p):
        wts = np.power(1.0 + rad * rad, 0.5 * p * r)
        contrib = (np.power(mag, p) * wts * cell).ravel()
        sel = labels >= 0
        sums = np.bincount(labels[sel], weights=contrib[sel], minlength=n_bins * n_shells)
    shape = (n_bins, n_shells)
    return maxima.reshape(shape), sums.reshape(shape), counts.reshape(shape)


def binned_max_sum(labels, values, n_labels):
    """Max, sum and count of ``values`` grouped by integer ``labels``.

    Labels outside ``[0, n_labels)`` are ignored. Empty groups report 0.
    """
    labels = np.asarray(labels, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    sel = (labels >= 0) & (labels < n_labels)
    labels, values = labels[sel], values[sel]
    maxima = np.zeros(n_labels)
    if labels.size:
        order = np.lexsort((values, labels))
        last = np.r_[labels[order][1:] != labels[order][:-1], True]
        maxima[labels[order][last]] = np.maximum(values[order][last], 0.0)
    sums = np.bincount(labels, weights=values, minlength=n_labels).astype(np.float64)
    counts = np.bincount(labels, minlength=n_labels).astype(np.int64)
    return maxima, sums, counts
