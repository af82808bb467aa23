"""Pure numpy prefix scan, used when the compiled kernel is unavailable."""
import numpy as np


def prefix_scan(order, gvec, hvec, basis, keys, kind, eps, lam, rad_tol):
    order = np.asarray(order, dtype=np.int64)
    l = order.size
    i = np.arange(1, l + 1, dtype=np.float64)
    G = np.abs(np.cumsum(gvec[order]))
    fps = np.bitwise_xor.accumulate(keys[order]) if l else np.empty(0, dtype=np.uint64)
    if kind == 0:
        vals = G / np.sqrt(i)
    elif kind == 1:
        vals = G
    elif kind == 2:
        denom = np.cumsum(hvec[order]) + lam
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(denom > 0, G / np.sqrt(np.where(denom > 0, denom, 1.0)), 0.0)
    else:
        if basis.shape[0]:
            nsq = np.sum(np.cumsum(basis[:, order], axis=1) ** 2, axis=0)
        else:
            nsq = np.zeros(l)
        rad = i - nsq
        ok = rad > rad_tol * i
        vals = np.where(ok, G / (np.sqrt(np.where(ok, rad, 1.0)) + eps), 0.0)
    return vals, fps
