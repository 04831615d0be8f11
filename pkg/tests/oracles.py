"""Independent scalar oracles for the reference kernels.

Written as literal loop nests straight from the layer definitions, in
float64, with no code shared with the package; kernel tests compare against
these to relative 1e-6.
"""

import math

import numpy as np


def conv(x, w, b, stride, pad):
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    y = np.zeros((n, co, ho, wo))
    for nn in range(n):
        for oc in range(co):
            for i in range(ho):
                for j in range(wo):
                    acc = float(b[oc])
                    for c in range(ci):
                        for r in range(kh):
                            for q in range(kw):
                                ii = i * stride + r - pad
                                jj = j * stride + q - pad
                                if 0 <= ii < h and 0 <= jj < wd:
                                    acc += float(x[nn, c, ii, jj]) * float(w[oc, c, r, q])
                    y[nn, oc, i, j] = acc
    return y


def deconv(x, w, b, stride, pad):
    n, ci, h, wd = x.shape
    _, co, kh, kw = w.shape
    ho = (h - 1) * stride + kh - 2 * pad
    wo = (wd - 1) * stride + kw - 2 * pad
    y = np.zeros((n, co, ho, wo))
    for nn in range(n):
        for c in range(ci):
            for i in range(h):
                for j in range(wd):
                    for oc in range(co):
                        for r in range(kh):
                            for q in range(kw):
                                oi = i * stride + r - pad
                                oj = j * stride + q - pad
                                if 0 <= oi < ho and 0 <= oj < wo:
                                    y[nn, oc, oi, oj] += float(x[nn, c, i, j]) * float(w[c, oc, r, q])
    for oc in range(co):
        y[:, oc] += float(b[oc])
    return y


def pool(x, k, s, mode):
    n, c, h, w = x.shape
    ho, wo = (h - k) // s + 1, (w - k) // s + 1
    y = np.zeros((n, c, ho, wo))
    for nn in range(n):
        for cc in range(c):
            for i in range(ho):
                for j in range(wo):
                    vals = [
                        float(x[nn, cc, i * s + r, j * s + q])
                        for r in range(k)
                        for q in range(k)
                    ]
                    y[nn, cc, i, j] = max(vals) if mode == "max" else sum(vals) / (k * k)
    return y


def unpool(x, k, s, mode, switches=None):
    n, c, h, w = x.shape
    ho, wo = (h - 1) * s + k, (w - 1) * s + k
    y = np.zeros((n, c, ho, wo))
    for nn in range(n):
        for cc in range(c):
            for i in range(h):
                for j in range(w):
                    v = float(x[nn, cc, i, j])
                    if mode == "avg":
                        for r in range(k):
                            for q in range(k):
                                y[nn, cc, i * s + r, j * s + q] += v / (k * k)
                    else:
                        sw = 0 if switches is None else int(switches[nn, cc, i, j])
                        y[nn, cc, i * s + sw // k, j * s + sw % k] = v
    return y


def fc(x, w, b):
    m, nf = w.shape
    flat = x.reshape(-1, nf)
    y = np.zeros((flat.shape[0], m))
    for bb in range(flat.shape[0]):
        for i in range(m):
            acc = float(b[i])
            for j in range(nf):
                acc += float(flat[bb, j]) * float(w[i, j])
            y[bb, i] = acc
    return y.reshape(x.shape[:-1] + (m,))


def relu(x):
    return np.where(x > 0, x, 0.0).astype(np.float64)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x.astype(np.float64)))


def lrn(x, local, alpha, beta, k):
    n, c, h, w = x.shape
    half = local // 2
    y = np.zeros_like(x, dtype=np.float64)
    for nn in range(n):
        for cc in range(c):
            lo, hi = max(0, cc - half), min(c, cc + half + 1)
            for i in range(h):
                for j in range(w):
                    ssum = sum(float(x[nn, c2, i, j]) ** 2 for c2 in range(lo, hi))
                    y[nn, cc, i, j] = float(x[nn, cc, i, j]) / (
                        (k + alpha / local * ssum) ** beta
                    )
    return y


def bn(x, gamma, beta, eps):
    n, c, h, w = x.shape
    y = np.zeros_like(x, dtype=np.float64)
    for cc in range(c):
        vals = x[:, cc].astype(np.float64)
        mean = vals.mean()
        var = vals.var()
        y[:, cc] = (vals - mean) / math.sqrt(var + eps) * float(gamma[cc]) + float(beta[cc])
    return y


def lstm(x, wx, wh, b):
    t, bsz, isz = x.shape
    _, hsz, _ = wx.shape

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    h = np.zeros((bsz, hsz))
    c = np.zeros((bsz, hsz))
    seq = np.zeros((t, bsz, hsz))
    for step in range(t):
        for nb in range(bsz):
            gates = np.zeros((4, hsz))
            for g in range(4):
                for r in range(hsz):
                    acc = float(b[g, r])
                    for j in range(isz):
                        acc += float(x[step, nb, j]) * float(wx[g, r, j])
                    for j in range(hsz):
                        acc += float(h[nb, j]) * float(wh[g, r, j])
                    gates[g, r] = acc
            for r in range(hsz):
                i_g = sig(gates[0, r])
                f_g = sig(gates[1, r])
                o_g = sig(gates[2, r])
                g_g = math.tanh(gates[3, r])
                c[nb, r] = f_g * c[nb, r] + i_g * g_g
                h[nb, r] = o_g * math.tanh(c[nb, r])
            seq[step, nb] = h[nb]
    return seq, c


def pearson(a, b):
    """Two-pass textbook Pearson correlation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    am, bm = a.mean(), b.mean()
    num = ((a - am) * (b - bm)).sum()
    den = math.sqrt(((a - am) ** 2).sum() * ((b - bm) ** 2).sum())
    return num / den
