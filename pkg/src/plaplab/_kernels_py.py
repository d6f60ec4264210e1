"""Pure-numpy implementation of the energy kernels.

Mirrors the compiled extension `_kernels` exactly; selected by
``plaplab.kernels`` when the extension is unavailable or disabled.
All quantities are "raw" (sphere-measure factor omitted):

    A = sum_i |s_i|^p W_i,        s_i = (u_{i+1} - u_i) / h_i
    B = sum_j |u_j|^{p*} nu_j

and the gradient is that of A/p - B/p*.
"""

import numpy as np


def energy_terms(u, h, W, nu, p, ps):
    s = np.diff(u) / h
    A = float(np.abs(s) ** p @ W)
    B = float(np.abs(u) ** ps @ nu)
    return A, B


def energy_gradient(u, h, W, nu, p, ps, g):
    s = np.diff(u) / h
    a = np.abs(s)
    A = float(a ** p @ W)
    phi = np.sign(s) * a ** (p - 1.0) * (W / h)
    g[:] = 0.0
    g[: s.size] -= phi
    g[1:] += phi
    au = np.abs(u)
    B = float(au ** ps @ nu)
    g -= np.sign(u) * au ** (ps - 1.0) * nu
    return A, B


def cell_kappa(u, h, W, p, eps2, out):
    s = np.diff(u) / h
    out[:] = (p - 1.0) * (s * s + eps2) ** ((p - 2.0) / 2.0) * W / (h * h)
    return None
