"""Literal, loop-by-loop transcriptions of every detector quantity.

These stay deliberately naive (index-by-index Python sums, no vectorization,
no shared code with the library) so they can serve as independent references
for the fast implementations.
"""

import cmath
import math

import numpy as np


def lag_autocorr(y, lag, upper):
    return np.array([y[n] * np.conj(y[n + lag]) for n in range(upper)])


def tdsc_mrc(y, L, n_p, j):
    R = {}
    for k in range(1, j + 2):
        acc = 0j
        for n in range((n_p - k) * L):
            acc += y[n] * np.conj(y[n + k * L])
        R[k] = acc / math.sqrt(L)
    s = 0j
    for k in range(1, j + 1):
        s += R[k] * np.conj(R[k + 1])
    return abs(s)


def symbol_align(r, n_dft, n_cp, n_total):
    sym = n_dft + n_cp
    l_count = (n_total - n_dft + 1) // sym
    out = np.zeros(sym, complex)
    for n in range(sym):
        for l in range(l_count):
            idx = n + l * sym
            if idx < len(r):
                out[n] += r[idx]
    return out


def frame_prealign(r, frame_len):
    out = np.zeros(frame_len, complex)
    for n in range(frame_len):
        k = 0
        while n + k * frame_len < len(r):
            out[n] += r[n + k * frame_len]
            k += 1
    return out


def cp_sw(R, n_cp):
    n = len(R)
    best = 0.0
    for i in range(n):
        acc = 0j
        for m in range(n_cp):
            acc += R[(i + m) % n]
        best = max(best, abs(acc))
    return best


def cp_sum(y, n_dft):
    N = len(y)
    acc = 0j
    for n in range(N - n_dft):
        acc += y[n] * np.conj(y[n + n_dft])
    return abs(acc) / math.sqrt(N - n_dft + 1)


def welch_psd(y, m, d):
    N = len(y)
    k_count = (N - m) // d + 1
    bins = np.zeros(m)
    for mm in range(m):
        acc = 0.0
        for i in range(k_count):
            seg = 0j
            for n in range(m):
                seg += y[i * d + n] * cmath.exp(-2j * math.pi * n * mm / m)
            acc += abs(seg) ** 2
        bins[mm] = acc / (k_count * m)
    return bins


def par(bins, excluded=()):
    act = [b for i, b in enumerate(bins) if i not in excluded]
    return max(act) / (sum(act) / len(act))


def ds(bins, rho, excluded=()):
    act = [b for i, b in enumerate(bins) if i not in excluded]
    mean = sum(act) / len(act)
    count = sum(1 for b in act if b >= (1 + rho) * mean)
    return count / len(bins)
