"""Pure-Python versions of the compiled sweeps, used when the extension is unavailable.

Same signatures, same consumption of uniforms and same floating-point
operation order, so both backends produce identical chains.
"""
from __future__ import annotations

import math

import numpy as np


def _code(spins) -> int:
    c = 0
    for i, s in enumerate(spins):
        if s < 0:
            c |= 1 << i
    return c


def heat_bath_dense(J, field, spins, uniforms, record_codes=False):
    N = spins.shape[0]
    n_sweeps = uniforms.shape[0] // N
    S_out = np.empty(n_sweeps, np.int64)
    codes = np.zeros(n_sweeps if record_codes else 0, np.int64)
    S = int(spins.sum(dtype=np.int64))
    u = uniforms.tolist()
    k = 0
    for t in range(n_sweeps):
        for i in range(N):
            pplus = 1.0 / (1.0 + math.exp(-2.0 * float(field[i])))
            new = 1 if u[k] < pplus else -1
            k += 1
            if new != spins[i]:
                delta = float(new - spins[i])
                spins[i] = new
                S += 2 * new
                field += delta * J[i]
        S_out[t] = S
        if record_codes:
            codes[t] = _code(spins)
    return S_out, codes


def heat_bath_rank1(w, c, B, spins, msum, uniforms, record_codes=False):
    N = spins.shape[0]
    n_sweeps = uniforms.shape[0] // N
    S_out = np.empty(n_sweeps, np.int64)
    codes = np.zeros(n_sweeps if record_codes else 0, np.int64)
    S = int(spins.sum(dtype=np.int64))
    u = uniforms.tolist()
    wl = w.tolist()
    sp = spins.tolist()
    k = 0
    for t in range(n_sweeps):
        for i in range(N):
            h = B + c * wl[i] * (msum - wl[i] * sp[i])
            pplus = 1.0 / (1.0 + math.exp(-2.0 * h))
            new = 1 if u[k] < pplus else -1
            k += 1
            if new != sp[i]:
                msum += (new - sp[i]) * wl[i]
                sp[i] = new
                S += 2 * new
        S_out[t] = S
        if record_codes:
            codes[t] = _code(sp)
    spins[:] = sp
    return S_out, codes, msum


def heat_bath_sparse(indptr, indices, beta, B, spins, uniforms, record_codes=False):
    N = spins.shape[0]
    n_sweeps = uniforms.shape[0] // N
    S_out = np.empty(n_sweeps, np.int64)
    codes = np.zeros(n_sweeps if record_codes else 0, np.int64)
    S = int(spins.sum(dtype=np.int64))
    u = uniforms.tolist()
    ip = indptr.tolist()
    nb = indices.tolist()
    sp = spins.tolist()
    k = 0
    for t in range(n_sweeps):
        for i in range(N):
            isum = 0
            for e in range(ip[i], ip[i + 1]):
                isum += sp[nb[e]]
            h = B + beta * isum
            pplus = 1.0 / (1.0 + math.exp(-2.0 * h))
            new = 1 if u[k] < pplus else -1
            k += 1
            if new != sp[i]:
                sp[i] = new
                S += 2 * new
        S_out[t] = S
        if record_codes:
            codes[t] = _code(sp)
    spins[:] = sp
    return S_out, codes


def joint_cm_sweeps(vptr, owner, partner, spins, beta, B, n_switch, u_spin, u_switch, record_codes=False):
    N = spins.shape[0]
    ell = partner.shape[0]
    n_sweeps = u_spin.shape[0] // N
    S_out = np.empty(n_sweeps, np.int64)
    codes = np.zeros(n_sweeps if record_codes else 0, np.int64)
    S = int(spins.sum(dtype=np.int64))
    us = u_spin.tolist()
    uw = u_switch.tolist()
    vp = vptr.tolist()
    ow = owner.tolist()
    pa = partner.tolist()
    sp = spins.tolist()
    k = ks = 0
    accepted = 0
    for t in range(n_sweeps):
        for i in range(N):
            isum = 0
            for hs in range(vp[i], vp[i + 1]):
                other = ow[pa[hs]]
                if other != i:
                    isum += sp[other]
            h = B + beta * isum
            pplus = 1.0 / (1.0 + math.exp(-2.0 * h))
            new = 1 if us[k] < pplus else -1
            k += 1
            if new != sp[i]:
                sp[i] = new
                S += 2 * new
        for _ in range(n_switch):
            h1 = int(uw[ks] * ell)
            p1 = pa[h1]
            h2 = int(uw[ks + 1] * (ell - 2))
            e1, e2 = (h1, p1) if h1 < p1 else (p1, h1)
            if h2 >= e1:
                h2 += 1
            if h2 >= e2:
                h2 += 1
            p2 = pa[h2]
            s1, s2, t1, t2 = sp[ow[h1]], sp[ow[h2]], sp[ow[p1]], sp[ow[p2]]
            old = s1 * t1 + s2 * t2
            straight = uw[ks + 2] < 0.5
            new_e = s1 * s2 + t1 * t2 if straight else s1 * t2 + s2 * t1
            if uw[ks + 3] < math.exp(beta * (new_e - old)):
                accepted += 1
                if straight:
                    pa[h1], pa[h2], pa[p1], pa[p2] = h2, h1, p2, p1
                else:
                    pa[h1], pa[p2], pa[h2], pa[p1] = p2, h1, p1, h2
            ks += 4
        S_out[t] = S
        if record_codes:
            codes[t] = _code(sp)
    spins[:] = sp
    partner[:] = pa
    return S_out, codes, accepted
