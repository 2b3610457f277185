"""Compiled adaptive stepper for the five-level Schrodinger equation.

Integrates ``dpsi/dxi = d(xi)*psi - i*A(xi) @ psi`` where ``d`` is a
piecewise-constant complex diagonal (measurement decay, optional product
decay, dephasing energies times ``-i``) and ``A`` is the real-symmetric
pulse-coupling matrix.  The diagonal can be stiff (``Gamma*T`` up to 1e5+),
so each step advances it exactly with elementwise exponentials anchored at
the step start, while the transformed coupling is stepped with a
Dormand-Prince 5(4) embedded pair.  Local error is measured after damping
the estimate back to the physical variables, so the controller keys on the
accuracy that actually survives the decay.

Steps are clamped so that they never cross a noise-refresh boundary or an
output sample point; sample points are hit exactly.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NOT_FINITE = 2


@njit(cache=True, nogil=True)
def _stage_deriv(t, sigma, d, peaks, centers, coefs, u, out):
    # Derivative of the integrating-factor-transformed state at stage time
    # t = step start + sigma: scale u into the physical frame, apply the
    # coupling, scale back.
    a0, a1, a2, a3, a4 = u[0], u[1], u[2], u[3], u[4]
    f0 = f1 = f2 = f3 = f4 = complex(1.0, 0.0)
    if sigma != 0.0:
        if d[0] != 0:
            f0 = np.exp(d[0] * sigma)
            a0 = a0 * f0
        if d[1] != 0:
            f1 = np.exp(d[1] * sigma)
            a1 = a1 * f1
        if d[2] != 0:
            f2 = np.exp(d[2] * sigma)
            a2 = a2 * f2
        if d[3] != 0:
            f3 = np.exp(d[3] * sigma)
            a3 = a3 * f3
        if d[4] != 0:
            f4 = np.exp(d[4] * sigma)
            a4 = a4 * f4
    x = t - centers[0]
    vp = peaks[0] * np.exp(-coefs[0] * x * x)
    x = t - centers[1]
    vs3 = peaks[1] * np.exp(-coefs[1] * x * x)
    x = t - centers[2]
    vs4 = peaks[2] * np.exp(-coefs[2] * x * x)
    x = t - centers[3]
    vb3 = peaks[3] * np.exp(-coefs[3] * x * x)
    x = t - centers[4]
    vb4 = peaks[4] * np.exp(-coefs[4] * x * x)
    out[0] = -1j * (vp * a1) / f0
    out[1] = -1j * (vp * a0 + vs3 * a2 + vs4 * a3) / f1
    out[2] = -1j * (vs3 * a1 + vb3 * a4) / f2
    out[3] = -1j * (vs4 * a1 + vb4 * a4) / f3
    out[4] = -1j * (vb3 * a2 + vb4 * a3) / f4


@njit(cache=True, nogil=True)
def propagate_core(peaks, centers, coefs, dvals, edges, out_xi, psi0,
                   rtol, atol, hmax):
    """Adaptive propagation over ``[edges[0], edges[-1]]``.

    ``dvals[m]`` is the constant complex diagonal on ``[edges[m],
    edges[m+1])``; ``out_xi`` are the (strictly increasing) sample points,
    with ``out_xi[0] == edges[0]`` and ``out_xi[-1] == edges[-1]``.

    Returns ``(out, status, xi_fail, nsteps)`` with ``out[i]`` the state at
    ``out_xi[i]``.
    """
    # Dormand-Prince 5(4) tableau
    a21 = 0.2
    a31, a32 = 3.0 / 40.0, 9.0 / 40.0
    a41, a42, a43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
    a51, a52, a53, a54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
    a61, a62, a63, a64, a65 = (9017.0 / 3168.0, -355.0 / 33.0,
                               46732.0 / 5247.0, 49.0 / 176.0,
                               -5103.0 / 18656.0)
    b1, b3, b4, b5, b6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                          -2187.0 / 6784.0, 11.0 / 84.0)
    e1, e3, e4, e5, e6, e7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                              -17253.0 / 339200.0, 22.0 / 525.0, -0.025)

    nout = out_xi.shape[0]
    nint = dvals.shape[0]
    out = np.zeros((nout, 5), np.complex128)
    psi = psi0.copy()
    for j in range(5):
        out[0, j] = psi[j]

    span = edges[nint] - edges[0]
    tiny = 1e-12 * span
    hmin = 1e-14 * span

    dmax = 0.0
    for j in range(5):
        v = abs(dvals[0, j])
        if v > dmax:
            dmax = v
    pmax = 0.0
    for j in range(5):
        if peaks[j] > pmax:
            pmax = peaks[j]
    h = min(hmax, 0.01 / (dmax + pmax + 1.0), span)

    k = np.empty((7, 5), np.complex128)
    u = np.empty(5, np.complex128)
    psi_new = np.empty(5, np.complex128)
    growth = np.empty(5, np.complex128)

    xi = edges[0]
    m = 0
    io = 1
    have_k1 = False
    nsteps = 0

    while io < nout:
        d = dvals[m]
        # keep e^{+-Re(d)*h} representable in float64; overlong steps in
        # pulse-free tails would otherwise under/overflow the transform
        dre = 0.0
        for j in range(5):
            v = abs(d[j].real)
            if v > dre:
                dre = v
        hcap = 690.0 / dre if dre > 0.0 else np.inf
        stop_out = out_xi[io] if io < nout else np.inf
        stop_edge = edges[m + 1] if m < nint else np.inf
        stop = stop_out if stop_out < stop_edge else stop_edge

        if stop - xi > tiny:
            # one accepted adaptive step toward the stop
            accepted = False
            while not accepted:
                if h < hmin:
                    return out, STATUS_STEP_UNDERFLOW, xi, nsteps
                h_try = h if h < hcap else hcap
                if xi + h_try >= stop:
                    h_use = stop - xi
                    clamped = True
                else:
                    h_use = h_try
                    clamped = False

                if not have_k1:
                    _stage_deriv(xi, 0.0, d, peaks, centers, coefs, psi, k[0])
                    have_k1 = True

                sig = a21 * h_use
                for j in range(5):
                    u[j] = psi[j] + h_use * (a21 * k[0, j])
                _stage_deriv(xi + sig, sig, d, peaks, centers, coefs, u, k[1])

                sig = 0.3 * h_use
                for j in range(5):
                    u[j] = psi[j] + h_use * (a31 * k[0, j] + a32 * k[1, j])
                _stage_deriv(xi + sig, sig, d, peaks, centers, coefs, u, k[2])

                sig = 0.8 * h_use
                for j in range(5):
                    u[j] = psi[j] + h_use * (a41 * k[0, j] + a42 * k[1, j]
                                             + a43 * k[2, j])
                _stage_deriv(xi + sig, sig, d, peaks, centers, coefs, u, k[3])

                sig = (8.0 / 9.0) * h_use
                for j in range(5):
                    u[j] = psi[j] + h_use * (a51 * k[0, j] + a52 * k[1, j]
                                             + a53 * k[2, j] + a54 * k[3, j])
                _stage_deriv(xi + sig, sig, d, peaks, centers, coefs, u, k[4])

                for j in range(5):
                    u[j] = psi[j] + h_use * (a61 * k[0, j] + a62 * k[1, j]
                                             + a63 * k[2, j] + a64 * k[3, j]
                                             + a65 * k[4, j])
                _stage_deriv(xi + h_use, h_use, d, peaks, centers, coefs,
                             u, k[5])

                # 5th-order solution in transformed variables; also the
                # input of the last stage
                for j in range(5):
                    u[j] = psi[j] + h_use * (b1 * k[0, j] + b3 * k[2, j]
                                             + b4 * k[3, j] + b5 * k[4, j]
                                             + b6 * k[5, j])
                _stage_deriv(xi + h_use, h_use, d, peaks, centers, coefs,
                             u, k[6])
                nsteps += 1

                errnorm = 0.0
                for j in range(5):
                    ee = h_use * (e1 * k[0, j] + e3 * k[2, j] + e4 * k[3, j]
                                  + e5 * k[4, j] + e6 * k[5, j]
                                  + e7 * k[6, j])
                    if d[j] != 0:
                        g = np.exp(d[j] * h_use)
                    else:
                        g = complex(1.0, 0.0)
                    growth[j] = g
                    pn = g * u[j]
                    psi_new[j] = pn
                    sc = atol + rtol * max(abs(psi[j]), abs(pn))
                    r = abs(ee) * abs(g) / sc
                    if r > errnorm:
                        errnorm = r

                if not np.isfinite(errnorm):
                    h = 0.2 * h_use
                    continue
                if errnorm <= 1.0:
                    accepted = True
                    ok = True
                    for j in range(5):
                        if not (np.isfinite(psi_new[j].real)
                                and np.isfinite(psi_new[j].imag)):
                            ok = False
                    if not ok:
                        return out, STATUS_NOT_FINITE, xi, nsteps
                    for j in range(5):
                        psi[j] = psi_new[j]
                        # first stage of the next step reuses the last one
                        k[0, j] = growth[j] * k[6, j]
                    xi = stop if clamped else xi + h_use
                    if errnorm == 0.0:
                        fac = 5.0
                    else:
                        fac = 0.9 * errnorm ** -0.2
                        if fac > 5.0:
                            fac = 5.0
                        elif fac < 0.2:
                            fac = 0.2
                    cand = h_use * fac
                    if clamped and cand < h:
                        cand = h
                    h = min(hmax, cand)
                else:
                    fac = 0.9 * errnorm ** -0.2
                    if fac < 0.2:
                        fac = 0.2
                    h = h_use * fac
        else:
            xi = stop

        if io < nout and xi >= out_xi[io] - tiny:
            xi = out_xi[io]
            for j in range(5):
                out[io, j] = psi[j]
            io += 1
        if m < nint and xi >= edges[m + 1] - tiny:
            if m + 1 < nint:
                m += 1
                have_k1 = False

    return out, STATUS_OK, xi, nsteps
