# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops for the default parametric constitutive laws.

Mirrors ``pure.py`` step for step: slider RK4 with threshold event
localization, and the staggered stress/aging stepping of the simplified
model with an exact stick branch, safeguarded Newton for the stress, and a
Thomas tridiagonal solve for the aging update.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log1p, expm1

cnp.import_array()

DEF SIGMA_TOL = 1e-13
DEF EVENT_TOL = 1e-10


cdef struct Laws:
    double mu0, a, h_ref, b, c_state, theta_inf, c1


cdef inline double _pi_scalar(double s, double th, Laws* L) nogil:
    cdef double thr, ab, p
    if th < 0.0:
        th = 0.0
    thr = L.mu0 + L.b * log1p(L.c_state * th)
    ab = fabs(s)
    if ab <= thr:
        return 0.0
    p = expm1((ab - thr) / L.a) / L.h_ref
    return p if s > 0.0 else -p


cdef inline void _slider_rhs(double s, double th, double v_inf, double h,
                             double coef, Laws* L, double* ds, double* dth) nogil:
    cdef double p = _pi_scalar(s, th, L)
    ds[0] = coef * (v_inf - h * p)
    dth[0] = 1.0 - th / L.theta_inf - L.c1 * fabs(p) * th


cdef inline void _rk4(double s, double th, double dt, double v_inf, double h,
                      double coef, Laws* L, double* s1, double* th1) nogil:
    cdef double k1s, k1t, k2s, k2t, k3s, k3t, k4s, k4t
    _slider_rhs(s, th, v_inf, h, coef, L, &k1s, &k1t)
    _slider_rhs(s + 0.5 * dt * k1s, th + 0.5 * dt * k1t, v_inf, h, coef, L, &k2s, &k2t)
    _slider_rhs(s + 0.5 * dt * k2s, th + 0.5 * dt * k2t, v_inf, h, coef, L, &k3s, &k3t)
    _slider_rhs(s + dt * k3s, th + dt * k3t, v_inf, h, coef, L, &k4s, &k4t)
    s1[0] = s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    th1[0] = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)


cdef inline double _gap(double s, double th, Laws* L) nogil:
    if th < 0.0:
        th = 0.0
    return fabs(s) - L.mu0 - L.b * log1p(L.c_state * th)


def slider_run(double sigma0, double theta0, double T, double dt,
               double v_inf, double h, double C, double H,
               double mu0, double a, double h_ref, double b, double c_state,
               double theta_inf, double c1, double dt_out):
    """Compiled twin of ``pure.slider_run`` for the default laws."""
    cdef Laws L
    L.mu0, L.a, L.h_ref, L.b, L.c_state, L.theta_inf, L.c1 = (
        mu0, a, h_ref, b, c_state, theta_inf, c1)
    cdef double coef = C / H

    cdef Py_ssize_t n_cap = <Py_ssize_t> (T / dt_out) + 8
    ts_arr = np.empty(n_cap)
    ss_arr = np.empty(n_cap)
    hs_arr = np.empty(n_cap)
    cdef double[::1] ts = ts_arr
    cdef double[::1] ss = ss_arr
    cdef double[::1] hs = hs_arr

    cdef double t = 0.0, s = sigma0, th = theta0
    cdef double s1, th1, g_old, g_new, step, lo, hi, mid, sm, thm, gm
    cdef double next_rec = dt_out
    cdef double t_eps = 1e-14 * (T if T > 1.0 else 1.0)
    cdef Py_ssize_t n = 1, it
    ts[0] = 0.0
    ss[0] = sigma0
    hs[0] = theta0

    g_old = _gap(s, th, &L)
    with nogil:
        while t < T - t_eps:
            step = dt if dt < T - t else T - t
            _rk4(s, th, step, v_inf, h, coef, &L, &s1, &th1)
            g_new = _gap(s1, th1, &L)
            if ((g_old > EVENT_TOL and g_new < -EVENT_TOL)
                    or (g_old < -EVENT_TOL and g_new > EVENT_TOL)):
                lo = 0.0
                hi = step
                for it in range(80):
                    mid = 0.5 * (lo + hi)
                    _rk4(s, th, mid, v_inf, h, coef, &L, &sm, &thm)
                    gm = _gap(sm, thm, &L)
                    if fabs(gm) <= EVENT_TOL or hi - lo < 1e-16 * dt:
                        step = mid
                        s1 = sm
                        th1 = thm
                        g_new = gm
                        break
                    if (g_old > 0.0) == (gm > 0.0):
                        lo = mid
                    else:
                        hi = mid
                else:
                    mid = 0.5 * (lo + hi)
                    step = mid
                    _rk4(s, th, mid, v_inf, h, coef, &L, &s1, &th1)
                    g_new = _gap(s1, th1, &L)
            t += step
            s = s1
            th = th1
            g_old = g_new
            if t >= next_rec - 1e-14 and n < n_cap - 1:
                ts[n] = t
                ss[n] = s
                hs[n] = th
                n += 1
                while next_rec <= t + 1e-14:
                    next_rec += dt_out
    ts[n] = t
    ss[n] = s
    hs[n] = th
    n += 1
    return ts_arr[:n], ss_arr[:n], hs_arr[:n]


cdef double _integral_pi(double s, double[::1] theta, double[::1] w, Laws* L) nogil:
    cdef Py_ssize_t i, M = theta.shape[0]
    cdef double acc = 0.0
    for i in range(M):
        acc += w[i] * _pi_scalar(s, theta[i], L)
    return acc


cdef double _integral_pi_prime(double s, double[::1] theta, double[::1] w, Laws* L) nogil:
    # d/ds of the integral; on slipping nodes dPi/ds = (h_ref*|Pi|+1)/(a*h_ref)
    cdef Py_ssize_t i, M = theta.shape[0]
    cdef double acc = 0.0, p
    for i in range(M):
        p = _pi_scalar(s, theta[i], L)
        if p != 0.0:
            acc += w[i] * (L.h_ref * fabs(p) + 1.0) / (L.a * L.h_ref)
    return acc


cdef double _solve_sigma(double sigma_old, double[::1] theta, double rhs,
                         double c, double[::1] w, Laws* L) nogil:
    cdef Py_ssize_t i, M = theta.shape[0]
    cdef double th_min = theta[0]
    cdef double thr_min, lo, hi, s, F, dF, s_new
    for i in range(1, M):
        if theta[i] < th_min:
            th_min = theta[i]
    if th_min < 0.0:
        th_min = 0.0
    thr_min = L.mu0 + L.b * log1p(L.c_state * th_min)
    if fabs(rhs) <= thr_min:
        return rhs
    if rhs > 0.0:
        lo = 0.0
        hi = rhs
    else:
        lo = rhs
        hi = 0.0
    s = sigma_old
    if s < lo:
        s = lo
    if s > hi:
        s = hi
    for i in range(100):
        F = s + c * _integral_pi(s, theta, w, L) - rhs
        if fabs(F) <= SIGMA_TOL * (1.0 if fabs(rhs) < 1.0 else fabs(rhs)):
            break
        if F > 0.0:
            hi = s
        else:
            lo = s
        dF = 1.0 + c * _integral_pi_prime(s, theta, w, L)
        s_new = s - F / dF
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        s = s_new
    return s


cdef void _aging_step(double[::1] theta, double[::1] pi_abs, double tau,
                      double kappa, double dx, Laws* L,
                      double[::1] dl, double[::1] dd, double[::1] du,
                      double[::1] rr, double[::1] out) nogil:
    """Implicit aging update, Thomas solve on the interior nodes."""
    cdef Py_ssize_t i, M = theta.shape[0], m = M - 2
    cdef double tau_inv = 1.0 / tau
    cdef double off = -kappa / (dx * dx)
    cdef double wfac
    for i in range(m):
        dd[i] = tau_inv + 1.0 / L.theta_inf + L.c1 * pi_abs[i + 1] - 2.0 * off
        dl[i] = off
        du[i] = off
        rr[i] = theta[i + 1] * tau_inv + 1.0
    rr[0] -= off * L.theta_inf
    rr[m - 1] -= off * L.theta_inf
    # forward sweep
    for i in range(1, m):
        wfac = dl[i] / dd[i - 1]
        dd[i] -= wfac * du[i - 1]
        rr[i] -= wfac * rr[i - 1]
    out[M - 2] = rr[m - 1] / dd[m - 1]
    for i in range(m - 2, -1, -1):
        out[i + 1] = (rr[i] - du[i] * out[i + 2]) / dd[i]
    out[0] = L.theta_inf
    out[M - 1] = L.theta_inf


def sm_run(double sigma0, cnp.ndarray[double, ndim=1] theta0, double tau,
           cnp.ndarray[double, ndim=1] v_arr, double kappa, double dx,
           cnp.ndarray[double, ndim=1] weights, double C, double H,
           double mu0, double a, double h_ref, double b, double c_state,
           double theta_inf, double c1,
           Py_ssize_t rec_every, cnp.ndarray[cnp.int64_t, ndim=1] probe_steps):
    """Compiled twin of ``pure.sm_run`` for the default laws."""
    cdef Laws L
    L.mu0, L.a, L.h_ref, L.b, L.c_state, L.theta_inf, L.c1 = (
        mu0, a, h_ref, b, c_state, theta_inf, c1)

    cdef Py_ssize_t nsteps = v_arr.shape[0]
    cdef Py_ssize_t M = theta0.shape[0]
    cdef Py_ssize_t nrec = nsteps // rec_every + 1
    if (nsteps % rec_every) != 0:
        nrec += 1
    cdef Py_ssize_t nprobe = probe_steps.shape[0]

    rec_t_arr = np.empty(nrec)
    rec_sigma_arr = np.empty(nrec)
    rec_intpi_arr = np.empty(nrec)
    rec_thmin_arr = np.empty(nrec)
    rec_thmax_arr = np.empty(nrec)
    probe_theta_arr = np.empty((nprobe if nprobe else 1, M))
    probe_sigma_arr = np.empty(nprobe if nprobe else 1)
    theta_arr = theta0.copy()
    work = np.empty((5, M))

    cdef double[::1] rec_t = rec_t_arr
    cdef double[::1] rec_sigma = rec_sigma_arr
    cdef double[::1] rec_intpi = rec_intpi_arr
    cdef double[::1] rec_thmin = rec_thmin_arr
    cdef double[::1] rec_thmax = rec_thmax_arr
    cdef double[:, ::1] probe_theta = probe_theta_arr
    cdef double[::1] probe_sigma = probe_sigma_arr
    cdef double[::1] theta = theta_arr
    cdef double[::1] v = v_arr
    cdef double[::1] w = weights
    cdef double[::1] dl = work[0]
    cdef double[::1] dd = work[1]
    cdef double[::1] du = work[2]
    cdef double[::1] rr = work[3]
    cdef double[::1] tmp = work[4]
    cdef cnp.int64_t[:] probes = probe_steps

    cdef double sigma = sigma0, rhs, c = C * tau / (2.0 * H)
    cdef double load = C * tau / H
    cdef Py_ssize_t k, i, j, jr = 0, jp = 0
    cdef double mn, mx

    with nogil:
        # record initial state
        rec_t[0] = 0.0
        rec_sigma[0] = sigma
        rec_intpi[0] = _integral_pi(sigma, theta, w, &L)
        mn = theta[0]
        mx = theta[0]
        for i in range(M):
            if theta[i] < mn:
                mn = theta[i]
            if theta[i] > mx:
                mx = theta[i]
        rec_thmin[0] = mn
        rec_thmax[0] = mx
        jr = 1

        for k in range(1, nsteps + 1):
            rhs = sigma + load * v[k - 1]
            sigma = _solve_sigma(sigma, theta, rhs, c, w, &L)
            for i in range(M):
                tmp[i] = fabs(_pi_scalar(sigma, theta[i], &L))
            _aging_step(theta, tmp, tau, kappa, dx, &L, dl, dd, du, rr, tmp)
            # _aging_step wrote the new theta into tmp
            for i in range(M):
                theta[i] = tmp[i]
            if k % rec_every == 0 or k == nsteps:
                rec_t[jr] = k * tau
                rec_sigma[jr] = sigma
                rec_intpi[jr] = _integral_pi(sigma, theta, w, &L)
                mn = theta[0]
                mx = theta[0]
                for i in range(M):
                    if theta[i] < mn:
                        mn = theta[i]
                    if theta[i] > mx:
                        mx = theta[i]
                rec_thmin[jr] = mn
                rec_thmax[jr] = mx
                jr += 1
            for j in range(nprobe):
                if probes[j] == k:
                    for i in range(M):
                        probe_theta[j, i] = theta[i]
                    probe_sigma[j] = sigma

    return (
        rec_t_arr[:jr],
        rec_sigma_arr[:jr],
        rec_intpi_arr[:jr],
        rec_thmin_arr[:jr],
        rec_thmax_arr[:jr],
        probe_theta_arr[:nprobe],
        probe_sigma_arr[:nprobe],
        sigma,
        theta_arr,
    )
