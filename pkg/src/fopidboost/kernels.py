"""Compiled inner loop of the closed-loop simulation.

The arithmetic here mirrors `converter.derivatives`, `converter.step_state`,
`converter.output_voltage` and `Controller.update` operation for operation,
so the pure Python implementations stay the readable reference and this
module is only the fast path.  Everything runs in nopython mode with the
GIL released, which lets optimizer candidates evaluate on worker threads.

The PWM latch uses integer arithmetic (step index modulo steps-per-period)
instead of float time so period boundaries never jitter.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# kernel abort codes
OK = 0
BREAKER_TRIPPED = 1
NOT_FINITE = 2


@njit(cache=True, nogil=True)
def _derivs(i_l, v_c, sw_on, blocking, r, rl, rc, l, c, vg):
    if blocking and not sw_on:
        # discontinuous conduction: inductor idle, capacitor into the load
        v_out = r * v_c / (r + rc)
        return 0.0, -v_out / (r * c)
    qbar = 0.0 if sw_on else 1.0
    v_out = (r * v_c + r * rc * qbar * i_l) / (r + rc)
    di = (vg - rl * i_l - qbar * v_out) / l
    dv = (qbar * i_l - v_out / r) / c
    return di, dv


@njit(cache=True, nogil=True)
def _rk4_step(i_l, v_c, blocking, sw_on, r, rl, rc, l, c, vg, dt):
    blocking = blocking and not sw_on
    i0 = 0.0 if blocking else i_l
    v0 = v_c
    k1i, k1v = _derivs(i0, v0, sw_on, blocking, r, rl, rc, l, c, vg)
    k2i, k2v = _derivs(i0 + 0.5 * dt * k1i, v0 + 0.5 * dt * k1v,
                       sw_on, blocking, r, rl, rc, l, c, vg)
    k3i, k3v = _derivs(i0 + 0.5 * dt * k2i, v0 + 0.5 * dt * k2v,
                       sw_on, blocking, r, rl, rc, l, c, vg)
    k4i, k4v = _derivs(i0 + dt * k3i, v0 + dt * k3v,
                       sw_on, blocking, r, rl, rc, l, c, vg)
    i_new = i0 + dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    v_new = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    if sw_on:
        return i_new, v_new, False
    if blocking or i_new < 0.0:
        return 0.0, v_new, True
    return i_new, v_new, False


@njit(cache=True, nogil=True)
def closed_loop(r, l, rl, rc, c, vg_base,
                i_l0, v_c0,
                dt, n_steps, spp, phase_steps,
                v_ref, dist_k, dist_factor, break_threshold,
                use_controller, duty0, duty1, duty_switch_k,
                kp, u_min, u_max,
                i_gain, i_b0, i_b1, i_a1,
                d_gain, d_b0, d_b1, d_a1,
                decim):
    """Simulate n_steps plant steps; returns traces and online metrics.

    Samples are taken at t_k = k*dt for k = 0..n_steps; the measured output
    at a sample uses the switch state active just before it.  The trailing
    moving average over one carrier period (spp samples) feeds overshoot
    and settling tracking.  Recording keeps every decim-th sample plus the
    final one; on abort the trace ends at the last finite sample.
    """
    cap = n_steps // decim + 2
    rec_k = np.empty(cap, np.int64)
    rec_vout = np.empty(cap, np.float64)
    rec_il = np.empty(cap, np.float64)
    rec_vc = np.empty(cap, np.float64)
    rec_duty = np.empty(cap, np.float64)
    rec_sw = np.empty(cap, np.int8)
    rec_vbar = np.empty(cap, np.float64)

    n_i = i_b0.shape[0]
    n_d = d_b0.shape[0]
    i_state = np.zeros(n_i, np.float64)
    d_state = np.zeros(n_d, np.float64)
    integ_value = 0.0
    integ_uprev = 0.0
    integ_primed = False

    ring = np.zeros(spp, np.float64)
    ring_sum = 0.0
    ring_idx = 0
    ring_fill = 0

    i_l = i_l0
    v_c = v_c0
    blocking = False
    sw_prev = False
    latch_ever = False
    latched_scaled = 0.0

    status = OK
    blowup_k = -1
    n_rec = 0
    iae = 0.0
    abs_e_prev = 0.0
    vbar_max = -1.0e300
    last_violation = -1
    n_switch = 0
    tol = 0.02 * v_ref
    duty = duty0
    vg = vg_base

    for k in range(n_steps):
        if k == dist_k:
            vg = vg_base * dist_factor

        # measured output with the switch state active up to t_k
        qbar = 0.0 if sw_prev else 1.0
        i_eff = 0.0 if (blocking and not sw_prev) else i_l
        v_meas = (r * v_c + r * rc * qbar * i_eff) / (r + rc)
        err = v_ref - v_meas

        # ripple average over one carrier period (partial window at start)
        if ring_fill < spp:
            ring_sum += v_meas
            ring[ring_idx] = v_meas
            ring_fill += 1
            vbar = ring_sum / ring_fill
        else:
            ring_sum += v_meas - ring[ring_idx]
            ring[ring_idx] = v_meas
            vbar = ring_sum / spp
        ring_idx += 1
        if ring_idx == spp:
            ring_idx = 0
            # refresh the running sum so float drift cannot accumulate
            s = 0.0
            for m in range(spp):
                s += ring[m]
            ring_sum = s
        if vbar > vbar_max:
            vbar_max = vbar
        dev = vbar - v_ref
        if dev > tol or dev < -tol:
            last_violation = k

        abs_e = err if err >= 0.0 else -err
        if k > 0:
            iae += 0.5 * dt * (abs_e_prev + abs_e)
        abs_e_prev = abs_e

        # duty command (same arithmetic and order as Controller.update)
        if use_controller:
            p_out = kp * err
            x = d_gain * err
            for m in range(n_d):
                y = d_b0[m] * x + d_state[m]
                d_state[m] = d_b1[m] * x - d_a1[m] * y
                x = y
            d_out = x
            x = i_gain * err
            for m in range(n_i):
                y = i_b0[m] * x + i_state[m]
                i_state[m] = i_b1[m] * x - i_a1[m] * y
                x = y
            w = x
            u_prev = integ_uprev if integ_primed else w
            candidate = integ_value + 0.5 * dt * (w + u_prev)
            unsaturated = p_out + candidate + d_out
            if (unsaturated > u_max and candidate > integ_value) or (
                    unsaturated < u_min and candidate < integ_value):
                i_out = integ_value
            else:
                integ_value = candidate
                integ_uprev = w
                integ_primed = True
                i_out = candidate
            u = p_out + i_out + d_out
            if u > u_max:
                u = u_max
            elif u < u_min:
                u = u_min
            duty = u
        else:
            duty = duty0 if k < duty_switch_k else duty1

        # trailing-edge PWM, duty latched once per carrier period
        pos = (k + phase_steps) % spp
        if pos == 0 or not latch_ever:
            latched_scaled = duty * spp
            latch_ever = True
        sw = pos < latched_scaled

        if k > 0 and sw != sw_prev:
            n_switch += 1

        if k % decim == 0:
            rec_k[n_rec] = k
            rec_vout[n_rec] = v_meas
            rec_il[n_rec] = i_l
            rec_vc[n_rec] = v_c
            rec_duty[n_rec] = duty
            rec_sw[n_rec] = 1 if sw else 0
            rec_vbar[n_rec] = vbar
            n_rec += 1

        i_l, v_c, blocking = _rk4_step(i_l, v_c, blocking, sw,
                                       r, rl, rc, l, c, vg, dt)
        sw_prev = sw

        a = i_l if i_l >= 0.0 else -i_l
        b = v_c if v_c >= 0.0 else -v_c
        if a > break_threshold or b > break_threshold:
            status = BREAKER_TRIPPED
        if not (np.isfinite(i_l) and np.isfinite(v_c)):
            status = NOT_FINITE
        if status != OK:
            blowup_k = k + 1
            break

    if status == OK:
        # closing sample at t = n_steps*dt, measured before the boundary edge
        k = n_steps
        qbar = 0.0 if sw_prev else 1.0
        i_eff = 0.0 if (blocking and not sw_prev) else i_l
        v_meas = (r * v_c + r * rc * qbar * i_eff) / (r + rc)
        err = v_ref - v_meas

        if ring_fill < spp:
            ring_sum += v_meas
            ring[ring_idx] = v_meas
            ring_fill += 1
            vbar = ring_sum / ring_fill
        else:
            ring_sum += v_meas - ring[ring_idx]
            ring[ring_idx] = v_meas
            vbar = ring_sum / spp
        if vbar > vbar_max:
            vbar_max = vbar
        dev = vbar - v_ref
        if dev > tol or dev < -tol:
            last_violation = k

        abs_e = err if err >= 0.0 else -err
        if k > 0:
            iae += 0.5 * dt * (abs_e_prev + abs_e)

        # the window is closed at T: a period boundary falling exactly on
        # the final sample counts its switching edge (last commanded duty)
        pos = (k + phase_steps) % spp
        if pos == 0 or not latch_ever:
            latched_scaled = duty * spp
        sw = pos < latched_scaled
        if k > 0 and sw != sw_prev:
            n_switch += 1

        rec_k[n_rec] = k
        rec_vout[n_rec] = v_meas
        rec_il[n_rec] = i_l
        rec_vc[n_rec] = v_c
        rec_duty[n_rec] = duty
        rec_sw[n_rec] = 1 if sw else 0
        rec_vbar[n_rec] = vbar
        n_rec += 1

    return (status, blowup_k,
            rec_k[:n_rec], rec_vout[:n_rec], rec_il[:n_rec], rec_vc[:n_rec],
            rec_duty[:n_rec], rec_sw[:n_rec], rec_vbar[:n_rec],
            iae, vbar_max, last_violation, n_switch)
