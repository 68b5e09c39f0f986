"""Compiled inner loop for trajectory simulation.

One call advances a walk by a bounded number of steps.  The caller
guarantees the threshold and counting arrays cover every state reachable
within the chunk (current position + chunk length), so the loop runs with
no bounds checks or allocation.  All detector state lives in a small int64
scalar array so a chunked run folds exactly like a single pass.

Import is deliberately lazy at the package level: compiling costs a few
seconds on first use and pure analysis paths never pay it.
"""

import numpy as np
from numba import njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

# scalar-fold slots
S_LAST_NONRIGHT = 0
S_LAST_SELF = 1
S_LAST_LEFT = 2
S_RETURNS = 3
S_LAST_RETURN = 4
S_LEFT = 5
S_SELF = 6
S_RIGHT = 7
S_LEFT_POST = 8
S_SELF_POST = 9
S_RIGHT_POST = 10
S_PAR_EVEN = 11
S_PAR_ODD = 12
S_MAX_STATE = 13
N_SCALARS = 14


@njit(cache=True, nogil=True)
def run_chunk(pos, state, t, n_steps, burn_in, x0, thr_q, thr_qr, occ, res, m, ring, scal):
    """Advance n_steps transitions; returns (pos, state, t).

    thr_q[i] = q_i and thr_qr[i] = q_i + r_i; a uniform draw u moves left
    when u < thr_q[i], stays when u < thr_qr[i], else moves right.
    Post-burn-in counters use the departure index for moves and the arrival
    index for visits.
    """
    w = ring.shape[0]
    last_nonright = scal[S_LAST_NONRIGHT]
    last_self = scal[S_LAST_SELF]
    last_left = scal[S_LAST_LEFT]
    returns = scal[S_RETURNS]
    last_return = scal[S_LAST_RETURN]
    n_left = scal[S_LEFT]
    n_self = scal[S_SELF]
    n_right = scal[S_RIGHT]
    n_left_post = scal[S_LEFT_POST]
    n_self_post = scal[S_SELF_POST]
    n_right_post = scal[S_RIGHT_POST]
    par_even = scal[S_PAR_EVEN]
    par_odd = scal[S_PAR_ODD]
    max_state = scal[S_MAX_STATE]

    for _ in range(n_steps):
        state = state + _GOLDEN
        z = state
        z = (z ^ (z >> uint64(30))) * _MIX1
        z = (z ^ (z >> uint64(27))) * _MIX2
        z = z ^ (z >> uint64(31))
        u = np.float64(z >> uint64(11)) * _INV53

        i = pos
        if u < thr_q[i]:
            pos = i - 1
            last_nonright = t
            last_left = t
            n_left += 1
            if t >= burn_in:
                n_left_post += 1
        elif u < thr_qr[i]:
            last_nonright = t
            last_self = t
            n_self += 1
            if t >= burn_in:
                n_self_post += 1
        else:
            pos = i + 1
            n_right += 1
            if t >= burn_in:
                n_right_post += 1
        t += 1
        if t >= burn_in:
            occ[pos] += 1
            res[pos, t % m] += 1
            if t % 2 == 0:
                if pos % 2 == 0:
                    par_even = 1
                else:
                    par_odd = 1
        if pos == x0:
            returns += 1
            last_return = t
        if pos > max_state:
            max_state = pos
        ring[t % w] = pos

    scal[S_LAST_NONRIGHT] = last_nonright
    scal[S_LAST_SELF] = last_self
    scal[S_LAST_LEFT] = last_left
    scal[S_RETURNS] = returns
    scal[S_LAST_RETURN] = last_return
    scal[S_LEFT] = n_left
    scal[S_SELF] = n_self
    scal[S_RIGHT] = n_right
    scal[S_LEFT_POST] = n_left_post
    scal[S_SELF_POST] = n_self_post
    scal[S_RIGHT_POST] = n_right_post
    scal[S_PAR_EVEN] = par_even
    scal[S_PAR_ODD] = par_odd
    scal[S_MAX_STATE] = max_state
    return pos, state, t
