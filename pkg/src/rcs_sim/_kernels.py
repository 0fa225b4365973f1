"""Hot numeric kernels for the slot-driven control-loop engine.

Everything here is written in numba-compatible scalar/array style and wrapped
with the package's ``njit`` dispatcher: compiled when numba is enabled,
interpreted (bit-identically) when ``RCS_SIM_NO_NUMBA`` is set. The small
helpers double as the arithmetic core of the public modules so the fused
engine loop and the object-level API cannot drift apart.

Packet queues inside the engine loop are fixed-capacity row matrices
(one float64 row per packet); integer fields ride in float64 columns, which
is exact for the magnitudes involved (ids, slots, sizes < 2**53).
"""

import math

import numpy as np

from ._dispatch import njit
from ._rng import gauss, geometric, uniform

# ---------------------------------------------------------------------------
# scalar helpers shared with the public modules


@njit
def dist3(ax, ay, az, bx, by, bz):
    dx = ax - bx
    dy = ay - by
    dz = az - bz
    return math.sqrt(dx * dx + dy * dy + dz * dz)


@njit
def clamp3(x, y, z, cap):
    """Rescale (x,y,z) to Euclidean norm <= cap, preserving direction.

    Vectors already within the cap pass through unchanged. The trailing
    nudge loop absorbs the few-ulp overshoot rescaling can leave, so the
    returned norm is never above cap.
    """
    n = math.sqrt(x * x + y * y + z * z)
    if n <= cap or n == 0.0:
        return x, y, z
    f = cap / n
    x *= f
    y *= f
    z *= f
    while math.sqrt(x * x + y * y + z * z) > cap:
        x *= 0.9999999999999998
        y *= 0.9999999999999998
        z *= 0.9999999999999998
    return x, y, z


@njit
def classify_status(d, d_s, d_e):
    """Tracking status code: 0 unsafe (d<=d_s), 1 successful (d<=d_e), 2 beyond."""
    if d <= d_s:
        return 0
    if d <= d_e:
        return 1
    return 2


@njit
def risk_band(d, d_s, d_e, d_ref):
    """Proximity of distance d to either edge of the (d_s, d_e] band, in [0,1].

    Zero at the standoff distance d_ref, rising linearly to 1 at d_s on the
    inner side and at d_e on the outer side, saturated beyond. d_ref == d_e
    degenerates the outer ramp to a step.
    """
    if d <= d_ref:
        r = (d_ref - d) / (d_ref - d_s)
    else:
        den = d_e - d_ref
        if den <= 0.0:
            r = 1.0
        else:
            r = (d - d_ref) / den
    if r < 0.0:
        r = 0.0
    if r > 1.0:
        r = 1.0
    return r


@njit
def pow_int(base, n):
    """base**n for small non-negative integer n by repeated multiplication.

    Multiplication keeps the compiled and interpreted paths bit-identical
    (libm pow may not).
    """
    s = 1.0
    for _ in range(n):
        s *= base
    return s


@njit
def sinusoid_pos(sx, sy, sz, dx, dy, dz, amplitude, period, tt):
    """Drifting sinusoid: start + drift*tt, oscillating along y."""
    return (
        sx + dx * tt,
        sy + dy * tt + amplitude * math.sin(6.283185307179586 * tt / period),
        sz + dz * tt,
    )


@njit
def waypoint_pos(points, seg_len, total_len, speed, tt):
    """Position at arc length speed*tt along the closed waypoint loop."""
    n = points.shape[0]
    if n == 1 or total_len <= 0.0 or speed <= 0.0:
        return points[0, 0], points[0, 1], points[0, 2]
    s = (speed * tt) % total_len
    i = 0
    while i < n - 1 and s > seg_len[i]:
        s -= seg_len[i]
        i += 1
    if s > seg_len[i]:
        s = seg_len[i]
    j = i + 1
    if j == n:
        j = 0
    f = s / seg_len[i]
    return (
        points[i, 0] + (points[j, 0] - points[i, 0]) * f,
        points[i, 1] + (points[j, 1] - points[i, 1]) * f,
        points[i, 2] + (points[j, 2] - points[i, 2]) * f,
    )


@njit
def walk_step(vx, vy, vz, damping, stddev, vmax, planar, state):
    """One damped-random-walk velocity update, clamped to vmax.

    Draw order is x, y, z (z drawn even when planar, then zeroed, so the
    stream layout does not depend on the planar flag).
    """
    gx = gauss(state)
    gy = gauss(state)
    gz = gauss(state)
    nvx = damping * vx + stddev * gx
    nvy = damping * vy + stddev * gy
    nvz = damping * vz + stddev * gz
    if planar != 0:
        nvz = 0.0
    return clamp3(nvx, nvy, nvz, vmax)


# ---------------------------------------------------------------------------
# engine loop parameter/column layout

# int parameters
IP_T = 0
IP_N_SENSORS = 1
IP_EXEC = 2  # 0 latest_only, 1 fifo, 2 semce
IP_SENSOR_DISC = 3  # 0 fifo, 1 semantic_priority
IP_TX_KIND = 4  # 0 fixed, 1 semantic_dynamic
IP_TX_BASE = 5
IP_TX_BOOST = 6
IP_SEMCE_MAX_AOI = 7
IP_UP_DELAY_KIND = 8  # 0 deterministic, 1 geometric
IP_UP_DELAY_K = 9
IP_UP_DELAY_CAP = 10
IP_UP_QCAP = 11  # 0 = unbounded
IP_UP_RETRANSMIT = 12
IP_DN_DELAY_KIND = 13
IP_DN_DELAY_K = 14
IP_DN_DELAY_CAP = 15
IP_DN_QCAP = 16
IP_TRAJ_KIND = 17  # 0 waypoint_loop, 1 sinusoid, 2 random_walk
IP_CMD_SIZE_BITS = 18
IP_UP_CAPACITY = 19
IP_DN_CAPACITY = 20
IP_SAFETY_DYNAMIC = 21
IP_TRAJ_PLANAR = 22
IP_COUNT = 23

# float parameters
FP_DT = 0
FP_DS = 1
FP_DE = 2
FP_DREF = 3
FP_KP = 4
FP_KI = 5
FP_KD = 6
FP_VOI_W = 7
FP_GAMMA = 8
FP_TX_RISK_THRESHOLD = 9
FP_UP_LOSS = 10
FP_DN_LOSS = 11
FP_UP_GEO_P = 12
FP_DN_GEO_P = 13
FP_SPEED_LIMIT = 14
FP_SAFETY_BASE_DS = 15
FP_SAFETY_REACTION = 16
FP_TRAJ_AMPLITUDE = 17
FP_TRAJ_PERIOD = 18
FP_TRAJ_DRIFT_X = 19
FP_TRAJ_DRIFT_Y = 20
FP_TRAJ_DRIFT_Z = 21
FP_TRAJ_SPEED = 22
FP_TRAJ_STDDEV = 23
FP_TRAJ_DAMPING = 24
FP_TRAJ_MAX_SPEED = 25
FP_TSTART_X = 26
FP_TSTART_Y = 27
FP_TSTART_Z = 28
FP_USTART_X = 29
FP_USTART_Y = 30
FP_USTART_Z = 31
FP_UVEL_X = 32
FP_UVEL_Y = 33
FP_UVEL_Z = 34
FP_COUNT = 35

# sensor-packet row columns (uplink pending / in-flight / edge backlog)
SC_ID = 0
SC_GEN = 1
SC_SEQ = 2
SC_SIZE = 3
SC_IMP = 4
SC_PX = 5
SC_PY = 6
SC_PZ = 7
SC_VX = 8
SC_VY = 9
SC_VZ = 10
SC_ARR = 11
SC_W = 12

# command-packet row columns (downlink pending / in-flight / robot queue)
CC_ID = 0
CC_GEN = 1
CC_SEQ = 2
CC_SIZE = 3
CC_VOI = 4
CC_CX = 5
CC_CY = 6
CC_CZ = 7
CC_ARR = 8
CC_W = 9

# counters
CN_UP_GENERATED = 0
CN_UP_ENQUEUED = 1
CN_UP_SENT = 2
CN_UP_LOST = 3
CN_UP_DROPPED = 4
CN_UP_DELIVERED = 5
CN_UP_PENDING_END = 6
CN_UP_INFLIGHT_END = 7
CN_DN_GENERATED = 8
CN_DN_ENQUEUED = 9
CN_DN_SENT = 10
CN_DN_LOST = 11
CN_DN_DROPPED = 12
CN_DN_DELIVERED = 13
CN_DN_PENDING_END = 14
CN_DN_INFLIGHT_END = 15
CN_EDGE_INGESTED = 16
CN_EDGE_STALE_DISCARDED = 17
CN_SEMCE_DISCARDED = 18
CN_LATEST_PURGED = 19
CN_EXECUTED = 20
CN_HOLD_SLOTS = 21
CN_ROBOT_QUEUE_END = 22
CN_EDGE_BACKLOG_END = 23
CN_COUNT = 24

ERR_OK = 0
ERR_UPLINK_CONSERVATION = 1
ERR_DOWNLINK_CONSERVATION = 2
ERR_QUEUE_OVERFLOW = 3


@njit
def _sensor_pick(q, n, disc):
    """Index of the next sensor packet to process under the discipline.

    fifo: lowest arrival sequence. semantic_priority: highest importance,
    ties to older generation slot, then lower id.
    """
    best = 0
    if disc == 0:
        for i in range(1, n):
            if q[i, SC_SEQ] < q[best, SC_SEQ]:
                best = i
    else:
        for i in range(1, n):
            if q[i, SC_IMP] > q[best, SC_IMP]:
                best = i
            elif q[i, SC_IMP] == q[best, SC_IMP]:
                if q[i, SC_GEN] < q[best, SC_GEN] or (
                    q[i, SC_GEN] == q[best, SC_GEN] and q[i, SC_ID] < q[best, SC_ID]
                ):
                    best = i
    return best


@njit
def _sensor_drop_victim(q, n, disc):
    """Index of the lowest-priority pending packet (the one dropped on overflow)."""
    worst = 0
    if disc == 0:
        for i in range(1, n):  # fifo drops the newest arrival
            if q[i, SC_SEQ] > q[worst, SC_SEQ]:
                worst = i
    else:
        for i in range(1, n):
            if q[i, SC_IMP] < q[worst, SC_IMP]:
                worst = i
            elif q[i, SC_IMP] == q[worst, SC_IMP]:
                if q[i, SC_GEN] > q[worst, SC_GEN] or (
                    q[i, SC_GEN] == q[worst, SC_GEN] and q[i, SC_ID] > q[worst, SC_ID]
                ):
                    worst = i
    return worst


@njit
def _remove_row(q, n, i):
    """Swap-remove row i from the first n rows; returns the new count."""
    last = n - 1
    if i != last:
        for c in range(q.shape[1]):
            q[i, c] = q[last, c]
    return last


@njit
def run_loop(
    ip,
    fp,
    seeds,
    sensor_freq,
    sensor_size,
    waypoints,
    d_arr,
    status,
    exec_id,
    exec_aoi,
    exec_voi,
    risk_arr,
    dist_ok,
    speed_ok,
    eff_ds_arr,
    uspeed,
    qd_up,
    qd_edge,
    qd_dn,
    qd_robot,
    upos,
    tpos_out,
    counters,
):
    """Run the full closed loop for T slots; returns an ERR_* code.

    Slot order: sensors emit -> uplink transmit/deliver -> edge ingest ->
    tx gate + controller -> downlink transmit/deliver -> execution policy ->
    speed clamp -> kinematics step -> classification/safety/record.
    """
    T = ip[IP_T]
    n_sensors = ip[IP_N_SENSORS]
    exec_policy = ip[IP_EXEC]
    disc = ip[IP_SENSOR_DISC]
    dt = fp[FP_DT]
    d_s = fp[FP_DS]
    d_e = fp[FP_DE]
    d_ref = fp[FP_DREF]
    kp = fp[FP_KP]
    ki = fp[FP_KI]
    kd = fp[FP_KD]
    voi_w = fp[FP_VOI_W]
    gamma = fp[FP_GAMMA]
    speed_limit = fp[FP_SPEED_LIMIT]
    traj_kind = ip[IP_TRAJ_KIND]

    # rng streams: 0 uplink channel, 1 downlink channel, 2 target walk
    st_up = np.zeros(1, np.uint64)
    st_up[0] = seeds[0]
    st_dn = np.zeros(1, np.uint64)
    st_dn[0] = seeds[1]
    st_walk = np.zeros(1, np.uint64)
    st_walk[0] = seeds[2]

    # queue storage; a packet lives in at most one structure, and at most one
    # packet per source per slot is created, so T-scaled caps cannot overflow
    up_rows = n_sensors * T + 8
    cmd_rows = T + 8
    upq = np.empty((up_rows, SC_W), np.float64)
    upq_n = 0
    upfl = np.empty((up_rows, SC_W), np.float64)
    upfl_n = 0
    edgeq = np.empty((up_rows, SC_W), np.float64)
    edgeq_n = 0
    dnq = np.empty((cmd_rows, CC_W), np.float64)
    dnq_n = 0
    dnfl = np.empty((cmd_rows, CC_W), np.float64)
    dnfl_n = 0
    robotq = np.empty((cmd_rows, CC_W), np.float64)
    robotq_n = 0
    deliv = np.empty((up_rows, SC_W), np.float64)  # per-slot scratch

    # waypoint geometry
    n_way = waypoints.shape[0]
    seg_len = np.empty(max(n_way, 1), np.float64)
    total_len = 0.0
    for i in range(n_way):
        j = i + 1
        if j == n_way:
            j = 0
        seg_len[i] = dist3(
            waypoints[i, 0],
            waypoints[i, 1],
            waypoints[i, 2],
            waypoints[j, 0],
            waypoints[j, 1],
            waypoints[j, 2],
        )
        total_len += seg_len[i]

    # sensor emission phase accumulators
    acc = np.zeros(max(n_sensors, 1), np.float64)
    periods = np.empty(max(n_sensors, 1), np.float64)
    for i in range(n_sensors):
        periods[i] = 1.0 / sensor_freq[i]

    # state entering slot 1
    ux = fp[FP_USTART_X]
    uy = fp[FP_USTART_Y]
    uz = fp[FP_USTART_Z]
    uvx = fp[FP_UVEL_X]
    uvy = fp[FP_UVEL_Y]
    uvz = fp[FP_UVEL_Z]
    tx = fp[FP_TSTART_X]
    ty = fp[FP_TSTART_Y]
    tz = fp[FP_TSTART_Z]
    tvx = 0.0
    tvy = 0.0
    tvz = 0.0

    # edge prior: true initial target state, generation slot 0
    est_px = tx
    est_py = ty
    est_pz = tz
    est_vx = 0.0
    est_vy = 0.0
    est_vz = 0.0
    est_gen = 0

    integ_x = 0.0
    integ_y = 0.0
    integ_z = 0.0
    prev_ex = 0.0
    prev_ey = 0.0
    prev_ez = 0.0
    # zero-order hold starts from the configured initial velocity command
    held_x = uvx
    held_y = uvy
    held_z = uvz

    up_seq = 0.0
    edge_seq = 0.0
    dn_seq = 0.0

    up_generated = 0
    up_enq = 0
    up_sent = 0
    up_lost = 0
    up_dropped = 0
    up_delivered = 0
    dn_generated = 0
    dn_enq = 0
    dn_sent = 0
    dn_lost = 0
    dn_dropped = 0
    dn_delivered = 0
    edge_ingested = 0
    edge_stale = 0
    semce_disc = 0
    latest_purged = 0
    executed_cnt = 0
    hold_slots = 0

    for t in range(1, T + 1):
        # (1) sensors sample the state entering this slot and enqueue uplink
        for si in range(n_sensors):
            acc[si] += dt
            if acc[si] + 1e-9 >= periods[si]:
                acc[si] -= periods[si]
                up_generated += 1
                d_now = dist3(ux, uy, uz, tx, ty, tz)
                imp = risk_band(d_now, d_s, d_e, d_ref)
                if upq_n >= up_rows:
                    return ERR_QUEUE_OVERFLOW
                up_seq += 1.0
                upq[upq_n, SC_ID] = float(up_generated)
                upq[upq_n, SC_GEN] = float(t)
                upq[upq_n, SC_SEQ] = up_seq
                upq[upq_n, SC_SIZE] = float(sensor_size[si])
                upq[upq_n, SC_IMP] = imp
                upq[upq_n, SC_PX] = tx
                upq[upq_n, SC_PY] = ty
                upq[upq_n, SC_PZ] = tz
                upq[upq_n, SC_VX] = tvx
                upq[upq_n, SC_VY] = tvy
                upq[upq_n, SC_VZ] = tvz
                upq[upq_n, SC_ARR] = 0.0
                upq_n += 1
                up_enq += 1
                if ip[IP_UP_QCAP] > 0 and upq_n > ip[IP_UP_QCAP]:
                    v = _sensor_drop_victim(upq, upq_n, disc)
                    upq_n = _remove_row(upq, upq_n, v)
                    up_dropped += 1

        # (2) uplink transmit: discipline order, strict capacity prefix
        budget = ip[IP_UP_CAPACITY]
        while upq_n > 0:
            i = _sensor_pick(upq, upq_n, disc)
            size = int(upq[i, SC_SIZE])
            if size > budget:
                break
            budget -= size
            up_sent += 1
            u = uniform(st_up)
            if u < fp[FP_UP_LOSS]:
                up_lost += 1
                if ip[IP_UP_RETRANSMIT] != 0:
                    # lost sensor packet re-enters at the back of the queue
                    up_seq += 1.0
                    sq = up_seq
                    if upq_n >= up_rows:
                        return ERR_QUEUE_OVERFLOW
                    for c in range(SC_W):
                        upq[upq_n, c] = upq[i, c]
                    upq[upq_n, SC_SEQ] = sq
                    upq_n += 1
                    up_enq += 1
                    upq_n = _remove_row(upq, upq_n, i)
                else:
                    upq_n = _remove_row(upq, upq_n, i)
            else:
                if ip[IP_UP_DELAY_KIND] == 0:
                    delay = ip[IP_UP_DELAY_K]
                    if delay < 1:
                        delay = 1
                else:
                    delay = geometric(st_up, fp[FP_UP_GEO_P], ip[IP_UP_DELAY_CAP])
                if upfl_n >= up_rows:
                    return ERR_QUEUE_OVERFLOW
                for c in range(SC_W):
                    upfl[upfl_n, c] = upq[i, c]
                upfl[upfl_n, SC_ARR] = float(t + delay)
                upfl_n += 1
                upq_n = _remove_row(upq, upq_n, i)

        # uplink deliveries ordered by (generated_slot, id) into edge backlog
        nd = 0
        i = 0
        while i < upfl_n:
            if int(upfl[i, SC_ARR]) == t:
                for c in range(SC_W):
                    deliv[nd, c] = upfl[i, c]
                nd += 1
                upfl_n = _remove_row(upfl, upfl_n, i)
            else:
                i += 1
        for a in range(1, nd):  # insertion sort, bunches are small
            b = a
            while b > 0 and (
                deliv[b - 1, SC_GEN] > deliv[b, SC_GEN]
                or (
                    deliv[b - 1, SC_GEN] == deliv[b, SC_GEN]
                    and deliv[b - 1, SC_ID] > deliv[b, SC_ID]
                )
            ):
                for c in range(SC_W):
                    swap = deliv[b - 1, c]
                    deliv[b - 1, c] = deliv[b, c]
                    deliv[b, c] = swap
                b -= 1
        for k in range(nd):
            up_delivered += 1
            if edgeq_n >= up_rows:
                return ERR_QUEUE_OVERFLOW
            edge_seq += 1.0
            for c in range(SC_W):
                edgeq[edgeq_n, c] = deliv[k, c]
            edgeq[edgeq_n, SC_SEQ] = edge_seq
            edgeq_n += 1

        # edge ingest: one packet per slot; estimate only moves forward
        if edgeq_n > 0:
            i = _sensor_pick(edgeq, edgeq_n, disc)
            if int(edgeq[i, SC_GEN]) > est_gen:
                est_px = edgeq[i, SC_PX]
                est_py = edgeq[i, SC_PY]
                est_pz = edgeq[i, SC_PZ]
                est_vx = edgeq[i, SC_VX]
                est_vy = edgeq[i, SC_VY]
                est_vz = edgeq[i, SC_VZ]
                est_gen = int(edgeq[i, SC_GEN])
                edge_ingested += 1
            else:
                edge_stale += 1
            edgeq_n = _remove_row(edgeq, edgeq_n, i)

        # (3) edge-side risk, transmission gate, controller
        stale = float(t - est_gen) * dt
        ex_px = est_px + est_vx * stale
        ex_py = est_py + est_vy * stale
        ex_pz = est_pz + est_vz * stale
        d_est = dist3(ux, uy, uz, ex_px, ex_py, ex_pz)
        risk = risk_band(d_est, d_s, d_e, d_ref)
        if ip[IP_TX_KIND] == 1 and risk >= fp[FP_TX_RISK_THRESHOLD]:
            period = ip[IP_TX_BOOST]
        else:
            period = ip[IP_TX_BASE]
        if t % period == 0:
            offx = ux - ex_px
            offy = uy - ex_py
            offz = uz - ex_pz
            n = math.sqrt(offx * offx + offy * offy + offz * offz)
            if n == 0.0:
                rx = ex_px + d_ref
                ry = ex_py
                rz = ex_pz
            else:
                f = d_ref / n
                rx = ex_px + offx * f
                ry = ex_py + offy * f
                rz = ex_pz + offz * f
            ex_err = rx - ux
            ey_err = ry - uy
            ez_err = rz - uz
            integ_x = integ_x + ex_err * dt
            integ_y = integ_y + ey_err * dt
            integ_z = integ_z + ez_err * dt
            dx_err = (ex_err - prev_ex) / dt
            dy_err = (ey_err - prev_ey) / dt
            dz_err = (ez_err - prev_ez) / dt
            cx = kp * ex_err + ki * integ_x + kd * dx_err
            cy = kp * ey_err + ki * integ_y + kd * dy_err
            cz = kp * ez_err + ki * integ_z + kd * dz_err
            prev_ex = ex_err
            prev_ey = ey_err
            prev_ez = ez_err
            voi = math.sqrt(cx * cx + cy * cy + cz * cz) + voi_w * math.sqrt(
                ex_err * ex_err + ey_err * ey_err + ez_err * ez_err
            )
            dn_generated += 1
            if dnq_n >= cmd_rows:
                return ERR_QUEUE_OVERFLOW
            dn_seq += 1.0
            dnq[dnq_n, CC_ID] = float(dn_generated)
            dnq[dnq_n, CC_GEN] = float(t)
            dnq[dnq_n, CC_SEQ] = dn_seq
            dnq[dnq_n, CC_SIZE] = float(ip[IP_CMD_SIZE_BITS])
            dnq[dnq_n, CC_VOI] = voi
            dnq[dnq_n, CC_CX] = cx
            dnq[dnq_n, CC_CY] = cy
            dnq[dnq_n, CC_CZ] = cz
            dnq[dnq_n, CC_ARR] = 0.0
            dnq_n += 1
            dn_enq += 1
            if ip[IP_DN_QCAP] > 0 and dnq_n > ip[IP_DN_QCAP]:
                # fifo discipline on the command link: drop the newest
                worst = 0
                for i2 in range(1, dnq_n):
                    if dnq[i2, CC_SEQ] > dnq[worst, CC_SEQ]:
                        worst = i2
                dnq_n = _remove_row(dnq, dnq_n, worst)
                dn_dropped += 1

        # (4) downlink transmit, fifo order
        budget = ip[IP_DN_CAPACITY]
        while dnq_n > 0:
            best = 0
            for i2 in range(1, dnq_n):
                if dnq[i2, CC_SEQ] < dnq[best, CC_SEQ]:
                    best = i2
            size = int(dnq[best, CC_SIZE])
            if size > budget:
                break
            budget -= size
            dn_sent += 1
            u = uniform(st_dn)
            if u < fp[FP_DN_LOSS]:
                dn_lost += 1
            else:
                if ip[IP_DN_DELAY_KIND] == 0:
                    delay = ip[IP_DN_DELAY_K]
                    if delay < 1:
                        delay = 1
                else:
                    delay = geometric(st_dn, fp[FP_DN_GEO_P], ip[IP_DN_DELAY_CAP])
                if dnfl_n >= cmd_rows:
                    return ERR_QUEUE_OVERFLOW
                for c in range(CC_W):
                    dnfl[dnfl_n, c] = dnq[best, c]
                dnfl[dnfl_n, CC_ARR] = float(t + delay)
                dnfl_n += 1
            dnq_n = _remove_row(dnq, dnq_n, best)

        # downlink deliveries into the robot queue, ordered by (gen, id)
        nd = 0
        i = 0
        while i < dnfl_n:
            if int(dnfl[i, CC_ARR]) == t:
                for c in range(CC_W):
                    deliv[nd, c] = dnfl[i, c]
                nd += 1
                dnfl_n = _remove_row(dnfl, dnfl_n, i)
            else:
                i += 1
        for a in range(1, nd):
            b = a
            while b > 0 and (
                deliv[b - 1, CC_GEN] > deliv[b, CC_GEN]
                or (
                    deliv[b - 1, CC_GEN] == deliv[b, CC_GEN]
                    and deliv[b - 1, CC_ID] > deliv[b, CC_ID]
                )
            ):
                for c in range(CC_W):
                    swap = deliv[b - 1, c]
                    deliv[b - 1, c] = deliv[b, c]
                    deliv[b, c] = swap
                b -= 1
        for k in range(nd):
            dn_delivered += 1
            if robotq_n >= cmd_rows:
                return ERR_QUEUE_OVERFLOW
            for c in range(CC_W):
                robotq[robotq_n, c] = deliv[k, c]
            robotq_n += 1

        # (5) execution policy
        if exec_policy == 2:
            i = robotq_n - 1
            while i >= 0:
                if t - int(robotq[i, CC_GEN]) > ip[IP_SEMCE_MAX_AOI]:
                    robotq_n = _remove_row(robotq, robotq_n, i)
                    semce_disc += 1
                i -= 1
        exec_id[t - 1] = -1
        exec_aoi[t - 1] = -1
        exec_voi[t - 1] = np.nan
        if robotq_n == 0:
            hold_slots += 1
        else:
            if exec_policy == 0:
                best = 0
                for i2 in range(1, robotq_n):
                    if robotq[i2, CC_GEN] > robotq[best, CC_GEN] or (
                        robotq[i2, CC_GEN] == robotq[best, CC_GEN]
                        and robotq[i2, CC_ID] < robotq[best, CC_ID]
                    ):
                        best = i2
            elif exec_policy == 1:
                best = 0
                for i2 in range(1, robotq_n):
                    if robotq[i2, CC_GEN] < robotq[best, CC_GEN] or (
                        robotq[i2, CC_GEN] == robotq[best, CC_GEN]
                        and robotq[i2, CC_ID] < robotq[best, CC_ID]
                    ):
                        best = i2
            else:
                best = 0
                best_score = robotq[0, CC_VOI] * pow_int(
                    gamma, t - int(robotq[0, CC_GEN])
                )
                for i2 in range(1, robotq_n):
                    sc = robotq[i2, CC_VOI] * pow_int(gamma, t - int(robotq[i2, CC_GEN]))
                    if (
                        sc > best_score
                        or (sc == best_score and robotq[i2, CC_GEN] > robotq[best, CC_GEN])
                        or (
                            sc == best_score
                            and robotq[i2, CC_GEN] == robotq[best, CC_GEN]
                            and robotq[i2, CC_ID] < robotq[best, CC_ID]
                        )
                    ):
                        best = i2
                        best_score = sc
            held_x = robotq[best, CC_CX]
            held_y = robotq[best, CC_CY]
            held_z = robotq[best, CC_CZ]
            exec_id[t - 1] = int(robotq[best, CC_ID])
            exec_aoi[t - 1] = t - int(robotq[best, CC_GEN])
            exec_voi[t - 1] = robotq[best, CC_VOI]
            executed_cnt += 1
            if exec_policy == 0:
                latest_purged += robotq_n - 1
                robotq_n = 0
            else:
                robotq_n = _remove_row(robotq, robotq_n, best)

        # (6) speed clamp, (7) kinematics
        uvx, uvy, uvz = clamp3(held_x, held_y, held_z, speed_limit)
        ux += uvx * dt
        uy += uvy * dt
        uz += uvz * dt
        if traj_kind == 2:
            tvx, tvy, tvz = walk_step(
                tvx,
                tvy,
                tvz,
                fp[FP_TRAJ_DAMPING],
                fp[FP_TRAJ_STDDEV],
                fp[FP_TRAJ_MAX_SPEED],
                ip[IP_TRAJ_PLANAR],
                st_walk,
            )
            tx += tvx * dt
            ty += tvy * dt
            tz += tvz * dt
        else:
            tt = t * dt
            if traj_kind == 1:
                nx, ny, nz = sinusoid_pos(
                    fp[FP_TSTART_X],
                    fp[FP_TSTART_Y],
                    fp[FP_TSTART_Z],
                    fp[FP_TRAJ_DRIFT_X],
                    fp[FP_TRAJ_DRIFT_Y],
                    fp[FP_TRAJ_DRIFT_Z],
                    fp[FP_TRAJ_AMPLITUDE],
                    fp[FP_TRAJ_PERIOD],
                    tt,
                )
            else:
                nx, ny, nz = waypoint_pos(
                    waypoints, seg_len, total_len, fp[FP_TRAJ_SPEED], tt
                )
            tvx = (nx - tx) / dt
            tvy = (ny - ty) / dt
            tvz = (nz - tz) / dt
            tx = nx
            ty = ny
            tz = nz

        # (8) classification, safety verdict, trace
        d = dist3(ux, uy, uz, tx, ty, tz)
        d_arr[t - 1] = d
        status[t - 1] = classify_status(d, d_s, d_e)
        sp = math.sqrt(uvx * uvx + uvy * uvy + uvz * uvz)
        uspeed[t - 1] = sp
        eff = fp[FP_SAFETY_BASE_DS]
        if ip[IP_SAFETY_DYNAMIC] != 0:
            rel = math.sqrt(
                (uvx - tvx) * (uvx - tvx)
                + (uvy - tvy) * (uvy - tvy)
                + (uvz - tvz) * (uvz - tvz)
            )
            eff = eff + rel * fp[FP_SAFETY_REACTION]
        eff_ds_arr[t - 1] = eff
        dist_ok[t - 1] = 1 if d > eff else 0
        speed_ok[t - 1] = 1 if sp <= speed_limit else 0
        risk_arr[t - 1] = risk
        qd_up[t - 1] = upq_n
        qd_edge[t - 1] = edgeq_n
        qd_dn[t - 1] = dnq_n
        qd_robot[t - 1] = robotq_n
        upos[t - 1, 0] = ux
        upos[t - 1, 1] = uy
        upos[t - 1, 2] = uz
        tpos_out[t - 1, 0] = tx
        tpos_out[t - 1, 1] = ty
        tpos_out[t - 1, 2] = tz

        # per-slot conservation audit
        if up_enq != up_sent + up_dropped + upq_n:
            return ERR_UPLINK_CONSERVATION
        if up_sent != up_lost + upfl_n + up_delivered:
            return ERR_UPLINK_CONSERVATION
        if dn_enq != dn_sent + dn_dropped + dnq_n:
            return ERR_DOWNLINK_CONSERVATION
        if dn_sent != dn_lost + dnfl_n + dn_delivered:
            return ERR_DOWNLINK_CONSERVATION

    counters[CN_UP_GENERATED] = up_generated
    counters[CN_UP_ENQUEUED] = up_enq
    counters[CN_UP_SENT] = up_sent
    counters[CN_UP_LOST] = up_lost
    counters[CN_UP_DROPPED] = up_dropped
    counters[CN_UP_DELIVERED] = up_delivered
    counters[CN_UP_PENDING_END] = upq_n
    counters[CN_UP_INFLIGHT_END] = upfl_n
    counters[CN_DN_GENERATED] = dn_generated
    counters[CN_DN_ENQUEUED] = dn_enq
    counters[CN_DN_SENT] = dn_sent
    counters[CN_DN_LOST] = dn_lost
    counters[CN_DN_DROPPED] = dn_dropped
    counters[CN_DN_DELIVERED] = dn_delivered
    counters[CN_DN_PENDING_END] = dnq_n
    counters[CN_DN_INFLIGHT_END] = dnfl_n
    counters[CN_EDGE_INGESTED] = edge_ingested
    counters[CN_EDGE_STALE_DISCARDED] = edge_stale
    counters[CN_SEMCE_DISCARDED] = semce_disc
    counters[CN_LATEST_PURGED] = latest_purged
    counters[CN_EXECUTED] = executed_cnt
    counters[CN_HOLD_SLOTS] = hold_slots
    counters[CN_ROBOT_QUEUE_END] = robotq_n
    counters[CN_EDGE_BACKLOG_END] = edgeq_n
    return ERR_OK
