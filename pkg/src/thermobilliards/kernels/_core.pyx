# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; a line-for-line port of _pure.py.

Random draws go through the same block-refill protocol (rng.BlockDraws), so
output is bit-identical to the pure backend for a given stream.
"""

from libc.math cimport sqrt, log1p, sin, cos, asin, atan2, fabs, M_PI

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double CORNER_TOL = 1e-9
cdef double GRAZING_TOL = 1e-9
cdef double TWO_PI = 2.0 * M_PI
cdef double SQRT3 = sqrt(3.0)

cdef int KIND_TWO_PLATES = 0
cdef int KIND_POLYGON = 1
cdef int KIND_DISC_UNION = 2

cdef int SHAPE_SEGMENT = 0

DEF BLOCK = 65536

WALL_HOT = 0
WALL_COLD = 1
WALL_BELT = 2


cdef class DrawBuf:
    """Fast view over a rng.BlockDraws object; cursors are synced back."""
    cdef object draws
    cdef object gen
    cdef double[::1] u
    cdef double[::1] n
    cdef Py_ssize_t ui, ni

    def __cinit__(self, draws):
        self.draws = draws
        self.gen = draws.gen
        self.u = draws._u
        self.n = draws._n
        self.ui = draws._ui
        self.ni = draws._ni

    cdef double uniform(self):
        if self.ui == BLOCK:
            arr = self.gen.random(BLOCK)
            self.draws._u = arr
            self.u = arr
            self.ui = 0
        cdef double v = self.u[self.ui]
        self.ui += 1
        return v

    cdef double normal(self):
        if self.ni == BLOCK:
            arr = self.gen.standard_normal(BLOCK)
            self.draws._n = arr
            self.n = arr
            self.ni = 0
        cdef double v = self.n[self.ni]
        self.ni += 1
        return v

    cdef void flush(self):
        self.draws._ui = self.ui
        self.draws._ni = self.ni


cdef struct Hit:
    int ok          # 1 on success, 0 on corner/grazing
    int comp
    double pos
    double length


cdef Hit _trace2d(int kind, cnp.int64_t[::1] shape_type, double[:, ::1] params,
                  double diameter, int comp, double pos,
                  double vx, double vy) nogil:
    cdef Hit h
    h.ok = 0
    h.comp = -1
    h.pos = 0.0
    h.length = 0.0
    cdef double speed = sqrt(vx * vx + vy * vy)
    cdef double tol_t = CORNER_TOL * diameter / speed
    cdef double ctol = CORNER_TOL * diameter
    cdef double qx, qy, ang
    cdef int n_comp = shape_type.shape[0]
    cdef int j, st
    cdef double det, rx, ry, t, s
    cdef double best_t, best_s
    cdef int best_j
    cdef double nx, ny

    # start point
    st = <int>shape_type[comp]
    if st == SHAPE_SEGMENT:
        qx = params[comp, 0] + pos * params[comp, 2]
        qy = params[comp, 1] + pos * params[comp, 3]
    else:
        ang = params[comp, 3] + pos / params[comp, 2]
        qx = params[comp, 0] + params[comp, 2] * cos(ang)
        qy = params[comp, 1] + params[comp, 2] * sin(ang)

    if kind == KIND_POLYGON:
        best_t = -1.0
        best_j = -1
        best_s = 0.0
        for j in range(n_comp):
            if j == comp:
                continue
            det = vx * (-params[j, 3]) - vy * (-params[j, 2])
            if det == 0.0:
                continue
            rx = params[j, 0] - qx
            ry = params[j, 1] - qy
            t = (rx * (-params[j, 3]) - ry * (-params[j, 2])) / det
            s = (vx * ry - vy * rx) / det
            if t <= tol_t or s < 0.0 or s > params[j, 4]:
                continue
            if best_t < 0.0 or t < best_t:
                best_t = t
                best_j = j
                best_s = s
        if best_j < 0:
            return h
        if best_s < ctol or best_s > params[best_j, 4] - ctol:
            return h
        nx = -params[best_j, 3]
        ny = params[best_j, 2]
        if fabs(vx * nx + vy * ny) / speed < GRAZING_TOL:
            return h
        h.ok = 1
        h.comp = best_j
        h.pos = best_s
        h.length = best_t * speed
        return h

    # disc union
    cdef double ox, oy, a, b, c, disc, sq, px, py, dother, ddx, ddy
    cdef double best_px = 0.0, best_py = 0.0, best_dother = 0.0
    cdef double tt
    cdef int i
    best_t = -1.0
    best_j = -1
    for j in range(2):
        ox = qx - params[j, 0]
        oy = qy - params[j, 1]
        a = vx * vx + vy * vy
        b = 2.0 * (vx * ox + vy * oy)
        c = ox * ox + oy * oy - params[j, 2] * params[j, 2]
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            continue
        sq = sqrt(disc)
        for i in range(2):
            if i == 0:
                tt = (-b - sq) / (2.0 * a)
            else:
                tt = (-b + sq) / (2.0 * a)
            if tt <= tol_t:
                continue
            px = qx + tt * vx
            py = qy + tt * vy
            ddx = px - params[1 - j, 0]
            ddy = py - params[1 - j, 1]
            dother = sqrt(ddx * ddx + ddy * ddy)
            if dother < params[j, 2] - ctol:
                continue
            if best_t < 0.0 or tt < best_t:
                best_t = tt
                best_j = j
                best_px = px
                best_py = py
                best_dother = dother
    if best_j < 0:
        return h
    if best_dother < params[best_j, 2] + ctol:
        return h
    ang = atan2(best_py - params[best_j, 1], best_px - params[best_j, 0])
    while ang < params[best_j, 3]:
        ang += TWO_PI
    while ang > params[best_j, 4] and ang - TWO_PI >= params[best_j, 3]:
        ang -= TWO_PI
    if ang < params[best_j, 3] - 1e-9 or ang > params[best_j, 4] + 1e-9:
        return h
    cdef double pos2 = (ang - params[best_j, 3]) * params[best_j, 2]
    if pos2 < 0.0:
        pos2 = 0.0
    cdef double maxpos = (params[best_j, 4] - params[best_j, 3]) * params[best_j, 2]
    if pos2 > maxpos:
        pos2 = maxpos
    nx = -cos(params[best_j, 3] + pos2 / params[best_j, 2])
    ny = -sin(params[best_j, 3] + pos2 / params[best_j, 2])
    if fabs(vx * nx + vy * ny) / speed < GRAZING_TOL:
        return h
    h.ok = 1
    h.comp = best_j
    h.pos = pos2
    h.length = best_t * speed
    return h


def run_chain(tbl, int comp0, double pos0, vel0, Py_ssize_t n_steps, draws,
              double mass=1.0, int max_resample=100):
    cdef int kind = tbl["kind"]
    cdef int dim = tbl["dim"]
    cdef double[::1] alpha = np.ascontiguousarray(tbl["accommodation"])
    cdef double[::1] temp = np.ascontiguousarray(tbl["temperature"])
    cdef cnp.int64_t[::1] shape_type = np.ascontiguousarray(tbl["shape_type"])
    cdef double[:, ::1] params = np.ascontiguousarray(tbl["params"])
    cdef double diameter = tbl["diameter"]

    comp_rec_arr = np.empty(n_steps, dtype=np.int64)
    branch_rec_arr = np.empty(n_steps, dtype=np.uint8)
    pre_e_arr = np.empty(n_steps)
    post_e_arr = np.empty(n_steps)
    speed_rec_arr = np.empty(n_steps)
    cdef cnp.int64_t[::1] comp_rec = comp_rec_arr
    cdef cnp.uint8_t[::1] branch_rec = branch_rec_arr
    cdef double[::1] pre_e = pre_e_arr
    cdef double[::1] post_e = post_e_arr
    cdef double[::1] speed_rec = speed_rec_arr

    cdef DrawBuf buf = DrawBuf(draws)
    cdef Py_ssize_t resamples = 0
    cdef bint aborted = False
    cdef Py_ssize_t steps_done = 0
    cdef Py_ssize_t k
    cdef int attempt, comp, ncomp, br
    cdef bint ok
    cdef double vx, vy, vz, nsign, e_in, e_out, u, sig, w, g1, g2
    cdef double ovx, ovy, ovz, pos, npos, nx, ny, tx, ty, dn, ang
    cdef Hit hit

    if kind == KIND_TWO_PLATES:
        vx = vel0[0]
        vy = vel0[1]
        vz = vel0[2]
        comp = comp0
        comp = 1 - comp
        for k in range(n_steps):
            nsign = 1.0 if comp == 0 else -1.0
            e_in = 0.5 * mass * (vx * vx + vy * vy + vz * vz)
            ok = False
            for attempt in range(max_resample):
                u = buf.uniform()
                if u < alpha[comp]:
                    br = 1
                    sig = sqrt(temp[comp] / mass)
                    w = sig * sqrt(-2.0 * log1p(-buf.uniform()))
                    g1 = buf.normal()
                    g2 = buf.normal()
                    ovx = sig * g1
                    ovy = sig * g2
                    ovz = w * nsign
                else:
                    br = 0
                    ovx = vx
                    ovy = vy
                    ovz = -vz
                if ovz * nsign > GRAZING_TOL * sqrt(
                        ovx * ovx + ovy * ovy + ovz * ovz):
                    ok = True
                    break
                resamples += 1
            if not ok:
                aborted = True
                break
            vx = ovx
            vy = ovy
            vz = ovz
            comp_rec[k] = comp
            branch_rec[k] = br
            pre_e[k] = e_in
            e_out = 0.5 * mass * (vx * vx + vy * vy + vz * vz)
            post_e[k] = e_out
            speed_rec[k] = sqrt(2.0 * e_out / mass)
            steps_done = k + 1
            comp = 1 - comp
    else:
        comp = comp0
        pos = pos0
        vx = vel0[0]
        vy = vel0[1]
        hit = _trace2d(kind, shape_type, params, diameter, comp, pos, vx, vy)
        if not hit.ok:
            aborted = True
        else:
            comp = hit.comp
            pos = hit.pos
            for k in range(n_steps):
                e_in = 0.5 * mass * (vx * vx + vy * vy)
                if <int>shape_type[comp] == SHAPE_SEGMENT:
                    nx = -params[comp, 3]
                    ny = params[comp, 2]
                else:
                    ang = params[comp, 3] + pos / params[comp, 2]
                    nx = -cos(ang)
                    ny = -sin(ang)
                tx = ny
                ty = -nx
                ok = False
                for attempt in range(max_resample):
                    u = buf.uniform()
                    if u < alpha[comp]:
                        br = 1
                        sig = sqrt(temp[comp] / mass)
                        w = sig * sqrt(-2.0 * log1p(-buf.uniform()))
                        g1 = buf.normal()
                        ovx = sig * g1 * tx + w * nx
                        ovy = sig * g1 * ty + w * ny
                    else:
                        br = 0
                        dn = 2.0 * (vx * nx + vy * ny)
                        ovx = vx - dn * nx
                        ovy = vy - dn * ny
                    hit = _trace2d(kind, shape_type, params, diameter,
                                   comp, pos, ovx, ovy)
                    if hit.ok:
                        ok = True
                        break
                    resamples += 1
                if not ok:
                    aborted = True
                    break
                comp_rec[k] = comp
                branch_rec[k] = br
                pre_e[k] = e_in
                e_out = 0.5 * mass * (ovx * ovx + ovy * ovy)
                post_e[k] = e_out
                speed_rec[k] = sqrt(2.0 * e_out / mass)
                steps_done = k + 1
                comp = hit.comp
                pos = hit.pos
                vx = ovx
                vy = ovy

    buf.flush()
    return {
        "comp": comp_rec_arr[:steps_done],
        "branch": branch_rec_arr[:steps_done],
        "pre_e": pre_e_arr[:steps_done],
        "post_e": post_e_arr[:steps_done],
        "speed": speed_rec_arr[:steps_done],
        "steps_done": steps_done,
        "aborted": aborted,
        "resamples": resamples,
    }


def knudsen_transitions(tbl, Py_ssize_t n_samples, draws, int max_resample=100):
    cdef int kind = tbl["kind"]
    cdef int dim = tbl["dim"]
    cdef cnp.int64_t[::1] shape_type = np.ascontiguousarray(tbl["shape_type"])
    cdef double[:, ::1] params = np.ascontiguousarray(tbl["params"])
    cdef double[::1] area = np.ascontiguousarray(tbl["area"])
    cdef double diameter = tbl["diameter"]
    cdef int n_comp = shape_type.shape[0]

    cdef double total = 0.0
    cdef int j
    for j in range(n_comp):
        total += area[j]

    counts_arr = np.zeros((n_comp, n_comp), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] counts = counts_arr
    cdef Py_ssize_t discarded = 0
    cdef DrawBuf buf = DrawBuf(draws)

    cdef Py_ssize_t s_i
    cdef int attempt, comp
    cdef bint done
    cdef double r, acc, pos, u, theta, nx, ny, tx, ty, st, ct, vx, vy, ang
    cdef Hit hit

    for s_i in range(n_samples):
        done = False
        for attempt in range(max_resample):
            r = buf.uniform() * total
            comp = 0
            acc = area[0]
            while r > acc and comp < n_comp - 1:
                comp += 1
                acc += area[comp]
            pos = r - (acc - area[comp])
            if kind == KIND_TWO_PLATES:
                buf.uniform()
                buf.uniform()
                counts[comp, 1 - comp] += 1
                done = True
                break
            u = buf.uniform()
            theta = asin(2.0 * u - 1.0)
            if <int>shape_type[comp] == SHAPE_SEGMENT:
                nx = -params[comp, 3]
                ny = params[comp, 2]
            else:
                ang = params[comp, 3] + pos / params[comp, 2]
                nx = -cos(ang)
                ny = -sin(ang)
            tx = ny
            ty = -nx
            st = sin(theta)
            ct = cos(theta)
            vx = st * tx + ct * nx
            vy = st * ty + ct * ny
            hit = _trace2d(kind, shape_type, params, diameter, comp, pos, vx, vy)
            if not hit.ok:
                discarded += 1
                continue
            counts[comp, hit.comp] += 1
            done = True
            break
        if not done:
            discarded += 1
    buf.flush()
    return counts_arr, discarded


cdef struct WallHit:
    int ok
    double t
    int wall


cdef WallHit _next_wall_hit(double[:, ::1] walls, double px, double py,
                            double vx, double vy, int exclude,
                            double diam) nogil:
    cdef WallHit h
    h.ok = 0
    h.t = 0.0
    h.wall = -1
    cdef double speed = sqrt(vx * vx + vy * vy)
    cdef double tol_t = CORNER_TOL * diam / speed
    cdef double ctol = CORNER_TOL * diam
    cdef double best_t = -1.0, best_s = 0.0
    cdef int best_j = -1
    cdef int j
    cdef double det, rx, ry, t, s, nx, ny
    for j in range(3):
        if j == exclude:
            continue
        det = vx * (-walls[j, 3]) - vy * (-walls[j, 2])
        if det == 0.0:
            continue
        rx = walls[j, 0] - px
        ry = walls[j, 1] - py
        t = (rx * (-walls[j, 3]) - ry * (-walls[j, 2])) / det
        s = (vx * ry - vy * rx) / det
        if t <= tol_t or s < 0.0 or s > walls[j, 4]:
            continue
        if best_t < 0.0 or t < best_t:
            best_t = t
            best_j = j
            best_s = s
    if best_j < 0:
        return h
    if best_s < ctol or best_s > walls[best_j, 4] - ctol:
        return h
    nx = walls[best_j, 5]
    ny = walls[best_j, 6]
    if fabs(vx * nx + vy * ny) / speed < GRAZING_TOL:
        return h
    h.ok = 1
    h.t = best_t
    h.wall = best_j
    return h


def engine_run(params_dict, Py_ssize_t n_collisions, draws, int max_resample=100):
    cdef double T_h = params_dict["T_h"]
    cdef double T_c = params_dict["T_c"]
    cdef double alpha0 = params_dict["alpha_h"]
    cdef double alpha1 = params_dict["alpha_c"]
    cdef double m1 = params_dict["m1"]
    cdef double m2 = params_dict["m2"]
    cdef double force = params_dict["force"]
    cdef double side = params_dict.get("side", 1.0)
    cdef double diam = side
    cdef double accel = force / m1

    cdef double h_y = side * SQRT3 / 2.0
    walls_arr = np.empty((3, 7))
    cdef double[:, ::1] walls = walls_arr
    # hot: apex -> top-left
    walls[0, 0] = side / 2.0
    walls[0, 1] = 0.0
    walls[0, 2] = (0.0 - side / 2.0) / side
    walls[0, 3] = (h_y - 0.0) / side
    walls[0, 4] = side
    walls[0, 5] = SQRT3 / 2.0
    walls[0, 6] = 0.5
    # cold: top-right -> apex
    walls[1, 0] = side
    walls[1, 1] = h_y
    walls[1, 2] = (side / 2.0 - side) / side
    walls[1, 3] = (0.0 - h_y) / side
    walls[1, 4] = side
    walls[1, 5] = -SQRT3 / 2.0
    walls[1, 6] = 0.5
    # belt: top-left -> top-right
    walls[2, 0] = 0.0
    walls[2, 1] = h_y
    walls[2, 2] = 1.0
    walls[2, 3] = 0.0
    walls[2, 4] = side
    walls[2, 5] = 0.0
    walls[2, 6] = -1.0

    cdef DrawBuf buf = DrawBuf(draws)

    cdef double px = side / 2.0
    cdef double py = side * SQRT3 / 3.0
    cdef double sig = sqrt(T_h / m2)
    cdef double w_n = sig * sqrt(-2.0 * log1p(-buf.uniform()))
    cdef double g = buf.normal()
    cdef double nx = walls[0, 5]
    cdef double ny = walls[0, 6]
    cdef double tx = ny
    cdef double ty = -nx
    cdef double vx = sig * g * tx + w_n * nx
    cdef double vy = sig * g * ty + w_n * ny
    cdef double w = 0.0

    cdef double t = 0.0
    cdef double x_w = 0.0
    cdef double q_h = 0.0, c_qh = 0.0
    cdef double q_c = 0.0, c_qc = 0.0
    cdef double work = 0.0, c_w = 0.0
    cdef double e0 = 0.5 * m1 * w * w + 0.5 * m2 * (vx * vx + vy * vy)

    t_rec_arr = np.empty(n_collisions)
    xw_rec_arr = np.empty(n_collisions)
    w_rec_arr = np.empty(n_collisions)
    qh_rec_arr = np.empty(n_collisions)
    qc_rec_arr = np.empty(n_collisions)
    work_rec_arr = np.empty(n_collisions)
    e_rec_arr = np.empty(n_collisions)
    wall_rec_arr = np.empty(n_collisions, dtype=np.int64)
    cdef double[::1] t_rec = t_rec_arr
    cdef double[::1] xw_rec = xw_rec_arr
    cdef double[::1] w_rec = w_rec_arr
    cdef double[::1] qh_rec = qh_rec_arr
    cdef double[::1] qc_rec = qc_rec_arr
    cdef double[::1] work_rec = work_rec_arr
    cdef double[::1] e_rec = e_rec_arr
    cdef cnp.int64_t[::1] wall_rec = wall_rec_arr

    cdef bint aborted = False
    cdef Py_ssize_t steps_done = 0
    cdef Py_ssize_t resamples = 0
    cdef Py_ssize_t k
    cdef int attempt, wall, wall2
    cdef bint ok, stochastic
    cdef double tau, tau2, w_new, dx, d_work, y, tt
    cdef double d_qh, d_qc, nvx, nvy, nw, u, dn, de, alpha_w, temp_w
    cdef WallHit hit

    hit = _next_wall_hit(walls, px, py, vx, vy, -1, diam)
    if not hit.ok:
        tau = 0.0
        wall = -1
        aborted = True
    else:
        tau = hit.t
        wall = hit.wall

    nw = 0.0
    for k in range(n_collisions):
        if aborted:
            break
        w_new = w + accel * tau
        dx = w * tau + 0.5 * accel * tau * tau
        d_work = 0.5 * m1 * w_new * w_new - 0.5 * m1 * w * w
        x_w += dx
        y = d_work - c_w
        tt = work + y
        c_w = (tt - work) - y
        work = tt
        w = w_new
        t += tau
        px += tau * vx
        py += tau * vy

        ok = False
        for attempt in range(max_resample):
            d_qh = 0.0
            d_qc = 0.0
            if wall == 2:
                stochastic = False
                nvy = -vy
                nvx = ((m2 - m1) * vx + 2.0 * m1 * w) / (m1 + m2)
                nw = ((m1 - m2) * w + 2.0 * m2 * vx) / (m1 + m2)
            else:
                stochastic = True
                nw = w
                nx = walls[wall, 5]
                ny = walls[wall, 6]
                tx = ny
                ty = -nx
                alpha_w = alpha0 if wall == 0 else alpha1
                temp_w = T_h if wall == 0 else T_c
                u = buf.uniform()
                if u < alpha_w:
                    sig = sqrt(temp_w / m2)
                    w_n = sig * sqrt(-2.0 * log1p(-buf.uniform()))
                    g = buf.normal()
                    nvx = sig * g * tx + w_n * nx
                    nvy = sig * g * ty + w_n * ny
                else:
                    dn = 2.0 * (vx * nx + vy * ny)
                    nvx = vx - dn * nx
                    nvy = vy - dn * ny
                de = 0.5 * m2 * (nvx * nvx + nvy * nvy) \
                    - 0.5 * m2 * (vx * vx + vy * vy)
                if wall == 0:
                    d_qh = de
                else:
                    d_qc = de
            hit = _next_wall_hit(walls, px, py, nvx, nvy, wall, diam)
            if hit.ok:
                ok = True
                break
            resamples += 1
            if not stochastic:
                break
        if not ok:
            aborted = True
            break

        vx = nvx
        vy = nvy
        if wall == 2:
            w = nw
        y = d_qh - c_qh
        tt = q_h + y
        c_qh = (tt - q_h) - y
        q_h = tt
        y = d_qc - c_qc
        tt = q_c + y
        c_qc = (tt - q_c) - y
        q_c = tt

        t_rec[k] = t
        xw_rec[k] = x_w
        w_rec[k] = w
        qh_rec[k] = q_h
        qc_rec[k] = q_c
        work_rec[k] = work
        e_rec[k] = 0.5 * m1 * w * w + 0.5 * m2 * (vx * vx + vy * vy)
        wall_rec[k] = wall
        steps_done = k + 1
        tau = hit.t
        wall = hit.wall

    buf.flush()
    return {
        "t": t_rec_arr[:steps_done],
        "x_w": xw_rec_arr[:steps_done],
        "w": w_rec_arr[:steps_done],
        "q_h": qh_rec_arr[:steps_done],
        "q_c": qc_rec_arr[:steps_done],
        "work": work_rec_arr[:steps_done],
        "energy": e_rec_arr[:steps_done],
        "wall": wall_rec_arr[:steps_done],
        "e0": e0,
        "steps_done": steps_done,
        "aborted": aborted,
        "resamples": resamples,
    }
