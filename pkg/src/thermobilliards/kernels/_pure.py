"""Pure-Python reference kernels.

Scalar math only inside the loops; the compiled extension in _core.pyx
mirrors this file operation for operation (same tolerances, same random
draw order), so both backends produce identical output for a given stream.
"""

import math

import numpy as np

CORNER_TOL = 1e-9
GRAZING_TOL = 1e-9

KIND_TWO_PLATES = 0
KIND_POLYGON = 1
KIND_DISC_UNION = 2

SHAPE_SEGMENT = 0
SHAPE_ARC = 1
SHAPE_PLATE = 2

TWO_PI = 2.0 * math.pi


class TrajectoryAborted(Exception):
    pass


# ---------------------------------------------------------------------------
# scalar geometry on table arrays

def _normal_at(tbl, comp, pos):
    st = tbl["shape_type"][comp]
    p = tbl["params"][comp]
    if st == SHAPE_SEGMENT:
        return (-p[3], p[2])
    if st == SHAPE_ARC:
        ang = p[3] + pos / p[2]
        return (-math.cos(ang), -math.sin(ang))
    # plate: component 0 faces +z, component 1 faces -z
    return (0.0, 0.0, 1.0) if comp == 0 else (0.0, 0.0, -1.0)


def _point_at(tbl, comp, pos):
    st = tbl["shape_type"][comp]
    p = tbl["params"][comp]
    if st == SHAPE_SEGMENT:
        return (p[0] + pos * p[2], p[1] + pos * p[3])
    ang = p[3] + pos / p[2]
    return (p[0] + p[2] * math.cos(ang), p[1] + p[2] * math.sin(ang))


def _trace2d(tbl, comp, pos, vx, vy):
    """Next boundary hit for the planar tables.

    Returns (comp, pos, flight_length) or raises TrajectoryAborted for
    corner/grazing events (the caller resamples the reflection).
    """
    speed = math.sqrt(vx * vx + vy * vy)
    diam = tbl["diameter"]
    tol_t = CORNER_TOL * diam / speed
    qx, qy = _point_at(tbl, comp, pos)
    n_comp = len(tbl["shape_type"])
    params = tbl["params"]

    if tbl["kind"] == KIND_POLYGON:
        best_t = -1.0
        best_j = -1
        best_s = 0.0
        for j in range(n_comp):
            if j == comp:
                continue
            p = params[j]
            # solve q + t v = p0 + s tvec
            det = vx * (-p[3]) - vy * (-p[2])
            if det == 0.0:
                continue
            rx = p[0] - qx
            ry = p[1] - qy
            t = (rx * (-p[3]) - ry * (-p[2])) / det
            s = (vx * ry - vy * rx) / det
            if t <= tol_t or s < 0.0 or s > p[4]:
                continue
            if best_t < 0.0 or t < best_t:
                best_t, best_j, best_s = t, j, s
        if best_j < 0:
            raise TrajectoryAborted("corner escape")
        p = params[best_j]
        ctol = CORNER_TOL * diam
        if best_s < ctol or best_s > p[4] - ctol:
            raise TrajectoryAborted("corner hit")
        nx, ny = -p[3], p[2]
        if abs(vx * nx + vy * ny) / speed < GRAZING_TOL:
            raise TrajectoryAborted("grazing arrival")
        return best_j, best_s, best_t * speed

    # disc union
    ctol = CORNER_TOL * diam
    best_t = -1.0
    best_j = -1
    best_px = 0.0
    best_py = 0.0
    best_dother = 0.0
    for j in range(2):
        p = params[j]
        po = params[1 - j]
        ox = qx - p[0]
        oy = qy - p[1]
        a = vx * vx + vy * vy
        b = 2.0 * (vx * ox + vy * oy)
        c = ox * ox + oy * oy - p[2] * p[2]
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            continue
        sq = math.sqrt(disc)
        for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
            if t <= tol_t:
                continue
            px = qx + t * vx
            py = qy + t * vy
            ddx = px - po[0]
            ddy = py - po[1]
            dother = math.sqrt(ddx * ddx + ddy * ddy)
            if dother < p[2] - ctol:
                continue  # interior of the other disc
            if best_t < 0.0 or t < best_t:
                best_t, best_j = t, j
                best_px, best_py, best_dother = px, py, dother
    if best_j < 0:
        raise TrajectoryAborted("no boundary hit")
    p = params[best_j]
    if best_dother < p[2] + ctol:
        raise TrajectoryAborted("cusp hit")
    ang = math.atan2(best_py - p[1], best_px - p[0])
    while ang < p[3]:
        ang += TWO_PI
    while ang > p[4] and ang - TWO_PI >= p[3]:
        ang -= TWO_PI
    if ang < p[3] - 1e-9 or ang > p[4] + 1e-9:
        raise TrajectoryAborted("landing outside arc window")
    pos2 = (ang - p[3]) * p[2]
    if pos2 < 0.0:
        pos2 = 0.0
    maxpos = (p[4] - p[3]) * p[2]
    if pos2 > maxpos:
        pos2 = maxpos
    nx = -math.cos(p[3] + pos2 / p[2])
    ny = -math.sin(p[3] + pos2 / p[2])
    if abs(vx * nx + vy * ny) / speed < GRAZING_TOL:
        raise TrajectoryAborted("grazing arrival")
    return best_j, pos2, best_t * speed


# ---------------------------------------------------------------------------
# chain driver

def run_chain(tbl, comp0, pos0, vel0, n_steps, draws, mass=1.0, max_resample=100):
    """Run n_steps collisions of the random billiard chain.

    Returns a dict of per-collision record arrays plus completion metadata.
    """
    kind = tbl["kind"]
    dim = tbl["dim"]
    alpha = tbl["accommodation"]
    temp = tbl["temperature"]

    comp_rec = np.empty(n_steps, dtype=np.int64)
    branch_rec = np.empty(n_steps, dtype=np.uint8)
    pre_e = np.empty(n_steps)
    post_e = np.empty(n_steps)
    speed_rec = np.empty(n_steps)

    resamples = 0
    aborted = False
    steps_done = 0

    if kind == KIND_TWO_PLATES:
        sep = tbl["params"][0][0]
        vx, vy, vz = float(vel0[0]), float(vel0[1]), float(vel0[2])
        comp = comp0
        # initial flight: land on the opposite plate
        comp = 1 - comp
        for k in range(n_steps):
            # arrival at `comp`: normal sign in the plate-1 frame
            nsign = 1.0 if comp == 0 else -1.0
            e_in = 0.5 * mass * (vx * vx + vy * vy + vz * vz)
            ok = False
            for _ in range(max_resample):
                u = draws.uniform()
                if u < alpha[comp]:
                    br = 1
                    sig = math.sqrt(temp[comp] / mass)
                    w = sig * math.sqrt(-2.0 * math.log1p(-draws.uniform()))
                    g1 = draws.normal()
                    g2 = draws.normal()
                    ovx, ovy, ovz = sig * g1, sig * g2, w * nsign
                else:
                    br = 0
                    ovx, ovy, ovz = vx, vy, -vz
                if ovz * nsign > GRAZING_TOL * math.sqrt(
                        ovx * ovx + ovy * ovy + ovz * ovz):
                    ok = True
                    break
                resamples += 1
            if not ok:
                aborted = True
                break
            vx, vy, vz = ovx, ovy, ovz
            comp_rec[k] = comp
            branch_rec[k] = br
            pre_e[k] = e_in
            e_out = 0.5 * mass * (vx * vx + vy * vy + vz * vz)
            post_e[k] = e_out
            speed_rec[k] = math.sqrt(2.0 * e_out / mass)
            steps_done = k + 1
            comp = 1 - comp
    else:
        comp, pos = comp0, pos0
        vx, vy = float(vel0[0]), float(vel0[1])
        try:
            comp, pos, _ = _trace2d(tbl, comp, pos, vx, vy)
        except TrajectoryAborted:
            aborted = True
        if not aborted:
            for k in range(n_steps):
                e_in = 0.5 * mass * (vx * vx + vy * vy)
                p = tbl["params"][comp]
                st = tbl["shape_type"][comp]
                if st == SHAPE_SEGMENT:
                    nx, ny = -p[3], p[2]
                else:
                    ang = p[3] + pos / p[2]
                    nx, ny = -math.cos(ang), -math.sin(ang)
                tx, ty = ny, -nx
                ok = False
                for _ in range(max_resample):
                    u = draws.uniform()
                    if u < alpha[comp]:
                        br = 1
                        sig = math.sqrt(temp[comp] / mass)
                        w = sig * math.sqrt(-2.0 * math.log1p(-draws.uniform()))
                        g1 = draws.normal()
                        ovx = sig * g1 * tx + w * nx
                        ovy = sig * g1 * ty + w * ny
                    else:
                        br = 0
                        dn = 2.0 * (vx * nx + vy * ny)
                        ovx = vx - dn * nx
                        ovy = vy - dn * ny
                    try:
                        ncomp, npos, _ = _trace2d(tbl, comp, pos, ovx, ovy)
                        ok = True
                        break
                    except TrajectoryAborted:
                        resamples += 1
                if not ok:
                    aborted = True
                    break
                comp_rec[k] = comp
                branch_rec[k] = br
                pre_e[k] = e_in
                e_out = 0.5 * mass * (ovx * ovx + ovy * ovy)
                post_e[k] = e_out
                speed_rec[k] = math.sqrt(2.0 * e_out / mass)
                steps_done = k + 1
                comp, pos = ncomp, npos
                vx, vy = ovx, ovy

    return {
        "comp": comp_rec[:steps_done],
        "branch": branch_rec[:steps_done],
        "pre_e": pre_e[:steps_done],
        "post_e": post_e[:steps_done],
        "speed": speed_rec[:steps_done],
        "steps_done": steps_done,
        "aborted": aborted,
        "resamples": resamples,
    }


# ---------------------------------------------------------------------------
# transition-matrix sampling

def knudsen_transitions(tbl, n_samples, draws, max_resample=100):
    """Tally one-flight transitions from area-uniform starts and cosine-law
    directions.  Returns (counts matrix, discarded sample count)."""
    n_comp = len(tbl["shape_type"])
    area = tbl["area"]
    cum = np.cumsum(area)
    total = float(cum[-1])
    counts = np.zeros((n_comp, n_comp), dtype=np.int64)
    discarded = 0
    dim = tbl["dim"]
    kind = tbl["kind"]

    for _ in range(n_samples):
        done = False
        for _ in range(max_resample):
            r = draws.uniform() * total
            comp = 0
            acc = float(area[0])
            while r > acc and comp < n_comp - 1:
                comp += 1
                acc += float(area[comp])
            pos = r - (acc - float(area[comp]))
            if kind == KIND_TWO_PLATES:
                # every flight lands on the opposite plate; consume the
                # direction draws anyway to keep the stream aligned
                draws.uniform()
                draws.uniform()
                counts[comp][1 - comp] += 1
                done = True
                break
            u = draws.uniform()
            theta = math.asin(2.0 * u - 1.0)
            p = tbl["params"][comp]
            if tbl["shape_type"][comp] == SHAPE_SEGMENT:
                nx, ny = -p[3], p[2]
            else:
                ang = p[3] + pos / p[2]
                nx, ny = -math.cos(ang), -math.sin(ang)
            tx, ty = ny, -nx
            st, ct = math.sin(theta), math.cos(theta)
            vx = st * tx + ct * nx
            vy = st * ty + ct * ny
            try:
                ncomp, _, _ = _trace2d(tbl, comp, pos, vx, vy)
            except TrajectoryAborted:
                discarded += 1
                continue
            counts[comp][ncomp] += 1
            done = True
            break
        if not done:
            discarded += 1
    return counts, discarded


# ---------------------------------------------------------------------------
# heat engine

SQRT3 = math.sqrt(3.0)

WALL_HOT = 0
WALL_COLD = 1
WALL_BELT = 2


def _engine_geometry(side):
    """Vertices and wall data for the engine triangle (belt on top).

    Walls: 0 hot (apex to top-left), 1 cold (top-right to apex),
    2 belt (top-left to top-right, positive direction = hot to cold = +x).
    Each wall: (p0x, p0y, tx, ty, length, nx, ny).
    """
    h = side * SQRT3 / 2.0
    ax, ay = 0.0, h          # top-left
    bx, by = side, h         # top-right
    cx, cy = side / 2.0, 0.0  # apex
    walls = [
        (cx, cy, (ax - cx) / side, (ay - cy) / side, side, SQRT3 / 2.0, 0.5),
        (bx, by, (cx - bx) / side, (cy - by) / side, side, -SQRT3 / 2.0, 0.5),
        (ax, ay, 1.0, 0.0, side, 0.0, -1.0),
    ]
    return walls


def _next_wall_hit(walls, px, py, vx, vy, exclude, diam):
    speed = math.sqrt(vx * vx + vy * vy)
    tol_t = CORNER_TOL * diam / speed
    ctol = CORNER_TOL * diam
    best_t = -1.0
    best_j = -1
    best_s = 0.0
    for j in range(3):
        if j == exclude:
            continue
        p0x, p0y, tx, ty, length, nx, ny = walls[j]
        det = vx * (-ty) - vy * (-tx)
        if det == 0.0:
            continue
        rx = p0x - px
        ry = p0y - py
        t = (rx * (-ty) - ry * (-tx)) / det
        s = (vx * ry - vy * rx) / det
        if t <= tol_t or s < 0.0 or s > length:
            continue
        if best_t < 0.0 or t < best_t:
            best_t, best_j, best_s = t, j, s
    if best_j < 0:
        raise TrajectoryAborted("corner escape")
    length = walls[best_j][4]
    if best_s < ctol or best_s > length - ctol:
        raise TrajectoryAborted("corner hit")
    nx, ny = walls[best_j][5], walls[best_j][6]
    if abs(vx * nx + vy * ny) / speed < GRAZING_TOL:
        raise TrajectoryAborted("grazing arrival")
    return best_t, best_j


def engine_run(params, n_collisions, draws, max_resample=100):
    """Event-driven engine simulation.

    params: dict with T_h, T_c, alpha_h, alpha_c, m1, m2, force, side.
    Returns per-collision record arrays; heats/work are accumulated with
    compensated summation so the first-law identity telescopes.
    """
    T_h = params["T_h"]
    T_c = params["T_c"]
    alpha = (params["alpha_h"], params["alpha_c"])
    temp = (T_h, T_c)
    m1 = params["m1"]
    m2 = params["m2"]
    force = params["force"]
    side = params.get("side", 1.0)
    walls = _engine_geometry(side)
    diam = side
    accel = force / m1

    # initial condition: particle at centroid, velocity from the hot-wall
    # Maxwellian (2D local frame of wall 0), belt at rest
    px = side / 2.0
    py = side * SQRT3 / 3.0  # centroid height for apex at y=0, top at y=h
    sig = math.sqrt(T_h / m2)
    w_n = sig * math.sqrt(-2.0 * math.log1p(-draws.uniform()))
    g = draws.normal()
    nx, ny = walls[WALL_HOT][5], walls[WALL_HOT][6]
    tx, ty = ny, -nx
    vx = sig * g * tx + w_n * nx
    vy = sig * g * ty + w_n * ny
    w = 0.0

    t = 0.0
    x_w = 0.0
    q_h = c_qh = 0.0
    q_c = c_qc = 0.0
    work = c_w = 0.0
    e0 = 0.5 * m1 * w * w + 0.5 * m2 * (vx * vx + vy * vy)

    t_rec = np.empty(n_collisions)
    xw_rec = np.empty(n_collisions)
    w_rec = np.empty(n_collisions)
    qh_rec = np.empty(n_collisions)
    qc_rec = np.empty(n_collisions)
    work_rec = np.empty(n_collisions)
    e_rec = np.empty(n_collisions)
    wall_rec = np.empty(n_collisions, dtype=np.int64)

    aborted = False
    steps_done = 0
    resamples = 0

    try:
        tau, wall = _next_wall_hit(walls, px, py, vx, vy, -1, diam)
    except TrajectoryAborted:
        tau, wall = 0.0, -1
        aborted = True

    for k in range(n_collisions):
        if aborted:
            break
        # advance belt and particle over the flight
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

        # reflect at `wall` with look-ahead corner resampling
        ok = False
        for _ in range(max_resample):
            d_qh = d_qc = 0.0
            if wall == WALL_BELT:
                stochastic = False
                nvy = -vy
                nvx = ((m2 - m1) * vx + 2.0 * m1 * w) / (m1 + m2)
                nw = ((m1 - m2) * w + 2.0 * m2 * vx) / (m1 + m2)
            else:
                stochastic = True
                nw = w
                p0x, p0y, wtx, wty, length, nx, ny = walls[wall]
                tx, ty = ny, -nx
                u = draws.uniform()
                if u < alpha[wall]:
                    sig = math.sqrt(temp[wall] / m2)
                    w_n = sig * math.sqrt(-2.0 * math.log1p(-draws.uniform()))
                    g = draws.normal()
                    nvx = sig * g * tx + w_n * nx
                    nvy = sig * g * ty + w_n * ny
                else:
                    dn = 2.0 * (vx * nx + vy * ny)
                    nvx = vx - dn * nx
                    nvy = vy - dn * ny
                de = 0.5 * m2 * (nvx * nvx + nvy * nvy) \
                    - 0.5 * m2 * (vx * vx + vy * vy)
                if wall == WALL_HOT:
                    d_qh = de
                else:
                    d_qc = de
            try:
                tau2, wall2 = _next_wall_hit(walls, px, py, nvx, nvy, wall, diam)
                ok = True
                break
            except TrajectoryAborted:
                resamples += 1
                if not stochastic:
                    break
        if not ok:
            aborted = True
            break

        vx, vy = nvx, nvy
        if wall == WALL_BELT:
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
        tau, wall = tau2, wall2

    return {
        "t": t_rec[:steps_done],
        "x_w": xw_rec[:steps_done],
        "w": w_rec[:steps_done],
        "q_h": qh_rec[:steps_done],
        "q_c": qc_rec[:steps_done],
        "work": work_rec[:steps_done],
        "energy": e_rec[:steps_done],
        "wall": wall_rec[:steps_done],
        "e0": e0,
        "steps_done": steps_done,
        "aborted": aborted,
        "resamples": resamples,
    }
