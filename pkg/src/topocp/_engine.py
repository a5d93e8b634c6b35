"""Numba kernels for cubical persistence on likelihood grids.

The filtration is the superlevel sweep: pixels enter in descending value
order, ties broken by ascending row-major index. Lower-dimensional cells of
the cubical complex (vertices, edges, faces) enter with the first incident
pixel (their "owner"), faces before cofaces within one pixel insertion.
This refinement of the value filtration keeps boundary-matrix reduction
near-linear on flat regions and pins every critical cell to a pixel.

Pair convention used throughout: a structure visible in the thresholded
mask for gamma in (birth, death] yields the pair (birth, death), so birth
is the value at which the structure disappears or merges (low) and death
the value at which it first appears (high).

Kernels:

* ``uf0_2d`` / ``uf0_3d``      dim-0 pairs, union-find over pixels (8/26-adjacency)
* ``dual_uf_2d`` / ``dual_uf_3d``  top-minus-one dimension via union-find on the
  complement (4/6-adjacency plus a virtual outside node); exact by duality
* ``reduce_d3`` / ``reduce_d2``    3D dim-2 and dim-1 pairs by boundary-matrix
  reduction, cube columns first so positive faces are cleared from the
  face reduction (twist optimization)
"""
from __future__ import annotations

import numpy as np
from numba import njit

INT = np.int64


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _grow_f8(a, used):
    out = np.empty(2 * a.shape[0], np.float64)
    out[:used] = a[:used]
    return out


@njit(cache=True)
def _grow_i8(a, used):
    out = np.empty(2 * a.shape[0], INT)
    out[:used] = a[:used]
    return out


# ---------------------------------------------------------------------------
# dim 0: union-find over pixels in descending-value order, full adjacency.
# Emits (birth, death, birth_pixel, death_pixel); birth_pixel is the merge
# site, death_pixel the component's creating pixel. The single essential
# component is floored at birth 0 with birth_pixel -1.
# ---------------------------------------------------------------------------


@njit(cache=True)
def uf0_2d(f, order_of, pixel_at):
    n0, n1 = f.shape
    n = n0 * n1
    parent = np.arange(n, dtype=INT)
    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0
    ff = f.ravel()
    for r in range(n):
        p = pixel_at[r]
        i = p // n1
        j = p - i * n1
        for di in range(-1, 2):
            ii = i + di
            if ii < 0 or ii >= n0:
                continue
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                jj = j + dj
                if jj < 0 or jj >= n1:
                    continue
                q = ii * n1 + jj
                if order_of[q] >= r:
                    continue
                ra = _find(parent, p)
                rb = _find(parent, q)
                if ra == rb:
                    continue
                if order_of[ra] < order_of[rb]:
                    elder, younger = ra, rb
                else:
                    elder, younger = rb, ra
                if ff[younger] != ff[p]:
                    if m == cap:
                        births = _grow_f8(births, m)
                        deaths = _grow_f8(deaths, m)
                        bcells = _grow_i8(bcells, m)
                        dcells = _grow_i8(dcells, m)
                        cap *= 2
                    births[m] = ff[p]
                    deaths[m] = ff[younger]
                    bcells[m] = p
                    dcells[m] = younger
                    m += 1
                parent[younger] = elder
    return births[:m], deaths[:m], bcells[:m], dcells[:m]


@njit(cache=True)
def uf0_3d(f, order_of, pixel_at):
    n0, n1, n2 = f.shape
    n = n0 * n1 * n2
    s0 = n1 * n2
    parent = np.arange(n, dtype=INT)
    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0
    ff = f.ravel()
    for r in range(n):
        p = pixel_at[r]
        i = p // s0
        rem = p - i * s0
        j = rem // n2
        k = rem - j * n2
        for di in range(-1, 2):
            ii = i + di
            if ii < 0 or ii >= n0:
                continue
            for dj in range(-1, 2):
                jj = j + dj
                if jj < 0 or jj >= n1:
                    continue
                for dk in range(-1, 2):
                    if di == 0 and dj == 0 and dk == 0:
                        continue
                    kk = k + dk
                    if kk < 0 or kk >= n2:
                        continue
                    q = ii * s0 + jj * n2 + kk
                    if order_of[q] >= r:
                        continue
                    ra = _find(parent, p)
                    rb = _find(parent, q)
                    if ra == rb:
                        continue
                    if order_of[ra] < order_of[rb]:
                        elder, younger = ra, rb
                    else:
                        elder, younger = rb, ra
                    if ff[younger] != ff[p]:
                        if m == cap:
                            births = _grow_f8(births, m)
                            deaths = _grow_f8(deaths, m)
                            bcells = _grow_i8(bcells, m)
                            dcells = _grow_i8(dcells, m)
                            cap *= 2
                        births[m] = ff[p]
                        deaths[m] = ff[younger]
                        bcells[m] = p
                        dcells[m] = younger
                        m += 1
                    parent[younger] = elder
    return births[:m], deaths[:m], bcells[:m], dcells[:m]


# ---------------------------------------------------------------------------
# dimension rank-1 (2D holes / 3D cavities): union-find on the complement.
# Pixels enter in ascending-value order (the complement of the superlevel
# set grows as gamma rises), face adjacency, plus one virtual outside node
# that is older than everything. Each complement component that merges into
# an elder one is a hole: born at its minimum value (creator pixel), dead at
# the merge pixel's value (the weakest cell of the enclosure).
# ---------------------------------------------------------------------------


@njit(cache=True)
def dual_uf_2d(f, order2_of, pixel_at2):
    n0, n1 = f.shape
    n = n0 * n1
    out_node = n
    parent = np.arange(n + 1, dtype=INT)
    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0
    ff = f.ravel()
    for r in range(n):
        p = pixel_at2[r]
        i = p // n1
        j = p - i * n1
        for t in range(5):
            if t == 0:
                q = p - n1 if i > 0 else -1
            elif t == 1:
                q = p + n1 if i < n0 - 1 else -1
            elif t == 2:
                q = p - 1 if j > 0 else -1
            elif t == 3:
                q = p + 1 if j < n1 - 1 else -1
            else:
                q = out_node if (i == 0 or i == n0 - 1 or j == 0 or j == n1 - 1) else -1
            if q < 0:
                continue
            if q != out_node and order2_of[q] >= r:
                continue
            ra = _find(parent, p)
            rb = _find(parent, q)
            if ra == rb:
                continue
            age_a = -1 if ra == out_node else order2_of[ra]
            age_b = -1 if rb == out_node else order2_of[rb]
            if age_a < age_b:
                elder, younger = ra, rb
            else:
                elder, younger = rb, ra
            if ff[younger] != ff[p]:
                if m == cap:
                    births = _grow_f8(births, m)
                    deaths = _grow_f8(deaths, m)
                    bcells = _grow_i8(bcells, m)
                    dcells = _grow_i8(dcells, m)
                    cap *= 2
                births[m] = ff[younger]
                deaths[m] = ff[p]
                bcells[m] = younger
                dcells[m] = p
                m += 1
            parent[younger] = elder
    return births[:m], deaths[:m], bcells[:m], dcells[:m]


@njit(cache=True)
def dual_uf_3d(f, order2_of, pixel_at2):
    n0, n1, n2 = f.shape
    n = n0 * n1 * n2
    s0 = n1 * n2
    out_node = n
    parent = np.arange(n + 1, dtype=INT)
    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0
    ff = f.ravel()
    for r in range(n):
        p = pixel_at2[r]
        i = p // s0
        rem = p - i * s0
        j = rem // n2
        k = rem - j * n2
        on_border = (
            i == 0 or i == n0 - 1 or j == 0 or j == n1 - 1 or k == 0 or k == n2 - 1
        )
        for t in range(7):
            if t == 0:
                q = p - s0 if i > 0 else -1
            elif t == 1:
                q = p + s0 if i < n0 - 1 else -1
            elif t == 2:
                q = p - n2 if j > 0 else -1
            elif t == 3:
                q = p + n2 if j < n1 - 1 else -1
            elif t == 4:
                q = p - 1 if k > 0 else -1
            elif t == 5:
                q = p + 1 if k < n2 - 1 else -1
            else:
                q = out_node if on_border else -1
            if q < 0:
                continue
            if q != out_node and order2_of[q] >= r:
                continue
            ra = _find(parent, p)
            rb = _find(parent, q)
            if ra == rb:
                continue
            age_a = -1 if ra == out_node else order2_of[ra]
            age_b = -1 if rb == out_node else order2_of[rb]
            if age_a < age_b:
                elder, younger = ra, rb
            else:
                elder, younger = rb, ra
            if ff[younger] != ff[p]:
                if m == cap:
                    births = _grow_f8(births, m)
                    deaths = _grow_f8(deaths, m)
                    bcells = _grow_i8(bcells, m)
                    dcells = _grow_i8(dcells, m)
                    cap *= 2
                births[m] = ff[younger]
                deaths[m] = ff[p]
                bcells[m] = younger
                dcells[m] = p
                m += 1
            parent[younger] = elder
    return births[:m], deaths[:m], bcells[:m], dcells[:m]


# ---------------------------------------------------------------------------
# 3D boundary-matrix reduction over the bitmap cubical complex.
# Bitmap coordinate (x,y,z) has one slot per vertex/edge/face/cube; odd
# coordinates mark spanning directions (cubes are all-odd). Ranks are the
# per-dimension positions in the global cell order described above.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _xor_desc(a, la, b, lb, out):
    """Symmetric difference of two descending-sorted rank lists."""
    i = 0
    j = 0
    k = 0
    while i < la and j < lb:
        if a[i] == b[j]:
            i += 1
            j += 1
        elif a[i] > b[j]:
            out[k] = a[i]
            i += 1
            k += 1
        else:
            out[k] = b[j]
            j += 1
            k += 1
    while i < la:
        out[k] = a[i]
        i += 1
        k += 1
    while j < lb:
        out[k] = b[j]
        j += 1
        k += 1
    return k


@njit(cache=True)
def _sort6_desc(buf, ln):
    for a in range(1, ln):
        v = buf[a]
        b = a - 1
        while b >= 0 and buf[b] < v:
            buf[b + 1] = buf[b]
            b -= 1
        buf[b + 1] = v


@njit(cache=True)
def reduce_d3(f, pixel_at, cell_rank, face_owner, n_faces):
    """Reduce cube columns; returns positive-face flags and dim-2 pairs."""
    n0, n1, n2 = f.shape
    n = n0 * n1 * n2
    s0 = n1 * n2
    b1 = 2 * n1 + 1
    b2 = 2 * n2 + 1
    ff = f.ravel()

    pivot_owner = np.full(n_faces, -1, INT)
    col_start = np.zeros(n, INT)
    col_len = np.zeros(n, INT)
    pool = np.empty(8 * n + 64, INT)
    pool_used = 0

    buf = np.empty(64, INT)
    tmp = np.empty(64, INT)

    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0

    for t in range(n):
        p = pixel_at[t]
        i = p // s0
        rem = p - i * s0
        j = rem // n2
        k = rem - j * n2
        x = 2 * i + 1
        y = 2 * j + 1
        z = 2 * k + 1
        buf[0] = cell_rank[(x - 1) * b1 * b2 + y * b2 + z]
        buf[1] = cell_rank[(x + 1) * b1 * b2 + y * b2 + z]
        buf[2] = cell_rank[x * b1 * b2 + (y - 1) * b2 + z]
        buf[3] = cell_rank[x * b1 * b2 + (y + 1) * b2 + z]
        buf[4] = cell_rank[x * b1 * b2 + y * b2 + (z - 1)]
        buf[5] = cell_rank[x * b1 * b2 + y * b2 + (z + 1)]
        ln = 6
        _sort6_desc(buf, ln)
        while ln > 0:
            piv = buf[0]
            owner = pivot_owner[piv]
            if owner < 0:
                pivot_owner[piv] = t
                col_start[t] = pool_used
                col_len[t] = ln
                while pool_used + ln > pool.shape[0]:
                    pool = _grow_i8(pool, pool_used)
                pool[pool_used : pool_used + ln] = buf[:ln]
                pool_used += ln
                fo = pixel_at[face_owner[piv]]
                if ff[fo] != ff[p]:
                    if m == cap:
                        births = _grow_f8(births, m)
                        deaths = _grow_f8(deaths, m)
                        bcells = _grow_i8(bcells, m)
                        dcells = _grow_i8(dcells, m)
                        cap *= 2
                    births[m] = ff[p]
                    deaths[m] = ff[fo]
                    bcells[m] = p
                    dcells[m] = fo
                    m += 1
                break
            ostart = col_start[owner]
            olen = col_len[owner]
            need = ln + olen
            if need > tmp.shape[0]:
                tmp = np.empty(2 * need, INT)
            ln = _xor_desc(buf, ln, pool[ostart : ostart + olen], olen, tmp)
            if ln > buf.shape[0]:
                buf = np.empty(2 * ln, INT)
            buf[:ln] = tmp[:ln]
    pos_face = np.zeros(n_faces, np.bool_)
    for fr in range(n_faces):
        if pivot_owner[fr] >= 0:
            pos_face[fr] = True
    return pos_face, births[:m], deaths[:m], bcells[:m], dcells[:m]


@njit(cache=True)
def reduce_d2(f, pixel_at, cell_rank, face_flat, face_owner, edge_owner, pos_face):
    """Reduce face columns (positive faces cleared); returns dim-1 pairs."""
    n0, n1, n2 = f.shape
    s0 = n1 * n2
    b1 = 2 * n1 + 1
    b2 = 2 * n2 + 1
    ff = f.ravel()
    n_faces = face_flat.shape[0]
    n_edges = edge_owner.shape[0]

    pivot_owner = np.full(n_edges, -1, INT)
    col_start = np.zeros(n_faces, INT)
    col_len = np.zeros(n_faces, INT)
    pool = np.empty(6 * n_faces + 64, INT)
    pool_used = 0

    buf = np.empty(64, INT)
    tmp = np.empty(64, INT)

    cap = 256
    births = np.empty(cap, np.float64)
    deaths = np.empty(cap, np.float64)
    bcells = np.empty(cap, INT)
    dcells = np.empty(cap, INT)
    m = 0

    for t in range(n_faces):
        if pos_face[t]:
            continue
        flat = face_flat[t]
        x = flat // (b1 * b2)
        remf = flat - x * b1 * b2
        y = remf // b2
        z = remf - y * b2
        # the two odd coordinates span the face; each boundary edge drops one
        if x % 2 == 0:
            e0 = x * b1 * b2 + (y - 1) * b2 + z
            e1 = x * b1 * b2 + (y + 1) * b2 + z
            e2 = x * b1 * b2 + y * b2 + (z - 1)
            e3 = x * b1 * b2 + y * b2 + (z + 1)
        elif y % 2 == 0:
            e0 = (x - 1) * b1 * b2 + y * b2 + z
            e1 = (x + 1) * b1 * b2 + y * b2 + z
            e2 = x * b1 * b2 + y * b2 + (z - 1)
            e3 = x * b1 * b2 + y * b2 + (z + 1)
        else:
            e0 = (x - 1) * b1 * b2 + y * b2 + z
            e1 = (x + 1) * b1 * b2 + y * b2 + z
            e2 = x * b1 * b2 + (y - 1) * b2 + z
            e3 = x * b1 * b2 + (y + 1) * b2 + z
        buf[0] = cell_rank[e0]
        buf[1] = cell_rank[e1]
        buf[2] = cell_rank[e2]
        buf[3] = cell_rank[e3]
        ln = 4
        _sort6_desc(buf, ln)
        while ln > 0:
            piv = buf[0]
            owner = pivot_owner[piv]
            if owner < 0:
                pivot_owner[piv] = t
                col_start[t] = pool_used
                col_len[t] = ln
                while pool_used + ln > pool.shape[0]:
                    pool = _grow_i8(pool, pool_used)
                pool[pool_used : pool_used + ln] = buf[:ln]
                pool_used += ln
                fo = pixel_at[face_owner[t]]
                eo = pixel_at[edge_owner[piv]]
                if ff[fo] != ff[eo]:
                    if m == cap:
                        births = _grow_f8(births, m)
                        deaths = _grow_f8(deaths, m)
                        bcells = _grow_i8(bcells, m)
                        dcells = _grow_i8(dcells, m)
                        cap *= 2
                    births[m] = ff[fo]
                    deaths[m] = ff[eo]
                    bcells[m] = fo
                    dcells[m] = eo
                    m += 1
                break
            ostart = col_start[owner]
            olen = col_len[owner]
            need = ln + olen
            if need > tmp.shape[0]:
                tmp = np.empty(2 * need, INT)
            ln = _xor_desc(buf, ln, pool[ostart : ostart + olen], olen, tmp)
            if ln > buf.shape[0]:
                buf = np.empty(2 * ln, INT)
            buf[:ln] = tmp[:ln]
    return births[:m], deaths[:m], bcells[:m], dcells[:m]


def superlevel_order(f: np.ndarray):
    """Pixel entry order: descending value, ties by ascending flat index."""
    flat = f.ravel()
    pixel_at = np.argsort(-flat, kind="stable").astype(INT)
    order_of = np.empty(flat.shape[0], INT)
    order_of[pixel_at] = np.arange(flat.shape[0], dtype=INT)
    return order_of, pixel_at


def sublevel_order(f: np.ndarray):
    """Complement entry order: ascending value, ties by ascending flat index."""
    flat = f.ravel()
    pixel_at = np.argsort(flat, kind="stable").astype(INT)
    order_of = np.empty(flat.shape[0], INT)
    order_of[pixel_at] = np.arange(flat.shape[0], dtype=INT)
    return order_of, pixel_at


def build_cells_3d(f: np.ndarray, order_of: np.ndarray):
    """Enumerate edges and faces of the bitmap complex in filtration order.

    Returns (cell_rank, edge_owner, face_owner, face_flat, n_edges, n_faces)
    where cell_rank maps a bitmap flat index to the cell's per-dimension rank
    and the owner arrays give, per rank, the entry order of the owning pixel.
    """
    n0, n1, n2 = f.shape
    b0, b1, b2 = 2 * n0 + 1, 2 * n1 + 1, 2 * n2 + 1
    if b0 * b1 * b2 >= 2**62:
        raise MemoryError("grid too large for the persistence engine")
    big = np.iinfo(INT).max
    R = order_of.reshape(f.shape)
    Rp = np.pad(R, 1, constant_values=big)

    def min_over(slices):
        out = Rp[slices[0]].copy()
        for s in slices[1:]:
            np.minimum(out, Rp[s], out=out)
        return out

    core = slice(1, -1)
    lo = slice(0, -1)
    hi = slice(1, None)

    # edges spanning axis 0 live at (odd, even, even), etc.
    e0_own = min_over(
        [(core, lo, lo), (core, lo, hi), (core, hi, lo), (core, hi, hi)]
    )
    e1_own = min_over(
        [(lo, core, lo), (lo, core, hi), (hi, core, lo), (hi, core, hi)]
    )
    e2_own = min_over(
        [(lo, lo, core), (lo, hi, core), (hi, lo, core), (hi, hi, core)]
    )
    # faces normal to axis 0 span axes 1 and 2: (even, odd, odd), etc.
    f0_own = min_over([(lo, core, core), (hi, core, core)])
    f1_own = min_over([(core, lo, core), (core, hi, core)])
    f2_own = min_over([(core, core, lo), (core, core, hi)])

    def flats(shape, odd_mask):
        idx = np.indices(shape, dtype=INT)
        coords = []
        for ax in range(3):
            c = 2 * idx[ax] + 1 if odd_mask[ax] else 2 * idx[ax]
            coords.append(c)
        return (coords[0] * b1 + coords[1]) * b2 + coords[2]

    e_own = np.concatenate([e0_own.ravel(), e1_own.ravel(), e2_own.ravel()])
    e_flat = np.concatenate(
        [
            flats((n0, n1 + 1, n2 + 1), (True, False, False)).ravel(),
            flats((n0 + 1, n1, n2 + 1), (False, True, False)).ravel(),
            flats((n0 + 1, n1 + 1, n2), (False, False, True)).ravel(),
        ]
    )
    f_own = np.concatenate([f0_own.ravel(), f1_own.ravel(), f2_own.ravel()])
    f_flat = np.concatenate(
        [
            flats((n0 + 1, n1, n2), (False, True, True)).ravel(),
            flats((n0, n1 + 1, n2), (True, False, True)).ravel(),
            flats((n0, n1, n2 + 1), (True, True, False)).ravel(),
        ]
    )

    e_ord = np.lexsort((e_flat, e_own))
    f_ord = np.lexsort((f_flat, f_own))
    edge_owner = e_own[e_ord]
    face_owner = f_own[f_ord]
    face_flat = f_flat[f_ord]

    cell_rank = np.empty(b0 * b1 * b2, INT)
    cell_rank[e_flat[e_ord]] = np.arange(e_ord.shape[0], dtype=INT)
    cell_rank[face_flat] = np.arange(f_ord.shape[0], dtype=INT)
    return cell_rank, edge_owner, face_owner, face_flat, e_own.shape[0], f_own.shape[0]
