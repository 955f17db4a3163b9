"""Pure-Python kernels.  Must stay behaviourally identical to ``_ckernels.pyx``."""

import math

import numpy as np

BACKEND = "python"

MODE_EQUAL = 0
MODE_CAPPED = 1
IMPROVE_TOL = 1e-12
NEED_CAP = 2.0


def _need(r, c):
    """Fraction of AP time a user needs, capped so unreachable links stay finite."""
    if c <= 0.0:
        return NEED_CAP
    return min(r / c, NEED_CAP)


def _trap(x, a, b, c, d):
    if x < a or x > d:
        return 0.0
    mu = 1.0
    if b > a:
        mu = min(mu, (x - a) / (b - a))
    if d > c:
        mu = min(mu, (d - x) / (d - c))
    return min(max(mu, 0.0), 1.0)


def fuzzy_score(x, bounds, mf, ante, neg, cons, out_mu, grid):
    n_in = len(bounds)
    xc = [min(max(float(x[k]), bounds[k][0]), bounds[k][1]) for k in range(n_in)]
    levels = [0.0] * len(out_mu)
    for r in range(len(ante)):
        s = 1.0
        for k in range(n_in):
            t = ante[r][k]
            if t < 0:
                continue
            a, b, c, d = mf[k][t]
            mu = _trap(xc[k], a, b, c, d)
            if neg[r][k]:
                mu = 1.0 - mu
            if mu < s:
                s = mu
        if s > levels[cons[r]]:
            levels[cons[r]] = s
    agg = np.minimum(np.asarray(levels)[:, None], out_mu).max(axis=0)
    # cumulative sums run left to right, matching the compiled loop bit for bit
    den = float(np.cumsum(agg)[-1])
    if den == 0.0:
        return 0.5
    return float(np.cumsum(agg * grid)[-1]) / den


def _share_satisfaction(c, r, count, load, mode):
    """Satisfaction of one user on an AP with ``count`` users and demand load ``load``."""
    if c <= 0.0:
        return 0.0
    if mode == MODE_CAPPED and load <= 1.0:
        return 1.0
    return min(c / count / r, 1.0)


def pf_value(labels, C, R, mode):
    n_aps, n_users = C.shape
    counts = [0] * n_aps
    load = [0.0] * n_aps
    for j in range(n_users):
        i = labels[j]
        counts[i] += 1
        load[i] += _need(R[j], C[i, j])
    total = 0.0
    for j in range(n_users):
        i = labels[j]
        s = _share_satisfaction(C[i, j], R[j], counts[i], load[i], mode)
        total += math.log(s) if s > 0 else -math.inf
    return total


def _best_lifi(snr_db, is_wifi):
    n_aps, n_users = snr_db.shape
    lifi = [i for i in range(n_aps) if not is_wifi[i]]
    out = [-1] * n_users
    for j in range(n_users):
        best = -math.inf
        for i in lifi:
            if snr_db[i, j] > best:
                best = snr_db[i, j]
                out[j] = i
    return out


def _wifi_index(is_wifi):
    for i, w in enumerate(is_wifi):
        if w:
            return i
    return -1


def _score_inputs(j, ref, wifi, R, snr_db, load, bounds):
    wifi_snr = snr_db[wifi, j] if wifi >= 0 else bounds[1][0]
    lifi_snr = snr_db[ref, j] if ref >= 0 else bounds[2][0]
    wifi_ava = max(0.0, 1.0 - load[wifi]) if wifi >= 0 else 0.0
    lifi_ava = max(0.0, 1.0 - load[ref]) if ref >= 0 else 0.0
    return (R[j], wifi_snr, lifi_snr, wifi_ava, lifi_ava)


def flopt(C, R, snr_db, is_wifi, bounds, mf, ante, neg, cons, out_mu, grid):
    """Greedy mixed fuzzy/optimisation assignment; returns AP labels."""
    C = np.asarray(C, dtype=float)
    n_aps, n_users = C.shape
    wifi = _wifi_index(is_wifi)
    best_lifi = _best_lifi(snr_db, is_wifi)
    labels = np.full(n_users, -1, dtype=np.int64)
    counts = [0] * n_aps
    load = [0.0] * n_aps
    for _ in range(n_users):
        best_score = -math.inf
        pick_j = pick_i = -1
        for j in range(n_users):
            if labels[j] >= 0:
                continue
            cand, cand_s = -1, -math.inf
            for i in range(n_aps):
                s = min(C[i, j] / (counts[i] + 1) / R[j], 1.0)
                if s > cand_s:  # ties keep the lowest AP index
                    cand, cand_s = i, s
            ref = best_lifi[j] if cand == wifi else cand
            x = _score_inputs(j, ref, wifi, R, snr_db, load, bounds)
            score = fuzzy_score(x, bounds, mf, ante, neg, cons, out_mu, grid)
            if cand != wifi:
                score = 1.0 - score
            if score > best_score:
                best_score, pick_j, pick_i = score, j, cand
        labels[pick_j] = pick_i
        counts[pick_i] += 1
        load[pick_i] += _need(R[pick_j], C[pick_i, pick_j])
    return labels


def fl(C, R, snr_db, is_wifi, threshold, bounds, mf, ante, neg, cons, out_mu, grid):
    """Two-stage fuzzy assignment: admit high scorers to WiFi, rest take their best LiFi AP."""
    C = np.asarray(C, dtype=float)
    n_aps, n_users = C.shape
    wifi = _wifi_index(is_wifi)
    best_lifi = _best_lifi(snr_db, is_wifi)
    load = [0.0] * n_aps
    for j in range(n_users):
        i = best_lifi[j]
        if i >= 0:
            load[i] += _need(R[j], C[i, j])
    labels = np.array(best_lifi, dtype=np.int64)
    if wifi < 0:
        return labels
    if not any(not w for w in is_wifi):
        return np.full(n_users, wifi, dtype=np.int64)
    first = [fuzzy_score(_score_inputs(j, best_lifi[j], wifi, R, snr_db, load, bounds),
                         bounds, mf, ante, neg, cons, out_mu, grid) for j in range(n_users)]
    order = sorted(range(n_users), key=lambda j: (-first[j], j))
    for j in order:
        x = _score_inputs(j, best_lifi[j], wifi, R, snr_db, load, bounds)
        if fuzzy_score(x, bounds, mf, ante, neg, cons, out_mu, grid) < threshold:
            break
        labels[j] = wifi
        load[wifi] += _need(R[j], C[wifi, j])
        i = best_lifi[j]
        if i >= 0:
            load[i] -= _need(R[j], C[i, j])
    return labels


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix_stream(seed):
    state = seed & _MASK64
    while True:
        state = (state + _GOLDEN) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def sweep_orders(seed, n_users, n_sweeps):
    """The player orders ``gt`` uses: a Fisher-Yates shuffle of 0..n-1 per sweep."""
    stream = _splitmix_stream(seed)
    out = []
    for _ in range(n_sweeps):
        order = list(range(n_users))
        for q in range(n_users - 1, 0, -1):
            k = next(stream) % (q + 1)
            order[q], order[k] = order[k], order[q]
        out.append(order)
    return out


def gt(labels, C, R, seed, max_sweeps, use_log, mode):
    """Best-response sweeps; sweep ``s`` visits players in ``sweep_orders(seed, N_u, s + 1)[s]``.

    Returns ``(labels, sweeps, moves, converged)``; ``converged`` means the
    last sweep made no move.
    """
    C = np.asarray(C, dtype=float)
    n_aps, n_users = C.shape
    labels = np.array(labels, dtype=np.int64)
    moves = 0
    stream = _splitmix_stream(seed)
    for sweep in range(max_sweeps):
        order = list(range(n_users))
        for q in range(n_users - 1, 0, -1):
            k = next(stream) % (q + 1)
            order[q], order[k] = order[k], order[q]
        moved = False
        for j in order:
            counts = [0] * n_aps
            load = [0.0] * n_aps
            for k in range(n_users):
                if k == j:
                    continue
                i = labels[k]
                counts[i] += 1
                load[i] += _need(R[k], C[i, k])
            cur = labels[j]
            best_i, best_p = -1, -math.inf
            cur_p = -math.inf
            for i in range(n_aps):
                extra = _need(R[j], C[i, j])
                s = _share_satisfaction(C[i, j], R[j], counts[i] + 1, load[i] + extra, mode)
                if use_log:
                    p = math.log(s) if s > 0 else -math.inf
                else:
                    p = s
                if i == cur:
                    cur_p = p
                if p > best_p:
                    best_i, best_p = i, p
            if best_i != cur and best_p > cur_p + IMPROVE_TOL:
                labels[j] = best_i
                moves += 1
                moved = True
        if not moved:
            return labels, sweep + 1, moves, True
    return labels, max_sweeps, moves, False


def exhaustive(C, R, mode, chunk=1 << 15):
    """All ``n_aps ** n_users`` assignments in lexicographic order.

    Returns the first assignment whose objective is within a relative 1e-12
    of the maximum, together with that maximum.
    """
    C = np.asarray(C, dtype=float)
    R = np.asarray(R, dtype=float)
    n_aps, n_users = C.shape
    total = n_aps ** n_users
    need = np.full(C.shape, NEED_CAP)
    pos = C > 0
    need[pos] = np.minimum(np.broadcast_to(R, C.shape)[pos] / C[pos], NEED_CAP)
    aps = np.arange(n_aps)
    users = np.arange(n_users)
    obj = np.empty(total)
    for start in range(0, total, chunk):
        digits = _digits(start, min(start + chunk, total), n_aps, n_users)
        onehot = digits[:, :, None] == aps
        counts = onehot.sum(axis=1)
        cap = C[digits, users]
        cnt = np.take_along_axis(counts, digits, axis=1)
        if mode == MODE_CAPPED:
            load = np.einsum("kji,ij->ki", onehot, need)
            user_load = np.take_along_axis(load, digits, axis=1)
        o = np.zeros(len(digits))
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(n_users):
                s = np.minimum(cap[:, j] / cnt[:, j] / R[j], 1.0)
                if mode == MODE_CAPPED:
                    s = np.where(user_load[:, j] <= 1.0, 1.0, s)
                s = np.where(cap[:, j] > 0, s, 0.0)
                o += np.log(s)
        obj[start:start + len(digits)] = o
    best = float(obj.max())
    tol = IMPROVE_TOL * max(1.0, abs(best)) if np.isfinite(best) else 0.0
    k = int(np.argmax(obj >= best - tol))
    return _digits(k, k + 1, n_aps, n_users)[0], best


def _digits(lo, hi, base, width):
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((len(idx), width), dtype=np.int64)
    for j in range(width - 1, -1, -1):
        out[:, j] = idx % base
        idx //= base
    return out
