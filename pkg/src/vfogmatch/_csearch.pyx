# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled branch-and-bound kernel; mirrors ``_search.py`` operation for operation."""
import time

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isfinite
from libc.stdlib cimport qsort

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.uint64_t u64

cdef int CHECK_EVERY = 1024
cdef Py_ssize_t MAX_STATES = 1 << 20
cdef i64 INF_RES = (<i64>1) << 62


cdef inline u64 _mix(u64 x) noexcept nogil:
    x += 0x9E3779B97F4A7C15ULL
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef int _cmp_i64_asc(const void* a, const void* b) noexcept nogil:
    cdef i64 x = (<i64*>a)[0]
    cdef i64 y = (<i64*>b)[0]
    return (x > y) - (x < y)


cdef int _cmp_f64_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    return (x < y) - (x > y)


cdef inline double _tol(double value) noexcept nogil:
    if not isfinite(value):
        return 0.0
    return 1e-9 * (fabs(value) if fabs(value) > 1.0 else 1.0)


cdef i64 _pair_fill(i64* fits, Py_ssize_t m, i64 r) noexcept:
    """Largest single item or two-item sum not above r; fits descends, all <= r."""
    cdef i64 best = fits[0] if m > 0 else 0, t
    cdef Py_ssize_t big = 0, low = m - 1
    while big < low:
        t = fits[big] + fits[low]
        if t <= r:
            if t > best:
                best = t
            low -= 1
        else:
            big += 1
    return best


cdef double _relaxed_knapsack(double* profits, i64* demands, Py_ssize_t m, i64 r,
                              double* keys, Py_ssize_t* order) noexcept:
    """Same contract as ``_search.relaxed_knapsack`` without the picks."""
    cdef Py_ssize_t a, b, t, u
    cdef double best = 0.0, value = 0.0, key
    cdef i64 room
    if m >= 3 and demands[m - 1] + demands[m - 2] + demands[m - 3] <= r:
        # insertion sort on (ratio desc, index asc)
        for t in range(m):
            key = profits[t] / <double>demands[t] if demands[t] > 0 else INFINITY
            u = t
            while u > 0 and keys[u - 1] < key:
                keys[u] = keys[u - 1]
                order[u] = order[u - 1]
                u -= 1
            keys[u] = key
            order[u] = t
        room = r
        for u in range(m):
            t = order[u]
            if demands[t] <= room:
                room -= demands[t]
                value += profits[t]
            else:
                value += profits[t] * <double>room / <double>demands[t]
                break
        return value
    for a in range(m):
        if profits[a] > best:
            best = profits[a]
        for b in range(a + 1, m):
            if demands[a] + demands[b] <= r and profits[a] + profits[b] > best:
                best = profits[a] + profits[b]
    return best


cdef class _Search:
    cdef Py_ssize_t n, nv
    cdef i64[::1] demand, rate, child_count, res, current, best, caps, solo_items, owner
    cdef i64[::1] rem_demand, rem_rate, rem_fog_rate, keybuf, kp_demand
    cdef Py_ssize_t[::1] kp_order
    cdef cnp.uint8_t[::1] seen, is_small
    cdef double[::1] cloud_cost, rem_cloud, saving, solos, rem_penalty, kp_profit, kp_key
    cdef double[:, ::1] veh_cost, profit
    cdef cnp.uint8_t[:, ::1] compat
    cdef i64[:, ::1] child_order, tried_class, tried_res, veh_class, min_fit, sum_fit
    # open-addressing table of visited states, keyed by two independent hashes
    cdef u64[::1] tab_h1, tab_h2
    cdef double[::1] tab_val
    cdef cnp.uint8_t[::1] tab_used
    cdef Py_ssize_t tab_mask, tab_count
    cdef i64 fog_res, cloud_rate_res, cloud_mhz_res, nodes, node_limit
    cdef double best_cost, acc, deadline, floor
    cdef bint aborted, done

    def __init__(self, demand, rate, cloud_cost, veh_cost, compat, child_order,
                 child_count, veh_cap, veh_class, fog_rate_cap, cloud_rate_cap,
                 cloud_mhz_cap, incumbent_cost, incumbent, node_limit, deadline, penalty=None,
                 floor=-INFINITY):
        cdef Py_ssize_t i, v, n, nv
        cdef bint any_fit
        self.n = len(demand)
        self.nv = len(veh_cap)
        self.demand = np.ascontiguousarray(demand, dtype=np.int64)
        self.rate = np.ascontiguousarray(rate, dtype=np.int64)
        self.cloud_cost = np.ascontiguousarray(cloud_cost, dtype=np.float64)
        self.veh_cost = np.ascontiguousarray(
            np.asarray(veh_cost, dtype=np.float64).reshape(self.n, self.nv))
        self.compat = np.ascontiguousarray(
            np.asarray(compat, dtype=np.uint8).reshape(self.n, self.nv))
        self.child_order = np.ascontiguousarray(
            np.asarray(child_order, dtype=np.int64).reshape(self.n, -1) if self.n
            else np.zeros((0, self.nv + 1), dtype=np.int64))
        self.child_count = np.ascontiguousarray(child_count, dtype=np.int64)
        self.res = np.array(veh_cap, dtype=np.int64)
        self.veh_class = np.ascontiguousarray(
            np.asarray(veh_class, dtype=np.int64).reshape(self.n, self.nv))
        self.fog_res = fog_rate_cap
        self.cloud_rate_res = cloud_rate_cap
        self.cloud_mhz_res = cloud_mhz_cap
        self.best_cost = incumbent_cost
        self.best = np.array(incumbent, dtype=np.int64)
        self.node_limit = node_limit
        self.deadline = deadline
        self.nodes = 0
        self.aborted = False
        # a known lower bound on the optimum: reaching it ends the search
        self.floor = floor
        self.done = self.best_cost <= self.floor + _tol(self.floor)
        self.current = np.zeros(self.n, dtype=np.int64)
        self.caps = np.zeros(self.nv + 1, dtype=np.int64)
        # (class, residual) pairs already branched on, one row per depth
        self.tried_class = np.zeros((self.n + 1, self.nv + 1), dtype=np.int64)
        self.tried_res = np.zeros((self.n + 1, self.nv + 1), dtype=np.int64)
        self.saving = np.zeros(self.n + 1)
        self.solos = np.zeros(self.n + 1)
        self.solo_items = np.zeros(self.n + 1, dtype=np.int64)
        self.owner = np.zeros(self.nv + 1, dtype=np.int64)
        self.seen = np.zeros(self.nv + 1, dtype=np.uint8)
        self.acc = 0.0
        # suffix aggregates from depth i onward
        n = self.n
        nv = self.nv
        self.rem_cloud = np.zeros(n + 1)
        self.rem_demand = np.zeros(n + 1, dtype=np.int64)
        self.rem_rate = np.zeros(n + 1, dtype=np.int64)
        self.rem_fog_rate = np.zeros(n + 1, dtype=np.int64)
        self.min_fit = np.full((n + 1, nv), INF_RES, dtype=np.int64)
        self.sum_fit = np.zeros((n + 1, nv), dtype=np.int64)
        for i in range(n - 1, -1, -1):
            self.rem_cloud[i] = self.rem_cloud[i + 1] + self.cloud_cost[i]
            self.rem_demand[i] = self.rem_demand[i + 1] + self.demand[i]
            self.rem_rate[i] = self.rem_rate[i + 1] + self.rate[i]
            any_fit = False
            for v in range(nv):
                self.min_fit[i, v] = self.min_fit[i + 1, v]
                self.sum_fit[i, v] = self.sum_fit[i + 1, v]
                if self.compat[i, v]:
                    any_fit = True
                    if self.demand[i] < self.min_fit[i, v]:
                        self.min_fit[i, v] = self.demand[i]
                    self.sum_fit[i, v] += self.demand[i]
            self.rem_fog_rate[i] = self.rem_fog_rate[i + 1] + (self.rate[i] if any_fit else 0)
        self.keybuf = np.zeros(nv + 4, dtype=np.int64)
        # multipliers on "each request placed once": every vehicle may then
        # pick its best items independently at profit saving - penalty
        pen = np.zeros(n) if penalty is None else np.asarray(penalty, dtype=np.float64)
        self.profit = np.zeros((n, nv))
        self.rem_penalty = np.zeros(n + 1)
        for i in range(n - 1, -1, -1):
            self.rem_penalty[i] = self.rem_penalty[i + 1] + pen[i]
            for v in range(nv):
                self.profit[i, v] = self.cloud_cost[i] - self.veh_cost[i, v] - pen[i]
        self.kp_profit = np.zeros(n + 1)
        self.kp_key = np.zeros(n + 1)
        self.kp_demand = np.zeros(n + 1, dtype=np.int64)
        self.kp_order = np.zeros(n + 1, dtype=np.intp)
        self.is_small = np.zeros(n + 1, dtype=np.uint8)
        self._alloc_table(1 << 12)

    cdef void _alloc_table(self, Py_ssize_t size):
        self.tab_h1 = np.zeros(size, dtype=np.uint64)
        self.tab_h2 = np.zeros(size, dtype=np.uint64)
        self.tab_val = np.zeros(size)
        self.tab_used = np.zeros(size, dtype=np.uint8)
        self.tab_mask = size - 1
        self.tab_count = 0

    cdef void _grow(self):
        cdef u64[::1] h1 = self.tab_h1, h2 = self.tab_h2
        cdef double[::1] val = self.tab_val
        cdef cnp.uint8_t[::1] used = self.tab_used
        cdef Py_ssize_t k, slot, old = self.tab_mask + 1
        self._alloc_table(2 * old)
        for k in range(old):
            if used[k]:
                slot = <Py_ssize_t>(h1[k] & <u64>self.tab_mask)
                while self.tab_used[slot]:
                    slot = (slot + 1) & self.tab_mask
                self.tab_used[slot] = 1
                self.tab_h1[slot] = h1[k]
                self.tab_h2[slot] = h2[k]
                self.tab_val[slot] = val[k]
                self.tab_count += 1

    cdef bint visit(self, Py_ssize_t i) noexcept:
        """Record the reduced state at depth i; True if it was reached no dearer before."""
        cdef Py_ssize_t v, t, nv = self.nv, m, slot
        cdef i64 r, x
        cdef u64 h1 = 0x243F6A8885A308D3ULL, h2 = 0x13198A2E03707344ULL
        # residuals reduced to what the remaining requests can still observe,
        # packed as class << 32 | residual and insertion-sorted
        for v in range(nv):
            r = self.res[v]
            if r < self.min_fit[i, v]:
                r = 0
            elif r > self.sum_fit[i, v]:
                r = self.sum_fit[i, v]
            x = (self.veh_class[i, v] << 32) | r
            t = v
            while t > 0 and self.keybuf[t - 1] > x:
                self.keybuf[t] = self.keybuf[t - 1]
                t -= 1
            self.keybuf[t] = x
        self.keybuf[nv] = INF_RES if self.fog_res >= self.rem_fog_rate[i] else self.fog_res
        self.keybuf[nv + 1] = INF_RES if self.cloud_rate_res >= self.rem_rate[i] else self.cloud_rate_res
        self.keybuf[nv + 2] = INF_RES if self.cloud_mhz_res >= self.rem_demand[i] else self.cloud_mhz_res
        self.keybuf[nv + 3] = i
        for t in range(nv + 4):
            h1 = _mix(h1 ^ <u64>self.keybuf[t])
            h2 = _mix(h2 + <u64>self.keybuf[t] * 0xFF51AFD7ED558CCDULL)
        slot = <Py_ssize_t>(h1 & <u64>self.tab_mask)
        while self.tab_used[slot]:
            if self.tab_h1[slot] == h1 and self.tab_h2[slot] == h2:
                if self.tab_val[slot] <= self.acc:
                    return True
                self.tab_val[slot] = self.acc
                return False
            slot = (slot + 1) & self.tab_mask
        if self.tab_count >= MAX_STATES:
            return False
        self.tab_used[slot] = 1
        self.tab_h1[slot] = h1
        self.tab_h2[slot] = h2
        self.tab_val[slot] = self.acc
        self.tab_count += 1
        if 2 * self.tab_count > self.tab_mask + 1:
            self._grow()
        return False

    cdef double bound(self, Py_ssize_t i) noexcept:
        cdef Py_ssize_t n = self.n, nv = self.nv, j, v, t, ncaps = 0, nsolo = 0, nitems = 0, limit
        cdef double total_saving = 0.0, best, s, small_saving = 0.0, density = 0.0
        cdef double solo_sum = 0.0, small, ub, best_ub = -INFINITY, relaxed
        cdef Py_ssize_t m
        cdef i64 d_min = -1, dj, r, fill, cap_total = 0, removed = 0, need
        cdef bint shared
        for j in range(i, n):
            dj = self.demand[j]
            best = INFINITY
            for v in range(nv):
                if self.compat[j, v] and self.res[v] >= dj and self.veh_cost[j, v] < best:
                    best = self.veh_cost[j, v]
            s = self.cloud_cost[j] - best
            if s > 0.0:
                self.saving[j] = s
                total_saving += s
                if d_min < 0 or dj < d_min:
                    d_min = dj
            else:
                self.saving[j] = 0.0
        if d_min < 0:
            return self.acc + self.rem_cloud[i]

        for j in range(i, n):
            s = self.saving[j]
            if s <= 0.0:
                continue
            need = self.demand[j] + d_min
            shared = False
            for v in range(nv):
                if self.compat[j, v] and self.res[v] >= need:
                    shared = True
                    break
            self.is_small[j] = shared
            if shared:
                small_saving += s
                if self.demand[j] > 0:
                    if s / self.demand[j] > density:
                        density = s / self.demand[j]
                else:
                    density = INFINITY
            else:
                # insertion keeps (saving desc, index asc) order
                t = nitems
                while t > 0 and self.saving[self.solo_items[t - 1]] < s:
                    self.solo_items[t] = self.solo_items[t - 1]
                    t -= 1
                self.solo_items[t] = j
                nitems += 1

        # room each vehicle offers the shareable items; below three smallest
        # demands it holds at most a pair, so its best single or pair fill
        # is all it can take
        for v in range(nv):
            r = self.res[v]
            if r < d_min:
                continue
            if r < 3 * d_min:
                m = 0
                for j in range(i, n):
                    if self.saving[j] > 0.0 and self.is_small[j] and self.compat[j, v] and self.demand[j] <= r:
                        self.kp_demand[m] = self.demand[j]
                        m += 1
                r = _pair_fill(&self.kp_demand[0], m, r)
            self.caps[ncaps] = r
            ncaps += 1
        qsort(&self.caps[0], ncaps, sizeof(i64), _cmp_i64_asc)
        for v in range(ncaps):
            cap_total += self.caps[v]

        # solos needing distinct compatible vehicles form a transversal
        # matroid: greedy by saving yields the best t-subset for every t
        for v in range(nv):
            self.owner[v] = -1
        for t in range(nitems):
            j = self.solo_items[t]
            for v in range(nv):
                self.seen[v] = 0
            if self._augment(j):
                self.solos[nsolo] = self.saving[j]
                nsolo += 1

        limit = nsolo if nsolo < ncaps else ncaps
        for t in range(limit + 1):
            if t > 0:
                solo_sum += self.solos[t - 1]
                removed += self.caps[t - 1]
            small = small_saving
            if density < INFINITY:
                ub = density * <double>(cap_total - removed)
                if ub < small:
                    small = ub
            ub = solo_sum + small
            if ub > best_ub:
                best_ub = ub
        if best_ub < total_saving:
            total_saving = best_ub
        relaxed = self.rem_penalty[i]
        for v in range(nv):
            r = self.res[v]
            m = 0
            for j in range(i, n):
                if self.compat[j, v] and self.demand[j] <= r and self.profit[j, v] > 0.0:
                    self.kp_profit[m] = self.profit[j, v]
                    self.kp_demand[m] = self.demand[j]
                    m += 1
            relaxed += _relaxed_knapsack(&self.kp_profit[0], &self.kp_demand[0], m, r,
                                         &self.kp_key[0], &self.kp_order[0])
        if relaxed < total_saving:
            total_saving = relaxed
        return self.acc + self.rem_cloud[i] - total_saving

    cdef bint _augment(self, Py_ssize_t j) noexcept:
        cdef Py_ssize_t v
        cdef i64 dj = self.demand[j]
        for v in range(self.nv):
            if self.compat[j, v] and not self.seen[v] and self.res[v] >= dj:
                self.seen[v] = 1
                if self.owner[v] < 0 or self._augment(self.owner[v]):
                    self.owner[v] = j
                    return True
        return False

    cdef void dfs(self, Py_ssize_t i):
        cdef i64 d, r, rv, tgt
        cdef Py_ssize_t c, k, ntried = 0, nv = self.nv
        cdef double prev
        cdef bint seen
        self.nodes += 1
        if self.nodes % CHECK_EVERY == 0:
            if (self.node_limit and self.nodes >= self.node_limit) or time.monotonic() > self.deadline:
                self.aborted = True
        if self.aborted or self.done:
            return
        if i == self.n:
            if self.acc < self.best_cost - _tol(self.best_cost):
                self.best_cost = self.acc
                self.best[:] = self.current
                self.done = self.best_cost <= self.floor + _tol(self.floor)
            return
        # a state already reached at no higher cost has nothing new below it
        if self.visit(i):
            return
        if self.bound(i) >= self.best_cost - _tol(self.best_cost):
            return
        d = self.demand[i]
        r = self.rate[i]
        for c in range(self.child_count[i]):
            tgt = self.child_order[i, c]
            if tgt == nv:
                if self.cloud_mhz_res < d or self.cloud_rate_res < r:
                    continue
                self.cloud_mhz_res -= d
                self.cloud_rate_res -= r
                prev = self.acc
                self.acc = prev + self.cloud_cost[i]
                self.current[i] = nv
                self.dfs(i + 1)
                self.acc = prev
                self.cloud_mhz_res += d
                self.cloud_rate_res += r
            else:
                rv = self.res[tgt]
                if rv < d or self.fog_res < r:
                    continue
                seen = False
                for k in range(ntried):
                    if self.tried_class[i, k] == self.veh_class[i, tgt] and self.tried_res[i, k] == rv:
                        seen = True
                        break
                if seen:
                    continue
                self.tried_class[i, ntried] = self.veh_class[i, tgt]
                self.tried_res[i, ntried] = rv
                ntried += 1
                self.res[tgt] = rv - d
                self.fog_res -= r
                prev = self.acc
                self.acc = prev + self.veh_cost[i, tgt]
                self.current[i] = tgt
                self.dfs(i + 1)
                self.acc = prev
                self.res[tgt] = rv
                self.fog_res += r
            if self.aborted or self.done:
                return


def search(demand, rate, cloud_cost, veh_cost, compat, child_order, child_count,
           veh_cap, veh_class, fog_rate_cap, cloud_rate_cap, cloud_mhz_cap,
           incumbent_cost, incumbent, node_limit, deadline, penalty=None, floor=-INFINITY):
    """Run the search; returns ``(best_cost, best_targets, nodes, completed)``."""
    cdef _Search s = _Search(demand, rate, cloud_cost, veh_cost, compat, child_order,
                             child_count, veh_cap, veh_class, fog_rate_cap, cloud_rate_cap,
                             cloud_mhz_cap, float(incumbent_cost), incumbent,
                             int(node_limit), float(deadline), penalty, float(floor))
    s.dfs(0)
    return s.best_cost, [int(x) for x in s.best], s.nodes, not s.aborted
