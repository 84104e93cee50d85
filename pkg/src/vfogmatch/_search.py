"""Pure-Python depth-first branch-and-bound kernel.

Reference implementation of the compiled ``_csearch`` kernel; both take the
same flat arrays and must explore the same tree node for node.

Layout: row ``i`` of every per-request array is the ``i``-th request in
branching order.  Target index ``V`` (the vehicle count) means the cloud.
"""
import math
import time

CHECK_EVERY = 1024
MAX_STATES = 1 << 20
INF_RES = 1 << 62


def relative_tol(value):
    return 1e-9 * max(1.0, abs(value)) if math.isfinite(value) else 0.0


def _pair_fill(fits, r):
    """Largest single item or two-item sum not above r; fits descends, all <= r."""
    best = fits[0] if fits else 0
    big, low = 0, len(fits) - 1
    while big < low:
        t = fits[big] + fits[low]
        if t <= r:
            if t > best:
                best = t
            low -= 1
        else:
            big += 1
    return best


def relaxed_knapsack(profits, demands, r, picks=None):
    """Upper bound on one vehicle's profit from the given items (demands
    descending).  Exact when at most two of them fit together, otherwise the
    fractional greedy value.  ``picks`` collects ``(index, fraction)``."""
    m = len(demands)
    if m >= 3 and demands[m - 1] + demands[m - 2] + demands[m - 3] <= r:
        order = sorted(range(m), key=lambda t: (-(profits[t] / demands[t]) if demands[t] > 0 else -math.inf, t))
        room, value = r, 0.0
        for t in order:
            if demands[t] <= room:
                room -= demands[t]
                value += profits[t]
                if picks is not None:
                    picks.append((t, 1.0))
            else:
                value += profits[t] * room / demands[t]
                if picks is not None:
                    picks.append((t, room / demands[t]))
                break
        return value
    best, pick = 0.0, ()
    for a in range(m):
        if profits[a] > best:
            best, pick = profits[a], (a,)
        for b in range(a + 1, m):
            if demands[a] + demands[b] <= r and profits[a] + profits[b] > best:
                best, pick = profits[a] + profits[b], (a, b)
    if picks is not None:
        picks.extend((t, 1.0) for t in pick)
    return best


class _Search:
    def __init__(self, demand, rate, cloud_cost, veh_cost, compat, child_order,
                 child_count, veh_cap, veh_class, fog_rate_cap, cloud_rate_cap,
                 cloud_mhz_cap, incumbent_cost, incumbent, node_limit, deadline, penalty=None,
                 floor=-math.inf):
        self.n = len(demand)
        self.nv = len(veh_cap)
        self.demand = [int(x) for x in demand]
        self.rate = [int(x) for x in rate]
        self.cloud_cost = [float(x) for x in cloud_cost]
        self.veh_cost = [[float(x) for x in row] for row in veh_cost]
        self.compat = [[bool(x) for x in row] for row in compat]
        self.child_order = [[int(x) for x in row] for row in child_order]
        self.child_count = [int(x) for x in child_count]
        self.res = [int(x) for x in veh_cap]
        self.veh_class = [[int(x) for x in row] for row in veh_class]
        self.fog_res = int(fog_rate_cap)
        self.cloud_rate_res = int(cloud_rate_cap)
        self.cloud_mhz_res = int(cloud_mhz_cap)
        self.best_cost = float(incumbent_cost)
        self.best = [int(x) for x in incumbent]
        self.node_limit = int(node_limit)
        self.deadline = float(deadline)
        self.nodes = 0
        self.aborted = False
        # a known lower bound on the optimum: reaching it ends the search
        self.floor = float(floor)
        self.done = self.best_cost <= self.floor + relative_tol(self.floor)
        self.current = [0] * self.n
        self.acc = 0.0
        # suffix aggregates from depth i onward
        n, nv = self.n, self.nv
        self.rem_cloud = [0.0] * (n + 1)
        self.rem_demand = [0] * (n + 1)
        self.rem_rate = [0] * (n + 1)
        self.rem_fog_rate = [0] * (n + 1)
        self.min_fit = [[INF_RES] * nv for _ in range(n + 1)]
        self.sum_fit = [[0] * nv for _ in range(n + 1)]
        for i in range(n - 1, -1, -1):
            self.rem_cloud[i] = self.rem_cloud[i + 1] + self.cloud_cost[i]
            self.rem_demand[i] = self.rem_demand[i + 1] + self.demand[i]
            self.rem_rate[i] = self.rem_rate[i + 1] + self.rate[i]
            self.rem_fog_rate[i] = self.rem_fog_rate[i + 1] + (self.rate[i] if any(self.compat[i]) else 0)
            for v in range(nv):
                self.min_fit[i][v] = self.min_fit[i + 1][v]
                self.sum_fit[i][v] = self.sum_fit[i + 1][v]
                if self.compat[i][v]:
                    self.min_fit[i][v] = min(self.min_fit[i][v], self.demand[i])
                    self.sum_fit[i][v] += self.demand[i]
        self.visited = {}
        # multipliers on "each request placed once": every vehicle may then
        # pick its best items independently at profit saving - penalty
        if penalty is None:
            penalty = [0.0] * n
        self.penalty = [float(x) for x in penalty]
        self.profit = [[self.cloud_cost[j] - self.veh_cost[j][v] - self.penalty[j] for v in range(nv)]
                       for j in range(n)]
        self.rem_penalty = [0.0] * (n + 1)
        for i in range(n - 1, -1, -1):
            self.rem_penalty[i] = self.rem_penalty[i + 1] + self.penalty[i]

    def state_key(self, i):
        """Residuals reduced to what the remaining requests can still observe."""
        min_fit, sum_fit, cls = self.min_fit[i], self.sum_fit[i], self.veh_class[i]
        pairs = []
        for v in range(self.nv):
            r = self.res[v]
            if r < min_fit[v]:
                r = 0
            elif r > sum_fit[v]:
                r = sum_fit[v]
            pairs.append((cls[v], r))
        pairs.sort()
        key = [i]
        for c, r in pairs:
            key.append(c)
            key.append(r)
        key.append(INF_RES if self.fog_res >= self.rem_fog_rate[i] else self.fog_res)
        key.append(INF_RES if self.cloud_rate_res >= self.rem_rate[i] else self.cloud_rate_res)
        key.append(INF_RES if self.cloud_mhz_res >= self.rem_demand[i] else self.cloud_mhz_res)
        return tuple(key)

    def bound(self, i):
        """Admissible lower bound on any completion of the current prefix."""
        n, nv = self.n, self.nv
        demand, res = self.demand, self.res
        saving = [0.0] * n
        total_saving = 0.0
        d_min = -1
        for j in range(i, n):
            dj = demand[j]
            best = math.inf
            row = self.veh_cost[j]
            comp = self.compat[j]
            for v in range(nv):
                if comp[v] and res[v] >= dj and row[v] < best:
                    best = row[v]
            s = self.cloud_cost[j] - best
            if s > 0.0:
                saving[j] = s
                total_saving += s
                if d_min < 0 or dj < d_min:
                    d_min = dj
        if d_min < 0:
            return self.acc + self.rem_cloud[i]

        # items that cannot share a vehicle with any other remaining item
        solo_items = []
        small = []
        small_saving = 0.0
        density = 0.0
        for j in range(i, n):
            s = saving[j]
            if s <= 0.0:
                continue
            need = demand[j] + d_min
            comp = self.compat[j]
            shared = False
            for v in range(nv):
                if comp[v] and res[v] >= need:
                    shared = True
                    break
            if shared:
                small.append(j)
                small_saving += s
                if demand[j] > 0:
                    if s / demand[j] > density:
                        density = s / demand[j]
                else:
                    density = math.inf
            else:
                solo_items.append(j)

        # room each vehicle offers the shareable items; below three smallest
        # demands it holds at most a pair, so its best single or pair fill
        # is all it can take
        caps = []
        for v in range(nv):
            r = res[v]
            if r < d_min:
                continue
            if r < 3 * d_min:
                r = _pair_fill([demand[j] for j in small if self.compat[j][v] and demand[j] <= r], r)
            caps.append(r)
        caps.sort()
        cap_total = 0
        for r in caps:
            cap_total += r

        # solos needing distinct compatible vehicles form a transversal
        # matroid: greedy by saving yields the best t-subset for every t
        solo_items.sort(key=lambda j: (-saving[j], j))
        owner = [-1] * nv
        solos = []
        for j in solo_items:
            if self._augment(j, owner, [False] * nv):
                solos.append(saving[j])

        limit = min(len(solos), len(caps))
        best_ub = -math.inf
        solo_sum = 0.0
        removed = 0
        for t in range(limit + 1):
            if t > 0:
                solo_sum += solos[t - 1]
                removed += caps[t - 1]
            small = small_saving
            if density < math.inf:
                small = min(small, density * (cap_total - removed))
            ub = solo_sum + small
            if ub > best_ub:
                best_ub = ub
        if best_ub < total_saving:
            total_saving = best_ub
        relaxed = self.rem_penalty[i]
        for v in range(nv):
            r = res[v]
            ps, ds = [], []
            for j in range(i, n):
                if self.compat[j][v] and demand[j] <= r and self.profit[j][v] > 0.0:
                    ps.append(self.profit[j][v])
                    ds.append(demand[j])
            relaxed += relaxed_knapsack(ps, ds, r)
        if relaxed < total_saving:
            total_saving = relaxed
        return self.acc + self.rem_cloud[i] - total_saving

    def _augment(self, j, owner, seen):
        dj = self.demand[j]
        comp = self.compat[j]
        for v in range(self.nv):
            if comp[v] and not seen[v] and self.res[v] >= dj:
                seen[v] = True
                if owner[v] < 0 or self._augment(owner[v], owner, seen):
                    owner[v] = j
                    return True
        return False

    def dfs(self, i):
        self.nodes += 1
        if self.nodes % CHECK_EVERY == 0:
            if (self.node_limit and self.nodes >= self.node_limit) or time.monotonic() > self.deadline:
                self.aborted = True
        if self.aborted or self.done:
            return
        if i == self.n:
            if self.acc < self.best_cost - relative_tol(self.best_cost):
                self.best_cost = self.acc
                self.best = list(self.current)
                self.done = self.best_cost <= self.floor + relative_tol(self.floor)
            return
        # a state already reached at no higher cost has nothing new below it
        key = self.state_key(i)
        seen = self.visited.get(key)
        if seen is not None and seen <= self.acc:
            return
        if seen is not None or len(self.visited) < MAX_STATES:
            self.visited[key] = self.acc
        if self.bound(i) >= self.best_cost - relative_tol(self.best_cost):
            return
        d = self.demand[i]
        r = self.rate[i]
        nv = self.nv
        tried = []
        order = self.child_order[i]
        for c in range(self.child_count[i]):
            tgt = order[c]
            if tgt == nv:
                if self.cloud_mhz_res < d or self.cloud_rate_res < r:
                    continue
                cost = self.cloud_cost[i]
                self.cloud_mhz_res -= d
                self.cloud_rate_res -= r
                prev = self.acc
                self.acc = prev + cost
                self.current[i] = nv
                self.dfs(i + 1)
                self.acc = prev
                self.cloud_mhz_res += d
                self.cloud_rate_res += r
            else:
                rv = self.res[tgt]
                if rv < d or self.fog_res < r:
                    continue
                key = (self.veh_class[i][tgt], rv)
                if key in tried:
                    continue
                tried.append(key)
                cost = self.veh_cost[i][tgt]
                self.res[tgt] = rv - d
                self.fog_res -= r
                prev = self.acc
                self.acc = prev + cost
                self.current[i] = tgt
                self.dfs(i + 1)
                self.acc = prev
                self.res[tgt] = rv
                self.fog_res += r
            if self.aborted or self.done:
                return


def search(demand, rate, cloud_cost, veh_cost, compat, child_order, child_count,
           veh_cap, veh_class, fog_rate_cap, cloud_rate_cap, cloud_mhz_cap,
           incumbent_cost, incumbent, node_limit, deadline, penalty=None, floor=-math.inf):
    """Run the search; returns ``(best_cost, best_targets, nodes, completed)``.

    ``completed`` means the result is proven optimal: the tree was exhausted
    or the incumbent reached ``floor``, a lower bound known to the caller.
    """
    s = _Search(demand, rate, cloud_cost, veh_cost, compat, child_order, child_count,
                veh_cap, veh_class, fog_rate_cap, cloud_rate_cap, cloud_mhz_cap,
                incumbent_cost, incumbent, node_limit, deadline, penalty, floor)
    s.dfs(0)
    return s.best_cost, s.best, s.nodes, not s.aborted


def node_bound(demand, rate, cloud_cost, veh_cost, compat, depth, residual, accumulated,
               penalty=None):
    """Kernel bound at an arbitrary node; exposed for admissibility tests."""
    n = len(demand)
    s = _Search(demand, rate, cloud_cost, veh_cost, compat, [[]] * n, [0] * n,
                residual, [[0] * len(residual)] * n, 0, 0, 0, math.inf, [0] * n, 0, math.inf,
                penalty)
    s.acc = float(accumulated)
    return s.bound(depth)
