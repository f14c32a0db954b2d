# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled round engine and solver kernels.

Floating-point work follows the pure-Python modules operation by operation
(build with -ffp-contract=off), and random draws are taken from the same
numpy bit generators, so both backends produce identical reports.
"""

from libc.stdint cimport int64_t
from libc.math cimport fabs
from libcpp.vector cimport vector
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

import numpy as np

cdef double INF = float("inf")
cdef double SINGLE_ARRIVAL_EPS = 1e-9
cdef int64_t GUIDE_MIN_DRAWS = 16
cdef double FEAS_SLACK = 1e-12
cdef double RENORM_TOL = 1e-12
cdef double RENORM_MAX = 1e-9

cdef enum:
    P_SCD = 0
    P_SCDQ = 1
    P_JSQ = 2
    P_SED = 3
    P_JSQD = 4
    P_HJSQD = 5
    P_JIQ = 6
    P_HJIQ = 7
    P_LSQ = 8
    P_HLSQ = 9
    P_WR = 10
    P_TWF = 11

POLICY_CODES = {
    "scd": P_SCD, "scd-quadratic": P_SCDQ, "jsq": P_JSQ, "sed": P_SED,
    "jsq2": P_JSQD, "hjsq2": P_HJSQD, "jiq": P_JIQ, "hjiq": P_HJIQ,
    "lsq": P_LSQ, "hlsq": P_HLSQ, "wr": P_WR, "twf": P_TWF,
}


cdef inline double next_double(bitgen_t* rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef bitgen_t* bitgen_of(object generator) except NULL:
    capsule = generator.bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline int64_t now_ns() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return <int64_t> ts.tv_sec * 1000000000 + ts.tv_nsec


cdef inline int uniform_index(bitgen_t* rng, int k) noexcept nogil:
    cdef int i = <int> (next_double(rng) * k)
    if i >= k:
        i = k - 1
    return i


cdef inline int weighted_index(bitgen_t* rng, const double* cum, int n) noexcept nogil:
    # first i with cum[i] > u
    cdef double u = next_double(rng) * cum[n - 1]
    cdef int lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo >= n:
        lo = n - 1
    return lo


cdef void build_guide(const double* cum, int n, int* guide, int g) noexcept nogil:
    # guide[k] approximates the first i with cum[i] > k * total / g
    cdef double total = cum[n - 1]
    cdef int k, i = 0
    for k in range(g):
        while i < n - 1 and cum[i] <= k * (total / g):
            i += 1
        guide[k] = i


cdef inline int guided_index(bitgen_t* rng, const double* cum, int n, const int* guide, int g) noexcept nogil:
    # same result as weighted_index; the table only picks the starting point
    cdef double total = cum[n - 1]
    cdef double u = next_double(rng) * total
    cdef int k = <int> (u / (total / g))
    cdef int i
    if k < 0:
        k = 0
    elif k >= g:
        k = g - 1
    i = guide[k]
    while i > 0 and cum[i - 1] > u:
        i -= 1
    while i < n and cum[i] <= u:
        i += 1
    if i >= n:
        i = n - 1
    return i


cdef extern from *:
    """
    #include <cstdint>
    #include <cstring>
    #include <vector>

    struct RadixScratch {
        std::vector<uint64_t> k0, k1;
        std::vector<int> i0, i1;
    };

    // Stable LSD radix argsort on the IEEE bit patterns of the keys. The
    // transform maps doubles to unsigned integers with the same order, so
    // the result equals a stable comparison sort (ties by index) in O(n).
    static void radix_argsort(const double* key, int n, RadixScratch& b, int* order) {
        b.k0.resize(n); b.k1.resize(n); b.i0.resize(n); b.i1.resize(n);
        uint64_t* ka = b.k0.data(); uint64_t* kb = b.k1.data();
        int* ia = b.i0.data(); int* ib = b.i1.data();
        uint64_t all_or = 0, all_and = ~(uint64_t)0;
        for (int s = 0; s < n; ++s) {
            double x = key[s] == 0.0 ? 0.0 : key[s];
            uint64_t u;
            std::memcpy(&u, &x, sizeof u);
            u = (u >> 63) ? ~u : (u | ((uint64_t)1 << 63));
            ka[s] = u; ia[s] = s;
            all_or |= u; all_and &= u;
        }
        // wide digits mean fewer passes for large n; narrow ones keep the
        // count table cheap to clear for small n
        const int bits = n >= 1024 ? 11 : 8;
        const uint64_t mask = ((uint64_t)1 << bits) - 1;
        size_t count[1 << 11];
        for (int shift = 0; shift < 64; shift += bits) {
            if ((((all_or ^ all_and) >> shift) & mask) == 0) continue;
            std::memset(count, 0, sizeof(size_t) * (mask + 1));
            for (int s = 0; s < n; ++s) ++count[(ka[s] >> shift) & mask];
            size_t pos = 0;
            for (uint64_t d = 0; d <= mask; ++d) { size_t c = count[d]; count[d] = pos; pos += c; }
            for (int s = 0; s < n; ++s) {
                size_t dst = count[(ka[s] >> shift) & mask]++;
                kb[dst] = ka[s]; ib[dst] = ia[s];
            }
            uint64_t* kt = ka; ka = kb; kb = kt;
            int* it = ia; ia = ib; ib = it;
        }
        std::memcpy(order, ia, sizeof(int) * (size_t)n);
    }
    """
    cppclass RadixScratch:
        pass
    void radix_argsort(const double* key, int n, RadixScratch& buf, int* order) noexcept nogil


cdef inline void sort_order(const double* key, int n, RadixScratch& buf, int* order) noexcept nogil:
    radix_argsort(key, n, buf, order)


cdef double ideal_workload_c(const double* q, const double* mu, const int* order, int n, double a) noexcept nogil:
    cdef double filled = a
    cdef int r = order[0]
    cdef double iwl = q[r] / mu[r]
    cdef double mu_tot = 0.0, level, delta
    cdef int k = 0
    while filled > 0:
        mu_tot += mu[r]
        k += 1
        if k == n:
            return iwl + filled / mu_tot
        r = order[k]
        level = q[r] / mu[r]
        delta = level - iwl
        if delta * mu_tot >= filled:
            return iwl + filled / mu_tot
        filled -= delta * mu_tot
        iwl = level
    return iwl


cdef int single_arrival_c(const double* q, const double* mu, int n) noexcept nogil:
    cdef int s, best = 0
    cdef double key, best_key = INF
    for s in range(n):
        key = (2.0 * q[s] + 1.0) / mu[s]
        if key < best_key:
            best = s
            best_key = key
    return best


cdef int normalize_c(double* p, int n) noexcept nogil:
    cdef double total = 0.0, err
    cdef int s
    for s in range(n):
        total += p[s]
    err = fabs(total - 1.0)
    if err > RENORM_MAX:
        return -1
    if err > RENORM_TOL:
        for s in range(n):
            p[s] = p[s] / total
    return 0


cdef int solve_loglinear_c(const double* q, const double* mu, const int* order, int n,
                           double a, double iwl, double* probs) noexcept nogil:
    cdef double am1 = a - 1.0
    cdef double num = -2.0 * am1, den = 0.0, v1 = 0.0, v2 = 0.0
    cdef double best_val = INF, best_lam = 0.0, lam0, cr, key, val, slack
    cdef int best_j = 0, k, r, s
    for k in range(n):
        r = order[k]
        cr = 2.0 * (q[r] - mu[r] * iwl) + 1.0
        num += -cr
        den += mu[r]
        lam0 = num / den
        v1 += mu[r] / (4.0 * am1)
        v2 += cr * cr / (4.0 * mu[r] * am1)
        key = (2.0 * q[r] + 1.0) / mu[r]
        slack = FEAS_SLACK * (fabs(lam0) if fabs(lam0) > 1.0 else 1.0)
        if 2.0 * iwl - key < lam0 - slack:
            continue
        val = v1 * lam0 * lam0 - v2
        if val < best_val:
            best_val = val
            best_lam = lam0
            best_j = k + 1
    if best_j == 0:
        return -1
    for s in range(n):
        probs[s] = 0.0
    for k in range(best_j):
        s = order[k]
        cr = 2.0 * (q[s] - mu[s] * iwl) + 1.0
        val = (-cr - mu[s] * best_lam) / (2.0 * am1)
        probs[s] = val if val > 0.0 else 0.0
    return normalize_c(probs, n)


cdef int solve_quadratic_c(const double* q, const double* mu, const int* order, int n,
                           double a, double iwl, double* tmp, double* best, double* probs) noexcept nogil:
    cdef double am1 = a - 1.0
    cdef double num, den, lam0, slack, top, val, best_val = INF
    cdef int j, k, s, best_j = 0
    cdef bint feasible
    for j in range(1, n + 1):
        num = -2.0 * am1
        den = 0.0
        for k in range(j):
            s = order[k]
            num += -(2.0 * (q[s] - mu[s] * iwl) + 1.0)
            den += mu[s]
        lam0 = num / den
        slack = FEAS_SLACK * (fabs(lam0) if fabs(lam0) > 1.0 else 1.0)
        feasible = True
        for k in range(j):
            s = order[k]
            top = -(2.0 * (q[s] - mu[s] * iwl) + 1.0) - mu[s] * lam0
            if top < -slack * mu[s]:
                feasible = False
                break
            tmp[s] = top / (2.0 * am1)
        if not feasible:
            continue
        val = 0.0
        for k in range(j):
            s = order[k]
            val += am1 / mu[s] * tmp[s] * tmp[s] + (2.0 * (q[s] - mu[s] * iwl) + 1.0) / mu[s] * tmp[s]
        if val < best_val:
            best_val = val
            best_j = j
            for k in range(j):
                s = order[k]
                best[s] = tmp[s]
    if best_j == 0:
        return -1
    for s in range(n):
        probs[s] = 0.0
    for k in range(best_j):
        s = order[k]
        probs[s] = best[s] if best[s] > 0.0 else 0.0
    return normalize_c(probs, n)


cdef class Engine:
    """Round loop over chunks of pre-drawn traffic.

    Queues are stored as per-server ring buffers of (arrival round, count)
    runs; jobs within one run are indistinguishable for FIFO accounting.
    """

    cdef int n, m, policy, d_samples, lsq_refresh
    cdef int64_t warmup, cap, arrived, departed, rounds_done
    cdef bint record_timing, record_trace
    cdef vector[double] rates, unit, rate_cum, qd, key, probs, cum, tmp, best
    cdef vector[int64_t] q, run_round, run_count, head, size
    cdef vector[int64_t] local_lsq, scratch_lsq, work, incoming, discard
    cdef vector[int64_t] hist, totals, dec_ns, trace
    cdef vector[int] order1, order2, chosen, idle, guide
    cdef RadixScratch sortbuf
    cdef vector[bitgen_t*] rngs
    cdef bitgen_t* scratch_rng
    cdef object _keep

    def __init__(self, rates, int m, str policy, list streams, int64_t warmup=0,
                 int d_samples=2, int lsq_refresh=1, bint record_timing=False, scratch=None,
                 bint record_trace=False):
        cdef int s
        if policy not in POLICY_CODES:
            raise ValueError(f"unknown policy {policy!r}")
        if len(streams) != m:
            raise ValueError("need one policy stream per dispatcher")
        self.n = len(rates)
        self.m = m
        self.policy = POLICY_CODES[policy]
        self.d_samples = min(max(d_samples, 1), self.n)
        self.lsq_refresh = lsq_refresh if lsq_refresh > 0 else 1
        self.warmup = warmup
        self.record_timing = record_timing
        self.record_trace = record_trace
        self._keep = (list(streams), scratch)
        for g in streams:
            self.rngs.push_back(bitgen_of(g))
        if record_timing:
            if scratch is None:
                raise ValueError("timing needs a scratch stream")
            self.scratch_rng = bitgen_of(scratch)
        self.rates.resize(self.n)
        self.unit.resize(self.n, 1.0)
        self.rate_cum.resize(self.n)
        cdef double acc = 0.0
        for s in range(self.n):
            self.rates[s] = float(rates[s])
            acc += self.rates[s]
            self.rate_cum[s] = acc
        self.qd.resize(self.n)
        self.key.resize(self.n)
        self.probs.resize(self.n)
        self.cum.resize(self.n)
        self.guide.resize(self.n)
        self.tmp.resize(self.n)
        self.best.resize(self.n)
        self.q.resize(self.n, 0)
        self.work.resize(self.n)
        self.incoming.resize(self.n)
        self.discard.resize(self.n)
        self.order1.resize(self.n)
        self.order2.resize(self.n)
        self.chosen.resize(self.d_samples)
        self.idle.resize(self.n)
        self.local_lsq.resize(<size_t> self.n * m, 0)
        self.scratch_lsq.resize(self.n)
        self.cap = 16
        self.run_round.resize(<size_t> self.n * self.cap)
        self.run_count.resize(<size_t> self.n * self.cap)
        self.head.resize(self.n, 0)
        self.size.resize(self.n, 0)
        self.hist.resize(2, 0)

    cdef void _grow(self) noexcept:
        cdef int64_t new_cap = self.cap * 2, s, i, src
        cdef vector[int64_t] rr, rc
        rr.resize(<size_t> self.n * new_cap)
        rc.resize(<size_t> self.n * new_cap)
        for s in range(self.n):
            for i in range(self.size[s]):
                src = s * self.cap + (self.head[s] + i) % self.cap
                rr[s * new_cap + i] = self.run_round[src]
                rc[s * new_cap + i] = self.run_count[src]
            self.head[s] = 0
        self.run_round.swap(rr)
        self.run_count.swap(rc)
        self.cap = new_cap

    cdef void _push(self, int s, int64_t t, int64_t count) noexcept:
        cdef int64_t pos
        if self.size[s] > 0:
            pos = s * self.cap + (self.head[s] + self.size[s] - 1) % self.cap
            if self.run_round[pos] == t:
                self.run_count[pos] += count
                return
        if self.size[s] == self.cap:
            self._grow()
        pos = s * self.cap + (self.head[s] + self.size[s]) % self.cap
        self.run_round[pos] = t
        self.run_count[pos] = count
        self.size[s] += 1

    cdef void _serve(self, int s, int64_t t, int64_t capacity) noexcept:
        cdef int64_t k = capacity if capacity < self.q[s] else self.q[s]
        cdef int64_t pos, take, arr, resp
        self.q[s] -= k
        self.departed += k
        while k > 0:
            pos = s * self.cap + self.head[s]
            take = self.run_count[pos] if self.run_count[pos] < k else k
            arr = self.run_round[pos]
            if arr >= self.warmup:
                resp = t - arr + 1
                if resp >= <int64_t> self.hist.size():
                    self.hist.resize(resp * 2, 0)
                self.hist[resp] += take
            self.run_count[pos] -= take
            k -= take
            if self.run_count[pos] == 0:
                self.head[s] = (self.head[s] + 1) % self.cap
                self.size[s] -= 1

    cdef int _scd(self, int64_t a_d, bitgen_t* rng, const double* mu, bint quadratic, int64_t* out) noexcept:
        cdef int n = self.n, s, j, rc
        cdef double a_est = <double> (self.m * a_d)
        cdef double iwl, acc
        cdef const double* q = self.qd.data()
        for s in range(n):
            self.key[s] = q[s] / mu[s]
        sort_order(self.key.data(), n, self.sortbuf, self.order1.data())
        iwl = ideal_workload_c(q, mu, self.order1.data(), n, a_est)
        if a_est - 1.0 < SINGLE_ARRIVAL_EPS:
            out[single_arrival_c(q, mu, n)] += a_d
            return 0
        for s in range(n):
            self.key[s] = (2.0 * q[s] + 1.0) / mu[s]
        sort_order(self.key.data(), n, self.sortbuf, self.order2.data())
        if quadratic:
            rc = solve_quadratic_c(q, mu, self.order2.data(), n, a_est, iwl,
                                   self.tmp.data(), self.best.data(), self.probs.data())
        else:
            rc = solve_loglinear_c(q, mu, self.order2.data(), n, a_est, iwl, self.probs.data())
        if rc != 0:
            return rc
        acc = 0.0
        for s in range(n):
            acc += self.probs[s]
            self.cum[s] = acc
        if a_d < GUIDE_MIN_DRAWS:
            for j in range(a_d):
                out[weighted_index(rng, self.cum.data(), n)] += 1
        else:
            build_guide(self.cum.data(), n, self.guide.data(), n)
            for j in range(a_d):
                out[guided_index(rng, self.cum.data(), n, self.guide.data(), n)] += 1
        return 0

    cdef inline int _argmin_count(self, const int64_t* local) noexcept:
        cdef int s, best = 0
        cdef int64_t best_v = local[0]
        for s in range(1, self.n):
            if local[s] < best_v:
                best = s
                best_v = local[s]
        return best

    cdef inline int _argmin_delay(self, const int64_t* local) noexcept:
        cdef int s, best = 0
        cdef double v, best_v = (<double> (local[0] + 1)) / self.rates[0]
        for s in range(1, self.n):
            v = (<double> (local[s] + 1)) / self.rates[s]
            if v < best_v:
                best = s
                best_v = v
        return best

    cdef int _decide(self, int d, int64_t a_d, bitgen_t* rng, int64_t* lsq_row, int64_t* out) noexcept:
        cdef int n = self.n, s, j, i, k, pick, best, nidle, c
        cdef int64_t* w = self.work.data()
        cdef double v, best_v, total, u, acc
        cdef bint het, dup
        cdef int p = self.policy
        if p == P_SCD:
            return self._scd(a_d, rng, self.rates.data(), False, out)
        if p == P_SCDQ:
            return self._scd(a_d, rng, self.rates.data(), True, out)
        if p == P_TWF:
            return self._scd(a_d, rng, self.unit.data(), False, out)
        if p == P_WR:
            for j in range(a_d):
                out[weighted_index(rng, self.rate_cum.data(), n)] += 1
            return 0
        if p == P_LSQ or p == P_HLSQ:
            for k in range(self.lsq_refresh):
                if p == P_HLSQ:
                    i = weighted_index(rng, self.rate_cum.data(), n)
                else:
                    i = uniform_index(rng, n)
                lsq_row[i] = self.q[i]
            for j in range(a_d):
                s = self._argmin_delay(lsq_row) if p == P_HLSQ else self._argmin_count(lsq_row)
                lsq_row[s] += 1
                out[s] += 1
            return 0
        for s in range(n):
            w[s] = self.q[s]
        if p == P_JSQ:
            for j in range(a_d):
                s = self._argmin_count(w)
                w[s] += 1
                out[s] += 1
        elif p == P_SED:
            for j in range(a_d):
                s = self._argmin_delay(w)
                w[s] += 1
                out[s] += 1
        elif p == P_JSQD or p == P_HJSQD:
            het = p == P_HJSQD
            for j in range(a_d):
                c = 0
                while c < self.d_samples:
                    if het:
                        s = weighted_index(rng, self.rate_cum.data(), n)
                    else:
                        s = uniform_index(rng, n)
                    dup = False
                    for k in range(c):
                        if self.chosen[k] == s:
                            dup = True
                            break
                    if not dup:
                        self.chosen[c] = s
                        c += 1
                best = -1
                best_v = INF
                for k in range(self.d_samples):
                    s = self.chosen[k]
                    if het:
                        v = (<double> (w[s] + 1)) / self.rates[s]
                    else:
                        v = <double> w[s]
                    if v < best_v or (v == best_v and s < best):
                        best = s
                        best_v = v
                w[best] += 1
                out[best] += 1
        elif p == P_JIQ or p == P_HJIQ:
            het = p == P_HJIQ
            for j in range(a_d):
                nidle = 0
                for s in range(n):
                    if w[s] == 0:
                        self.idle[nidle] = s
                        nidle += 1
                if nidle > 0 and het:
                    total = 0.0
                    for k in range(nidle):
                        total += self.rates[self.idle[k]]
                    u = next_double(rng) * total
                    acc = 0.0
                    pick = self.idle[nidle - 1]
                    for k in range(nidle):
                        acc += self.rates[self.idle[k]]
                        if acc > u:
                            pick = self.idle[k]
                            break
                elif nidle > 0:
                    pick = self.idle[uniform_index(rng, nidle)]
                elif het:
                    pick = weighted_index(rng, self.rate_cum.data(), n)
                else:
                    pick = uniform_index(rng, n)
                w[pick] += 1
                out[pick] += 1
        return 0

    def run_chunk(self, const int64_t[:, ::1] arrivals, const int64_t[:, ::1] caps, int64_t t0):
        cdef int64_t rounds = arrivals.shape[0], t, i, a_d, tot, t_start
        cdef int d, s, rc = 0
        cdef int64_t* row
        if arrivals.shape[1] != self.m or caps.shape[1] != self.n or caps.shape[0] != rounds:
            raise ValueError("traffic chunk has the wrong shape")
        for i in range(rounds):
            t = t0 + i
            for s in range(self.n):
                self.qd[s] = <double> self.q[s]
                self.incoming[s] = 0
            for d in range(self.m):
                a_d = arrivals[i, d]
                if a_d <= 0:
                    continue
                self.arrived += a_d
                row = self.local_lsq.data() + <size_t> d * self.n
                if self.record_timing:
                    for s in range(self.n):
                        self.discard[s] = 0
                        self.scratch_lsq[s] = row[s]
                    self._decide(d, a_d, self.scratch_rng, self.scratch_lsq.data(), self.discard.data())
                    t_start = now_ns()
                    rc = self._decide(d, a_d, self.rngs[d], row, self.incoming.data())
                    self.dec_ns.push_back(now_ns() - t_start)
                else:
                    rc = self._decide(d, a_d, self.rngs[d], row, self.incoming.data())
                if rc != 0:
                    raise RuntimeError("probability solver failed")
            tot = 0
            for s in range(self.n):
                if self.incoming[s] > 0:
                    self._push(s, t, self.incoming[s])
                    self.q[s] += self.incoming[s]
                self._serve(s, t, caps[i, s])
                tot += self.q[s]
            self.totals.push_back(tot)
            if self.record_trace:
                for s in range(self.n):
                    self.trace.push_back(self.q[s])
        self.rounds_done += rounds

    def result(self):
        cdef int64_t last = <int64_t> self.hist.size() - 1
        while last > 0 and self.hist[last] == 0:
            last -= 1
        hist = np.array([self.hist[i] for i in range(last + 1)], dtype=np.int64)
        out = {
            "hist": hist,
            "totals": np.array(self.totals, dtype=np.int64),
            "decision_ns": np.array(self.dec_ns, dtype=np.int64),
            "final_queue": np.array(self.q, dtype=np.int64),
            "arrived": self.arrived,
            "departed": self.departed,
        }
        if self.record_trace:
            out["trace"] = np.array(self.trace, dtype=np.int64).reshape(-1, self.n)
        return out


# -- thin wrappers over the solver kernels (benchmarks and cross-checks) ------

def ideal_workload(q, mu, double a):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = qv.shape[0]
    cdef vector[int] order
    cdef vector[double] key
    cdef RadixScratch buf
    cdef int s
    if n == 0:
        raise ValueError("no servers")
    order.resize(n)
    key.resize(n)
    for s in range(n):
        key[s] = qv[s] / mv[s]
    sort_order(key.data(), n, buf, order.data())
    return ideal_workload_c(&qv[0], &mv[0], order.data(), n, a)


def scd_probabilities(q, mu, double a, bint quadratic=False):
    """Dispatch distribution for total arrivals ``a`` (compiled path)."""
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = qv.shape[0], s, rc
    cdef vector[int] o1, o2
    cdef vector[double] key, tmp, best
    cdef RadixScratch buf
    cdef double iwl
    out = np.zeros(n)
    cdef double[::1] pv = out
    if n == 0:
        raise ValueError("no servers")
    o1.resize(n)
    o2.resize(n)
    key.resize(n)
    tmp.resize(n)
    best.resize(n)
    for s in range(n):
        key[s] = qv[s] / mv[s]
    sort_order(key.data(), n, buf, o1.data())
    iwl = ideal_workload_c(&qv[0], &mv[0], o1.data(), n, a)
    if a - 1.0 < SINGLE_ARRIVAL_EPS:
        pv[single_arrival_c(&qv[0], &mv[0], n)] = 1.0
        return out
    for s in range(n):
        key[s] = (2.0 * qv[s] + 1.0) / mv[s]
    sort_order(key.data(), n, buf, o2.data())
    if quadratic:
        rc = solve_quadratic_c(&qv[0], &mv[0], o2.data(), n, a, iwl, tmp.data(), best.data(), &pv[0])
    else:
        rc = solve_loglinear_c(&qv[0], &mv[0], o2.data(), n, a, iwl, &pv[0])
    if rc != 0:
        raise RuntimeError("probability solver failed")
    return out
