# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial simulator.

Mirrors ``env.StreamEnv`` + ``policies`` exactly: same slot allocation
(lowest free slot), same draw order from the numpy bit generator, same
floating-point index formula. ``simulate`` returns the same summary the
pure-Python fallback builds from a ``RegretTrace``.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt, INFINITY
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t

import numpy as np

cdef enum:
    PLAIN = 0
    LARGE = 1
    SMALL = 2


cdef struct Sim:
    int n
    int m
    int64_t T
    const double* means
    bitgen_t* rng
    int cursor            # next unread arm, 0-based
    int* slot_arm         # -1 when free
    int64_t* slot_pulls
    int64_t* slot_sum
    int64_t* arm_pulls
    int64_t rounds
    int64_t reward_total


cdef inline double uniform(Sim* s) noexcept nogil:
    return s.rng.next_double(s.rng.state)


cdef inline int below(Sim* s, int k) noexcept nogil:
    cdef int r = <int>(uniform(s) * k)
    if r > k - 1:
        r = k - 1
    return r


cdef inline int read_next(Sim* s) noexcept nogil:
    cdef int slot
    for slot in range(s.m):
        if s.slot_arm[slot] < 0:
            s.slot_arm[slot] = s.cursor
            s.slot_pulls[slot] = 0
            s.slot_sum[slot] = 0
            s.cursor += 1
            return slot
    return -1


cdef inline void pull(Sim* s, int slot) noexcept nogil:
    cdef int arm = s.slot_arm[slot]
    cdef int r = 1 if uniform(s) < s.means[arm] else 0
    s.slot_pulls[slot] += 1
    s.slot_sum[slot] += r
    s.arm_pulls[arm] += 1
    s.rounds += 1
    s.reward_total += r


cdef inline bint pull_times(Sim* s, int slot, int64_t times) noexcept nogil:
    cdef int64_t i
    for i in range(times):
        if s.rounds >= s.T:
            return False
        pull(s, slot)
    return True


cdef inline bint less(Sim* s, int a, int b) noexcept nogil:
    return s.slot_sum[a] * s.slot_pulls[b] < s.slot_sum[b] * s.slot_pulls[a]


cdef inline int argmax_except(double* idx, int k, int skip) noexcept nogil:
    cdef int best = -1, p
    cdef double val = -INFINITY
    for p in range(k):
        if p != skip and (best < 0 or idx[p] > val):
            best = p
            val = idx[p]
    return best


cdef void ucb(Sim* s, int* slots, int k, double width, double* idx) noexcept nogil:
    cdef int p, top, runner, slot
    cdef int64_t N
    cdef double v, rv
    for p in range(k):
        N = s.slot_pulls[slots[p]]
        if N == 0:
            idx[p] = INFINITY
        else:
            idx[p] = <double>s.slot_sum[slots[p]] / <double>N + sqrt(width / <double>N)
    top = argmax_except(idx, k, -1)
    runner = argmax_except(idx, k, top)
    while s.rounds < s.T:
        slot = slots[top]
        pull(s, slot)
        N = s.slot_pulls[slot]
        v = <double>s.slot_sum[slot] / <double>N + sqrt(width / <double>N)
        idx[top] = v
        if runner >= 0:
            rv = idx[runner]
            if rv > v or (rv == v and runner < top):
                top = runner
                runner = argmax_except(idx, k, top)


cdef int occupied_slots(Sim* s, int* out) noexcept nogil:
    cdef int slot, k = 0
    for slot in range(s.m):
        if s.slot_arm[slot] >= 0:
            out[k] = slot
            k += 1
    return k


cdef void sort_ints(int* a, int k) noexcept nogil:
    cdef int i, j, x
    for i in range(1, k):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x


def simulate(double[::1] means, int m, long long T, int policy, long long L,
             double width, object bit_generator):
    """Run one trial; returns (pulls, pulls_at_marker, marker, reward_total, memory_at_marker).

    ``marker`` is -1 when exploration was cut short by the horizon, in which
    case ``pulls_at_marker`` and ``memory_at_marker`` are None.
    """
    cdef int n = means.shape[0]
    cdef Sim s
    cdef int c, i, j, r, tmp, first, second, k, incumbent, challenger
    cdef int64_t marker = -1

    slot_arm = np.full(m, -1, dtype=np.intc)
    slot_pulls = np.zeros(m, dtype=np.int64)
    slot_sum = np.zeros(m, dtype=np.int64)
    arm_pulls = np.zeros(n, dtype=np.int64)
    work = np.zeros(max(m, n) + 1, dtype=np.intc)
    idx = np.zeros(max(m, n) + 1, dtype=np.float64)
    cdef int[::1] slot_arm_v = slot_arm
    cdef int64_t[::1] slot_pulls_v = slot_pulls
    cdef int64_t[::1] slot_sum_v = slot_sum
    cdef int64_t[::1] arm_pulls_v = arm_pulls
    cdef int[::1] work_v = work
    cdef double[::1] idx_v = idx
    cdef int* pool = &work_v[0]
    cdef double* idxp = &idx_v[0]

    s.n = n
    s.m = m
    s.T = T
    s.means = &means[0]
    s.rng = <bitgen_t*> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")
    s.cursor = 0
    s.slot_arm = &slot_arm_v[0]
    s.slot_pulls = &slot_pulls_v[0]
    s.slot_sum = &slot_sum_v[0]
    s.arm_pulls = &arm_pulls_v[0]
    s.rounds = 0
    s.reward_total = 0

    with bit_generator.lock:
      with nogil:
        if policy == PLAIN:
            for i in range(n):
                pool[i] = read_next(&s)
            marker = 0
        elif policy == LARGE:
            c = n - m
            for i in range(m):
                read_next(&s)
            for i in range(m):
                pool[i] = i
            for j in range(2 * c):
                r = j + below(&s, m - j)
                tmp = pool[j]
                pool[j] = pool[r]
                pool[r] = tmp
            for i in range(c):
                first = pool[2 * i]
                second = pool[2 * i + 1]
                if not (pull_times(&s, first, L) and pull_times(&s, second, L)):
                    break
                if less(&s, first, second):
                    s.slot_arm[first] = -1
                else:
                    s.slot_arm[second] = -1
            else:
                for i in range(c):
                    read_next(&s)
                marker = s.rounds
        elif policy == SMALL:
            for i in range(m - 1):
                pool[i] = read_next(&s)
            for i in range(m - 1):
                if not pull_times(&s, pool[i], L):
                    break
            else:
                while s.cursor < n:
                    j = below(&s, m - 1)
                    incumbent = pool[j]
                    challenger = read_next(&s)
                    if not pull_times(&s, challenger, L):
                        break
                    if less(&s, incumbent, challenger):
                        s.slot_arm[incumbent] = -1
                        pool[j] = challenger
                    else:
                        s.slot_arm[challenger] = -1
                else:
                    marker = s.rounds

    if marker < 0:
        return arm_pulls, None, -1, s.reward_total, None

    at_marker = arm_pulls.copy()
    memory = tuple(int(a) + 1 for a in slot_arm if a >= 0)
    with bit_generator.lock:
      with nogil:
        k = occupied_slots(&s, pool)
        sort_ints(pool, k)
        ucb(&s, pool, k, width, idxp)
    return arm_pulls, at_marker, int(marker), s.reward_total, memory
