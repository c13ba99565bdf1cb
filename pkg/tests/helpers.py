"""Shared test machinery.

The jitted tape runner drives a quotient filter through a pre-generated
operation stream while maintaining a shadow multiset, verifying after
every single operation that

* every lookup answers exactly "fingerprint in shadow" (in particular,
  no false negatives),
* the element count matches,
* re-decoding the slot window around the touched cluster yields exactly
  the shadow's delta for that operation (mutations are cluster-local, so
  this pins the whole array), and
* periodically and at the end, a full decode equals the shadow multiset
  exactly.
"""

import numpy as np
from numba import njit, types
from numba.typed import Dict

from amqfilters import _qfkernels as _k

OP_INSERT = 0
OP_DELETE_PRESENT = 1
OP_DELETE_RAW = 2
OP_LOOKUP_UNIFORM = 3
OP_LOOKUP_PRESENT = 4

FAIL_NONE = 0
FAIL_LOOKUP_MISMATCH = 1
FAIL_DELETE_STATUS = 2
FAIL_WINDOW_CORRUPT = 3
FAIL_DELTA_INSERT = 4
FAIL_DELTA_DELETE = 5
FAIL_FULL_DECODE = 6
FAIL_COUNT = 7


@njit(cache=True)
def _empty_before(meta, mask, i):
    j = (i - 1) & mask
    while (meta[j] & 7) != 0:
        j = (j - 1) & mask
    return j


@njit(cache=True)
def _empty_at_or_after(meta, mask, i):
    j = i
    while (meta[j] & 7) != 0:
        j = (j + 1) & mask
    return j


@njit(cache=True)
def _decode_window_sorted(meta, rem, mask, r, w_lo, w_len, out):
    """Decode slots [w_lo, w_lo + w_len) toroidally into sorted
    fingerprints; -1 on inconsistent metadata."""
    queue = np.empty(w_len + 1, np.int64)
    qh = 0
    qt = 0
    cur_b = -1
    n = 0
    for k in range(w_len):
        i = (w_lo + k) & mask
        mi = meta[i]
        if (mi & 7) == 0:
            if qh != qt:
                return -1
            cur_b = -1
            continue
        if mi & 1:
            queue[qt] = i
            qt += 1
        if mi & 2:
            if cur_b < 0:
                return -1
        else:
            if qh >= qt:
                return -1
            cur_b = queue[qh]
            qh += 1
        out[n] = (np.uint64(cur_b) << np.uint64(r)) | rem[i]
        n += 1
    if qh != qt:
        return -1
    w = -1
    for k in range(1, n):
        if out[k] < out[k - 1]:
            if w >= 0:
                return -1
            w = k
    if w > 0:
        tmp = out[:w].copy()
        out[: n - w] = out[w:n]
        out[n - w : n] = tmp
    return n


@njit(cache=True)
def _is_one_more(small, ns, big, nb, f):
    """True iff sorted ``big`` equals sorted ``small`` plus one copy of f."""
    if nb != ns + 1:
        return False
    i = 0
    used = False
    for j in range(nb):
        if i < ns and big[j] == small[i]:
            i += 1
        elif not used and big[j] == f:
            used = True
        else:
            return False
    return i == ns and used


@njit(cache=True)
def _full_matches_shadow(out, n, shadow):
    k = 0
    distinct = 0
    while k < n:
        v = out[k]
        c = 1
        while k + c < n and out[k + c] == v:
            c += 1
        if v not in shadow or shadow[v] != c:
            return False
        distinct += 1
        k += c
    return distinct == len(shadow)


@njit(cache=True)
def run_verified_tape(meta, rem, mask, r, kinds, args, capacity, full_every):
    """Run an op tape with per-op oracle checks.

    Returns (fail_code, op_index, detail).  args are fingerprint values
    for value ops and index seeds for *-present ops.
    """
    m = mask + 1
    shadow = Dict.empty(key_type=types.uint64, value_type=types.int64)
    live = np.empty(capacity, np.uint64)
    live_n = 0
    count = 0
    rbits = np.uint64(r)
    win_a = np.empty(m, np.uint64)
    win_b = np.empty(m, np.uint64)
    full_out = np.empty(m, np.uint64)

    for t in range(kinds.size):
        kind = kinds[t]
        a = args[t]

        if kind == OP_INSERT:
            if count >= capacity:
                continue
            f = a
            fq = np.int64(f >> rbits)
            e_left = _empty_before(meta, mask, fq)
            e_right = _empty_at_or_after(meta, mask, fq)
            w_lo = (e_left + 1) & mask
            w_len = ((e_right - e_left) & mask)
            n1 = _decode_window_sorted(meta, rem, mask, r, w_lo, w_len, win_a)
            if n1 < 0:
                return FAIL_WINDOW_CORRUPT, t, 0
            fr = f & ((np.uint64(1) << rbits) - np.uint64(1))
            _k.insert(meta, rem, mask, fq, fr)
            count += 1
            if f in shadow:
                shadow[f] += 1
            else:
                shadow[f] = 1
            live[live_n] = f
            live_n += 1
            n2 = _decode_window_sorted(meta, rem, mask, r, w_lo, w_len, win_b)
            if n2 < 0:
                return FAIL_WINDOW_CORRUPT, t, 1
            if not _is_one_more(win_a, n1, win_b, n2, f):
                return FAIL_DELTA_INSERT, t, 0

        elif kind == OP_DELETE_PRESENT or kind == OP_DELETE_RAW:
            if kind == OP_DELETE_PRESENT:
                if live_n == 0:
                    continue
                f = live[a % np.uint64(live_n)]
            else:
                f = a
            present = f in shadow
            fq = np.int64(f >> rbits)
            n1 = -1
            w_lo = 0
            w_len = 0
            if present:
                e_left = _empty_before(meta, mask, fq)
                e_right = _empty_at_or_after(meta, mask, fq)
                w_lo = (e_left + 1) & mask
                w_len = (e_right - e_left) & mask
                n1 = _decode_window_sorted(meta, rem, mask, r, w_lo, w_len, win_a)
                if n1 < 0:
                    return FAIL_WINDOW_CORRUPT, t, 2
            fr = f & ((np.uint64(1) << rbits) - np.uint64(1))
            status, lo, hi = _k.delete(meta, rem, mask, fq, fr)
            if present:
                if status != 0:
                    return FAIL_DELETE_STATUS, t, status
                count -= 1
                if shadow[f] == 1:
                    del shadow[f]
                else:
                    shadow[f] -= 1
                if kind == OP_DELETE_PRESENT:
                    idx = np.int64(a % np.uint64(live_n))
                else:
                    idx = -1
                    for j in range(live_n):
                        if live[j] == f:
                            idx = j
                            break
                live[idx] = live[live_n - 1]
                live_n -= 1
                n2 = _decode_window_sorted(meta, rem, mask, r, w_lo, w_len, win_b)
                if n2 < 0:
                    return FAIL_WINDOW_CORRUPT, t, 3
                if not _is_one_more(win_b, n2, win_a, n1, f):
                    return FAIL_DELTA_DELETE, t, 0
            else:
                if status != 1:
                    return FAIL_DELETE_STATUS, t, status

        else:  # lookups
            if kind == OP_LOOKUP_PRESENT:
                if live_n == 0:
                    continue
                f = live[a % np.uint64(live_n)]
            else:
                f = a
            fq = np.int64(f >> rbits)
            fr = f & ((np.uint64(1) << rbits) - np.uint64(1))
            got = _k.lookup(meta, rem, mask, fq, fr)
            want = f in shadow
            if got != want:
                return FAIL_LOOKUP_MISMATCH, t, 1 if want else 0

        if (t + 1) % full_every == 0:
            status, n = _k.decode(meta, rem, mask, r, full_out)
            if status != 0:
                return FAIL_FULL_DECODE, t, status
            if n != count:
                return FAIL_COUNT, t, n
            if not _full_matches_shadow(full_out, n, shadow):
                return FAIL_FULL_DECODE, t, -1

    status, n = _k.decode(meta, rem, mask, r, full_out)
    if status != 0:
        return FAIL_FULL_DECODE, kinds.size, status
    if n != count:
        return FAIL_COUNT, kinds.size, n
    if not _full_matches_shadow(full_out, n, shadow):
        return FAIL_FULL_DECODE, kinds.size, -1
    return FAIL_NONE, kinds.size, count


def make_tape(rng, n_ops, p, weights=(0.42, 0.2, 0.05, 0.18, 0.15)):
    """Random op tape: inserts, present/raw deletes, uniform/present lookups."""
    kinds = rng.choice(
        np.arange(5, dtype=np.uint8), size=n_ops, p=np.asarray(weights)
    ).astype(np.uint8)
    args = rng.integers(0, 1 << p, size=n_ops, dtype=np.uint64)
    return kinds, args


def shadow_check(qf, shadow):
    """Plain-Python oracle comparison for small unit tests."""
    dec = qf.decode().tolist()
    assert dec == sorted(shadow), f"decode {dec[:8]}... != shadow {sorted(shadow)[:8]}..."
    assert qf.count == len(shadow)
