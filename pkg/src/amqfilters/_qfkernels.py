"""Slot-level kernels for the quotient filter.

A filter with m = 2**q slots is held as two parallel arrays:

* ``meta``: uint8, bit 0 = is_occupied, bit 1 = is_continuation,
  bit 2 = is_shifted,
* ``rem``: uint64, the r-bit remainder stored in the slot.

A slot is empty iff all three metadata bits are zero; empty slots keep a
zero remainder so that equal multisets produce identical arrays.  All
walks are toroidal (``& mask`` with ``mask = m - 1``).

Mutating kernels return the toroidal span of slots they touched so the
caller can assert cluster locality.  Status codes: 0 = ok, 1 = absent,
2 = corrupt encoding.
"""

import numpy as np
from numba import njit

OK = 0
ABSENT = 1
CORRUPT = 2

_OCC = 1
_CONT = 2
_SHIFT = 4


@njit(cache=True)
def run_start(meta, mask, fq):
    """Slot index of the first remainder of bucket ``fq``'s run.

    Requires is_occupied(fq); walks back over shifted slots to an
    unshifted anchor, then forward matching runs to occupied buckets.
    """
    b = fq
    while meta[b] & _SHIFT:
        b = (b - 1) & mask
    s = b
    while b != fq:
        s = (s + 1) & mask
        while meta[s] & _CONT:
            s = (s + 1) & mask
        b = (b + 1) & mask
        while not (meta[b] & _OCC):
            b = (b + 1) & mask
    return s


@njit(cache=True)
def lookup(meta, rem, mask, fq, fr):
    """True iff fingerprint (fq, fr) is in the stored multiset.

    Remainders within a run are sorted, so the scan stops early once it
    passes fr.
    """
    if not (meta[fq] & _OCC):
        return False
    s = run_start(meta, mask, fq)
    while True:
        v = rem[s]
        if v == fr:
            return True
        if v > fr:
            return False
        s = (s + 1) & mask
        if not (meta[s] & _CONT):
            return False


@njit(cache=True)
def insert(meta, rem, mask, fq, fr):
    """Insert (fq, fr), shifting the tail of the cluster right by one.

    The caller enforces the load cap, so at least one empty slot exists
    and the ripple always terminates.  Returns (lo, hi): the toroidal
    span of slots read or written.
    """
    mfq = meta[fq]
    if mfq & 7 == 0:
        meta[fq] = _OCC
        rem[fq] = fr
        return fq, fq
    was_occ = mfq & _OCC
    if not was_occ:
        meta[fq] = mfq | _OCC
    lo = fq
    while meta[lo] & _SHIFT:
        lo = (lo - 1) & mask
    s = run_start(meta, mask, fq)
    pos = s
    new_cont = False
    head_swap = False
    if was_occ:
        # sorted position within the existing run
        while True:
            if fr <= rem[pos]:
                break
            nxt = (pos + 1) & mask
            if not (meta[nxt] & _CONT):
                pos = nxt
                break
            pos = nxt
        if pos == s:
            head_swap = True
        else:
            new_cont = True
    cur_cont = new_cont
    cur_shift = pos != fq
    cur_rem = fr
    i = pos
    while True:
        mi = meta[i]
        empty = (mi & 7) == 0
        nm = mi & _OCC
        if cur_cont:
            nm |= _CONT
        if cur_shift:
            nm |= _SHIFT
        d_rem = rem[i]
        meta[i] = nm
        rem[i] = cur_rem
        if empty:
            return lo, i
        d_cont = (mi & _CONT) != 0
        if head_swap and i == pos:
            d_cont = True
        cur_cont = d_cont
        cur_rem = d_rem
        cur_shift = True
        i = (i + 1) & mask


@njit(cache=True)
def delete(meta, rem, mask, fq, fr):
    """Remove one copy of (fq, fr) by re-encoding its cluster.

    The cluster is decoded into (bucket, remainder) pairs, the entry is
    dropped, and the remaining pairs are written back in canonical form;
    slots freed by elements settling back toward their buckets are
    cleared.  Returns (status, lo, hi).
    """
    if not (meta[fq] & _OCC):
        return ABSENT, fq, fq
    # cluster start: slot after the nearest empty slot walking back
    c = fq
    steps = 0
    while (meta[(c - 1) & mask] & 7) != 0:
        c = (c - 1) & mask
        steps += 1
        if steps > mask:
            return CORRUPT, fq, fq
    # cluster length
    length = 0
    i = c
    while (meta[i] & 7) != 0:
        length += 1
        i = (i + 1) & mask
        if length > mask:
            return CORRUPT, fq, fq
    bkts = np.empty(length, np.int64)
    rems = np.empty(length, np.uint64)
    queue = np.empty(length + 1, np.int64)
    qh = 0
    qt = 0
    cur_b = -1
    for k in range(length):
        i = (c + k) & mask
        mi = meta[i]
        if mi & _OCC:
            queue[qt] = i
            qt += 1
        if mi & _CONT:
            if cur_b < 0:
                return CORRUPT, fq, fq
        else:
            if qh >= qt:
                return CORRUPT, fq, fq
            cur_b = queue[qh]
            qh += 1
        bkts[k] = cur_b
        rems[k] = rem[i]
    idx = -1
    nrun = 0
    for k in range(length):
        if bkts[k] == fq:
            nrun += 1
            if idx < 0 and rems[k] == fr:
                idx = k
    if idx < 0:
        return ABSENT, (c - 1) & mask, (c + length) & mask
    if nrun == 1:
        meta[fq] &= 0xFE
    pos = 0
    prev_b = -1
    for k in range(length):
        if k == idx:
            continue
        b = bkts[k]
        boff = (b - c) & mask
        while pos < boff:
            j = (c + pos) & mask
            meta[j] &= _OCC
            rem[j] = 0
            pos += 1
        j = (c + pos) & mask
        nm = meta[j] & _OCC
        if b == prev_b:
            nm |= _CONT
        if pos != boff:
            nm |= _SHIFT
        meta[j] = nm
        rem[j] = rems[k]
        pos += 1
        prev_b = b
    while pos < length:
        j = (c + pos) & mask
        meta[j] &= _OCC
        rem[j] = 0
        pos += 1
    return OK, (c - 1) & mask, (c + length) & mask


@njit(cache=True)
def decode(meta, rem, mask, r, out):
    """Fill ``out`` with all stored fingerprints in ascending order.

    Validates the encoding while walking; returns (status, n).  ``out``
    must have room for one entry per non-empty slot.  The scan starts
    after an empty slot, so the collected sequence is ascending up to a
    single rotation, which is undone in place.
    """
    m = mask + 1
    e = -1
    for i in range(m):
        if (meta[i] & 7) == 0:
            e = i
            break
    if e < 0:
        return CORRUPT, 0
    queue = np.empty(m, np.int64)
    qh = 0
    qt = 0
    cur_b = -1
    in_cluster = False
    n = 0
    for k in range(1, m + 1):
        i = (e + k) & mask
        mi = meta[i]
        if (mi & 7) == 0:
            if qh != qt:
                return CORRUPT, n  # occupied bucket with no run
            if rem[i] != 0:
                return CORRUPT, n  # junk remainder in an empty slot
            in_cluster = False
            cur_b = -1
            continue
        if mi & _OCC:
            queue[qt] = i
            qt += 1
        if mi & _CONT:
            if not in_cluster or cur_b < 0:
                return CORRUPT, n
            if not (mi & _SHIFT):
                return CORRUPT, n  # a continuation is never canonical
        else:
            if qh >= qt:
                return CORRUPT, n
            cur_b = queue[qh]
            qh += 1
            if mi & _SHIFT:
                if not in_cluster or cur_b == i:
                    return CORRUPT, n
            else:
                if cur_b != i:
                    return CORRUPT, n
        in_cluster = True
        out[n] = (np.uint64(cur_b) << np.uint64(r)) | rem[i]
        n += 1
    # undo the rotation: at most one descent exists in a valid encoding
    w = -1
    for k in range(1, n):
        if out[k] < out[k - 1]:
            if w >= 0:
                return CORRUPT, n
            w = k
    if w > 0:
        tmp = out[:w].copy()
        out[: n - w] = out[w:n]
        out[n - w : n] = tmp
    return OK, n


@njit(cache=True)
def decode_window(meta, rem, mask, r, start, out_fp):
    """Decode the maximal non-empty span beginning at slot ``start``.

    ``start`` must follow an empty slot.  Entries are written to
    ``out_fp`` in cluster order; returns (status, n).  Used for
    cluster-local oracle checks.
    """
    queue = np.empty(out_fp.size, np.int64)
    qh = 0
    qt = 0
    cur_b = -1
    n = 0
    i = start
    while (meta[i] & 7) != 0:
        if n >= out_fp.size:
            return CORRUPT, n
        mi = meta[i]
        if mi & _OCC:
            queue[qt] = i
            qt += 1
        if mi & _CONT:
            if cur_b < 0:
                return CORRUPT, n
        else:
            if qh >= qt:
                return CORRUPT, n
            cur_b = queue[qh]
            qh += 1
        out_fp[n] = (np.uint64(cur_b) << np.uint64(r)) | rem[i]
        n += 1
        i = (i + 1) & mask
    if qh != qt:
        return CORRUPT, n
    return OK, n


@njit(cache=True)
def cluster_lengths(meta, mask, out):
    """Lengths of all maximal non-empty spans; returns the span count.

    ``out`` needs room for (m + 1) // 2 entries (clusters alternate with
    empty slots at worst).
    """
    m = mask + 1
    e = -1
    for i in range(m):
        if (meta[i] & 7) == 0:
            e = i
            break
    if e < 0:
        return -1
    n = 0
    cur = 0
    for k in range(1, m + 1):
        i = (e + k) & mask
        if (meta[i] & 7) == 0:
            if cur > 0:
                out[n] = cur
                n += 1
                cur = 0
        else:
            cur += 1
    if cur > 0:
        out[n] = cur
        n += 1
    return n


@njit(cache=True)
def insert_many(meta, rem, mask, r, values):
    """Insert each p-bit fingerprint in ``values``; caller checks capacity."""
    rmask = (np.uint64(1) << np.uint64(r)) - np.uint64(1)
    for k in range(values.size):
        f = values[k]
        fq = np.int64(f >> np.uint64(r))
        insert(meta, rem, mask, fq, f & rmask)


@njit(cache=True)
def contains_many(meta, rem, mask, r, values, out):
    """Membership test for each fingerprint in ``values``."""
    rmask = (np.uint64(1) << np.uint64(r)) - np.uint64(1)
    for k in range(values.size):
        f = values[k]
        fq = np.int64(f >> np.uint64(r))
        out[k] = lookup(meta, rem, mask, fq, f & rmask)


@njit(cache=True)
def merge_sorted(arrays_flat, offsets, out):
    """k-way merge of sorted uint64 runs stored back to back.

    ``arrays_flat`` holds the runs concatenated; ``offsets[i]:offsets[i+1]``
    delimits run i.
    """
    k = offsets.size - 1
    idx = offsets[:k].copy()
    n = 0
    while True:
        best = -1
        best_v = np.uint64(0)
        for j in range(k):
            if idx[j] < offsets[j + 1]:
                v = arrays_flat[idx[j]]
                if best < 0 or v < best_v:
                    best = j
                    best_v = v
        if best < 0:
            return n
        out[n] = best_v
        n += 1
        idx[best] += 1
