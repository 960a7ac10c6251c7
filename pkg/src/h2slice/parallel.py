"""Parallel spectrum slicing over an index range.

Both schedulers keep workers shared-nothing: each worker thread owns a deep
replica of the matrix and a private inertia cache, so no lock is held during
numerical work and every estimate is bitwise identical to a serial solve of
the same index over the same original interval.

The static scheduler splits the index range into contiguous chunks up front.
The work-stealing-free master-worker scheduler keeps a FIFO list of free
workers and a task queue; a task computes a centered batch of m eigenvalues
outright and emits two flanking subtasks whose search intervals are the
certified bisection brackets of the batch extremes, so subtask intervals are
valid eigenvalue brackets by construction, not measurement.
"""

import json
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigError, IncompleteSpectrum
from .spectrum import EPS_EV_DEFAULT, InertiaCache, default_interval, slice_spectrum

DEFAULT_BATCH = 4


@dataclass
class TaskRecord:
    """Instrumentation for one scheduled task."""

    worker: int
    task: str
    inertia_evals: int
    busy_ms: float
    idle_ms: float

    def to_json(self):
        return json.dumps(
            {
                "worker": self.worker,
                "task": self.task,
                "inertia_evals": self.inertia_evals,
                "busy_ms": round(self.busy_ms, 3),
                "idle_ms": round(self.idle_ms, 3),
            },
            sort_keys=True,
        )


@dataclass
class WorkerStats:
    worker: int
    tasks: list = field(default_factory=list)
    inertia_evals: int = 0
    cache_hits: int = 0
    busy_ms: float = 0.0
    idle_ms: float = 0.0


@dataclass
class ParallelResult:
    estimates: list
    workers: list
    wall_time: float
    mode: str

    def records(self):
        out = []
        for w in self.workers:
            out.extend(w.tasks)
        return out

    def jsonl(self):
        return "\n".join(r.to_json() for r in self.records())

    def efficiency(self):
        """Fraction of worker wall time spent in numerical work."""
        span = self.wall_time * max(1, len(self.workers))
        busy = sum(w.busy_ms for w in self.workers) / 1000.0
        return busy / span if span > 0 else 0.0


def _chunks(k_lo, k_hi, parts):
    """Contiguous near-equal chunks covering [k_lo, k_hi]."""
    total = k_hi - k_lo + 1
    parts = min(parts, total)
    base, extra = divmod(total, parts)
    out = []
    start = k_lo
    for p in range(parts):
        size = base + (1 if p < extra else 0)
        out.append((start, start + size - 1))
        start += size
    return out


def _solve_chunk(H, c_lo, c_hi, interval, eps_ev, cache):
    """Extremes first, then inner indices ascending; one shared cache."""
    order = [c_lo] if c_lo == c_hi else [c_lo, c_hi]
    order += list(range(c_lo + 1, c_hi))
    out = {}
    for k in order:
        out[k] = slice_spectrum(H, k, interval, eps_ev, cache)
    return [out[k] for k in range(c_lo, c_hi + 1)]


def static_partition_solve(H, k_lo, k_hi, interval=None, eps_ev=EPS_EV_DEFAULT, workers=1):
    """Solve an index range with a fixed contiguous partition of indices.

    Every worker searches the original interval for each of its indices, so
    results are independent of the worker count.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if k_lo > k_hi:
        raise ConfigError(f"empty index range [{k_lo}, {k_hi}]")
    if interval is None:
        interval = default_interval(H)
    t_start = time.perf_counter()
    chunks = _chunks(k_lo, k_hi, workers)
    stats = [WorkerStats(worker=w) for w in range(len(chunks))]
    results = {}
    errors = []
    lock = threading.Lock()

    def run(w, c_lo, c_hi):
        replica = H.copy()
        cache = InertiaCache()
        t0 = time.perf_counter()
        try:
            ests = _solve_chunk(replica, c_lo, c_hi, interval, eps_ev, cache)
        except Exception as exc:  # noqa: BLE001 - forwarded to the caller
            with lock:
                errors.append(exc)
            return
        busy = (time.perf_counter() - t0) * 1000.0
        st = stats[w]
        st.inertia_evals = cache.fresh_evals
        st.cache_hits = cache.hits
        st.busy_ms = busy
        st.tasks.append(
            TaskRecord(
                worker=w,
                task=f"chunk[{c_lo}-{c_hi}]",
                inertia_evals=cache.fresh_evals,
                busy_ms=busy,
                idle_ms=0.0,
            )
        )
        with lock:
            for est in ests:
                results[est.k] = est

    threads = [
        threading.Thread(target=run, args=(w, c_lo, c_hi), daemon=True)
        for w, (c_lo, c_hi) in enumerate(chunks)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall = time.perf_counter() - t_start
    for st in stats:
        st.idle_ms = max(0.0, wall * 1000.0 - st.busy_ms)
        if st.tasks:
            st.tasks[-1].idle_ms = st.idle_ms
    missing = [k for k in range(k_lo, k_hi + 1) if k not in results]
    if missing:
        exc = IncompleteSpectrum(missing)
        if errors:
            raise exc from errors[0]
        raise exc
    return ParallelResult(
        estimates=[results[k] for k in range(k_lo, k_hi + 1)],
        workers=stats,
        wall_time=wall,
        mode="static",
    )


def _run_task(replica, cache, task, eps_ev, m):
    """Process one master-worker task; return (estimates, subtasks).

    Small tasks are solved outright. Large ones solve a centered batch of m
    indices and split the rest into two flanking subtasks bounded by the
    certified brackets (value +/- half_width) of the batch extremes.
    """
    a, b, t_lo, t_hi = task
    count = t_hi - t_lo + 1
    if count <= 2 * m:
        return _solve_chunk(replica, t_lo, t_hi, (a, b), eps_ev, cache), []
    k_c = t_lo + (count - m) // 2
    k_d = k_c + m - 1
    ests = {}
    for k in [k_c, k_d] + list(range(k_c + 1, k_d)):
        ests[k] = slice_spectrum(replica, k, (a, b), eps_ev, cache)
    subs = [
        (a, ests[k_c].value + ests[k_c].half_width, t_lo, k_c - 1),
        (ests[k_d].value - ests[k_d].half_width, b, k_d + 1, t_hi),
    ]
    return [ests[k] for k in range(k_c, k_d + 1)], subs


def master_worker_solve(
    H, k_lo, k_hi, interval=None, eps_ev=EPS_EV_DEFAULT, workers=1, m=DEFAULT_BATCH
):
    """Solve an index range with a coordinator dispatching batched tasks.

    The coordinator runs on the calling thread; free workers are reused in
    FIFO order. Estimates depend only on the task tree, never on scheduling,
    and each is within its own half_width of the compressed-matrix
    eigenvalue, as in the static scheduler.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if m < 1:
        raise ConfigError("batch size m must be >= 1")
    if k_lo > k_hi:
        raise ConfigError(f"empty index range [{k_lo}, {k_hi}]")
    if interval is None:
        interval = default_interval(H)
    t_start = time.perf_counter()
    a0, b0 = float(interval[0]), float(interval[1])

    inboxes = [queue.Queue() for _ in range(workers)]
    results_q = queue.Queue()
    stats = [WorkerStats(worker=w) for w in range(workers)]

    def worker_loop(w):
        replica = H.copy()
        cache = InertiaCache()
        last_done = time.perf_counter()
        while True:
            item = inboxes[w].get()
            if item is None:
                stats[w].inertia_evals = cache.fresh_evals
                stats[w].cache_hits = cache.hits
                return
            t0 = time.perf_counter()
            idle_ms = (t0 - last_done) * 1000.0
            e0 = cache.fresh_evals
            try:
                ests, subs = _run_task(replica, cache, item, eps_ev, m)
            except Exception as exc:  # noqa: BLE001 - forwarded to coordinator
                results_q.put((w, None, None, exc))
                last_done = time.perf_counter()
                continue
            t1 = time.perf_counter()
            rec = TaskRecord(
                worker=w,
                task=f"task[{item[2]}-{item[3]}]",
                inertia_evals=cache.fresh_evals - e0,
                busy_ms=(t1 - t0) * 1000.0,
                idle_ms=idle_ms,
            )
            st = stats[w]
            st.tasks.append(rec)
            st.busy_ms += rec.busy_ms
            st.idle_ms += rec.idle_ms
            last_done = t1
            results_q.put((w, ests, subs, None))

    threads = [
        threading.Thread(target=worker_loop, args=(w,), daemon=True) for w in range(workers)
    ]
    for t in threads:
        t.start()

    pending = deque([(a0, b0, k_lo, k_hi)])
    free = deque(range(workers))
    outstanding = 0
    results = {}
    first_error = None
    while pending or outstanding:
        while pending and free:
            w = free.popleft()
            inboxes[w].put(pending.popleft())
            outstanding += 1
        if not outstanding:
            break
        w, ests, subs, err = results_q.get()
        outstanding -= 1
        free.append(w)
        if err is not None:
            if first_error is None:
                first_error = err
            continue
        for est in ests:
            results[est.k] = est
        for sub in subs:
            if sub[2] <= sub[3]:
                pending.append(sub)
    for box in inboxes:
        box.put(None)
    for t in threads:
        t.join()
    wall = time.perf_counter() - t_start

    missing = [k for k in range(k_lo, k_hi + 1) if k not in results]
    if missing:
        exc = IncompleteSpectrum(missing)
        if first_error is not None:
            raise exc from first_error
        raise exc
    return ParallelResult(
        estimates=[results[k] for k in range(k_lo, k_hi + 1)],
        workers=stats,
        wall_time=wall,
        mode="master-worker",
    )


def efficiency_report(result):
    """Human-readable utilization table for a parallel solve."""
    lines = [
        f"mode={result.mode} workers={len(result.workers)} "
        f"wall={result.wall_time:.3f}s efficiency={result.efficiency():.1%}"
    ]
    for w in result.workers:
        lines.append(
            f"  worker {w.worker}: tasks={len(w.tasks)} evals={w.inertia_evals} "
            f"hits={w.cache_hits} busy={w.busy_ms:.1f}ms idle={w.idle_ms:.1f}ms"
        )
    total = sum(w.inertia_evals for w in result.workers)
    lines.append(f"  total inertia evaluations: {total}")
    return "\n".join(lines)
