"""Small shared helpers: thread-capped map, RNG substreams, graph hashing."""

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    """Worker cap from CTR_THREADS (default 1). Results never depend on it."""
    raw = os.environ.get("CTR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Order-preserving map over independent items, honoring CTR_THREADS.

    Each item must be an independent pure computation; the output list is in
    input order, so the result is identical for any worker count.
    """
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for substream `index` of the stream rooted at `seed`.

    Substream k depends only on (seed, k), never on how many substreams are
    drawn, so sample counts and parallelism do not perturb each other.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def stable_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def graph_digest(document: dict) -> str:
    """sha256 over the canonical JSON form of a graph document."""
    return hashlib.sha256(stable_json(document).encode("utf-8")).hexdigest()
