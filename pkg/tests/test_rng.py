import numpy as np
import pytest

from src.config import THREADS_ENV
from src.errors import ConfigError
from src.rng import check_seed, derive_seed, replicate_chunks, resolve_threads, run_replicates, stream


def test_streams_are_addressed_by_seed_and_path():
    a = stream(1, 0).standard_normal(4)
    assert np.array_equal(a, stream(1, 0).standard_normal(4))
    assert not np.array_equal(a, stream(1, 1).standard_normal(4))
    assert not np.array_equal(a, stream(2, 0).standard_normal(4))


def test_seed_range():
    assert check_seed(2**64 - 1) == 2**64 - 1
    with pytest.raises(ConfigError):
        check_seed(-1)
    with pytest.raises(ConfigError):
        check_seed(2**64)


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(5, 8) == derive_seed(5, 8)
    assert derive_seed(5, 8) != derive_seed(5, 9)
    assert 0 <= derive_seed(5, 8) < 2**64


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads() == 1
    assert resolve_threads(3) == 3
    monkeypatch.setenv(THREADS_ENV, "4")
    assert resolve_threads() == 4
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_threads()
    with pytest.raises(ConfigError):
        resolve_threads(0)


def test_chunks_depend_only_on_the_count():
    chunks = replicate_chunks(130)
    assert [c.size for c in chunks] == [64, 64, 2]
    assert np.array_equal(np.concatenate(chunks), np.arange(130))


def test_run_replicates_keeps_index_order():
    def work(indices):
        return [stream(9, int(r)).integers(0, 1000) for r in indices]

    serial = [x for part in run_replicates(work, 100, threads=1, chunk_size=8) for x in part]
    pooled = [x for part in run_replicates(work, 100, threads=4, chunk_size=8) for x in part]
    assert serial == pooled
