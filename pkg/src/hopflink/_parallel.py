"""Order-preserving map over worker processes."""

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, tasks, workers=1):
    """``[fn(t) for t in tasks]``, optionally in ``workers`` processes.

    Results come back in task order, so any reduction over them is
    independent of the worker count.
    """
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))
