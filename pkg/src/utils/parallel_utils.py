# coding=utf-8

import multiprocessing

from joblib import Parallel, delayed

from .. import settings


def get_number_of_parallel_jobs(override_max=None):
    # type: (int) -> int

    """
    Returns the number of parallel jobs by inspecting the available CPU
    count.

    # Arguments
        :param override_max: maximum number of jobs which overrides the number in settings, None if settings max used
    # Returns
        :return: number of jobs that scales well for the platform
    """
    num_cores = multiprocessing.cpu_count()

    if override_max is None:
        return max(1, min(num_cores, settings.MAX_NUMBER_OF_JOBS))

    return max(1, min(num_cores, override_max))


def map_work_items(func, items, n_jobs=None):
    # type: (callable, list, int) -> list

    """
    Evaluates func for every item and returns the results in item order.
    Runs serially when parallel verification is disabled or a single job
    is requested.

    # Arguments
        :param func: function of one work item
        :param items: the work items
        :param n_jobs: number of jobs, None for get_number_of_parallel_jobs()
    # Returns
        :return: list of results
    """
    items = list(items)

    if n_jobs is None:
        n_jobs = get_number_of_parallel_jobs()

    if not settings.USE_PARALLEL_VERIFICATION or n_jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    return Parallel(n_jobs=n_jobs, backend='threading')(delayed(func)(item) for item in items)
