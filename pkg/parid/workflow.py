from .parid_logging import logging

import queue
import threading

from .threading import CountDownLatch, ProgressCounter


class QueryWorkflow(object):
    '''
    Runs ``task(item)`` for every item on ``workers`` threads fed from a queue and returns the
    results in input order, so the output does not depend on the worker count. The first
    exception raised by a task is re-raised once all workers stopped.
    '''

    def __init__(self, task, workers=1, what='queries'):
        super(QueryWorkflow, self).__init__()
        if workers < 1:
            raise ValueError('Number of workers must be positive but got %d' % workers)
        self.logger  = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.task    = task
        self.workers = workers
        self.what    = what

    def map(self, items):
        items    = list(items)
        results  = [None] * len(items)
        progress = ProgressCounter(len(items), what=self.what)
        if self.workers == 1 or len(items) <= 1:
            for index, item in enumerate(items):
                results[index] = self.task(item)
                progress.step(index)
            return results

        tasks = queue.Queue()
        for index_and_item in enumerate(items):
            tasks.put(index_and_item)
        latch  = CountDownLatch(len(items))
        errors = []
        lock   = threading.Lock()

        def work():
            while True:
                try:
                    index, item = tasks.get_nowait()
                except queue.Empty:
                    return
                try:
                    if not errors:
                        results[index] = self.task(item)
                        progress.step(index)
                except Exception as e:
                    self.logger.error('Task %d failed with %s: %s', index, type(e).__name__, e)
                    with lock:
                        errors.append(e)
                finally:
                    latch.count_down()

        n_threads = min(self.workers, len(items))
        self.logger.debug('Starting %d workers for %d %s', n_threads, len(items), self.what)
        threads = [threading.Thread(target=work, name='parid-worker-%d' % i, daemon=True) for i in range(n_threads)]
        for thread in threads:
            thread.start()
        latch.wait_for_countdown()
        for thread in threads:
            thread.join()
        if errors:
            raise errors[0]
        return results
