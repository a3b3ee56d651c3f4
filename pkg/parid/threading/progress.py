from ..parid_logging import logging

from .atomic_integer import AtomicInteger


class ProgressCounter(object):
    '''
    Thread-safe completion counter that logs at INFO roughly every ``report_every`` fraction
    of ``total`` and at DEBUG for every step.
    '''

    def __init__(self, total, what='items', report_every=0.1):
        super(ProgressCounter, self).__init__()
        self.logger   = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.total    = total
        self.what     = what
        self.done     = AtomicInteger(0)
        self.interval = max(1, int(round(total * report_every)))

    def step(self, label=None):
        done = self.done.increment_and_get()
        self.logger.debug('Finished %s (%d/%d %s)', label, done, self.total, self.what)
        if done % self.interval == 0 or done == self.total:
            self.logger.info('Processed %d/%d %s', done, self.total, self.what)
        return done

    @property
    def value(self):
        return self.done.value
