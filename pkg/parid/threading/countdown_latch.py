from ..parid_logging import logging

import threading


class CountDownLatch(object):
    '''
    Blocks waiters until ``count_down`` was called ``count`` times.
    '''

    def __init__(self, count=1):
        super(CountDownLatch, self).__init__()
        self.logger = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.count  = count
        self.lock   = threading.Condition()

    def count_down(self):
        with self.lock:
            self.count -= 1
            self.logger.trace('Counted down to %d', self.count)
            if self.count <= 0:
                self.lock.notify_all()

    def get_count(self):
        with self.lock:
            return self.count

    def wait_for_countdown(self, timeout=None):
        '''

        :param timeout: in seconds, wait forever if ``None``
        :return: ``True`` if the count reached zero, ``False`` on timeout
        '''
        with self.lock:
            return self.lock.wait_for(lambda: self.count <= 0, timeout=timeout)
