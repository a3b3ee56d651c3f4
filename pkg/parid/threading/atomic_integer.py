import threading


class AtomicInteger(object):

    def __init__(self, value=0):
        super(AtomicInteger, self).__init__()
        self._value = value
        self._lock  = threading.Lock()

    def increment_and_get(self):
        return self.add_and_get(1)

    def add_and_get(self, delta):
        with self._lock:
            self._value += delta
            return self._value

    def get_and_increment(self):
        with self._lock:
            value = self._value
            self._value += 1
        return value

    @property
    def value(self):
        with self._lock:
            return self._value
