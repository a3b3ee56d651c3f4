from .atomic_integer import AtomicInteger
from .countdown_latch import CountDownLatch
from .progress import ProgressCounter
