import logging

trace = logging.DEBUG - 5
logging.TRACE = trace
logging.addLevelName(trace, 'TRACE')


class ParidLogger(logging.getLoggerClass()):
    def trace(self, msg, *args, **kwargs):
        if self.isEnabledFor(trace):
            self._log(trace, msg, args, **kwargs)
logging.setLoggerClass(ParidLogger)

levels = ('NOTSET', 'TRACE', 'DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def configure(level_name='INFO'):
    logging.basicConfig(
        level=logging.getLevelName(level_name),
        format='%(asctime)s %(levelname)-5s %(name)s: %(message)s')
