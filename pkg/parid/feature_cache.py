from .parid_logging import logging

import threading

from .features import FeatureFileError, parse_feature_file


class FeatureCache(object):
    '''
    Parses every feature file at most once and hands out the labelled ``ImageFeatures``.
    Safe to share between query workers.
    '''

    def __init__(self):
        super(FeatureCache, self).__init__()
        self.logger   = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.features = {}
        self.lock     = threading.RLock()

    def get(self, entry):
        with self.lock:
            cached = self.features.get(entry.image_id)
        if cached is not None:
            return cached

        features = parse_feature_file(entry.feature_path)
        if features.image_id != entry.image_id:
            raise FeatureFileError(entry.feature_path, 2, 'image id `%s\' does not match manifest image id `%s\'' % (features.image_id, entry.image_id))
        features = features.with_labels(entry.individual_id, entry.viewpoint)
        self.logger.trace('Loaded %s', features)

        with self.lock:
            return self.features.setdefault(entry.image_id, features)

    def get_all(self, entries):
        return [self.get(entry) for entry in entries]

    def __len__(self):
        with self.lock:
            return len(self.features)
