import numpy as np


class Embedding(object):
    '''
    Fixed-length appearance vector of one image. Unit L2 norm unless ``degenerate``, in
    which case it is all zeros (the image had no usable features or projected to zero).
    '''

    def __init__(self, values, degenerate=False):
        super(Embedding, self).__init__()
        values = np.array(values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError('Embedding values must be finite')
        values.setflags(write=False)
        self.values     = values
        self.degenerate = bool(degenerate)

    @staticmethod
    def from_vector(vector):
        '''
        Unit-normalize ``vector``; an exactly zero vector becomes a degenerate embedding.
        '''
        vector = np.asarray(vector, dtype=np.float64).ravel()
        norm   = np.linalg.norm(vector)
        if norm == 0:
            return Embedding.degenerate_of(vector.shape[0])
        return Embedding(vector / norm)

    @staticmethod
    def degenerate_of(dim):
        return Embedding(np.zeros(dim), degenerate=True)

    @property
    def dim(self):
        return self.values.shape[0]

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        return isinstance(other, Embedding) and self.degenerate == other.degenerate and np.array_equal(self.values, other.values)

    def __repr__(self):
        return 'Embedding(dim=%d, degenerate=%s)' % (self.dim, self.degenerate)
