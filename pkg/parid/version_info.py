__major__   = 0
__minor__   = 3
__patch__   = 0
__tag__     = ''
__version__ = f'{__major__}.{__minor__}.{__patch__}.{__tag__}'.strip('.')

# bump whenever the corresponding on-disk format changes
_FORMAT_VERSIONS = dict(
    features=1,
    vocabulary=1,
    embeddings=1)


class _Version(object):

    def version(self):
        return __version__

    def format_version(self, name):
        return _FORMAT_VERSIONS[name]

    def describe(self):
        formats = ' '.join(f'{name}={number}' for name, number in sorted(_FORMAT_VERSIONS.items()))
        return f'{__version__} ({formats})'

    def __str__(self):
        return self.version()

_version = _Version()
