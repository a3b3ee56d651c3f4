from .parid_logging import logging

import collections
import csv
import os

_logger = logging.getLogger(__name__)

HEADER         = ('image_id', 'individual_id', 'viewpoint', 'role', 'feature_path')
ROLE_DATABASE  = 'database'
ROLE_QUERY     = 'query'
ROLES          = (ROLE_DATABASE, ROLE_QUERY)


class ManifestError(Exception):

    def __init__(self, path, reason, line_number=None):
        location = path if line_number is None else '%s:%d' % (path, line_number)
        super(ManifestError, self).__init__('%s: %s' % (location, reason))
        self.path        = path
        self.reason      = reason
        self.line_number = line_number


ManifestEntry = collections.namedtuple('ManifestEntry', HEADER)


class Manifest(object):
    '''
    Ordered, duplicate-free list of images with their identity labels, role (database or
    query) and absolute feature file path.
    '''

    def __init__(self, entries, path=None):
        super(Manifest, self).__init__()
        self.path    = path
        self.entries = tuple(entries)
        self._index  = {}
        for entry in self.entries:
            if entry.image_id in self._index:
                raise ManifestError(path, 'duplicate image_id `%s\'' % entry.image_id)
            if entry.role not in ROLES:
                raise ManifestError(path, 'unknown role `%s\' for image `%s\'' % (entry.role, entry.image_id))
            self._index[entry.image_id] = entry

    def entry(self, image_id):
        return self._index[image_id]

    def database_entries(self):
        return tuple(e for e in self.entries if e.role == ROLE_DATABASE)

    def query_entries(self):
        return tuple(e for e in self.entries if e.role == ROLE_QUERY)

    def has_viewpoints(self):
        return any(e.viewpoint for e in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, image_id):
        return image_id in self._index


def load_manifest(path):
    '''
    Read a manifest CSV. Relative feature paths are resolved against the manifest's directory
    and every referenced file must exist.

    :raises ManifestError: missing file, bad header, duplicate image_id, unknown role, or missing feature file
    '''
    if not os.path.isfile(path):
        raise ManifestError(path, 'manifest file does not exist')

    base    = os.path.dirname(os.path.abspath(path))
    seen    = set()
    entries = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ManifestError(path, 'expected header `%s\' but got `%s\'' % (','.join(HEADER), header and ','.join(header)), line_number=1)
        for line_number, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(HEADER):
                raise ManifestError(path, 'expected %d columns but got %d' % (len(HEADER), len(row)), line_number=line_number)
            image_id, individual_id, viewpoint, role, feature_path = (cell.strip() for cell in row)
            if not image_id:
                raise ManifestError(path, 'empty image_id', line_number=line_number)
            if image_id in seen:
                raise ManifestError(path, 'duplicate image_id `%s\'' % image_id, line_number=line_number)
            if role not in ROLES:
                raise ManifestError(path, 'unknown role `%s\', expected one of %s' % (role, ROLES), line_number=line_number)
            if role == ROLE_DATABASE and not individual_id:
                raise ManifestError(path, 'database image `%s\' has no individual_id' % image_id, line_number=line_number)
            resolved = feature_path if os.path.isabs(feature_path) else os.path.join(base, feature_path)
            if not os.path.isfile(resolved):
                raise ManifestError(path, 'feature file `%s\' for image `%s\' does not exist' % (resolved, image_id), line_number=line_number)
            seen.add(image_id)
            entries.append(ManifestEntry(image_id, individual_id, viewpoint, role, resolved))

    manifest = Manifest(entries, path=path)
    _logger.debug('Loaded manifest %s: %d database and %d query images', path, len(manifest.database_entries()), len(manifest.query_entries()))
    return manifest


def write_manifest(manifest, path):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(HEADER)
        for entry in manifest:
            feature_path = os.path.relpath(entry.feature_path, base) if os.path.isabs(entry.feature_path) else entry.feature_path
            writer.writerow((entry.image_id, entry.individual_id or '', entry.viewpoint or '', entry.role, feature_path.replace(os.sep, '/')))
