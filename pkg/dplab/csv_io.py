import collections
import datetime
import json
import os

import numpy as np

from dplab.utils import DomainError, sha256_file
from dplab.version import version as __version__

import logging
logger = logging.getLogger(__name__)


FLOAT_FORMAT = "%.17g"  # round-trips every double
MANIFEST_FILENAME = "manifest.json"


RunManifest = collections.namedtuple("RunManifest", ["command", "config", "version", "seed", "timestamp", "outputs"])


def _jsonable(value):
    """Convert numpy scalars and arrays in run parameters to plain Python."""
    if isinstance(value, dict):
        return dict((key, _jsonable(val)) for key, val in value.items())
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(val) for val in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


class CSVDatabase(object):
    """A directory of CSV tables plus a manifest.json describing the run.

    Parameters
    ----------
    out_dir : str
        Output directory, created if missing.
    command : str
        The experiment command that produced the outputs.

    Notes
    -----
    Tables are written with a fixed float format and line terminator, so a
    rerun with the same parameters and seed reproduces every CSV byte for
    byte.  Only the manifest carries a timestamp.
    """
    def __init__(self, out_dir, command):
        if not os.path.isdir(out_dir):
            try:
                os.makedirs(out_dir)
            except OSError as error:
                raise DomainError("out", "cannot create output directory %s (%s)" % (out_dir, error))
        self.out_dir = out_dir
        self.command = command
        self.parameters = {}
        self.outputs = collections.OrderedDict()

    def store_parameters(self, parameters):
        """Store run parameters to be echoed in the manifest.

        Parameters
        ----------
        parameters : dict
            A dict containing ALL run parameters, defaults filled in.
        """
        logger.debug("Storing run parameters for %s..." % self.command)
        self.parameters = _jsonable(dict(parameters))

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def write(self, name, frame):
        """Write a DataFrame as `name` in the output directory and checksum it."""
        filename = self.path(name)
        frame.to_csv(filename, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.outputs[name] = sha256_file(filename)
        logger.info("Wrote %s (%d rows)" % (filename, len(frame)))
        return filename

    def manifest(self):
        return RunManifest(command=self.command,
                           config=self.parameters,
                           version=__version__,
                           seed=self.parameters.get("seed"),
                           timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
                           outputs=dict(self.outputs))

    def _finalize(self):
        """Write manifest.json alongside the outputs."""
        filename = self.path(MANIFEST_FILENAME)
        with open(filename, 'w') as handle:
            json.dump(self.manifest()._asdict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.debug("Wrote run manifest %s" % filename)
        return filename


def load_manifest(out_dir):
    """Read back the manifest.json of a run directory as a RunManifest."""
    with open(os.path.join(out_dir, MANIFEST_FILENAME)) as handle:
        return RunManifest(**json.load(handle))
