"""
Store module level information like numerical defaults and the verbosity
"""
import logging
import os

from io import StringIO
import configparser

from .exceptions import ConfigError


logger = logging.getLogger(__name__)
logging.basicConfig(
    format='[%(levelname)s] [%(asctime)s:%(name)s] %('
           'message)s', datefmt='%H:%M:%S')

# Default values!
_defaults = {
    'clip': '0.01',
    'n_folds': '5',
    'reg': '1e-4',
    'max_iter': '10000',
    'tol': '1e-8',
    'overlap_threshold': '0.01',
    'verbosity': '0',
}

config_file = os.path.expanduser(os.path.join('~', '.fairrec', 'config'))

# Default values are actually added here in the _setup() function which is
# called at the end of this module
clip = float(_defaults['clip'])
n_folds = int(_defaults['n_folds'])
reg = float(_defaults['reg'])
max_iter = int(_defaults['max_iter'])
tol = float(_defaults['tol'])
# Propensities at or below this value mark a row as lacking overlap
overlap_threshold = float(_defaults['overlap_threshold'])
verbosity = int(_defaults['verbosity'])


def _setup():
    """Setup fairrec package. Called on first import.

    Reads the config file and sets the numerical defaults. Values can also be
    set by the user simply using
    fairrec.config.clip = 0.05
    """
    global clip
    global n_folds
    global reg
    global max_iter
    global tol
    global overlap_threshold
    global verbosity

    config = _parse_config()
    try:
        clip = config.getfloat('FAKE_SECTION', 'clip')
        n_folds = config.getint('FAKE_SECTION', 'n_folds')
        reg = config.getfloat('FAKE_SECTION', 'reg')
        max_iter = config.getint('FAKE_SECTION', 'max_iter')
        tol = config.getfloat('FAKE_SECTION', 'tol')
        overlap_threshold = config.getfloat('FAKE_SECTION', 'overlap_threshold')
        verbosity = config.getint('FAKE_SECTION', 'verbosity')
    except ValueError as e:
        raise ConfigError('invalid value: %s' % e, path=config_file)
    if not 0 <= clip < 0.5:
        raise ConfigError('clip must lie in [0, 0.5), got %r' % clip, path=config_file)
    if verbosity >= 2:
        logging.getLogger('fairrec').setLevel(logging.DEBUG)
    elif verbosity == 1:
        logging.getLogger('fairrec').setLevel(logging.INFO)


def _parse_config():
    """Parse the config file, set up defaults.
    """

    config = configparser.RawConfigParser(defaults=_defaults)

    # Cheat the ConfigParser module by adding a fake section header. The
    # section must exist even without a file so that the defaults resolve.
    config_file_ = StringIO()
    config_file_.write("[FAKE_SECTION]\n")
    if not os.path.exists(config_file):
        logger.debug("Could not find a configuration file at %s, using defaults."
                     % config_file)
    else:
        try:
            with open(config_file) as fh:
                for line in fh:
                    config_file_.write(line)
        except OSError as e:
            logger.info("Error opening file %s: %s", config_file, e)
    config_file_.seek(0)
    config.read_file(config_file_)
    return config


def get_defaults():
    """Get the current numerical defaults.

    Returns
    -------
    defaults : dict
        Mapping of setting name to its current value.
    """
    return {
        'clip': clip,
        'n_folds': n_folds,
        'reg': reg,
        'max_iter': max_iter,
        'tol': tol,
        'overlap_threshold': overlap_threshold,
        'verbosity': verbosity,
    }


__all__ = [
    'get_defaults',
]

_setup()
