"""gkzperiods computes limiting periods of hypersurface degenerations from GKZ Gamma series."""
import json
import logging
import os

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "GKZPERIODS"

DEFAULT_CONFIG = {
    "PRECISION": 128,
    "TRUNCATION": None,
    "TOLERANCE": 1e-10,
    "EPS_ORDER": None,
    "THREADS": 1,
    "SEED": 0,
    "LOG_LEVEL": "WARNING",
}


def load_config(test_config=None):
    """Create a new gkzperiods configuration."""
    config = dict(DEFAULT_CONFIG)

    if test_config is None:
        # load from environment when not testing
        load_dotenv()
        config.update(from_prefixed_env(ENV_PREFIX))
    else:
        # load the test config if passed in
        config.update(test_config)

    return config


def from_prefixed_env(prefix, environ=None):
    """Return all variables starting with the prefix, values parsed as JSON when possible."""
    environ = os.environ if environ is None else environ
    prefix = f"{prefix}_"
    values = {}
    for key in sorted(environ):
        if not key.startswith(prefix):
            continue
        value = environ[key]
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
        values[key[len(prefix) :]] = value
    if values:
        logger.debug("Configuration from environment: %s", sorted(values))
    return values
