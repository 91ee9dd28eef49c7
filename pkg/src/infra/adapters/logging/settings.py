import logging.config

from src.settings import get_settings

logger = logging.getLogger(__name__)

log_settings = get_settings().log_settings

# https://docs.python.org/3/library/logging.config.html#dictionary-schema-details
# stdout carries the CLI's JSON results, so every record goes to stderr
LOGGING_CONFIG = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': log_settings.log_format,
            'datefmt': log_settings.date_format,
        },
        'warnings': {
            'format': '%(asctime)s %(levelname)s [numerics] %(message)s',
            'datefmt': log_settings.date_format,
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'level': log_settings.log_level,
            'formatter': 'standard',
            'stream': 'ext://sys.stderr',
        },
        'numerics': {
            'class': 'logging.StreamHandler',
            'level': log_settings.log_level,
            'formatter': 'warnings',
            'stream': 'ext://sys.stderr',
        },
    },
    'root': {
        'level': log_settings.log_level,
        'handlers': ['console'],
    },
    'loggers': {
        'src': {
            'level': log_settings.log_level,
        },
        # numpy RuntimeWarnings (overflow, invalid value) after logging.captureWarnings
        'py.warnings': {
            'level': log_settings.log_level,
            'handlers': ['numerics'],
            'propagate': False,
        },
    },
}


def set_up_logger():
    logging.config.dictConfig(LOGGING_CONFIG)
    logging.captureWarnings(True)
    logger.debug('Logging configured at %s', log_settings.log_level)
