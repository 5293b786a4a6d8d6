"""
Logging functionality. Configuration in `conf/logging.conf`.
"""

import os
import logging
import logging.config

from conf import conf

_CONFIGURED = False


def get_logger():
    """
    Return a standard logger for logging laboratory actions.

    If log directory did not exist, it is created. NB: the log directory is
    hard-coded, so if it is changed in the configuration, the directory is
    still created here.

    The configuration file is read only once per process.
    """
    # pylint: disable=global-statement
    global _CONFIGURED
    if not _CONFIGURED:
        if not os.path.isdir(conf.LOG_DIR):
            os.makedirs(conf.LOG_DIR)
        logging.config.fileConfig(conf.LOGGING_CONF,
                                  disable_existing_loggers=False)
        _CONFIGURED = True
    return logging.getLogger("fraclabLogger")
