"""Exception hierarchy shared across modules.

The CLI maps these onto process exit codes.
"""

__all__ = [
    'ICUPolicyError',
    'ConfigError',
    'DataError',
    'NumericError',
    'MissingArtifact',
]


class ICUPolicyError(Exception):
    exit_code = 1


class ConfigError(ICUPolicyError, ValueError):
    """Invalid configuration value or unknown key.

    :param str field: Dotted name of the offending field (eg. 'sim.n_patients')
    """
    exit_code = 2

    def __init__(self, field, msg):
        ICUPolicyError.__init__(self, '%s: %s' % (field, msg))
        self.field = field


class DataError(ICUPolicyError, ValueError):
    """Input data violates a documented precondition
    """


class NumericError(ICUPolicyError, ArithmeticError):
    exit_code = 4


class MissingArtifact(ICUPolicyError, IOError):
    """A file produced by an earlier pipeline stage is absent.

    :param str path: The missing file
    :param str command: CLI command which produces it
    """
    exit_code = 3

    def __init__(self, path, command):
        ICUPolicyError.__init__(self, 'Missing %s, run %s first' % (path, command))
        self.path = path
        self.command = command
