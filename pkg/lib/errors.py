# -*- coding: utf-8 -*-
"""Errors

Exception hierarchy shared by every module in the package. All errors derive
from ``SofrError`` so drivers can map them onto exit codes:

    * ConfigError (and DataFormatError) - configuration or IO problems, exit 2
    * any other SofrError - numerical failure, exit 1

"""


class SofrError(Exception):
    '''Base class for every error raised by the library'''


class InvalidArgumentError(SofrError, ValueError):
    '''An argument is outside the domain of the operation'''


class SingularSystemError(SofrError, ArithmeticError):
    '''
    A penalized linear system could not be factorized.

    Args:
        message (str): Module-qualified description
        penalty (float): The penalty (rho or lambda) in use, if any
    '''

    def __init__(self, message, penalty=None):
        super().__init__(message)
        self.penalty = penalty


class SingularVarianceError(SingularSystemError):
    '''
    A conditional variance block is not invertible, even after jitter.

    Args:
        message (str): Module-qualified description
        k (int): Dataset index of the offending block (0 = target)
    '''

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class NonConvergenceError(SofrError, ArithmeticError):
    '''
    An iterative solver hit its iteration cap.

    Args:
        message (str): Module-qualified description
        residual (float): Optimality residual at the last iterate
        iterations (int): Iterations performed
    '''

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateMetricError(SofrError, ArithmeticError):
    '''A relative error metric has a zero denominator'''


class ConfigError(SofrError, ValueError):
    '''
    Configuration or input problem.

    Args:
        message (str): Description
        key (str): Offending configuration key, if any
        line (int): 1-based line number in the config file, if any
    '''

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f'line {line}')
        if key is not None:
            where.append(f'key `{key}`')
        prefix = f'{", ".join(where)}: ' if where else ''
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class DataFormatError(ConfigError):
    '''A dataset file does not follow the expected CSV layout'''
