
import numpy

from ..errors import DataError

__all__ = [
    'quantile_groups',
]


def quantile_groups(values, n_groups):
    """Equal-count partition by rank.

    Patients are ranked by value, equal values keep their input order, and
    the patient of rank r joins group r*n_groups//n.  Group sizes differ by
    at most one.

    :returns: int array of group ids in [0, n_groups)
    :raises DataError: if there are fewer values than groups
    """
    values = numpy.asarray(values, dtype=numpy.float64).ravel()
    n = len(values)
    if n_groups<1:
        raise ValueError('n_groups must be >= 1')
    if n<n_groups:
        raise DataError('%d values cannot form %d groups'%(n, n_groups))
    order = numpy.argsort(values, kind='stable')
    ret = numpy.empty(n, dtype=numpy.int64)
    ret[order] = (numpy.arange(n)*n_groups)//n
    return ret
