"""Static SVG scatter of the 2D embedding.
"""

import io
import logging

import matplotlib
matplotlib.use('Agg')
from matplotlib.figure import Figure
from matplotlib.backends.backend_agg import FigureCanvasAgg

from ..util import atomic_write

_log = logging.getLogger(__name__)

__all__ = [
    'scatter_svg',
]

# fixed ids in the SVG, so equal input gives equal bytes
HASHSALT = 'icupolicy'


def scatter_svg(coords, clusters, mortality_groups, intervention_groups, fname=None):
    """Three panels coloured by cluster, mortality risk group and total
    intervention score group.

    :param coords: (n, 2)
    :param fname: Written when given
    :returns: SVG bytes
    """
    panels = (
        ('K-means cluster', clusters, 'tab10'),
        ('Mortality risk group', mortality_groups, 'viridis'),
        ('Intervention score group', intervention_groups, 'plasma'),
    )
    with matplotlib.rc_context({'svg.hashsalt': HASHSALT, 'svg.fonttype': 'none'}):
        fig = Figure(figsize=(15, 5))
        FigureCanvasAgg(fig)
        for i, (title, colour, cmap) in enumerate(panels):
            ax = fig.add_subplot(1, 3, i+1)
            ax.scatter(coords[:,0], coords[:,1], c=colour, cmap=cmap, s=4, linewidths=0)
            ax.set_title(title)
            ax.set_xticks([])
            ax.set_yticks([])
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format='svg', metadata={'Date': None})
    raw = buf.getvalue()
    if fname is not None:
        atomic_write(fname, raw)
        _log.debug("Wrote %s", fname)
    return raw
