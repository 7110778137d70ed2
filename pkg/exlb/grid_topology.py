"""Critical-event census and component counts of a sampled field.

Two union-find sweeps run over the vertices of the grid in rank order.  The
descending sweep grows the superlevel sets ``{f > l}``: a vertex with no
active neighbour starts a component (a ``Max``) and a vertex that joins
``k >= 2`` components is a ``LowerSaddle`` of multiplicity ``k - 1``.  The
ascending sweep does the same for sublevel sets ``{f < l}`` with ``Min``
and ``UpperSaddle``.

Vertices are ordered by ``(value, flat index)`` so ties never stall a sweep.
The superlevel and sublevel sweeps use dual connectivities (8 and 4, or 4
and 8).
"""

import enum
import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from exlb.module_utils.errors import ConfigError, IdentityViolation


log = logging.getLogger(__name__)

# Corners of the square window may each add one unmatched boundary extremum.
CORNER_SLACK = 2

_OFFSETS = {
    4: np.array([(-1, 0), (1, 0), (0, -1), (0, 1)], dtype=np.int64),
    8: np.array([(-1, 0), (1, 0), (0, -1), (0, 1),
                 (-1, -1), (-1, 1), (1, -1), (1, 1)], dtype=np.int64),
}
_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}

COUNT_COLUMNS = ('n_super_all', 'n_super_contained', 'n_sub_all',
                 'n_sub_contained', 'n_levelset_contained')


class EventKind(enum.IntEnum):
    MAX = 0
    MIN = 1
    LOWER_SADDLE = 2
    UPPER_SADDLE = 3

    @property
    def label(self):
        return _KIND_LABELS[self]


_KIND_LABELS = {
    EventKind.MAX: 'Max',
    EventKind.MIN: 'Min',
    EventKind.LOWER_SADDLE: 'LowerSaddle',
    EventKind.UPPER_SADDLE: 'UpperSaddle',
}


@dataclass(frozen=True)
class CriticalEvent:
    kind: EventKind
    level: float
    grid_index: int
    multiplicity: int = 1


@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _merge_sweep(order, n, offsets):
    """Activates vertices in ``order``; returns (vertex, merges) per event.

    ``merges`` is 0 for a vertex that starts a component and ``k - 1`` for a
    vertex joining ``k >= 2`` components.
    """
    size = n * n
    parent = np.full(size, -1, dtype=np.int64)
    ev_vertex = np.empty(size, dtype=np.int64)
    ev_merges = np.empty(size, dtype=np.int64)
    roots = np.empty(offsets.shape[0], dtype=np.int64)
    count = 0
    for i in range(size):
        v = order[i]
        r = v // n
        c = v - r * n
        parent[v] = v
        k = 0
        for o in range(offsets.shape[0]):
            rr = r + offsets[o, 0]
            cc = c + offsets[o, 1]
            if rr < 0 or rr >= n or cc < 0 or cc >= n:
                continue
            u = rr * n + cc
            if parent[u] < 0:
                continue
            root = _find(parent, u)
            seen = False
            for j in range(k):
                if roots[j] == root:
                    seen = True
                    break
            if not seen:
                roots[k] = root
                k += 1
        for j in range(k):
            parent[roots[j]] = v
        if k == 0 or k >= 2:
            ev_vertex[count] = v
            ev_merges[count] = k - 1 if k else 0
            count += 1
    return ev_vertex[:count], ev_merges[:count]


def _check_connectivity(connectivity_super, connectivity_sub):
    if connectivity_super not in _OFFSETS or connectivity_sub not in _OFFSETS:
        raise ConfigError('Connectivity must be 4 or 8')
    if connectivity_super == connectivity_sub:
        raise ConfigError('Superlevel and sublevel connectivities must be dual (4 and 8)')


def vertex_order(values):
    """Flat vertex indices sorted by (value, index)."""
    return np.argsort(np.asarray(values).ravel(), kind='stable')


def vertex_ranks(values):
    order = vertex_order(values)
    ranks = np.empty_like(order)
    ranks[order] = np.arange(order.size)
    return ranks.reshape(np.shape(values))


@dataclass
class SweepResult:
    """Critical events of one realization, sorted by level.

    The event table is held column-wise; :attr:`events` materialises it as
    :class:`CriticalEvent` objects.
    """

    kinds: np.ndarray
    levels: np.ndarray
    indices: np.ndarray
    multiplicity: np.ndarray
    boundary_tangents: int
    points_per_side: int
    connectivity: tuple = (8, 4)
    component_counts: dict = dc_field(default_factory=dict)
    field: object = dc_field(default=None, repr=False)

    @property
    def events(self):
        return [CriticalEvent(EventKind(k), float(lv), int(i), int(m))
                for k, lv, i, m in zip(self.kinds, self.levels, self.indices,
                                       self.multiplicity)]

    def of_kind(self, kind):
        """Levels and multiplicities of the events of one kind."""
        sel = self.kinds == kind
        return self.levels[sel], self.multiplicity[sel]

    def interior(self):
        """Mask of events whose vertex is not on the window boundary."""
        n = self.points_per_side
        r, c = np.divmod(self.indices, n)
        return (r > 0) & (r < n - 1) & (c > 0) & (c < n - 1)

    def weight_above(self, kind, levels):
        """Sum of multiplicities of ``kind`` events strictly above each level."""
        lv, mult = self.of_kind(kind)
        cum = np.concatenate([[0], np.cumsum(mult)])
        pos = np.searchsorted(lv, np.asarray(levels, dtype=float), side='right')
        return cum[-1] - cum[pos]

    def weight_below(self, kind, levels):
        """Sum of multiplicities of ``kind`` events strictly below each level."""
        lv, mult = self.of_kind(kind)
        cum = np.concatenate([[0], np.cumsum(mult)])
        pos = np.searchsorted(lv, np.asarray(levels, dtype=float), side='left')
        return cum[pos]

    def census_superlevel(self, levels):
        """#Max above l minus the LowerSaddle multiplicity above l."""
        return (self.weight_above(EventKind.MAX, levels)
                - self.weight_above(EventKind.LOWER_SADDLE, levels))

    def census_sublevel(self, levels):
        return (self.weight_below(EventKind.MIN, levels)
                - self.weight_below(EventKind.UPPER_SADDLE, levels))


def _values(field):
    values = getattr(field, 'values', field)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ConfigError('Field values must be a square array')
    return values


def sweep(field, connectivity_super=8, connectivity_sub=4, levels=None):
    """Runs both sweeps over ``field`` (a FieldGrid or a square array).

    With ``levels`` the labelled component counts at those levels are stored
    in ``component_counts``.
    """
    _check_connectivity(connectivity_super, connectivity_sub)
    values = _values(field)
    n = values.shape[0]
    flat = values.ravel()
    order = vertex_order(values)

    desc_v, desc_m = _merge_sweep(order[::-1].copy(), n, _OFFSETS[connectivity_super])
    asc_v, asc_m = _merge_sweep(order, n, _OFFSETS[connectivity_sub])

    kinds = np.concatenate([
        np.where(desc_m == 0, EventKind.MAX, EventKind.LOWER_SADDLE),
        np.where(asc_m == 0, EventKind.MIN, EventKind.UPPER_SADDLE),
    ]).astype(np.int8)
    indices = np.concatenate([desc_v, asc_v])
    mult = np.concatenate([np.maximum(desc_m, 1), np.maximum(asc_m, 1)])
    levels_ev = flat[indices]
    srt = np.argsort(levels_ev, kind='stable')

    sr = SweepResult(
        kinds=kinds[srt],
        levels=levels_ev[srt],
        indices=indices[srt],
        multiplicity=mult[srt],
        boundary_tangents=boundary_tangents(values),
        points_per_side=n,
        connectivity=(connectivity_super, connectivity_sub),
        field=field,
    )
    log.debug('sweep %dx%d: %d events, %d boundary tangents',
              n, n, len(srt), sr.boundary_tangents)
    if levels is not None:
        sr.component_counts.update(component_census(
            values, levels, connectivity_super, connectivity_sub))
    return sr


def _label(mask, connectivity):
    return ndimage.label(mask, structure=_STRUCTURES[connectivity])


def _border_labels(labels):
    edge = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    edge = np.unique(edge)
    return edge[edge > 0]


def count_components(field, level, set_kind='superlevel', containment='all',
                     connectivity=None):
    """Components of ``{f > level}`` or ``{f < level}``.

    ``contained`` drops components with a pixel on the window boundary.
    Connectivity defaults to 8 for superlevel and 4 for sublevel sets.
    """
    values = _values(field)
    if not np.isfinite(level):
        raise ValueError('Level must be finite')
    if set_kind == 'superlevel':
        mask = values > level
        connectivity = connectivity or 8
    elif set_kind == 'sublevel':
        mask = values < level
        connectivity = connectivity or 4
    else:
        raise ConfigError('set_kind must be superlevel or sublevel')
    if containment not in ('all', 'contained'):
        raise ConfigError('containment must be all or contained')

    labels, count = _label(mask, connectivity)
    if containment == 'contained':
        count -= len(_border_labels(labels))
    return int(count)


def _levelset_contained(lab_sup, n_sup, lab_sub, n_sub):
    """Contained level-set components from the super/sub adjacency graph.

    Nodes are the super- and sublevel components with every boundary-touching
    one collapsed into a single outer node; the answer is nodes minus graph
    components.
    """
    total = n_sup + n_sub + 1
    outer = total - 1
    node = np.arange(total)
    node[_border_labels(lab_sup) - 1] = outer
    node[n_sup + _border_labels(lab_sub) - 1] = outer

    sup = np.where(lab_sup > 0, lab_sup - 1, -1)
    sub = np.where(lab_sub > 0, n_sup + lab_sub - 1, -1)
    pairs = []
    for a, b in ((sup[:, :-1], sub[:, 1:]), (sub[:, :-1], sup[:, 1:]),
                 (sup[:-1, :], sub[1:, :]), (sub[:-1, :], sup[1:, :])):
        keep = (a >= 0) & (b >= 0)
        pairs.append(np.stack([node[a[keep]], node[b[keep]]], axis=1))
    pairs = np.concatenate(pairs)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(total, total))
    ncomp, _ = connected_components(graph, directed=False)
    return int(total - ncomp)


def count_level_components(field, level, connectivity_super=8, connectivity_sub=4):
    """Level-set components of ``{f = level}`` that avoid the window boundary."""
    _check_connectivity(connectivity_super, connectivity_sub)
    values = _values(field)
    if not np.isfinite(level):
        raise ValueError('Level must be finite')
    lab_sup, n_sup = _label(values > level, connectivity_super)
    lab_sub, n_sub = _label(values < level, connectivity_sub)
    return _levelset_contained(lab_sup, n_sup, lab_sub, n_sub)


def component_census(field, levels, connectivity_super=8, connectivity_sub=4):
    """All five component counts per level: ``{level: (n_super_all, ...)}``."""
    _check_connectivity(connectivity_super, connectivity_sub)
    values = _values(field)
    ans = {}
    for level in np.asarray(levels, dtype=float):
        lab_sup, n_sup = _label(values > level, connectivity_super)
        lab_sub, n_sub = _label(values < level, connectivity_sub)
        ans[float(level)] = (
            int(n_sup),
            int(n_sup - len(_border_labels(lab_sup))),
            int(n_sub),
            int(n_sub - len(_border_labels(lab_sub))),
            _levelset_contained(lab_sup, n_sup, lab_sub, n_sub),
        )
    return ans


def boundary_cycle(n):
    """Flat indices of the window boundary, clockwise from the top-left corner."""
    idx = np.arange(n * n).reshape(n, n)
    return np.concatenate([
        idx[0, :],
        idx[1:, -1],
        idx[-1, -2::-1],
        idx[-2:0:-1, 0],
    ])


def boundary_tangents(field):
    """Strict local extrema of the field restricted to the boundary cycle."""
    values = _values(field)
    n = values.shape[0]
    if n < 3:
        raise ConfigError('boundary_tangents needs at least 3 points per side')
    ranks = vertex_ranks(values).ravel()[boundary_cycle(n)]
    prev, nxt = np.roll(ranks, 1), np.roll(ranks, -1)
    peaks = (ranks > prev) & (ranks > nxt)
    pits = (ranks < prev) & (ranks < nxt)
    return int(peaks.sum() + pits.sum())


@dataclass
class MorseAudit:
    """Per-level comparison of labelled component counts with the sweep census."""

    levels: np.ndarray
    census_super: np.ndarray
    census_sub: np.ndarray
    n_super_all: np.ndarray
    n_super_contained: np.ndarray
    n_sub_all: np.ndarray
    n_sub_contained: np.ndarray
    boundary_tangents: int

    @property
    def delta_all(self):
        return self.n_super_all - self.census_super

    @property
    def delta_all_sub(self):
        return self.n_sub_all - self.census_sub

    @property
    def delta_contained(self):
        return self.n_super_contained - self.census_super

    @property
    def slack(self):
        return self.boundary_tangents + CORNER_SLACK

    @property
    def max_abs_delta_all(self):
        if not len(self.levels):
            return 0
        return int(max(np.abs(self.delta_all).max(), np.abs(self.delta_all_sub).max()))

    @property
    def contained_excess(self):
        """max |delta_contained| - slack; at most 0 when the boundary bound holds."""
        if not len(self.levels):
            return -self.slack
        return int(np.abs(self.delta_contained).max() - self.slack)

    @property
    def ok(self):
        return self.max_abs_delta_all == 0

    def to_dict(self):
        return {
            'levels': self.levels.tolist(),
            'delta_all': self.delta_all.tolist(),
            'delta_all_sub': self.delta_all_sub.tolist(),
            'delta_contained': self.delta_contained.tolist(),
            'boundary_tangents': self.boundary_tangents,
            'slack': self.slack,
        }


def audit_morse_identity(sr, levels):
    """Checks the integer census identity at every level.

    Raises IdentityViolation when a labelled count differs from the sweep
    census, and ValueError when a level coincides with an event level.
    """
    levels = np.asarray(levels, dtype=float)
    clash = np.intersect1d(levels, sr.levels)
    if clash.size:
        raise ValueError('Level {0!r} coincides with an event level'.format(float(clash[0])))

    missing = [lv for lv in levels if float(lv) not in sr.component_counts]
    if missing:
        if sr.field is None:
            raise ValueError('No component counts stored for level {0!r}'.format(missing[0]))
        sr.component_counts.update(component_census(sr.field, missing, *sr.connectivity))

    counts = np.array([sr.component_counts[float(lv)] for lv in levels],
                      dtype=np.int64).reshape(len(levels), len(COUNT_COLUMNS))
    audit = MorseAudit(
        levels=levels,
        census_super=sr.census_superlevel(levels),
        census_sub=sr.census_sublevel(levels),
        n_super_all=counts[:, 0],
        n_super_contained=counts[:, 1],
        n_sub_all=counts[:, 2],
        n_sub_contained=counts[:, 3],
        boundary_tangents=sr.boundary_tangents,
    )
    if not audit.ok:
        bad = np.nonzero((audit.delta_all != 0) | (audit.delta_all_sub != 0))[0][0]
        raise IdentityViolation(
            'Census identity fails at level {0:g}: {1} superlevel components against '
            'census {2}, {3} sublevel components against census {4}'.format(
                levels[bad], audit.n_super_all[bad], audit.census_super[bad],
                audit.n_sub_all[bad], audit.census_sub[bad]),
            audit=audit)
    return audit


def write_events_csv(path, sr):
    from exlb.module_utils.output import write_csv

    rows = ((EventKind(k).label, lv, i, m) for k, lv, i, m in
            zip(sr.kinds, sr.levels, sr.indices, sr.multiplicity))
    return write_csv(path, 'events/1', ['kind', 'level', 'grid_index', 'multiplicity'], rows)


def write_counts_csv(path, sr):
    from exlb.module_utils.output import write_csv

    rows = ([level] + list(counts) for level, counts in sorted(sr.component_counts.items()))
    return write_csv(path, 'counts/1', ['level'] + list(COUNT_COLUMNS), rows)
