import numpy as np
import pytest
from skimage import measure

from exlb import grid_topology
from exlb.grid_topology import EventKind
from exlb.module_utils.errors import ConfigError, IdentityViolation
from exlb.module_utils.output import read_csv


def _weight(sr, kind):
    return int(sr.multiplicity[sr.kinds == kind].sum())


def test_ridge_census(ridge):
    sr = grid_topology.sweep(ridge)
    assert _weight(sr, EventKind.MAX) == 9
    assert _weight(sr, EventKind.MIN) == 4
    assert _weight(sr, EventKind.LOWER_SADDLE) == 8
    assert _weight(sr, EventKind.UPPER_SADDLE) == 3


def test_single_bump(bump):
    sr = grid_topology.sweep(bump)
    assert _weight(sr, EventKind.MAX) == 1
    assert _weight(sr, EventKind.LOWER_SADDLE) == 0
    assert sr.indices[sr.kinds == EventKind.MAX][0] == 10 * 21 + 10


def test_events_sorted_by_level(noise):
    sr = grid_topology.sweep(noise)
    assert np.all(np.diff(sr.levels) >= 0)
    assert set(np.unique(sr.kinds)) <= set(int(k) for k in EventKind)
    ev = sr.events[0]
    assert ev.kind is EventKind(sr.kinds[0])
    assert ev.level == sr.levels[0]


@pytest.mark.parametrize('connectivity', [(8, 4), (4, 8)])
def test_whole_window_is_one_component(noise, connectivity):
    sr = grid_topology.sweep(noise, *connectivity)
    assert _weight(sr, EventKind.MAX) - _weight(sr, EventKind.LOWER_SADDLE) == 1
    assert _weight(sr, EventKind.MIN) - _weight(sr, EventKind.UPPER_SADDLE) == 1


def test_connectivity_duality(noise):
    a = grid_topology.sweep(noise, 8, 4)
    b = grid_topology.sweep(-noise, 4, 8)
    assert _weight(a, EventKind.MAX) == _weight(b, EventKind.MIN)
    assert _weight(a, EventKind.MIN) == _weight(b, EventKind.MAX)


def test_connectivity_must_be_dual(noise):
    with pytest.raises(ConfigError):
        grid_topology.sweep(noise, 8, 8)


def test_ties_broken_by_index():
    order = grid_topology.vertex_order(np.zeros((3, 3)))
    assert np.array_equal(order, np.arange(9))
    ranks = grid_topology.vertex_ranks(np.array([[1.0, 0.0], [1.0, 0.0]]))
    assert np.array_equal(ranks, [[2, 0], [3, 1]])


@pytest.mark.parametrize('level', [-1.0, -0.2, 0.0, 0.7, 1.5])
def test_counts_match_skimage(noise, level):
    sup = measure.label(noise > level, connectivity=2).max()
    sub = measure.label(noise < level, connectivity=1).max()
    assert grid_topology.count_components(noise, level) == sup
    assert grid_topology.count_components(noise, level, 'sublevel') == sub


def test_contained_counts(bump):
    assert grid_topology.count_components(bump, 0.5, containment='contained') == 1
    assert grid_topology.count_components(bump, 0.5, 'sublevel', 'contained') == 0
    assert grid_topology.count_level_components(bump, 0.5) == 1
    # The superlevel set reaches the boundary; no closed curve is left.
    assert grid_topology.count_level_components(bump, 1e-3) == 0


def test_nested_level_curves():
    xs = np.arange(31) - 15.0
    r = np.hypot(xs[None, :], xs[:, None])
    ring = np.cos(r / 2.0)
    assert grid_topology.count_level_components(ring, 0.0) == \
        grid_topology.count_components(ring, 0.0, containment='contained') + \
        grid_topology.count_components(ring, 0.0, 'sublevel', 'contained')


def test_level_components_match_closed_contours(noise):
    level = 0.3
    contours = measure.find_contours(noise, level, fully_connected='high')
    closed = sum(1 for c in contours if np.allclose(c[0], c[-1]))
    assert grid_topology.count_level_components(noise, level) == closed


def test_component_census(noise):
    census = grid_topology.component_census(noise, [-0.5, 0.5])
    assert sorted(census) == [-0.5, 0.5]
    for level, row in census.items():
        assert len(row) == len(grid_topology.COUNT_COLUMNS)
        assert row[0] == grid_topology.count_components(noise, level)
        assert row[1] <= row[0]
        assert row[3] <= row[2]


@pytest.mark.parametrize('values', [
    np.add.outer(2.0 * np.arange(12), np.arange(12.0)),
    np.zeros((12, 12)),
])
def test_boundary_tangents_of_trivial_fields(values):
    assert grid_topology.boundary_tangents(values) == 2


def test_boundary_cycle():
    assert list(grid_topology.boundary_cycle(3)) == [0, 1, 2, 5, 8, 7, 6, 3]


@pytest.mark.parametrize('connectivity', [(8, 4), (4, 8)])
def test_audit_holds(noise, connectivity):
    levels = np.linspace(-2.05, 2.05, 11)
    sr = grid_topology.sweep(noise, *connectivity, levels=levels)
    audit = grid_topology.audit_morse_identity(sr, levels)
    assert audit.ok
    assert audit.max_abs_delta_all == 0
    assert audit.contained_excess <= 0
    assert np.array_equal(audit.census_super, audit.n_super_all)


def test_audit_computes_missing_counts(ridge):
    sr = grid_topology.sweep(ridge)
    audit = grid_topology.audit_morse_identity(sr, [-1.5, 0.25, 1.5])
    assert audit.ok
    assert audit.to_dict()['slack'] == sr.boundary_tangents + grid_topology.CORNER_SLACK


def test_audit_rejects_event_levels(noise):
    sr = grid_topology.sweep(noise)
    with pytest.raises(ValueError):
        grid_topology.audit_morse_identity(sr, [sr.levels[5]])


def test_audit_catches_lost_events(noise, monkeypatch):
    merge_sweep = grid_topology._merge_sweep

    def drop_first(order, n, offsets):
        vertex, merges = merge_sweep(order, n, offsets)
        return vertex[1:], merges[1:]

    monkeypatch.setattr(grid_topology, '_merge_sweep', drop_first)
    sr = grid_topology.sweep(noise, levels=[0.1])
    with pytest.raises(IdentityViolation) as e:
        grid_topology.audit_morse_identity(sr, [0.1])
    assert e.value.audit is not None
    assert e.value.audit.delta_all[0] == 1


def test_write_event_and_count_tables(tmp_path, bump):
    sr = grid_topology.sweep(bump, levels=[0.5])
    schema, header, rows = read_csv(grid_topology.write_events_csv(
        str(tmp_path / 'events.csv'), sr))
    assert schema == 'events/1'
    assert header == ['kind', 'level', 'grid_index', 'multiplicity']
    assert rows[-1][0] == 'Max'
    schema, header, rows = read_csv(grid_topology.write_counts_csv(
        str(tmp_path / 'counts.csv'), sr))
    assert schema == 'counts/1'
    assert header == ['level'] + list(grid_topology.COUNT_COLUMNS)
    assert rows == [['0.5', '1', '1', '1', '0', '1']]
