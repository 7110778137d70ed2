"""Monte Carlo estimation of the component constants and critical-point densities.

Each realization is sampled from its own seed (``mix_seed(master_seed, i)``),
swept, audited and reduced to a small summary.  Summaries are combined in
realization order, so a config reproduces its report bit for bit whatever
the thread count.
"""

import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from joblib import Parallel, delayed

from exlb import bounds, closed_form, field_sampler, grid_topology
from exlb.field_sampler import DEFAULT_RPW_DIRECTIONS, GridSpec, mix_seed
from exlb.grid_topology import EventKind
from exlb.module_utils.errors import ConfigError, IdentityViolation


log = logging.getLogger(__name__)

Z95 = 1.959963984540054
DEFAULT_BINS = np.round(np.arange(-4.0, 4.0 + 1e-9, 0.1), 10)
BULK_LEVEL = 2.5
# Dual connectivity biases c_NS(l) against c_NS(-l), and 2 c_ES(0) against
# c_NS(0), by a few percent.
CONNECTIVITY_ALLOWANCE = 0.1

CURVE_COLUMNS = ('level', 'c_ns_hat', 'c_es_hat', 'c_es_lower_hat',
                 'ci_ns', 'ci_es', 'ci_es_lower', 'var_ns', 'var_es')
HISTOGRAM_COLUMNS = ('bin_lo', 'bin_hi', 'p_max_hat', 'p_min_hat',
                     'p_lower_saddle_hat', 'p_upper_saddle_hat', 'p_saddle_hat')

_KIND_ORDER = (EventKind.MAX, EventKind.MIN, EventKind.LOWER_SADDLE, EventKind.UPPER_SADDLE)


@dataclass
class EstimatorConfig:
    measure: object
    spec: GridSpec
    n_realizations: int
    levels: np.ndarray
    bins: np.ndarray = dc_field(default_factory=lambda: DEFAULT_BINS.copy())
    master_seed: int = 7
    connectivity: tuple = (8, 4)
    label: str = ''
    rpw_directions: int = DEFAULT_RPW_DIRECTIONS
    padding: int = 2
    threads: int = 1

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        self.bins = np.asarray(self.bins, dtype=float)
        if self.n_realizations < 1:
            raise ConfigError('Need at least one realization')
        if self.levels.ndim != 1 or not len(self.levels):
            raise ConfigError('Need a nonempty list of levels')
        if np.any(np.diff(self.levels) <= 0):
            raise ConfigError('Levels must be strictly increasing')
        if len(self.bins) < 2 or np.any(np.diff(self.bins) <= 0):
            raise ConfigError('Histogram bin edges must be strictly increasing')
        if not self.label:
            self.label = self.measure.label or 'model'

    def with_spec(self, spec, **kwargs):
        return EstimatorConfig(**dict(self.echo(raw=True), spec=spec, **kwargs))

    def echo(self, raw=False):
        """The config as a dict; JSON-friendly unless ``raw``."""
        d = dict(
            measure=self.measure, spec=self.spec, n_realizations=self.n_realizations,
            levels=self.levels, bins=self.bins, master_seed=self.master_seed,
            connectivity=self.connectivity, label=self.label,
            rpw_directions=self.rpw_directions, padding=self.padding, threads=self.threads,
        )
        if raw:
            return d
        d.update(
            measure=self.measure.label, levels=self.levels.tolist(), bins=self.bins.tolist(),
            spec={'side_length': self.spec.side_length,
                  'points_per_side': self.spec.points_per_side,
                  'spacing': self.spec.spacing},
            connectivity=list(self.connectivity),
        )
        return d


@dataclass
class RealizationSummary:
    index: int
    seed: int
    counts: np.ndarray
    histograms: np.ndarray
    boundary_tangents: int
    max_abs_delta_all: int
    contained_excess: int


def realize(cfg, index):
    """Samples, sweeps and audits one realization."""
    seed = mix_seed(cfg.master_seed, index)
    fg = field_sampler.sample(cfg.measure, cfg.spec, seed,
                              rpw_directions=cfg.rpw_directions, padding=cfg.padding)
    sr = grid_topology.sweep(fg, *cfg.connectivity, levels=cfg.levels)
    try:
        audit = grid_topology.audit_morse_identity(sr, cfg.levels)
    except IdentityViolation as e:
        raise IdentityViolation('Realization {0} (seed {1}): {2}'.format(index, seed, e),
                                audit=e.audit)

    counts = np.array([sr.component_counts[float(lv)] for lv in cfg.levels], dtype=np.int64)
    inner = sr.interior()
    hist = np.zeros((len(_KIND_ORDER), len(cfg.bins) - 1))
    for i, kind in enumerate(_KIND_ORDER):
        sel = inner & (sr.kinds == kind)
        hist[i], _ = np.histogram(sr.levels[sel], bins=cfg.bins, weights=sr.multiplicity[sel])
    return RealizationSummary(index, seed, counts, hist, sr.boundary_tangents,
                              audit.max_abs_delta_all, audit.contained_excess)


@dataclass
class EstimatorReport:
    """Per-level constants (per unit area) and per-bin densities."""

    label: str
    levels: np.ndarray
    c_ns: np.ndarray
    c_es: np.ndarray
    c_es_lower: np.ndarray
    se_ns: np.ndarray
    se_es: np.ndarray
    se_es_lower: np.ndarray
    var_ns: np.ndarray
    var_es: np.ndarray
    bin_edges: np.ndarray
    p_max: np.ndarray
    p_min: np.ndarray
    p_lower_saddle: np.ndarray
    p_upper_saddle: np.ndarray
    counts: np.ndarray
    max_abs_delta_all: int
    max_contained_excess: int
    mean_boundary_tangents: float
    n_realizations: int
    master_seed: int
    interrupted: bool = False
    wall_time: float = 0.0
    config: dict = dc_field(default_factory=dict)

    @property
    def ci_ns(self):
        return Z95 * self.se_ns

    @property
    def ci_es(self):
        return Z95 * self.se_es

    @property
    def ci_es_lower(self):
        return Z95 * self.se_es_lower

    @property
    def p_saddle(self):
        return self.p_lower_saddle + self.p_upper_saddle

    @property
    def bin_centres(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_widths(self):
        return np.diff(self.bin_edges)

    def curve_rows(self):
        return np.column_stack([self.levels, self.c_ns, self.c_es, self.c_es_lower,
                                self.ci_ns, self.ci_es, self.ci_es_lower,
                                self.var_ns, self.var_es]).tolist()

    def histogram_rows(self):
        return np.column_stack([self.bin_edges[:-1], self.bin_edges[1:], self.p_max,
                                self.p_min, self.p_lower_saddle, self.p_upper_saddle,
                                self.p_saddle]).tolist()

    def empirical_tail(self, density, level):
        """Integral of a binned density over [level, inf)."""
        lo, hi = self.bin_edges[:-1], self.bin_edges[1:]
        overlap = np.clip(hi - np.maximum(lo, level), 0.0, None)
        return float(np.sum(density * overlap))

    def metadata(self):
        return {
            'label': self.label,
            'n_realizations': self.n_realizations,
            'master_seed': self.master_seed,
            'interrupted': self.interrupted,
            'wall_time': self.wall_time,
            'config': self.config,
            'audit': {
                'max_abs_delta_all': self.max_abs_delta_all,
                'max_contained_excess': self.max_contained_excess,
                'mean_boundary_tangents': self.mean_boundary_tangents,
            },
        }


def _se(x):
    if len(x) < 2:
        return np.full(x.shape[1:], np.nan)
    return x.std(axis=0, ddof=1) / math.sqrt(len(x))


def _var(x):
    if len(x) < 2:
        return np.full(x.shape[1:], np.nan)
    return x.var(axis=0, ddof=1)


def reduce_summaries(cfg, summaries, interrupted=False, wall_time=0.0):
    """Combines realization summaries, in index order, into a report."""
    summaries = sorted(summaries, key=lambda s: s.index)
    if not summaries:
        raise ConfigError('No realizations completed')
    area = cfg.spec.area
    interior_area = ((cfg.spec.points_per_side - 2) * cfg.spec.spacing) ** 2
    counts = np.stack([s.counts for s in summaries])
    per_area = counts / area
    hist = np.sum([s.histograms for s in summaries], axis=0)
    dens = hist / (len(summaries) * interior_area * np.diff(cfg.bins))

    return EstimatorReport(
        label=cfg.label,
        levels=cfg.levels,
        c_ns=per_area[:, :, 4].mean(axis=0),
        c_es=per_area[:, :, 1].mean(axis=0),
        c_es_lower=per_area[:, :, 3].mean(axis=0),
        se_ns=_se(per_area[:, :, 4]),
        se_es=_se(per_area[:, :, 1]),
        se_es_lower=_se(per_area[:, :, 3]),
        var_ns=_var(per_area[:, :, 4]),
        var_es=_var(per_area[:, :, 1]),
        bin_edges=cfg.bins,
        p_max=dens[0],
        p_min=dens[1],
        p_lower_saddle=dens[2],
        p_upper_saddle=dens[3],
        counts=counts,
        max_abs_delta_all=int(max(s.max_abs_delta_all for s in summaries)),
        max_contained_excess=int(max(s.contained_excess for s in summaries)),
        mean_boundary_tangents=float(np.mean([s.boundary_tangents for s in summaries])),
        n_realizations=len(summaries),
        master_seed=cfg.master_seed,
        interrupted=interrupted,
        wall_time=wall_time,
        config=cfg.echo(),
    )


def estimate_curves(cfg):
    """Runs every realization of ``cfg`` and returns the report.

    A keyboard interrupt stops the run; the realizations finished so far
    are reduced into a report flagged ``interrupted``.
    """
    cfg.spec.check_resolution(cfg.measure)
    started = time.time()
    summaries = []
    interrupted = False
    log.debug('estimating %s: %d realizations on %d^2 points, %d threads', cfg.label,
              cfg.n_realizations, cfg.spec.points_per_side, cfg.threads)
    runner = Parallel(n_jobs=cfg.threads, backend='threading', return_as='generator')
    results = runner(delayed(realize)(cfg, i) for i in range(cfg.n_realizations))
    try:
        for summary in results:
            summaries.append(summary)
            if len(summaries) % 50 == 0:
                log.debug('%d of %d realizations done', len(summaries), cfg.n_realizations)
    except KeyboardInterrupt:
        interrupted = True
        log.warning('Interrupted after %d of %d realizations', len(summaries),
                    cfg.n_realizations)
        if not summaries:
            raise
    return reduce_summaries(cfg, summaries, interrupted=interrupted,
                            wall_time=time.time() - started)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.divide(np.abs(a - b), scale, out=np.zeros_like(scale), where=scale > 0)


@dataclass
class IdentityCheck:
    levels: np.ndarray
    c_es_hat: np.ndarray
    closed_side: np.ndarray
    empirical_side: np.ndarray
    rel_closed: np.ndarray
    rel_empirical: np.ndarray
    saddle_rel_sup: float


def integral_identity_check(report, cf):
    """Compares c_ES-hat with the tail integral of p_max - p_lower_saddle.

    ``closed_side`` uses the closed-form maxima density, ``empirical_side``
    the histogrammed one.  ``saddle_rel_sup`` is the largest relative gap
    between the binned saddle density and the closed form over bulk bins.
    """
    closed, empirical = [], []
    for level in report.levels:
        lower = report.empirical_tail(report.p_lower_saddle, level)
        closed.append(closed_form.tail_integral('m+', level, cf) - lower)
        empirical.append(report.empirical_tail(report.p_max, level) - lower)
    closed = np.array(closed)
    empirical = np.array(empirical)

    lo, hi = report.bin_edges[:-1], report.bin_edges[1:]
    bulk = (lo >= -BULK_LEVEL) & (hi <= BULK_LEVEL)
    bin_mean = ((closed_form.tail_integral('s', lo[bulk], cf)
                 - closed_form.tail_integral('s', hi[bulk], cf)) / (hi - lo)[bulk])
    saddle_rel = _rel(report.p_saddle[bulk], bin_mean)

    return IdentityCheck(
        levels=report.levels,
        c_es_hat=report.c_es,
        closed_side=closed,
        empirical_side=empirical,
        rel_closed=_rel(report.c_es, closed),
        rel_empirical=_rel(report.c_es, empirical),
        saddle_rel_sup=float(saddle_rel.max()) if saddle_rel.size else 0.0,
    )


def maxima_density_check(report, cf, tolerance=0.05, significance=0.05):
    """Binned maxima density against the closed form over bulk bins.

    Only bins whose closed-form mass exceeds ``significance`` times the
    largest bin are compared.
    """
    lo, hi = report.bin_edges[:-1], report.bin_edges[1:]
    bulk = (lo >= -BULK_LEVEL) & (hi <= BULK_LEVEL)
    bin_mean = ((closed_form.tail_integral('m+', lo[bulk], cf)
                 - closed_form.tail_integral('m+', hi[bulk], cf)) / (hi - lo)[bulk])
    # Bins where the closed form is tiny are dominated by noise.
    sig = bin_mean > significance * bin_mean.max()
    worst = float(_rel(report.p_max[bulk][sig], bin_mean[sig]).max()) if sig.any() else 0.0
    return CheckResult('maxima_density', worst <= tolerance, worst, tolerance)


@dataclass
class ScalingTable:
    sides: np.ndarray
    levels: np.ndarray
    mean_ces: np.ndarray
    var_ces: np.ndarray
    intercept: np.ndarray
    slope: np.ndarray
    variance_ratio: np.ndarray
    reports: list = dc_field(default_factory=list, repr=False)


def spec_for_side(cfg, side):
    """A grid of the given side with the spacing of ``cfg.spec``."""
    n = int(round(side / cfg.spec.spacing)) + 1
    return GridSpec(float(side), n)


def convergence_diagnostics(cfg, sides):
    """Fits E[N_ES] / Area against 1 / side for every level.

    The intercept estimates c_ES and the slope the boundary coefficient.
    ``variance_ratio[i]`` is var(N/Area) at ``sides[i + 1]`` over that at
    ``sides[i]``.
    """
    sides = np.asarray(sorted(sides), dtype=float)
    if len(sides) < 3:
        raise ConfigError('convergence_diagnostics needs at least three window sides')
    reports = [estimate_curves(cfg.with_spec(spec_for_side(cfg, s))) for s in sides]
    mean = np.stack([r.c_es for r in reports])
    var = np.stack([r.var_es for r in reports])
    slope, intercept = np.polyfit(1.0 / sides, mean, 1)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = var[1:] / var[:-1]
    return ScalingTable(sides, cfg.levels, mean, var, intercept, slope, ratio, reports)


def _paired(report):
    idx = {round(float(lv), 9): i for i, lv in enumerate(report.levels)}
    return [(idx[k], idx[round(-k, 9)]) for k in sorted(idx) if k > 0 and round(-k, 9) in idx]


def symmetry_and_monotonicity_checks(report, lam=None):
    """Symmetry of c_NS, c_NS(0) = 2 c_ES(0) and decrease beyond sqrt(2) / lam."""
    checks = []
    pairs = _paired(report)
    if not pairs:
        raise ConfigError('Symmetry checks need a level grid symmetric about 0')
    worst, worst_tol = 0.0, 0.0
    ok = True
    for i, j in pairs:
        diff = abs(report.c_ns[i] - report.c_ns[j])
        tol = (3.0 * math.hypot(report.se_ns[i], report.se_ns[j])
               + CONNECTIVITY_ALLOWANCE * max(report.c_ns[i], report.c_ns[j]))
        ok &= bool(diff <= tol)
        if diff - tol > worst - worst_tol:
            worst, worst_tol = diff, tol
    checks.append(CheckResult('cns_symmetry', ok, worst, worst_tol))

    zero = np.nonzero(np.isclose(report.levels, 0.0, atol=1e-12))[0]
    if zero.size:
        z = zero[0]
        diff = abs(report.c_ns[z] - 2.0 * report.c_es[z])
        tol = (3.0 * math.hypot(report.se_ns[z], 2.0 * report.se_es[z])
               + CONNECTIVITY_ALLOWANCE * report.c_ns[z])
        checks.append(CheckResult('cns_twice_ces_at_zero', bool(diff <= tol), diff, tol))

    if lam is not None:
        threshold = bounds.monotone_threshold(lam)
        beyond = np.nonzero(report.levels > threshold)[0]
        rise = 0.0
        for a, b in zip(beyond[:-1], beyond[1:]):
            noise = 3.0 * math.hypot(report.se_ns[a], report.se_ns[b])
            rise = max(rise, report.c_ns[b] - report.c_ns[a] - noise)
        checks.append(CheckResult('cns_decreasing', rise <= 0.0, rise, 0.0,
                                  'levels above {0:.4g}'.format(threshold)))
    return checks


def bounds_envelope_checks(report, lam, eta_sq, max_level=BULK_LEVEL):
    """c_ES-hat above the difference bound and c_NS-hat inside its envelope."""
    det = closed_form.isotropic_det(lam, eta_sq)
    sel = (report.levels >= 0) & (report.levels <= max_level)
    levels = report.levels[sel]
    lower_es = bounds.ces_lower(levels, det) - 3.0 * report.se_es[sel]
    upper_ns = bounds.cns_upper(levels, lam, eta_sq) + 3.0 * report.se_ns[sel]
    lower_ns = bounds.cns_lower(levels, det) - 3.0 * report.se_ns[sel]
    gap_es = float(np.max(lower_es - report.c_es[sel], initial=-np.inf))
    gap_upper = float(np.max(report.c_ns[sel] - upper_ns, initial=-np.inf))
    gap_lower = float(np.max(lower_ns - report.c_ns[sel], initial=-np.inf))
    return [
        CheckResult('ces_above_lower_bound', gap_es <= 0, gap_es, 0.0),
        CheckResult('cns_below_upper_bound', gap_upper <= 0, gap_upper, 0.0),
        CheckResult('cns_above_lower_bound', gap_lower <= 0, gap_lower, 0.0),
    ]


@dataclass
class ResolutionStudy:
    resolutions: np.ndarray
    levels: np.ndarray
    c_ns: np.ndarray
    saddle_density: np.ndarray
    reports: list = dc_field(default_factory=list, repr=False)

    def rows(self):
        out = []
        for res, c_ns, sd in zip(self.resolutions, self.c_ns, self.saddle_density):
            out.extend([float(res), float(lv), float(c), float(sd)]
                       for lv, c in zip(self.levels, c_ns))
        return out


def resolution_study(cfg, resolutions=(4.0, 6.0, 8.0)):
    """Re-runs ``cfg`` at several points-per-wavelength on the same window."""
    reports = []
    for ppw in resolutions:
        spec = GridSpec.for_measure(cfg.measure, cfg.spec.side_length, ppw)
        reports.append(estimate_curves(cfg.with_spec(spec)))
    saddle = [float(np.sum(r.p_saddle * r.bin_widths)) for r in reports]
    return ResolutionStudy(np.asarray(resolutions, dtype=float), cfg.levels,
                           np.stack([r.c_ns for r in reports]), np.asarray(saddle), reports)


def report_stem(report):
    return '{0}-{1}'.format(report.label, report.master_seed)


def write_report(report, out_dir, checks=(), extra=None):
    """Writes the JSON report, the curve and histogram CSVs and their charts."""
    from exlb.module_utils.output import render_linechart, write_csv

    stem = report_stem(report)
    files = []
    doc = report.metadata()
    doc['checks'] = [asdict(c) for c in checks]
    if extra:
        doc.update(extra)
    path = os.path.join(out_dir, 'report-{0}.json'.format(stem))
    with open(path, 'w') as fd:
        json.dump(doc, fd, indent=2, sort_keys=True, default=_jsonable)
    files.append(path)

    files.append(write_csv(os.path.join(out_dir, 'curves-{0}.csv'.format(stem)),
                           'curves/1', list(CURVE_COLUMNS), report.curve_rows()))
    files.append(write_csv(os.path.join(out_dir, 'histograms-{0}.csv'.format(stem)),
                           'histograms/1', list(HISTOGRAM_COLUMNS), report.histogram_rows()))
    files.append(render_linechart(
        os.path.join(out_dir, 'curves-{0}.svg'.format(stem)),
        'Component constants, {0}'.format(report.label), report.levels,
        {'c_NS': report.c_ns, 'c_ES': report.c_es, 'c_ES (sublevel)': report.c_es_lower},
        ylabel='per unit area'))
    files.append(render_linechart(
        os.path.join(out_dir, 'histograms-{0}.svg'.format(stem)),
        'Critical point densities, {0}'.format(report.label), report.bin_centres,
        {'max': report.p_max, 'min': report.p_min,
         'lower saddle': report.p_lower_saddle, 'upper saddle': report.p_upper_saddle},
        ylabel='per unit area per unit level'))
    return files


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)
