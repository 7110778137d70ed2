#!/usr/bin/env python
# -*- coding: utf-8 -*-

#  Copyright 2026 exlb contributors
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

METADATA = {'metadata_version': '1.1',
            'status': ['preview']}

DOCUMENTATION = '''
---
module: exlb_estimate
short_description: Monte Carlo estimates of the component constants.
description:
    - Samples I(reals) realizations of I(model) on a square window, sweeps each
      one, audits the census identity and writes per-level estimates of c_NS
      and c_ES with 95% confidence intervals, plus histogrammed critical point
      densities.
    - For the named isotropic models the estimates are checked against the
      closed-form densities and the analytic bounds; for measures supported on
      two lines through the origin against the exact degenerate constants.
      Failed checks are reported as warnings.
    - A census mismatch in any realization exits with status 2.
    - An interrupt keeps the realizations finished so far and writes a
      report flagged as interrupted.
options:
    reals:
        description:
            - Number of realizations.
        type: int
        default: 200
    levels:
        description:
            - Level grid as lo:hi:step or a comma separated list.
        default: "-3:3:0.1"
    bins:
        description:
            - Histogram bin edges for the critical point densities.
        default: "-4:4:0.1"
    threads:
        description:
            - Worker threads; defaults to the CPU count capped by EXLB_THREADS.
        type: int
    rpw_directions:
        description:
            - Number of equispaced directions for the random plane wave.
        type: int
        default: 256
    padding:
        description:
            - FFT padding factor for radial measures.
        type: int
        default: 2
    checks:
        description:
            - Compare the estimates with the analytic references.
        type: bool
        default: true
    resolution_study:
        description:
            - Repeat the run at 4, 6 and 8 points per wavelength.
        type: bool
        default: false
    convergence_sides:
        description:
            - Window sides for the finite-window scaling fit (at least three).
        type: list
'''

EXAMPLES = '''
- name: the random plane wave at the reference window
  exlb estimate --model rpw --side 120 --reals 200 --seed 7

- name: from a config file, with a scaling fit
  exlb estimate --config runs/bf.yml --convergence-sides 30,45,60,90
'''

RETURN = '''
interrupted:
    description: Whether the run was cut short by an interrupt.
    returned: success
    type: bool
n_realizations:
    description: Number of realizations in the report.
    returned: success
    type: int
checks:
    description: Name, verdict and value of every reference check.
    returned: success
    type: list
files:
    description: Files written to the output directory.
    returned: success
    type: list
'''

import os
from dataclasses import asdict

import numpy as np

from exlb import closed_form, degenerate, estimator
from exlb.module_utils.common import ExlbModule, get_runner, worker_count
from exlb.module_utils.errors import ConfigError
from exlb.module_utils.output import write_csv

IDENTITY_TOLERANCE = 0.05


def _isotropic_checks(report, name):
    cf = closed_form.ClosedFormDensities.for_model(name)
    ident = estimator.integral_identity_check(report, cf)
    sel = (np.abs(report.levels) <= estimator.BULK_LEVEL) & (
        report.c_es > 0.1 * report.c_es.max())
    worst = float(ident.rel_closed[sel].max()) if sel.any() else 0.0
    checks = [
        estimator.CheckResult('integral_identity', worst <= IDENTITY_TOLERANCE, worst,
                              IDENTITY_TOLERANCE),
        estimator.CheckResult('saddle_density', ident.saddle_rel_sup <= IDENTITY_TOLERANCE,
                              ident.saddle_rel_sup, IDENTITY_TOLERANCE),
        estimator.maxima_density_check(report, cf),
    ]
    if report.n_realizations > 1:
        checks.extend(estimator.bounds_envelope_checks(report, cf.lam, cf.eta_sq))
    return checks, cf.lam


def _degenerate_checks(report, measure):
    m = degenerate.DegenerateModel.from_measure(measure)
    exact = np.array([degenerate.ces_exact(lv, m) for lv in report.levels])
    gap = np.abs(report.c_es - exact) - 3.0 * report.se_es
    worst = float(np.nanmax(gap)) if len(gap) else 0.0
    return [estimator.CheckResult('degenerate_reference', worst <= 0.0, worst, 0.0)]


def reference_checks(report, measure, name):
    """Every check that applies to the measure; none for general atomic measures."""
    checks, lam = [], None
    if name in ('rpw', 'bargmann-fock'):
        checks, lam = _isotropic_checks(report, name)
    elif report.n_realizations > 1 and measure.degenerate:
        try:
            checks = _degenerate_checks(report, measure)
        except ConfigError:
            checks = []
    if report.n_realizations > 1:
        try:
            checks.extend(estimator.symmetry_and_monotonicity_checks(report, lam))
        except ConfigError:
            pass
    return checks


def main(argv=None):
    helper = get_runner(
        with_model=True,
        with_grid=True,
        with_output=True,
        with_seed=True,
        with_connectivity=True,
        argument_spec=dict(
            reals=dict(type='int', default=200),
            levels=dict(default='-3:3:0.1'),
            bins=dict(default='-4:4:0.1'),
            threads=dict(type='int'),
            rpw_directions=dict(type='int', default=256),
            padding=dict(type='int', default=2),
            checks=dict(type='bool', default=True),
            resolution_study=dict(type='bool', default=False),
            convergence_sides=dict(type='list', elements='float'),
        ),
    )

    module = ExlbModule('estimate', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    measure, label = helper.get_measure(module)
    spec = helper.get_grid(module, measure)
    levels = helper.get_levels(module)
    bins = helper.get_levels(module, 'bins')
    out = helper.get_output_dir(module)

    files = []
    extra = {}
    with helper.managed(module):
        threads = module.params['threads'] or worker_count()
        cfg = estimator.EstimatorConfig(
            measure=measure,
            spec=spec,
            n_realizations=module.params['reals'],
            levels=levels,
            bins=bins,
            master_seed=module.params['seed'],
            connectivity=helper.get_connectivity(module),
            label=label,
            rpw_directions=module.params['rpw_directions'],
            padding=module.params['padding'],
            threads=threads,
        )
        try:
            report = estimator.estimate_curves(cfg)
        except KeyboardInterrupt:
            module.fail_json(msg='Interrupted before any realization finished', rc=130)

        checks = reference_checks(report, measure, label) if module.params['checks'] else []
        for c in checks:
            if not c.passed:
                module.warn('Check {0} failed: {1:.4g} against tolerance {2:.4g}'.format(
                    c.name, c.value, c.tolerance))

        stem = estimator.report_stem(report)
        if module.params['resolution_study'] and not report.interrupted:
            study = estimator.resolution_study(cfg)
            files.append(write_csv(
                os.path.join(out, 'resolution-{0}.csv'.format(stem)), 'resolution/1',
                ['points_per_wavelength', 'level', 'c_ns_hat', 'saddle_density'],
                study.rows()))
            extra['resolution_study'] = {
                'points_per_wavelength': study.resolutions,
                'saddle_density': study.saddle_density,
            }
        if module.params['convergence_sides'] and not report.interrupted:
            table = estimator.convergence_diagnostics(cfg, module.params['convergence_sides'])
            files.append(write_csv(
                os.path.join(out, 'convergence-{0}.csv'.format(stem)), 'convergence/1',
                ['level', 'c_es_intercept', 'boundary_slope'],
                zip(table.levels, table.intercept, table.slope)))
            extra['convergence'] = {
                'sides': table.sides,
                'variance_ratio': table.variance_ratio,
            }

        files = estimator.write_report(report, out, checks, extra) + files

    if report.max_contained_excess > 0:
        module.warn('Contained counts exceed the boundary allowance by {0}'.format(
            report.max_contained_excess))
    if report.interrupted:
        module.warn('Interrupted after {0} of {1} realizations'.format(
            report.n_realizations, cfg.n_realizations))
    module.echo('{0}: {1} realizations on {2}^2 points in {3:.1f}s'.format(
        label, report.n_realizations, spec.points_per_side, report.wall_time))
    helper.finish(module, out, files)
    module.exit_json(changed=True, interrupted=report.interrupted,
                     n_realizations=report.n_realizations,
                     max_contained_excess=report.max_contained_excess,
                     checks=[asdict(c) for c in checks], files=files)


if __name__ == '__main__':
    main()
