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
module: exlb_degenerate
short_description: Exact component constants of the degenerate five-atom fields.
description:
    - Computes c_NS, c_ES, the maxima density and the lower saddle density of
      the field with spectral measure
      alpha d_0 + beta/2 (d_K + d_-K) + gamma/2 (d_L + d_-L).
    - Without I(alpha), I(beta), I(gamma) or I(measure) the whole family over
      alpha in {0, 0.1, 0.3, 0.6} and beta - gamma in {0, 0.5, 0.9} is tabulated.
    - With I(mc_samples) the constants are also estimated by sampling the
      amplitudes, as a cross-check of the quadrature.
options:
    alpha:
        description:
            - Mass of the atom at the origin.
        type: float
    beta:
        description:
            - Mass of the pair of atoms at +-K.
        type: float
    gamma:
        description:
            - Mass of the pair of atoms at +-L.
        type: float
    K:
        description:
            - First frequency, in cycles per unit length.
        type: list
        default: [1.0, 0.0]
    L:
        description:
            - Second frequency, in cycles per unit length.
        type: list
        default: [0.0, 1.0]
    measure:
        description:
            - JSON file holding a four or five atom measure.
        type: path
    levels:
        description:
            - Level grid as lo:hi:step or a comma separated list.
        default: "-3:3:0.1"
    mc_samples:
        description:
            - Amplitude samples for the Monte Carlo cross-check; 0 disables it.
        type: int
        default: 0
'''

EXAMPLES = '''
- name: the whole family
  exlb degenerate --out degenerate

- name: one model with a Monte Carlo cross-check
  exlb degenerate --alpha 0.1 --beta 0.6 --gamma 0.3 --mc-samples 1000000
'''

RETURN = '''
models:
    description: Labels of the tabulated models.
    returned: success
    type: list
files:
    description: Files written to the output directory.
    returned: success
    type: list
'''

import os
from collections import defaultdict

from exlb import degenerate, spectral_model
from exlb.module_utils.common import ExlbModule, get_runner
from exlb.module_utils.errors import ConfigError
from exlb.module_utils.output import render_linechart, write_csv

MC_COLUMNS = ['level', 'ces_mc', 'ces_se', 'cns_mc', 'cns_se']


def _models(module):
    p = module.params
    given = [p[k] is not None for k in ('alpha', 'beta', 'gamma')]
    if p['measure']:
        if any(given):
            raise ConfigError('Give either "measure" or alpha, beta and gamma')
        return [degenerate.DegenerateModel.from_measure(
            spectral_model.load_measure(p['measure']))]
    if not any(given):
        return degenerate.figure_models(K=tuple(p['K']), L=tuple(p['L']))
    if p['beta'] is None or p['gamma'] is None:
        raise ConfigError('Params "beta" and "gamma" are both required')
    alpha = p['alpha'] if p['alpha'] is not None else 1.0 - p['beta'] - p['gamma']
    return [degenerate.DegenerateModel(alpha, p['beta'], p['gamma'],
                                       tuple(p['K']), tuple(p['L']))]


def main(argv=None):
    helper = get_runner(
        with_output=True,
        with_seed=True,
        argument_spec=dict(
            alpha=dict(type='float'),
            beta=dict(type='float'),
            gamma=dict(type='float'),
            K=dict(type='list', elements='float', default=[1.0, 0.0]),
            L=dict(type='list', elements='float', default=[0.0, 1.0]),
            measure=dict(type='path'),
            levels=dict(default='-3:3:0.1'),
            mc_samples=dict(type='int', default=0),
        ),
    )

    module = ExlbModule('degenerate', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    for name in ('K', 'L'):
        if len(module.params[name]) != 2:
            module.fail_json(msg='Param "{0}" needs two components'.format(name))
    if module.params['mc_samples'] < 0:
        module.fail_json(msg='Param "mc_samples" must be nonnegative')
    levels = helper.get_levels(module)
    out = helper.get_output_dir(module)

    files = []
    families = defaultdict(dict)
    with helper.managed(module):
        models = _models(module)
        for m in models:
            rows = degenerate.curve_table(levels, m)
            files.append(degenerate.write_curve_csv(
                os.path.join(out, '{0}.csv'.format(m.label)), rows))
            families[m.alpha]['beta-gamma={0:g}'.format(m.beta - m.gamma)] = [r[1] for r in rows]
            if module.params['mc_samples']:
                mc = degenerate.mc_constants(levels, m, module.params['mc_samples'],
                                             module.params['seed'])
                files.append(write_csv(
                    os.path.join(out, '{0}-mc.csv'.format(m.label)), 'degenerate-mc/1',
                    MC_COLUMNS, zip(mc.levels, mc.ces, mc.ces_se, mc.cns, mc.cns_se)))

        for alpha, series in sorted(families.items()):
            files.append(render_linechart(
                os.path.join(out, 'degenerate-cns-a{0:g}.svg'.format(alpha)),
                'c_NS of the degenerate fields, alpha={0:g}'.format(alpha),
                levels, series, ylabel='per unit area'))

    helper.finish(module, out, files)
    module.exit_json(changed=True, models=[m.label for m in models], files=files)


if __name__ == '__main__':
    main()
