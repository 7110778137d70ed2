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
module: exlb_bounds
short_description: Analytic bounds on the component constants of an isotropic field.
description:
    - Tabulates the excursion-set difference, the lower bounds on c_ES and c_NS
      and the flip-point upper bound on c_NS over a level grid.
    - Prints whether bimodality of c_NS is guaranteed and the level beyond
      which c_NS is strictly decreasing.
    - I(lambda) and I(eta_sq) default to the parameters of I(model).
options:
    lambda:
        description:
            - Isotropy parameter in (0, sqrt(2)].
        type: float
    eta_sq:
        description:
            - Scale parameter; must be positive.
        type: float
    levels:
        description:
            - Level grid as lo:hi:step or a comma separated list.
        default: "-3:3:0.05"
'''

EXAMPLES = '''
- name: bounds for the random plane wave
  exlb bounds --lambda 1.4142135 --eta-sq 8

- name: bounds for the Bargmann-Fock field on a coarse grid
  exlb bounds --model bargmann-fock --levels 0:3:0.5 --out bf
'''

RETURN = '''
bimodal:
    description: Whether c_NS is guaranteed to have at least two local maxima.
    returned: success
    type: bool
threshold:
    description: sqrt(2)/lambda; c_NS decreases strictly beyond it.
    returned: success
    type: float
files:
    description: Files written to the output directory.
    returned: success
    type: list
'''

import os

from exlb import bounds, spectral_model
from exlb.module_utils.common import ExlbModule, get_runner
from exlb.module_utils.errors import ConfigError
from exlb.module_utils.output import render_linechart


def main(argv=None):
    helper = get_runner(
        with_model=True,
        with_output=True,
        argument_spec=dict(
            levels=dict(default='-3:3:0.05'),
            eta_sq=dict(type='float'),
            **{'lambda': dict(type='float')}
        ),
    )

    module = ExlbModule('bounds', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    lam = module.params['lambda']
    eta_sq = module.params['eta_sq']
    label = module.params['model']
    if lam is None or eta_sq is None:
        try:
            k = spectral_model.named_kernel(module.params['model'])
            model_lam, model_eta_sq = spectral_model.isotropic_params(k)
        except ConfigError as e:
            module.fail_json(msg=str(e), rc=e.rc)
        lam = model_lam if lam is None else lam
        eta_sq = model_eta_sq if eta_sq is None else eta_sq
    else:
        label = 'lambda{0:g}-eta{1:g}'.format(lam, eta_sq)

    if not 0 < lam <= bounds.SQRT2 * (1 + 1e-12):
        module.fail_json(msg='lambda must lie in (0, sqrt(2)], got {0!r}'.format(lam))
    if not eta_sq > 0:
        module.fail_json(msg='eta_sq must be positive, got {0!r}'.format(eta_sq))

    levels = helper.get_levels(module)
    out = helper.get_output_dir(module)

    with helper.managed(module):
        table = bounds.bounds_table(levels, lam, eta_sq)
        path = os.path.join(out, 'bounds-{0}.csv'.format(label))
        files = [bounds.write_bounds_csv(path, table)]
        files.append(render_linechart(
            os.path.join(out, 'bounds-{0}.svg'.format(label)),
            'Bounds, lambda={0:.4g}, eta^2={1:.4g}'.format(lam, eta_sq), levels,
            {'c_NS upper': [r.cns_upper for r in table],
             'c_NS lower': [r.cns_lower for r in table],
             'c_ES lower': [r.ces_lower for r in table]}))
        bimodal = bounds.is_bimodal_guaranteed(lam)
        threshold = bounds.monotone_threshold(lam)

    module.echo('bimodal: {0}, threshold: {1}'.format(
        'yes' if bimodal else 'no', round(threshold, 4)))
    helper.finish(module, out, files)
    module.exit_json(changed=True, bimodal=bimodal, threshold=threshold,
                     bimodality_margin=bounds.bimodality_margin(lam, eta_sq),
                     files=files)


if __name__ == '__main__':
    main()
