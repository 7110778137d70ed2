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
module: exlb_densities
short_description: Tabulate closed-form critical point densities.
description:
    - Evaluates the maxima, minima and saddle densities of an isotropic
      field over a grid of levels and reports their total integrals.
    - The parameters come from I(lambda) and I(eta_sq) or from the kernel of I(model).
options:
    lambda:
        description:
            - Isotropy parameter in (0, sqrt(2)].
        type: float
    eta_sq:
        description:
            - Scale parameter; must be positive.
        type: float
    xs:
        description:
            - Level grid as lo:hi:step or a comma separated list.
        default: "-4:4:0.05"
'''

EXAMPLES = '''
- name: densities of the Bargmann-Fock field
  exlb densities --model bargmann-fock

- name: densities for explicit parameters
  exlb densities --lambda 1.2 --eta-sq 2 --xs -3:3:0.1
'''

RETURN = '''
case:
    description: Critical when lambda is sqrt(2), else Subcritical.
    returned: success
    type: str
totals:
    description: Integrals of p_max, p_min and p_saddle over the real line.
    returned: success
    type: dict
files:
    description: Files written to the output directory.
    returned: success
    type: list
'''

import os

from exlb import closed_form
from exlb.module_utils.common import ExlbModule, get_runner
from exlb.module_utils.output import render_linechart


def main(argv=None):
    helper = get_runner(
        with_model=True,
        with_output=True,
        argument_spec=dict(
            xs=dict(default='-4:4:0.05'),
            eta_sq=dict(type='float'),
            **{'lambda': dict(type='float')}
        ),
    )

    module = ExlbModule('densities', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    xs = helper.get_levels(module, 'xs')
    out = helper.get_output_dir(module)

    with helper.managed(module):
        lam, eta_sq = module.params['lambda'], module.params['eta_sq']
        if lam is None or eta_sq is None:
            # Atomic models have no closed-form kernel and fail here.
            model = closed_form.ClosedFormDensities.for_model(module.params['model'])
            d = closed_form.ClosedFormDensities(
                model.lam if lam is None else lam,
                model.eta_sq if eta_sq is None else eta_sq)
            label = module.params['model']
        else:
            d = closed_form.ClosedFormDensities(lam, eta_sq)
            label = 'lambda{0:g}-eta{1:g}'.format(lam, eta_sq)

        files = [closed_form.write_density_csv(
            os.path.join(out, 'densities-{0}.csv'.format(label)), xs, d)]
        files.append(render_linechart(
            os.path.join(out, 'densities-{0}.svg'.format(label)),
            'Critical point densities, {0}'.format(label), xs,
            {'max': closed_form.p_max(xs, d), 'min': closed_form.p_min(xs, d),
             'saddle': closed_form.p_saddle(xs, d)},
            xlabel='x', ylabel='per unit area per unit level'))
        totals = dict((name, closed_form.total(h, d))
                      for name, h in (('max', 'm+'), ('min', 'm-'), ('saddle', 's')))

    module.echo('case: {0}, lambda={1:.6g}, eta_sq={2:.6g}'.format(
        d.case.value, d.lam, d.eta_sq))
    helper.finish(module, out, files)
    module.exit_json(changed=True, case=d.case.value, lam=d.lam, eta_sq=d.eta_sq,
                     totals=totals, files=files)


if __name__ == '__main__':
    main()
