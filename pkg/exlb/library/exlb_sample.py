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
module: exlb_sample
short_description: Dump one sampled field to a binary file.
description:
    - Samples realization I(index) of I(model) on the window and writes it in
      the EXLB layout (a 16-byte header then little-endian float64 values).
    - The realization seed is derived from I(seed) and I(index) exactly as in
      C(exlb estimate), so dumped fields match estimator runs.
options:
    index:
        description:
            - Realization index.
        type: int
        default: 0
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
'''

EXAMPLES = '''
- name: dump the first Bargmann-Fock realization
  exlb sample --model bargmann-fock --side 40 --seed 11 --out fields
'''

RETURN = '''
path:
    description: The written field file.
    returned: success
    type: str
seed:
    description: The realization seed.
    returned: success
    type: int
'''

import os

from exlb import field_sampler
from exlb.module_utils.common import ExlbModule, get_runner


def main(argv=None):
    helper = get_runner(
        with_model=True,
        with_grid=True,
        with_output=True,
        with_seed=True,
        argument_spec=dict(
            index=dict(type='int', default=0),
            rpw_directions=dict(type='int', default=field_sampler.DEFAULT_RPW_DIRECTIONS),
            padding=dict(type='int', default=2),
        ),
    )

    module = ExlbModule('sample', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    measure, label = helper.get_measure(module)
    spec = helper.get_grid(module, measure)
    out = helper.get_output_dir(module)
    if module.params['index'] < 0:
        module.fail_json(msg='Param "index" must be nonnegative')

    with helper.managed(module):
        seed = field_sampler.mix_seed(module.params['seed'], module.params['index'])
        fg = field_sampler.sample(measure, spec, seed,
                                  rpw_directions=module.params['rpw_directions'],
                                  padding=module.params['padding'])
        path = fg.dump(os.path.join(out, 'field-{0}-{1}.exlb'.format(label, seed)))

    helper.finish(module, out, [path])
    module.exit_json(changed=True, path=path, seed=seed,
                     points_per_side=spec.points_per_side, spacing=spec.spacing)


if __name__ == '__main__':
    main()
