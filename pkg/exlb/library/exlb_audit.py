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
module: exlb_audit
short_description: Check the sweep census against labelled component counts.
description:
    - For every realization and level, compares the number of superlevel and
      sublevel components found by connected-component labelling with the
      census read off the critical events of the sweep.
    - Any disagreement exits with status 2 and dumps the failing audit.
    - With I(field) a dumped field file is audited instead of sampling.
options:
    reals:
        description:
            - Number of realizations to audit.
        type: int
        default: 5
    levels:
        description:
            - Level grid as lo:hi:step or a comma separated list.
        default: "-3:3:0.3"
    field:
        description:
            - An EXLB field file written by C(exlb sample).
        type: path
    events:
        description:
            - Also write the event table of the first audited field.
        type: bool
        default: false
'''

EXAMPLES = '''
- name: audit ten random plane wave realizations
  exlb audit --reals 10 --side 60

- name: audit a dumped field with 4-8 connectivity
  exlb audit --field fields/field-rpw-123.exlb --connectivity 4-8 --events
'''

RETURN = '''
audited:
    description: Number of fields audited.
    returned: always
    type: int
max_contained_excess:
    description: Largest excess of the contained-count gap over its boundary allowance.
    returned: success
    type: int
files:
    description: Files written to the output directory.
    returned: success
    type: list
'''

import os

from exlb import field_sampler, grid_topology
from exlb.module_utils.common import ExlbModule, get_runner
from exlb.module_utils.errors import ConfigError, IdentityViolation
from exlb.module_utils.output import write_csv

AUDIT_COLUMNS = ['realization', 'seed', 'level', 'n_super_all', 'census_super',
                 'n_sub_all', 'census_sub', 'n_super_contained', 'slack']


def _fields(module, helper):
    if module.params['field']:
        try:
            yield 0, 0, field_sampler.FieldGrid.load(module.params['field'])
        except (IOError, OSError) as e:
            raise ConfigError('Cannot read field "{0}": {1}'.format(module.params['field'], e))
        return
    measure, _ = helper.get_measure(module)
    spec = helper.get_grid(module, measure)
    spec.check_resolution(measure)
    for i in range(module.params['reals']):
        seed = field_sampler.mix_seed(module.params['seed'], i)
        yield i, seed, field_sampler.sample(measure, spec, seed)


def _rows(index, seed, audit):
    for j, level in enumerate(audit.levels):
        yield [index, seed, float(level), audit.n_super_all[j], audit.census_super[j],
               audit.n_sub_all[j], audit.census_sub[j], audit.n_super_contained[j],
               audit.slack]


def main(argv=None):
    helper = get_runner(
        with_model=True,
        with_grid=True,
        with_output=True,
        with_seed=True,
        with_connectivity=True,
        argument_spec=dict(
            reals=dict(type='int', default=5),
            levels=dict(default='-3:3:0.3'),
            field=dict(type='path'),
            events=dict(type='bool', default=False),
        ),
    )

    module = ExlbModule('audit', helper.argument_spec, argv=argv,
                        documentation=DOCUMENTATION)

    if module.params['reals'] < 1:
        module.fail_json(msg='Param "reals" must be at least 1')
    levels = helper.get_levels(module)
    connectivity = helper.get_connectivity(module)
    out = helper.get_output_dir(module)
    stem = os.path.splitext(os.path.basename(module.params['field']))[0] \
        if module.params['field'] else '{0}-{1}'.format(module.params['model'],
                                                        module.params['seed'])

    rows = []
    files = []
    excess = None
    audited = 0
    with helper.managed(module):
        for index, seed, fg in _fields(module, helper):
            sr = grid_topology.sweep(fg, *connectivity, levels=levels)
            if module.params['events'] and not files:
                files.append(grid_topology.write_events_csv(
                    os.path.join(out, 'events-{0}.csv'.format(stem)), sr))
            try:
                audit = grid_topology.audit_morse_identity(sr, levels)
            except ValueError as e:
                raise ConfigError(str(e))
            except IdentityViolation as e:
                rows.extend(_rows(index, seed, e.audit))
                write_csv(os.path.join(out, 'audit-{0}.csv'.format(stem)), 'audit/1',
                          AUDIT_COLUMNS, rows)
                raise IdentityViolation('Realization {0} (seed {1}): {2}'.format(
                    index, seed, e), audit=e.audit)
            audited += 1
            rows.extend(_rows(index, seed, audit))
            excess = audit.contained_excess if excess is None else max(
                excess, audit.contained_excess)
        files.append(write_csv(os.path.join(out, 'audit-{0}.csv'.format(stem)), 'audit/1',
                               AUDIT_COLUMNS, rows))

    if excess > 0:
        module.warn('Contained counts exceed the boundary allowance by {0}'.format(excess))
    module.echo('audited {0} field(s) at {1} levels: census identity holds'.format(
        audited, len(levels)))
    helper.finish(module, out, files)
    module.exit_json(changed=True, audited=audited, max_contained_excess=excess, files=files)


if __name__ == '__main__':
    main()
