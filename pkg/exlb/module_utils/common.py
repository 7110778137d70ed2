# Copyright 2026 exlb contributors
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

"""Command-module plumbing shared by every ``exlb`` subcommand.

A subcommand builds its parameter spec with :func:`get_runner`, hands it to
:class:`ExlbModule`, and then asks the returned :class:`RunHelper` for the
objects it needs (measure, grid, output directory).  Errors end the process
through ``module.fail_json`` and results through ``module.exit_json``.
"""

import argparse
import contextlib
import datetime
import json
import logging
import os
import sys
import warnings

import numpy as np
import yaml
from ansible.module_utils.common.arg_spec import ArgumentSpecValidator

import exlb
from exlb import spectral_model
from exlb.module_utils.errors import ConfigError, ExlbError


log = logging.getLogger(__name__)

_CONNECTIVITY = {'8-4': (8, 4), '4-8': (4, 8)}


def load_config(path):
    """Loads a JSON or YAML mapping, reporting parse errors with line context."""
    try:
        with open(path) as fd:
            text = fd.read()
    except (IOError, OSError) as e:
        raise ConfigError('Cannot read config "{0}": {1}'.format(path, e))

    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        lines = text.splitlines()
        context = lines[mark.line] if mark is not None and mark.line < len(lines) else ''
        where = '' if mark is None else ' at line {0}, column {1}'.format(
            mark.line + 1, mark.column + 1)
        raise ConfigError('Failed to parse "{0}"{1}: {2}\n    {3}'.format(
            path, where, e.problem, context))
    except yaml.YAMLError as e:
        raise ConfigError('Failed to parse "{0}": {1}'.format(path, e))

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError('Config "{0}" must contain a mapping'.format(path))
    return dict((k.replace('-', '_'), v) for k, v in data.items())


def parse_levels(text):
    """Parses ``lo:hi:step`` (inclusive of hi) or a comma separated list."""
    try:
        if ':' in text:
            lo, hi, step = (float(x) for x in text.split(':'))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return np.round(lo + step * np.arange(count), 12)
        return np.array(sorted(float(x) for x in text.split(',')))
    except ValueError:
        raise ConfigError('Invalid level grid "{0}"; expected lo:hi:step'.format(text))


def worker_count():
    """Worker threads, capped by EXLB_THREADS."""
    default = os.cpu_count() or 1
    value = os.environ.get('EXLB_THREADS')
    if not value:
        return default
    try:
        cap = int(value)
    except ValueError:
        raise ConfigError('EXLB_THREADS must be an integer, got "{0}"'.format(value))
    return max(1, min(cap, default))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _attach_negative_values(argv):
    """Rewrites ``--flag -3:3:0.1`` as ``--flag=-3:3:0.1`` so argparse keeps the value."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith('--') and '=' not in out[-1]
                and len(tok) > 1 and tok[0] == '-' and (tok[1].isdigit() or tok[1] == '.')):
            out[-1] = '{0}={1}'.format(out[-1], tok)
        else:
            out.append(tok)
    return out


class ExlbModule(object):
    """Parses and validates one subcommand invocation.

    Flags are tokenised with argparse; typing, defaults and choices come
    from the Ansible argument spec.  Values from ``--config`` sit underneath
    the flags.
    """

    def __init__(self, name, argument_spec, argv=None, documentation=None,
                 mutually_exclusive=None):
        self.name = name
        self.argument_spec = argument_spec
        self.documentation = documentation
        self.warnings = []
        self.started = datetime.datetime.now(datetime.timezone.utc)
        try:
            self.params = self._load_params(argv, mutually_exclusive)
        except ConfigError as e:
            self.fail_json(msg=str(e), rc=e.rc)

        logging.basicConfig(
            stream=sys.stderr,
            format='%(asctime)s %(name)s %(levelname)s %(message)s',
        )
        level = logging.DEBUG if self.params.get('verbose') else logging.INFO
        logging.getLogger('exlb').setLevel(level)

    def _descriptions(self):
        if not self.documentation:
            return {}
        doc = yaml.safe_load(self.documentation) or {}
        ans = {}
        for name, opt in (doc.get('options') or {}).items():
            desc = opt.get('description', '')
            if isinstance(desc, list):
                desc = ' '.join(desc)
            ans[name] = desc
        return ans

    def _load_params(self, argv, mutually_exclusive):
        help_text = self._descriptions()
        parser = _Parser(prog='exlb {0}'.format(self.name))
        for name, opt in sorted(self.argument_spec.items()):
            flag = '--{0}'.format(name.replace('_', '-'))
            if opt.get('type') == 'bool':
                parser.add_argument(flag, dest=name, nargs='?', const='true',
                                    default=None, help=help_text.get(name))
            else:
                parser.add_argument(flag, dest=name, default=None,
                                    help=help_text.get(name))
        ns = parser.parse_args(_attach_negative_values(sys.argv[1:] if argv is None else argv))

        flags = dict((k, v) for k, v in vars(ns).items() if v is not None)
        params = {}
        if flags.get('config'):
            params.update(load_config(flags['config']))
        params.update(flags)

        validator = ArgumentSpecValidator(
            self.argument_spec, mutually_exclusive=mutually_exclusive)
        result = validator.validate(params)
        if result.error_messages:
            raise ConfigError('; '.join(result.error_messages))
        return result.validated_parameters

    def warn(self, msg):
        self.warnings.append(msg)
        log.warning(msg)

    def echo(self, msg):
        """A human-readable line on stdout, ahead of the JSON result."""
        sys.stdout.write(msg + '\n')

    def fail_json(self, msg, rc=1, **kwargs):
        sys.stderr.write('exlb {0}: {1}\n'.format(self.name, msg))
        kwargs.update(failed=True, msg=msg, rc=rc)
        if self.warnings:
            kwargs['warnings'] = self.warnings
        sys.stdout.write(json.dumps(kwargs, sort_keys=True, default=_jsonable) + '\n')
        sys.exit(rc)

    def exit_json(self, **kwargs):
        kwargs.setdefault('changed', True)
        kwargs['warnings'] = self.warnings
        sys.stdout.write(json.dumps(kwargs, sort_keys=True, default=_jsonable) + '\n')
        sys.exit(0)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


class RunHelper(object):
    def __init__(self):
        """Builds the shared objects a subcommand asks for."""
        # Params for ExlbModule.
        self.argument_spec = {}

        # Which option groups were mixed in.
        self.with_model = False
        self.with_output = False
        self.with_seed = False
        self.with_grid = False

    def get_measure(self, module):
        """Returns ``(measure, label)`` for the ``model`` param.

        Arguments:
            * module(ExlbModule): the command module.
        """
        name = module.params['model']
        try:
            if name.startswith('atomic:'):
                path = name.split(':', 1)[1]
                measure = spectral_model.load_measure(path)
                label = os.path.splitext(os.path.basename(path))[0]
            else:
                measure = spectral_model.named_measure(name)
                label = name
        except ExlbError as e:
            module.fail_json(msg='Invalid model "{0}": {1}'.format(name, e), rc=e.rc)
        return measure, label

    def get_grid(self, module, measure):
        """Returns the GridSpec for ``side`` and ``resolution``."""
        from exlb.field_sampler import GridSpec

        side = module.params['side']
        resolution = module.params['resolution']
        if side <= 0 or resolution <= 0:
            module.fail_json(msg='Params "side" and "resolution" must be positive')
        return GridSpec.for_measure(measure, side, resolution)

    def get_connectivity(self, module):
        return _CONNECTIVITY[module.params['connectivity']]

    def get_levels(self, module, param='levels'):
        try:
            return parse_levels(module.params[param])
        except ConfigError as e:
            module.fail_json(msg=str(e), rc=e.rc)

    def get_output_dir(self, module):
        out = module.params['out']
        try:
            os.makedirs(out, exist_ok=True)
        except OSError as e:
            module.fail_json(msg='Cannot create output directory "{0}": {1}'.format(out, e))
        return out

    def finish(self, module, out_dir, files):
        """Appends this run to the manifest of ``out_dir``."""
        from exlb.module_utils.output import append_manifest

        append_manifest(out_dir, {
            'subcommand': module.name,
            'config': module.params.get('config'),
            'output_directory': os.path.abspath(out_dir),
            'master_seed': module.params.get('seed'),
            'version': exlb.__version__,
            'started': module.started.isoformat(),
            'finished': datetime.datetime.now(datetime.timezone.utc).isoformat(),
            'files': sorted(os.path.basename(f) for f in files),
        })

    @contextlib.contextmanager
    def managed(self, module):
        """Routes library warnings into the result and library errors into exit codes."""
        failure = None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            try:
                yield
            except ExlbError as e:
                failure = e
        for w in caught:
            module.warn(str(w.message))
        if failure is not None:
            extra = {}
            audit = getattr(failure, 'audit', None)
            if audit is not None:
                extra['audit'] = audit.to_dict()
            module.fail_json(msg=str(failure), rc=failure.rc, **extra)


def get_runner(with_model=False, with_grid=False, with_output=False,
               with_seed=False, with_connectivity=False,
               argument_spec=None, default_model='rpw'):
    """Returns a helper object that handles the shared option groups.

    Arguments:
        with_model(bool): Include ``model`` (rpw, bargmann-fock, atomic:<file>).
        with_grid(bool): Include ``side`` and ``resolution``.
        with_output(bool): Include ``out``; a manifest is kept in it.
        with_seed(bool): Include ``seed``.
        with_connectivity(bool): Include ``connectivity``.
        argument_spec(dict): The subcommand spec to mix in.
        default_model(str): Default for ``model``.

    Returns:
        RunHelper
    """
    helper = RunHelper()
    spec = {
        'config': {'type': 'path'},
        'verbose': {'type': 'bool', 'default': False},
    }

    if with_model:
        spec['model'] = {'type': 'str', 'default': default_model}
        helper.with_model = True

    if with_grid:
        spec['side'] = {'type': 'float', 'default': 120.0}
        spec['resolution'] = {'type': 'float', 'default': 6.0}
        helper.with_grid = True

    if with_output:
        spec['out'] = {'type': 'path', 'default': 'exlb-out'}
        helper.with_output = True

    if with_seed:
        spec['seed'] = {'type': 'int', 'default': 7}
        helper.with_seed = True

    if with_connectivity:
        spec['connectivity'] = {'type': 'str', 'default': '8-4',
                                'choices': sorted(_CONNECTIVITY)}

    if argument_spec is not None:
        for k in argument_spec.keys():
            if k in spec:
                raise KeyError('{0}: key used by run helper.'.format(k))
            spec[k] = argument_spec[k]

    # Done.
    helper.argument_spec = spec
    return helper
