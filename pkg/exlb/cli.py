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

"""Entry point of the ``exlb`` command: ``exlb <subcommand> [--flag value ...]``."""

import importlib
import sys

import yaml

import exlb


SUBCOMMANDS = ('estimate', 'bounds', 'densities', 'degenerate', 'audit', 'sample')


def _load(name):
    return importlib.import_module('exlb.library.exlb_{0}'.format(name))


def usage(stream):
    lines = ['usage: exlb <subcommand> [options]', '', 'subcommands:']
    for name in SUBCOMMANDS:
        doc = yaml.safe_load(_load(name).DOCUMENTATION)
        lines.append('    {0:<12}{1}'.format(name, doc['short_description']))
    lines.append('')
    lines.append('Run "exlb <subcommand> --help" for the options of one subcommand.')
    stream.write('\n'.join(lines) + '\n')


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        usage(sys.stdout if argv else sys.stderr)
        sys.exit(0 if argv else 1)
    if argv[0] == '--version':
        sys.stdout.write('exlb {0}\n'.format(exlb.__version__))
        sys.exit(0)
    if argv[0] not in SUBCOMMANDS:
        sys.stderr.write('exlb: unknown subcommand "{0}"\n'.format(argv[0]))
        usage(sys.stderr)
        sys.exit(1)
    _load(argv[0]).main(argv[1:])


if __name__ == '__main__':
    main()
