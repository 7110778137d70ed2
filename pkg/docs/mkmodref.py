from __future__ import absolute_import, division, print_function
__metaclass__ = type

import importlib
import os
import re
import sys

import yaml
from jinja2 import Environment, FileSystemLoader

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(HERE))

from exlb.cli import SUBCOMMANDS  # noqa: E402


HEADER = '''.. _module_reference:

*********************
Subcommand Reference
*********************

.. toctree::
   :maxdepth: 1

'''

_ITALIC = re.compile(r"I\(([^)]+)\)")
_BOLD = re.compile(r"B\(([^)]+)\)")
_CONST = re.compile(r"C\(([^)]+)\)")


def rst_ify(text):
    ''' convert symbols like I(this is in italics) to valid restructured text '''
    t = _ITALIC.sub(r'*\1*', text)
    t = _BOLD.sub(r'**\1**', t)
    return _CONST.sub(r'``\1``', t)


def as_list(value):
    if value is None:
        return []
    return value if isinstance(value, list) else [value]


def usage():
    x = [
        'Usage: python mkmodref.py',
        '',
        'This script renders one page per exlb subcommand into the modules',
        'directory, plus the modules reference index.',
    ]
    print('\n'.join(x))


def render(env, name):
    mod = importlib.import_module('exlb.library.exlb_{0}'.format(name))
    doc = yaml.safe_load(mod.DOCUMENTATION)
    return env.get_template('module.rst.j2').render(
        name=name,
        module=doc['module'],
        short_description=doc['short_description'],
        description=[rst_ify(x) for x in as_list(doc.get('description'))],
        options=sorted((doc.get('options') or {}).items()),
        examples=mod.EXAMPLES.strip('\n'),
        returns=sorted((yaml.safe_load(mod.RETURN) or {}).items()),
    )


def build():
    env = Environment(loader=FileSystemLoader(os.path.join(HERE, 'templates')),
                      trim_blocks=True, lstrip_blocks=True)
    env.filters['rst_ify'] = rst_ify
    env.filters['as_list'] = as_list

    path = os.path.join(HERE, 'modules')
    if not os.path.isdir(path):
        os.makedirs(path)

    with open(os.path.join(path, 'index.rst'), 'w') as fd:
        fd.write(HEADER)
        for name in SUBCOMMANDS:
            link = 'exlb_{0}_module'.format(name)
            with open(os.path.join(path, link + '.rst'), 'w') as page:
                page.write(render(env, name))
            fd.write('   {0}\n'.format(link))


def main():
    if len(sys.argv) != 1:
        usage()
        return
    build()


if __name__ == '__main__':
    main()
