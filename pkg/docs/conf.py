import os
import sys
sys.path.insert(0, os.path.abspath('.'))

import mkmodref  # noqa: E402

# The subcommand pages are generated from their DOCUMENTATION strings.
mkmodref.build()

project = 'exlb'
copyright = '2026, exlb contributors'
author = 'exlb contributors'
release = '0.1.0'

extensions = [
    'recommonmark',
]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
