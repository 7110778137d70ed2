from setuptools import find_packages, setup
from codecs import open
from os import path

import re

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

with open(path.join(here, 'exlb', '__init__.py'), encoding='utf-8') as f:
    version = re.search(r"__version__ = '([^']+)'", f.read()).group(1)

setup(
    name='exlb',
    version=version,
    packages=find_packages(exclude=['tests', 'docs']),
    package_data={'exlb': ['module_utils/templates/*.j2']},
    license='Apache V2.0',
    description='Monte Carlo and closed-form component counts of planar Gaussian fields',
    long_description=long_description,
    long_description_content_type='text/markdown',
    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Natural Language :: English',
        'Operating System :: POSIX',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    python_requires='>=3.8',
    install_requires=[
        'ansible-core>=2.11',
        'Jinja2>=2.10.1',
        'PyYAML>=5.1',
        'numpy>=1.20',
        'scipy>=1.7',
        'numba>=0.53',
        'joblib>=1.3',
    ],
    extras_require={
        'test': ['pytest', 'scikit-image'],
    },
    entry_points={
        'console_scripts': ['exlb=exlb.cli:main'],
    },
)
