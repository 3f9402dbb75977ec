#!/usr/bin/env python

from __future__ import print_function

from setuptools import setup

# keep in step with src/icupolicy/__init__.py
package_version = '0.3.0'

setup(
    name='icupolicy',
    version=package_version,
    description="Multitask recurrent prediction of ICU mortality and intervention onset",
    license='BSD',
    classifiers = [
        'Development Status :: 3 - Alpha',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: Implementation :: CPython',
        'License :: OSI Approved :: BSD License',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Medical Science Apps.',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Operating System :: POSIX :: Linux',
        'Operating System :: MacOS',
        'Operating System :: Microsoft :: Windows',
    ],
    keywords='icu mortality intervention lstm',
    python_requires='>=3.6',

    packages=[
        'icupolicy',
        'icupolicy.model',
        'icupolicy.analytics',
        'icupolicy.test',
    ],
    package_dir={'':'src'},
    install_requires = [
        'numpy>=1.17',  # numpy.random.default_rng
        'scipy>=1.3',
        'pandas>=0.25',
        'matplotlib>=3.1',
        'nose2>=0.8.0',
    ],
    entry_points = {
        'console_scripts': ['icupolicy=icupolicy.cli:main'],
    },
    zip_safe = False,
)
