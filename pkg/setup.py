"""
Manhattan curves for pairs of word metrics on hyperbolic groups
"""
from setuptools import find_packages, setup

from manhattan import VERSION


def readme():
    with open('README.rst') as f:
        return f.read()


dependencies = [
    'click>=7.1.2, <9',
    'click-log==0.3.2',
    'dictdiffer>=0.9.0',
    'numpy>=1.17',
    'networkx>=2.4',
]

setup(
    name='manhattan-curves',
    version=VERSION,
    license='BSD-3-Clause',
    description='CLI tool to compute Manhattan curves, growth rates and '
                'rigidity verdicts for word metrics on hyperbolic groups',
    long_description=readme(),
    packages=find_packages(exclude=['tests']),
    package_data={
        'manhattan': ['fixtures/*/*.txt', 'fixtures/*/*.json'],
    },
    include_package_data=True,
    zip_safe=False,
    platforms='any',
    install_requires=dependencies,
    entry_points={
        'console_scripts': [
            'manhattan = manhattan.cli:manhattan',
        ],
    },
    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: POSIX',
        'Operating System :: MacOS',
        'Operating System :: Unix',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ]
)
