"""
Adapted from https://github.com/pypa/sampleproject/blob/master/setup.py
"""

# Always prefer setuptools over distutils
from setuptools import setup, find_packages
import re
# To use a consistent encoding
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, "README.rst"), encoding="utf-8") as f:
    long_description = f.read()

descr = "Provenance-graph threat hunting: compact graph store, threat " \
    "graph sampling and graph matching"

# get the version from the version.py file
with open(path.join(here, "provhunt", "version.py"), encoding="utf-8") as f:
    contents = f.read()
    version = re.match(r'__version__ = "(.+)"', contents).group(1)

setup(
    name="provhunt",

    # Versions should comply with PEP440.  For a discussion on single-sourcing
    # the version across setup.py and the project code, see
    # https://packaging.python.org/en/latest/single_source_version.html
    version=version,

    description=descr,
    long_description=long_description,

    license="BSD-3",

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        "Development Status :: 3 - Alpha",

        "Intended Audience :: Information Technology",
        "Intended Audience :: Science/Research",
        "Topic :: Security",
        "Topic :: System :: Logging",

        "License :: OSI Approved :: BSD License",

        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.7"
    ],

    keywords="provenance audit-logs threat-hunting graph-matching security",

    packages=find_packages(exclude=["contrib", "docs", "tests"]),

    package_data={
        "provhunt.vocab": ["default_rules.ini"],
        "provhunt.querykit": ["default_patterns.json"],
    },

    python_requires=">=3.7",

    install_requires=["numpy", "scipy", "pandas", "scikit-learn", "pyarrow"],

    entry_points={
        "console_scripts": ["provhunt = provhunt.cli:main"],
    },
)
