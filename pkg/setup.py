#!/usr/bin/env python
# -*- coding: utf-8 -*-

import io
import os

from setuptools import setup

# Package meta-data.
NAME = "zoomfem-multiscale"
DESCRIPTION = "Unfitted concurrent multiscale linear elasticity for porous plates with local zooms."
URL = "https://github.com/zoomfem/zoomfem-multiscale"
AUTHOR = "zoomfem developers"
REQUIRES_PYTHON = ">=3.8.0"
VERSION = "0.3"

# What packages are required for this module to be executed?
with open("requirements.txt") as f:
    REQUIRED = [line for line in f.read().splitlines() if line and not line.startswith("#")]

# What packages are optional?
EXTRAS = {
    "test": ["pytest>=7"],
}

here = os.path.abspath(os.path.dirname(__file__))

# Import the README and use it as the long-description.
try:
    with io.open(os.path.join(here, "README.md"), encoding="utf-8") as f:
        long_description = "\n" + f.read()
except FileNotFoundError:
    long_description = DESCRIPTION

setup(
    name=NAME,
    version=VERSION,
    description=DESCRIPTION,
    long_description=long_description,
    long_description_content_type="text/markdown",
    author=AUTHOR,
    python_requires=REQUIRES_PYTHON,
    url=URL,
    packages=["zoomfem.multiscale", "zoomfem.multiscale.experiments"],
    package_data={"zoomfem.multiscale.experiments": ["presets/*.json"]},
    install_requires=REQUIRED,
    extras_require=EXTRAS,
    include_package_data=True,
    entry_points={"console_scripts": ["zoomfem=zoomfem.multiscale.cli:main"]},
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering",
    ],
)
