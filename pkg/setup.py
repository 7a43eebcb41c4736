#!/usr/bin/env python
import os

from setuptools import find_packages, setup

import pyferry

with open(os.path.join(os.path.dirname(__file__), "README.rst")) as f:
    long_description = f.read()

install_requires = [
    "prompt_toolkit>=3.0.29,<3.1.0",
    "pygments",
    "numpy>=1.17",
    "scipy>=1.4",
    "pydantic>=2.0,<3",
]

setup(
    name="pyferry",
    version=pyferry.__version__,
    license="LICENSE",
    description="Simulation and analysis of robotic message ferrying.",
    long_description=long_description,
    packages=find_packages(".", exclude=["tests", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=install_requires,
    extras_require={
        "tests": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "pyferry = pyferry.entry_points.run_pyferry:run",
        ]
    },
)
