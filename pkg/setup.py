"""Setup file for the ``adaimpact`` package. Configuration is in ``pyproject.toml``."""

from setuptools import setup


setup()
