#!/usr/bin/env python
from io import open

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

with open('README.md', encoding='utf-8') as f:
    long_description = f.read()

setup(name='palletscope',
      long_description=long_description,
      long_description_content_type='text/markdown',
      version='0.1.0',
      description='Packaging structure recognition for logistics transport units',
      packages=['palletscope', 'palletscope.test'],
      python_requires='>=3.7',
      install_requires=[
          'numpy >= 1.17',
          'scipy >= 1.4',
          'Pillow >= 7.0',
          'importlib_metadata; python_version < "3.8"',
      ],
      tests_require=['mock >= 1.0.1'],
      test_suite='palletscope.test',
      entry_points={
          'console_scripts': ['palletscope = palletscope.cli:main'],
      },
      classifiers=[
          "License :: OSI Approved :: MIT License",
          "Operating System :: OS Independent",
          "Programming Language :: Python",
          "Programming Language :: Python :: 3",
          "Programming Language :: Python :: 3.7",
          "Programming Language :: Python :: 3.8",
          "Programming Language :: Python :: 3.9",
          "Programming Language :: Python :: 3.10",
          "Programming Language :: Python :: 3.11",
          "Programming Language :: Python :: 3.12",
          "Topic :: Scientific/Engineering :: Image Recognition",
      ])
