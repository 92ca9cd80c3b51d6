"""dplab: Gaussian-mechanism differential privacy from the attacker's side.

Noise calibration, likelihood-ratio attack detection with ROC curves and
Monte Carlo validation, mutual-information bounds on the attack variance,
and a comparison of KL-DP with Chernoff-DP.
"""

from __future__ import print_function
DOCLINES = __doc__.split("\n")

import sys
from setuptools import setup


try:
    # add an optional command line flag --no-install-deps to setup.py
    # to turn off setuptools automatic downloading of dependencies
    sys.argv.remove('--no-install-deps')
    no_install_deps = True
except ValueError:
    no_install_deps = False


##########################
VERSION = "0.1"
ISRELEASED = False
__version__ = VERSION
##########################


CLASSIFIERS = """\
Development Status :: 3 - Alpha
Intended Audience :: Science/Research
Intended Audience :: Developers
License :: OSI Approved :: GNU Lesser General Public License v2 or later (LGPLv2+)
Programming Language :: Python
Programming Language :: Python :: 3
Topic :: Scientific/Engineering :: Mathematics
Topic :: Security
Operating System :: POSIX
Operating System :: Unix
Operating System :: MacOS
"""

setup_kwargs = {}
if not no_install_deps:
    setup_kwargs['install_requires'] = ['numpy>=1.17', 'scipy>=1.6', 'pandas>=1.5']

setup(name='dplab',
      description=DOCLINES[0],
      long_description="\n".join(DOCLINES[2:]),
      version=__version__,
      license='LGPLv2+',
      platforms=['Linux', 'Mac OS-X', 'Unix'],
      classifiers=CLASSIFIERS.splitlines(),
      packages=["dplab", "dplab.tests"],
      extras_require={'mpi': ['mpi4py'], 'test': ['pytest']},
      entry_points={'console_scripts': ['dplab = dplab.cli:main']},
      zip_safe=False,
      **setup_kwargs
      )
