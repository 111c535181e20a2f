from setuptools import setup, find_packages
import re

def read_version(path):
    with open(path, 'rt') as ff:
        match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", ff.read(), re.M)
    if match is None:
        raise RuntimeError("no __version__ in %s" % path)
    return match.group(1)

def read_requirements(path):
    with open(path, 'r') as fh:
        return [l.strip() for l in fh if l.strip() and not l.startswith('#')]

# the test stack doubles as the full install
tests = read_requirements('requirements-extras.txt')

setup(name="antisymkit",
      version=read_version("antisymkit/version.py"),
      description="Bi-Lipschitz invariant features for learning antisymmetric functions, in parallel",
      zip_safe=False,
      packages=find_packages(include=['antisymkit', 'antisymkit.*']),
      license='GPL3',
      install_requires=read_requirements('requirements.txt'),
      extras_require={'test': tests, 'full': tests},
      entry_points={'console_scripts': ['antisymkit = antisymkit.cli:main']},
)
