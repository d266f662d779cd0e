from setuptools import find_packages, setup

setup(name="mpxDT",
      version="2026.10.17.1",
      description="Tomography and information metrics of multiplexed photon-number-resolving detectors.",
      packages=find_packages(exclude=["tests"]),
      python_requires=">=3.8",
      entry_points={"console_scripts": ["mpxdt=mpxDT.cli:main"]})
