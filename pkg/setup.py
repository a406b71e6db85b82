from setuptools import setup, find_packages

with open("requirements.txt") as f:
    requirements = [line for line in f.read().splitlines() if line.strip() and not line.startswith("pytest")]

setup(
    name="hdlss-energy-classifiers",
    version="0.1",
    author="Hansraj -e",
    packages=find_packages(exclude=["tests", "scripts"]),
    install_requires=requirements,
    entry_points={"console_scripts": ["hdlss = hdlss.cli:main"]},
)
