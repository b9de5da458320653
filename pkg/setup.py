from setuptools import setup, find_packages

setup(
    name= "oculofilt",
    version= '0.1.0',
    author = "CreditReady",
    packages= find_packages(exclude=["examples", "examples.*"]),
    py_modules= ["logger", "utils", "main"],
    install_requires = [
        "numpy",
        "scipy",
        "pandas",
        "PyYAML",
        "python-dotenv",
    ],
    extras_require = {"test": ["pytest"], "fast": ["numba"]},
    entry_points = {
        "console_scripts": ["oculofilt=src.cli.commands:main"],
    },
)
