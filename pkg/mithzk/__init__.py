#!python


__project__ = "mithzk"
__version__ = "0.1.0"
__license__ = "Apache"
__description__ = "A Python package for MPC-in-the-Head zero-knowledge proofs of arithmetic circuit satisfiability"
__author__ = "mithzk developers"
__author_email__ = "mithzk@users.noreply.github.com"
__github__ = "https://github.com/mithzk/mithzk"
__keywords__ = [
    "zero knowledge",
    "zkp",
    "mpc in the head",
    "secret sharing",
    "bgw",
    "commitments",
    "cryptography",
]
__python_version__ = ">=3.8"
__classifiers__ = [
    "Development Status :: 3 - Alpha",
    "Intended Audience :: Science/Research",
    "License :: OSI Approved :: Apache Software License",
    "Operating System :: OS Independent",
    "Programming Language :: Python :: 3.8",
    "Programming Language :: Python :: 3.9",
    "Programming Language :: Python :: 3.10",
    "Topic :: Security :: Cryptography",
]
__console_scripts__ = [
    "mithzk=mithzk.cli:run",
]
__urls__ = {
    "GitHub": __github__,
}
__requirements__ = {
    "": "requirements/requirements.txt",
    "development": "requirements/requirements_development.txt",
}
