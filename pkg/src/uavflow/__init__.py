"""UAV relay-chain simulator: max-flow evaluation, spectral trajectory
ascent, and DC/SCA power allocation under reckless and smart interference."""

__version__ = "0.1.0"
