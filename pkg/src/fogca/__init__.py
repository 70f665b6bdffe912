"""Identity-based authentication for fog-hosted certificate authorities.

The package splits into the protocol core (curve, crypto, wire,
authority, child, integrity), a deterministic network simulator with an
attachable adversary (simnet, hosts, scenarios), and the placement
latency study (experiments).  `fogca.cli` is the command-line front end.
"""

from . import (  # noqa: F401
    authority,
    child,
    crypto,
    curve,
    errors,
    experiments,
    hosts,
    integrity,
    scenarios,
    simnet,
    wire,
)

__version__ = "0.1.0"
