"""Desk-scale cloud MRI pipeline.

Subpackages and modules cover the full path from raw k-space bytes to a
reviewed image: binary container (`raw_format`), scanner simulation
(`acquisition`), reconstruction (`recon`), encrypted transport with network
profiles (`transport`), node fleet and job scheduling (`orchestrator`),
cross-hospital parameter averaging (`federated`), hash-chained audit log
(`ledger`), event monitoring (`monitor`), and the REST/CLI front door
(`gateway`).
"""

__version__ = "0.1.0"
