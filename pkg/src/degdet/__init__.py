"""Exact computation of the maximum degrees of minors of a partitioned
polynomial matrix built from 2x2 blocks, together with verifiable primal
and dual optimality certificates.

The public entry points are:

- `degdet.instance.parse_instance` / `degdet.instance.serialize_instance`
- `degdet.driver.solve` / `degdet.driver.delta_k`
- `degdet.oracle.oracle_sequence` (independent brute-force ground truth)
- `degdet.certify.verify_primal` / `degdet.certify.verify_dual`
- the `degdet` command line tool (see `degdet.cli`)
"""

from degdet.instance import Instance, parse_instance, serialize_instance

__all__ = [
    "Instance",
    "parse_instance",
    "serialize_instance",
]
