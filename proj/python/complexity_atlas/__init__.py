"""Economic complexity, product Gini and product space analytics."""

import json as _json

from ._atlas import (
    AtlasError,
    Service,
    advantage,
    binomial_two_sided,
    build_snapshot,
    clarke,
    eci,
    entropy,
    fitness,
    hhi,
    ols,
    pci,
    pgi,
    proximity,
    rca,
    shares,
)

__all__ = [
    "AtlasError",
    "Service",
    "advantage",
    "binomial_two_sided",
    "build_snapshot",
    "clarke",
    "eci",
    "entropy",
    "fitness",
    "hhi",
    "ols",
    "pci",
    "pgi",
    "proximity",
    "query",
    "rca",
    "shares",
]


def query(service, path, **params):
    """GET a snapshot endpoint and decode the JSON body. Returns (status, payload)."""
    status, body = service.get(path, {k: str(v) for k, v in params.items()})
    return status, _json.loads(body)
