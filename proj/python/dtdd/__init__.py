"""Dynamic-TDD cross-link interference simulator."""

import json

from ._core import (
    CampaignError,
    ConfigError,
    KpiError,
    LinalgError,
    config_hash,
    eesm,
    gram_schmidt,
    normalize_config,
    outage_latency,
    post_sinr,
    projector,
    run_campaign,
    run_json,
    signaling_overhead,
)

SCHEMES = ("CF_TDD", "NC_TDD", "CRFC_TDD", "CSA", "I_FREE")


def run(yaml="", scheme=None, seed=None, load_mbps=None):
    """One simulation; returns the KPI document as a dict."""
    return json.loads(run_json(yaml, scheme=scheme, seed=seed, load_mbps=load_mbps))


__all__ = [
    "CampaignError",
    "ConfigError",
    "KpiError",
    "LinalgError",
    "SCHEMES",
    "config_hash",
    "eesm",
    "gram_schmidt",
    "normalize_config",
    "outage_latency",
    "post_sinr",
    "projector",
    "run",
    "run_campaign",
    "run_json",
    "signaling_overhead",
]
