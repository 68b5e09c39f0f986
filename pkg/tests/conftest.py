"""Shared fixtures: canonical chains and a fleet spanning every tail family."""

from __future__ import annotations

import pytest

from bdperiod.chain import build_chain

# The three canonical chains exercised throughout: transient with period 2,
# birth product positive (period infinity), and transient aperiodic.
D2_DOC = {
    "prefix": [[0.0, 0.5, 0.5]],
    "tail": {"family": "constant", "p": 0.7, "q": 0.3, "r": 0.0},
}
DINF_DOC = {"prefix": [], "tail": {"family": "product_positive", "c": 0.25, "rho": 0.5}}
D1_DOC = {"prefix": [], "tail": {"family": "constant", "p": 0.6, "q": 0.3, "r": 0.1}}

PR_DOC = {"prefix": [], "tail": {"family": "constant", "p": 0.3, "q": 0.6, "r": 0.1}}
NR_DOC = {"prefix": [], "tail": {"family": "constant", "p": 0.45, "q": 0.45, "r": 0.1}}

# name -> (document, expected classification, expected period)
FLEET: dict[str, tuple[dict, str, object]] = {
    "d2_canonical": (D2_DOC, "transient", 2),
    "d1_transient": (D1_DOC, "transient", 1),
    "pr_constant": (PR_DOC, "positive_recurrent", 1),
    "nr_constant": (NR_DOC, "null_recurrent", 1),
    "d2_prefixed": (
        {
            "prefix": [[0.0, 0.2, 0.8], [0.3, 0.1, 0.6]],
            "tail": {"family": "constant", "p": 0.65, "q": 0.35, "r": 0.0},
        },
        "transient",
        2,
    ),
    "geo_transient": (
        {"tail": {"family": "geometric_self", "p": 0.6, "q": 0.3, "c": 0.3, "rho": 0.5}},
        "transient",
        2,
    ),
    "geo_pr": (
        {"tail": {"family": "geometric_self", "p": 0.3, "q": 0.6, "c": 0.3, "rho": 0.5}},
        "positive_recurrent",
        1,
    ),
    "geo_nr": (
        {"tail": {"family": "geometric_self", "p": 0.45, "q": 0.45, "c": 0.2, "rho": 0.7}},
        "null_recurrent",
        1,
    ),
    "pow_heavy_tail": (
        {"tail": {"family": "power_self", "p": 0.6, "q": 0.3, "c": 0.5, "alpha": 0.7}},
        "transient",
        1,
    ),
    "pow_light_tail": (
        {"tail": {"family": "power_self", "p": 0.6, "q": 0.3, "c": 0.5, "alpha": 2.0}},
        "transient",
        2,
    ),
    "pow_nr": (
        {"tail": {"family": "power_self", "p": 0.45, "q": 0.45, "c": 0.3, "alpha": 1.5}},
        "null_recurrent",
        1,
    ),
    "prod_dinf": (DINF_DOC, "transient", "infinite"),
    "prod_dinf_slow": (
        {"tail": {"family": "product_positive", "c": 0.5, "rho": 0.3}},
        "transient",
        "infinite",
    ),
    "zst_d2": (
        {"prefix": [[0.0, 0.5, 0.5]], "tail": {"family": "zero_self_tail", "p": 0.7, "q": 0.3}},
        "transient",
        2,
    ),
    "zst_pr": (
        {"prefix": [[0.0, 0.3, 0.7]], "tail": {"family": "zero_self_tail", "p": 0.4, "q": 0.6}},
        "positive_recurrent",
        1,
    ),
}


@pytest.fixture(scope="session")
def fleet():
    return {name: (build_chain(doc), kind, period) for name, (doc, kind, period) in FLEET.items()}


@pytest.fixture(scope="session")
def d2_chain():
    return build_chain(D2_DOC)


@pytest.fixture(scope="session")
def dinf_chain():
    return build_chain(DINF_DOC)


@pytest.fixture(scope="session")
def d1_chain():
    return build_chain(D1_DOC)


@pytest.fixture(scope="session")
def pr_chain():
    return build_chain(PR_DOC)


@pytest.fixture(scope="session")
def nr_chain():
    return build_chain(NR_DOC)
