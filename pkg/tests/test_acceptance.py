"""Every acceptance criterion at its stated tolerance.

Set CTXCOMM_FAST=1 for the tenfold-reduced run with widened tolerances.
"""

import os

import pytest

from ctxcomm.acceptance import CRITERIA, AcceptanceConfig

CONFIG = AcceptanceConfig(fast=os.environ.get("CTXCOMM_FAST") == "1")


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_acceptance_criterion(criterion, record_acceptance):
    results = CRITERIA[criterion](CONFIG)
    assert record_acceptance(criterion, results), "\n".join(r.line() for r in results)
