"""Regression pin: the bundled hardware-gain scenario must reproduce its
committed golden log byte for byte.

Regenerate after an intentional behavior change with:
    sttk run paper_2d_hw_case --out tests/golden/paper_2d_hw_case.log
"""

from pathlib import Path

from sttk.cli import resolve_scenario_path
from sttk.engine import run
from sttk.logio import write_log
from sttk.scenario_io import load_scenario

GOLDEN = Path(__file__).parent / "golden" / "paper_2d_hw_case.log"


def test_hw_case_trace_matches_golden(tmp_path):
    scenario = load_scenario(resolve_scenario_path("paper_2d_hw_case"))
    log = run(scenario)
    fresh = tmp_path / "fresh.log"
    write_log(log, fresh)
    assert fresh.read_bytes() == GOLDEN.read_bytes()
