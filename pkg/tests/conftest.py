import json
import os
import time
from pathlib import Path

import pytest

from swarmroom import DEFAULT_PRIOR, Scenario, SMCSchedule, build_reference_table, run_recovery_study
from swarmroom import formats as fm

RESULTS_DIR = Path(__file__).resolve().parent.parent / "acceptance_results"
# finished desk-scale cases, so an interrupted slow run resumes
CACHE_DIR = RESULTS_DIR / "cache"

# seeds shared by every desk-scale study so the two table sizes are paired
TABLE_SEED = 101
STUDY_SEED = 202
DESK_SCHEDULE = SMCSchedule(population=500, generations=4, quantile=0.5)
DESK_CASES = 100

# acceptance verdicts, printed as one line each at the end of the run
VERDICTS: dict[str, tuple[str, str]] = {}
CRITERIA = [
    ("determinism", "repeated commands and worker counts give identical bytes"),
    ("dynamics-limits", "beacon-seeking, aligned and noisy limits of the dynamics"),
    ("diffusion-variance", "per-axis positional variance equals sigma^2 dt"),
    ("metric-arithmetic", "coverage, ECE, PC, NRMSE and correlation examples"),
    ("null-calibration", "prior-as-posterior coverage inside the 99% band, ECE < 0.05"),
    ("desk-recovery", "PC and correlation ordering at N=3000, S=100, ABC-SMC"),
    ("budget-trend", "NRMSE(v), NRMSE(w) at N=30000 no worse than at N=3000"),
    ("table-speed", "N=3000 reference table in under 60 s"),
]


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@pytest.fixture
def verdict():
    def record(key, passed, detail=""):
        VERDICTS[key] = ("PASS" if passed else "FAIL", detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, title in CRITERIA:
        status, detail = VERDICTS.get(key, ("NOT RUN", "not selected in this session"))
        terminalreporter.write_line(f"{status:<8} {key:<20} {title}" + (f" | {detail}" if detail else ""))


def save_result(name, payload):
    RESULTS_DIR.mkdir(exist_ok=True)
    (RESULTS_DIR / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@pytest.fixture(scope="session")
def desk_scenario():
    return Scenario.from_config()


@pytest.fixture(scope="session")
def timed_small_table(desk_scenario):
    start = time.perf_counter()
    table = build_reference_table(DEFAULT_PRIOR, desk_scenario, 3000, TABLE_SEED, workers=available_cores())
    return table, time.perf_counter() - start


def _desk_study(table, label):
    start = time.perf_counter()
    report, posts = run_recovery_study(
        DEFAULT_PRIOR, table.scenario, table, DESK_CASES, STUDY_SEED, method="smc",
        schedule=DESK_SCHEDULE, workers=available_cores(), progress=label,
        checkpoint_dir=CACHE_DIR / f"{label}_t{TABLE_SEED}_s{STUDY_SEED}",
    )
    elapsed = time.perf_counter() - start
    payload = report.to_dict()
    payload["wall_seconds"] = elapsed
    payload["simulations_per_case"] = [int(sum(p.info["simulations"])) for p in posts]
    save_result(f"{label}.json", payload)
    return report, posts


@pytest.fixture(scope="session")
def desk_study_small(timed_small_table):
    return _desk_study(timed_small_table[0], "smc_recovery_n3000")


@pytest.fixture(scope="session")
def desk_study_large(desk_scenario):
    path = CACHE_DIR / f"table_n30000_t{TABLE_SEED}.swrt"
    if path.exists():
        table = fm.load_table(path)
    else:
        table = build_reference_table(DEFAULT_PRIOR, desk_scenario, 30000, TABLE_SEED, workers=available_cores())
        CACHE_DIR.mkdir(parents=True, exist_ok=True)
        fm.save_table(table, path)
    return _desk_study(table, "smc_recovery_n30000")
