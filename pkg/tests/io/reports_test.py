"""
Test verification reports
"""

import json
import math

from freezegun import freeze_time
import numpy as np

from conf import conf
from fraclab.io.reports import CheckResult, VerificationReport

# pylint: disable=missing-function-docstring,redefined-outer-name


def _report(deterministic=False):
    report = VerificationReport("radial", "convexity", deterministic)
    report.add(CheckResult("second", True, np.float64(1e-9), 1e-8, "anchor",
                           runtime=0.5))
    report.add(CheckResult("first", False, [np.int64(1), math.inf], None,
                           "anchor", note="skipped"))
    return report


def test_entries_are_sorted_and_serializable():
    data = _report().to_dict()
    assert [entry["name"] for entry in data["entries"]] == ["first",
                                                            "second"]
    assert data["entries"][0]["measured"] == [1, "inf"]
    assert data["schema_version"] == conf.REPORT_SCHEMA_VERSION
    json.dumps(data)


@freeze_time("2026-03-01 12:00:00")
def test_timestamp():
    assert _report().to_dict()["created"] == "2026-03-01T12:00:00"


def test_deterministic_report_has_no_times():
    data = _report(deterministic=True).to_dict()
    assert "created" not in data
    assert all("runtime" not in entry for entry in data["entries"])
    assert data == _report(deterministic=True).to_dict()


def test_passed_needs_all_checks_and_anchors():
    report = VerificationReport("radial", "decay")
    report.add(CheckResult("barrier", True, anchor="bound"))
    assert report.passed
    report.add(CheckResult("decay", True))
    assert not report.passed
    assert report.missing_anchors() == ["decay"]
    report.entries[-1].anchor = "decay"
    report.add(CheckResult("other", False, anchor="x"))
    assert report.failures() == ["other"]
    assert not report.passed


def test_extend_prefixes_names():
    report = VerificationReport("suite", "suite")
    other = _report()
    other.details["epsilon"] = 0.1
    report.extend(other, prefix="radial")
    assert sorted(entry.name for entry in report.entries) == \
        ["radial/first", "radial/second"]
    assert report.details == {"radial": {"epsilon": 0.1}}


def test_write(tmp_path):
    path = tmp_path / "report.json"
    _report(deterministic=True).write(path)
    data = json.loads(path.read_text(encoding="utf8"))
    assert data["command"] == "convexity"
    assert not data["passed"]
