"""
Machine-readable verification reports
"""

import datetime
import json
import math

from conf import conf


class CheckResult():
    """
    Outcome of a single check.
    """
    # pylint: disable=too-few-public-methods,too-many-instance-attributes

    def __init__(self, name, passed, measured=None, tolerance=None,
                 anchor=None, note=None, runtime=None):
        """
        :name: Unique name of the check
        :passed: Boolean outcome
        :measured: Measured value (number, list or dict)
        :tolerance: Threshold the measurement is compared against
        :anchor: The statement the check verifies
        :note: Free-form remark, e.g. why a check was skipped
        :runtime: Seconds spent
        """
        # pylint: disable=too-many-arguments
        self.name = name
        self.passed = bool(passed)
        self.measured = measured
        self.tolerance = tolerance
        self.anchor = anchor
        self.note = note
        self.runtime = runtime

    def to_dict(self, deterministic=False):
        """
        Return a JSON-compatible dict; runtimes are left out in deterministic
        mode.
        """
        result = {"name": self.name, "passed": self.passed,
                  "measured": _jsonable(self.measured),
                  "tolerance": _jsonable(self.tolerance),
                  "anchor": self.anchor, "note": self.note}
        if not deterministic:
            result["runtime"] = self.runtime
        return result


def _jsonable(value):
    """
    Convert numpy scalars and non-finite floats to plain JSON values.
    """
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class VerificationReport():
    """
    Collection of check results of one command or suite.
    """

    def __init__(self, name, command, deterministic=False):
        """
        :name: Experiment name
        :command: CLI verb that produced the report
        :deterministic: Leave out timestamps and runtimes
        """
        self.name = name
        self.command = command
        self.deterministic = deterministic
        self.entries = []
        self.details = {}

    def add(self, entry):
        """
        Append a CheckResult and return it.
        """
        self.entries.append(entry)
        return entry

    def extend(self, other, prefix=None):
        """
        Append the entries of another report, optionally prefixing names.
        """
        for entry in other.entries:
            if prefix:
                entry.name = f"{prefix}/{entry.name}"
            self.entries.append(entry)
        if other.details:
            self.details[prefix or other.name] = other.details

    @property
    def passed(self):
        """
        Return True if every check passed and names its anchor.
        """
        return all(entry.passed for entry in self.entries) and \
            not self.missing_anchors()

    def missing_anchors(self):
        """
        Return the names of checks without an anchor.
        """
        return [entry.name for entry in self.entries if not entry.anchor]

    def failures(self):
        """
        Return the names of failed checks.
        """
        return [entry.name for entry in self.entries if not entry.passed]

    def to_dict(self):
        """
        Return the schema-versioned JSON representation, entries sorted by
        name.
        """
        result = {"schema_version": conf.REPORT_SCHEMA_VERSION,
                  "name": self.name, "command": self.command,
                  "passed": self.passed,
                  "entries": [entry.to_dict(self.deterministic)
                              for entry in sorted(self.entries,
                                                  key=lambda e: e.name)],
                  "details": _jsonable(self.details)}
        if not self.deterministic:
            result["created"] = datetime.datetime.now().isoformat()
        return result

    def write(self, filename):
        """
        Save the report as JSON.
        """
        with open(filename, "w", encoding="utf8") as destination:
            json.dump(self.to_dict(), destination, indent=2, sort_keys=True)
