"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 1, ``BundleError``
-> 2, ``RecognizerError`` -> 3.
"""

from __future__ import annotations


class FlimlocError(Exception):
    pass


class ConfigError(FlimlocError):
    pass


class InvalidParams(ConfigError):
    pass


class BundleError(FlimlocError):
    pass


class MissingFile(BundleError):
    def __init__(self, path):
        super().__init__(f"missing bundle file: {path}")
        self.path = str(path)


class SchemaViolation(BundleError):
    def __init__(self, file: str, line: int | None, reason: str):
        where = file if line is None else f"{file}:{line}"
        super().__init__(f"{where}: {reason}")
        self.file = file
        self.line = line
        self.reason = reason


class DanglingReference(BundleError):
    def __init__(self, kind: str, ref_id: str, where: str = ""):
        msg = f"unknown {kind} {ref_id!r}"
        if where:
            msg += f" referenced in {where}"
        super().__init__(msg)
        self.kind = kind
        self.ref_id = ref_id


class NoFailingTests(BundleError):
    def __init__(self):
        super().__init__("bundle has no failing tests; MBFL is undefined")


class MissingGroundTruth(BundleError):
    def __init__(self, subject: str = ""):
        super().__init__(f"ground truth required but absent{': ' + subject if subject else ''}")


class UnknownMutant(FlimlocError, KeyError):
    def __str__(self):
        return f"unknown mutant {self.args[0]!r}"


class UnknownPlaceholder(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"template placeholder {{{name}}} is not a feature field")
        self.name = name


class UnparseableResponse(FlimlocError):
    pass


class RecognizerError(FlimlocError):
    pass


class RecognizerUnavailable(RecognizerError):
    """Raised once every submission has been attempted; ``failures`` maps
    ``(mutant_id, run_index)`` to the last error seen for that call."""

    def __init__(self, failures: dict[tuple[str, int], str]):
        self.failures = dict(sorted(failures.items()))
        lines = [f"  {m} run {r}: {why}" for (m, r), why in self.failures.items()]
        super().__init__(
            f"recognizer failed for {len(self.failures)} call(s):\n" + "\n".join(lines)
        )


class DegenerateMatrix(FlimlocError, ValueError):
    pass


class InvalidDenominator(FlimlocError, ValueError):
    pass
