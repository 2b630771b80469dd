"""Collects one pass/fail line per acceptance criterion for the run summary."""
RESULTS = {}


def record(number, passed, detail):
    """passed=None marks a criterion that could not be run."""
    status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
    line = f"criterion {number}: {status}  {detail}"
    RESULTS[number] = line
    print(line)
    return passed
