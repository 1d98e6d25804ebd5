import warnings

import numpy as np

# log(0) at the origin is the expected -inf of the integrands under test
np.seterr(divide="ignore")
warnings.filterwarnings("ignore", message="divide by zero", category=RuntimeWarning)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
