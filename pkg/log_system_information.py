#!/usr/bin/env python3

import json
import os
import platform
import sys

THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "VECLIB_MAXIMUM_THREADS",
                    "NUMEXPR_NUM_THREADS")


def _blasInfo():
    try:
        import numpy as np
        config = np.show_config(mode="dicts")
    except Exception:
        return None
    deps = config.get("Build Dependencies", {})
    return {name: {key: deps[name].get(key) for key in ("name", "version")} for name in ("blas", "lapack") if name in deps}


def _packages():
    from importlib.metadata import distributions
    return sorted("{}=={}".format(dist.metadata["Name"], dist.version) for dist in distributions())


def make_sys_report(anonymous=False, skipPackages=False):
    """
    Describes the machine a run was produced on. Floating point results of the decoder depend on the BLAS build and
    its thread count, so both are part of the report.

    Args:
        anonymous (bool): Leave out the host name
        skipPackages (bool): Leave out the list of installed distributions

    Returns:
        dict: report, JSON serializable
    """
    result = {
        "python": {
            "version": platform.python_version(),
            "implementation": platform.python_implementation(),
            "compiler": platform.python_compiler(),
            "executable_bits": platform.architecture()[0],
        },
        "os": {
            "system": platform.system(),
            "release": platform.release(),
            "platform": platform.platform(),
        },
        "cpu": {
            "machine": platform.machine(),
            "processor": platform.processor(),
            "count": os.cpu_count(),
            "byteorder": sys.byteorder,
        },
        "threads": {name: os.environ.get(name) for name in THREAD_VARIABLES},
        "blas": _blasInfo(),
    }

    if not skipPackages:
        result["packages"] = _packages()
    if not anonymous:
        result["host"] = platform.node()
    return result


if __name__ == "__main__":
    data = make_sys_report()
    with open("log_system_information.json", "w") as f:
        json.dump(data, f, indent=4)

    print(json.dumps(data, indent=4))
    print("System info gathered successfully - saved as \"log_system_information.json\"")
