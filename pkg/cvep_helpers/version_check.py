from pathlib import Path

STACK = ("numpy", "scipy", "scikit-learn", "joblib", "matplotlib", "cvep-sdk")


def getVersionFromRequirements(package_name, req_path):
    with req_path.resolve().open() as f:
        for line in f.readlines():
            if line.startswith(package_name):
                #not commented out and has version indicator (>= or ==)
                for marker in ('==', '>='):
                    if marker in line:
                        return line.split(marker)[1].split(';')[0].strip()
    return None


def getVersion(module_name):
    try:
        from importlib.metadata import version
        return version(module_name)
    except Exception:
        pass
    try:
        import importlib
        module = importlib.import_module(module_name.replace("-", "_"))
        if hasattr(module, '__version__'):
            return module.__version__
    except Exception:
        pass

    return None


def getStackVersions():
    """
    Returns:
        dict: installed version of every package of the stack (:code:`None` when missing)
    """
    return {name: getVersion(name) for name in STACK}


def checkRequirementsVersion(req_path=Path(__file__).parent.parent / "cvep_sdk" / "requirements.txt"):
    """
    Returns:
        list: packages of the requirements file that are not installed
    """
    missing = []
    for name in STACK[:-1]:
        if getVersionFromRequirements(name, req_path) is not None and getVersion(name) is None:
            missing.append(name)
    return missing
