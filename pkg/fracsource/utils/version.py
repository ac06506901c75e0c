import subprocess

import fracsource


def get_version() -> str:
    # a release patches __version__; otherwise describe the working tree
    if fracsource.__version__ != "dev":
        return fracsource.__version__

    try:
        tag = subprocess.check_output(["git", "describe", "--tags"], stderr=subprocess.DEVNULL).decode().strip()
        status = subprocess.check_output(["git", "status", "--porcelain"], stderr=subprocess.DEVNULL).decode().strip()
        return f"{tag}-dirty" if status else tag
    except Exception:
        return fracsource.__version__
