#!/usr/bin/env python3
"""Write the named calibration profiles shipped in code out to profiles/."""

from pathlib import Path

from monorange.profiles import (
    BUILTIN_CAMERA,
    BUILTIN_DEPTH,
    BUILTIN_REGRESSION,
    DEFAULT_HEIGHTS,
    save_height_table,
    save_profile,
)

OUT = Path(__file__).resolve().parent.parent / "profiles"


def main():
    OUT.mkdir(exist_ok=True)
    for name, profile in BUILTIN_CAMERA.items():
        save_profile(OUT / f"camera_{name}.json", profile)
    for name, profile in BUILTIN_REGRESSION.items():
        save_profile(OUT / f"regression_{name}.json", profile)
    for name, profile in BUILTIN_DEPTH.items():
        save_profile(OUT / f"depth_{name}.json", profile)
    save_height_table(OUT / "heights_default.json", DEFAULT_HEIGHTS)
    print(f"profiles written to {OUT}/")


if __name__ == "__main__":
    main()
