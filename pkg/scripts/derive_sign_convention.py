#!/usr/bin/env python3
"""Recalibrate the two free pairing signs and compare with the frozen file.

With --write the freshly derived convention replaces the target file; the
default is a dry run that only reports agreement, so CI can call this to
detect a sign regression in either the localiser or an oracle.
"""

import argparse
import sys

from speclocaliser import (
    derive_sign_convention,
    load_sign_convention,
    save_sign_convention,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--write", metavar="PATH", default=None,
                    help="write the derived convention to PATH")
    args = ap.parse_args()

    derived = derive_sign_convention()
    print("derived: even_sign=%+d odd_sign=%+d" % (derived.even_sign, derived.odd_sign))
    for parity, cal in sorted(derived.metadata["calibrations"].items()):
        print("  %s: %s pairing=%+d oracle=%+d" % (parity, cal["model"], cal["pairing"], cal["oracle"]))

    packaged = load_sign_convention()
    agree = (derived.even_sign, derived.odd_sign) == (packaged.even_sign, packaged.odd_sign)
    print("packaged: even_sign=%+d odd_sign=%+d -> %s"
          % (packaged.even_sign, packaged.odd_sign, "match" if agree else "MISMATCH"))

    if args.write:
        save_sign_convention(derived, args.write)
        print("wrote %s" % args.write)
    return 0 if agree else 1


if __name__ == "__main__":
    sys.exit(main())
