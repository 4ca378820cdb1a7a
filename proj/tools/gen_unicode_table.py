#!/usr/bin/env python3
"""Writes src/unicode_tables.cpp: codepoint ranges in Unicode categories P* and S*."""
import sys
import unicodedata
from pathlib import Path


def ranges():
    out, start = [], None
    for cp in range(0x110000):
        hit = unicodedata.category(chr(cp))[0] in "PS"
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out


def main():
    target = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "src" / "unicode_tables.cpp")
    rs = ranges()
    lines = [
        "// Generated from the Unicode Character Database (general categories P* and S*),",
        f"// Unicode {unicodedata.unidata_version}. Regenerate with tools/gen_unicode_table.py.",
        '#include "unicode_tables.hpp"',
        "",
        "namespace eraclass::detail {",
        "",
        f"const std::array<CodepointRange, {len(rs)}> kPunctuationAndSymbols = {{{{",
    ]
    for i in range(0, len(rs), 4):
        lines.append("    " + ", ".join(f"{{0x{a:04X}, 0x{b:04X}}}" for a, b in rs[i:i + 4]) + ",")
    lines += ["}};", "", "}  // namespace eraclass::detail"]
    target.write_text("\n".join(lines) + "\n")
    print(f"{len(rs)} ranges -> {target} (update the array size in unicode_tables.hpp if it changed)")


if __name__ == "__main__":
    main()
