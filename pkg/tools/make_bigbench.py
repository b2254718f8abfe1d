#!/usr/bin/env python3
"""Regenerate benchmarks/vecscale800.asm.

A deliberately large straight-line kernel: checksum + running sum over a
160-word vector, scaling each element in place.  Sized to exercise the
address-trimming windows (instruction count in 513..1024 so the derived PC
needs exactly 10 bits; data footprint in 129..256 words so the derived BAR
needs exactly 8 bits).
"""

from pathlib import Path

N = 160

HEADER = """\
# vector scale + checksum, fully unrolled over {n} words
# regenerate with tools/make_bigbench.py
#   sum   -> out      xor checksum -> out+1      vec scaled in place

        ADDI x2, x0, 0          # running sum
        ADDI x3, x0, 0          # xor checksum
"""


def main():
    lines = [HEADER.format(n=N)]
    for i in range(N):
        lines.append(f"        LW x1, vec+{i}(x0)")
        lines.append("        ADD x2, x2, x1")
        lines.append("        XOR x3, x3, x1")
        lines.append("        SRAI x4, x1, 2")
        lines.append(f"        SW x4, vec+{i}(x0)")
    lines.append("        SW x2, out(x0)")
    lines.append("        SW x3, out+1(x0)")
    lines.append("        HALT")
    lines.append("")
    lines.append(".data")
    values = [(i * 2654435761) % 65521 - 32768 for i in range(N)]
    lines.append("vec:")
    for base in range(0, N, 8):
        chunk = ", ".join(str(v) for v in values[base:base + 8])
        lines.append(f".word {chunk}")
    lines.append("out: .space 2")
    out = Path(__file__).resolve().parent.parent / "benchmarks" / \
        "vecscale800.asm"
    out.write_text("\n".join(lines) + "\n")
    print(f"{out}: {3 + 5 * N} instructions, {N + 2} data words")


if __name__ == "__main__":
    main()
