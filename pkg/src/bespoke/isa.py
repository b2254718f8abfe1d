"""Instruction set definition, assembler, ROM encoder and static validator.

The ISA is a small RV32-flavoured subset (two's complement, 32 architectural
registers, x0 hard-wired to zero) extended with a multi-precision MAC unit:
MAC.P32/P16/P8/P4 feed lane accumulators, MACR reads the lane sum, MACZ
clears the bank.  Program addresses are instruction indices and data
addresses are word indices; there is no byte-addressed memory.

The textual assembly grammar and both ROM encodings (32-bit and compressed
16-bit) are repo conventions, documented in docs/asm.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

# ---------------------------------------------------------------------------
# Opcode table
# ---------------------------------------------------------------------------

# operand formats:
#   rrr   MN rd, rs1, rs2
#   rri   MN rd, rs1, imm       (12-bit signed)
#   shift MN rd, rs1, shamt     (0..31)
#   load  MN rd, imm(rs1)       (12-bit signed)
#   store MN rs2, imm(rs1)      (12-bit signed)
#   br    MN rs1, rs2, target   (12-bit signed offset)
#   jal   MN rd, target         (20-bit signed offset)
#   ui    MN rd, imm            (20-bit unsigned)
#   mac   MN rs1, rs2
#   macr  MN rd
#   none  MN

CLASSES = ("alu", "mul", "load", "store", "branch", "jump",
           "mac", "macreduce", "macclear", "halt")


@dataclass(frozen=True)
class Opcode:
    mnemonic: str
    cls: str
    fmt: str
    code: int            # stable id used by the ROM encodings
    mac_precision: int = 0   # lane width for MAC.Pn, else 0

    def __repr__(self):
        return f"Opcode({self.mnemonic})"


def _build_opcode_table():
    spec = [
        ("ADD", "alu", "rrr"), ("ADDI", "alu", "rri"),
        ("SUB", "alu", "rrr"),
        ("AND", "alu", "rrr"), ("ANDI", "alu", "rri"),
        ("OR", "alu", "rrr"), ("ORI", "alu", "rri"),
        ("XOR", "alu", "rrr"), ("XORI", "alu", "rri"),
        ("SLL", "alu", "rrr"), ("SLLI", "alu", "shift"),
        ("SRL", "alu", "rrr"), ("SRLI", "alu", "shift"),
        ("SRA", "alu", "rrr"), ("SRAI", "alu", "shift"),
        ("SLT", "alu", "rrr"), ("SLTI", "alu", "rri"),
        ("MUL", "mul", "rrr"), ("MULH", "mul", "rrr"),
        ("LW", "load", "load"), ("LB", "load", "load"), ("LBU", "load", "load"),
        ("SW", "store", "store"), ("SB", "store", "store"),
        ("BEQ", "branch", "br"), ("BNE", "branch", "br"),
        ("BLT", "branch", "br"), ("BGE", "branch", "br"),
        ("JAL", "jump", "jal"), ("JALR", "jump", "rri"),
        ("LUI", "alu", "ui"), ("AUIPC", "alu", "ui"),
        ("MAC.P32", "mac", "mac"), ("MAC.P16", "mac", "mac"),
        ("MAC.P8", "mac", "mac"), ("MAC.P4", "mac", "mac"),
        ("MACR", "macreduce", "macr"), ("MACZ", "macclear", "none"),
        ("HALT", "halt", "none"),
    ]
    table = {}
    for code, (mn, cls, fmt) in enumerate(spec):
        prec = int(mn.split("P")[1]) if mn.startswith("MAC.P") else 0
        table[mn] = Opcode(mn, cls, fmt, code, prec)
    return table


OPCODES: dict[str, Opcode] = _build_opcode_table()

# CSR/system-call instructions never execute in this artifact; the group
# exists only as a removable entry in opcode-set configs.
OPTIONAL_OPCODE_GROUPS = ("csr_group",)

MAC_OPCODES = {mn: op for mn, op in OPCODES.items() if op.cls == "mac"}

_IMM_WIDTH = {  # documented immediate field widths, by operand format
    "rri": 12, "load": 12, "store": 12, "br": 12, "jal": 20,
}


def opcode(mnemonic: str) -> Opcode:
    try:
        return OPCODES[mnemonic.upper()]
    except KeyError:
        raise KeyError(f"unknown mnemonic {mnemonic!r}") from None


# ---------------------------------------------------------------------------
# Program representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Instruction:
    op: Opcode
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    source_line: int = 0

    # live-register helpers (only fields the operand format actually uses)

    def reads(self):
        f = self.op.fmt
        if f in ("rrr",):
            return (self.rs1, self.rs2)
        if f in ("rri", "shift", "load"):
            return (self.rs1,)
        if f in ("store", "br"):
            return (self.rs1, self.rs2)
        if f == "mac":
            return (self.rs1, self.rs2)
        return ()

    def writes(self):
        if self.op.fmt in ("rrr", "rri", "shift", "load", "jal", "ui", "macr"):
            return (self.rd,)
        return ()

    def registers(self):
        return tuple(set(self.reads()) | set(self.writes()))


@dataclass
class Program:
    instructions: list[Instruction] = field(default_factory=list)
    labels: dict[str, int] = field(default_factory=dict)        # code labels
    data_segment: list[int] = field(default_factory=list)       # 32-bit words
    data_base: int = 0
    data_labels: dict[str, int] = field(default_factory=dict)   # word addresses
    entry: int = 0

    def __len__(self):
        return len(self.instructions)

    @property
    def max_data_address(self) -> int:
        if not self.data_segment:
            return 0
        return self.data_base + len(self.data_segment) - 1


def programs_equal(a: Program, b: Program) -> bool:
    """Structural equality: instruction stream, data and entry point.

    Label names and source line numbers are assembly-level sugar and do not
    participate (branch targets are already resolved offsets).
    """
    if len(a.instructions) != len(b.instructions):
        return False
    for x, y in zip(a.instructions, b.instructions):
        if (x.op, x.rd, x.rs1, x.rs2, x.imm) != (y.op, y.rd, y.rs1, y.rs2, y.imm):
            return False
    return (a.data_segment == b.data_segment and a.data_base == b.data_base
            and a.entry == b.entry)


# ---------------------------------------------------------------------------
# Core configuration
# ---------------------------------------------------------------------------

@dataclass
class ISAConfig:
    enabled_opcodes: frozenset[str]
    register_count: int = 32
    pc_width_bits: int = 32
    bar_width_bits: int = 32
    word_width_bits: int = 32
    mac_precisions: frozenset[int] = frozenset()
    optional_groups: frozenset[str] = frozenset()  # e.g. csr_group, no semantics

    def __post_init__(self):
        if not (2 <= self.register_count <= 32):
            raise ValueError(f"register_count {self.register_count} outside 2..32")
        if not (1 <= self.pc_width_bits <= 32):
            raise ValueError(f"pc_width_bits {self.pc_width_bits} outside 1..32")
        if not (1 <= self.bar_width_bits <= 32):
            raise ValueError(f"bar_width_bits {self.bar_width_bits} outside 1..32")
        if self.word_width_bits not in (16, 32):
            raise ValueError(f"word_width_bits must be 16 or 32")
        unknown = set(self.enabled_opcodes) - set(OPCODES)
        if unknown:
            raise ValueError(f"unknown opcodes in config: {sorted(unknown)}")
        bad = set(self.mac_precisions) - {4, 8, 16, 32}
        if bad:
            raise ValueError(f"invalid MAC precisions: {sorted(bad)}")
        for mn in self.enabled_opcodes:
            op = OPCODES[mn]
            if op.cls == "mac" and op.mac_precision not in self.mac_precisions:
                raise ValueError(
                    f"{mn} enabled but precision {op.mac_precision} "
                    f"not in mac_precisions")

    def enables(self, op: Opcode) -> bool:
        return op.mnemonic in self.enabled_opcodes


def baseline_config(word_width_bits: int = 32, with_mul: bool = True,
                    mac_precisions=(4, 8, 16, 32)) -> ISAConfig:
    """Untrimmed 32-register core; optionally strip the hardware multiplier."""
    ops = set(OPCODES)
    if not with_mul:
        ops -= {"MUL", "MULH"}
    ops -= {f"MAC.P{n}" for n in (4, 8, 16, 32) if n not in mac_precisions}
    if not mac_precisions:
        ops -= {"MACR", "MACZ"}
    return ISAConfig(enabled_opcodes=frozenset(ops),
                     register_count=32, pc_width_bits=32, bar_width_bits=32,
                     word_width_bits=word_width_bits,
                     mac_precisions=frozenset(mac_precisions),
                     optional_groups=frozenset({"csr_group"}))


# ---------------------------------------------------------------------------
# Assembler
# ---------------------------------------------------------------------------

class AsmError(Exception):
    """Assembly error carrying source position."""

    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line
        self.column = column


_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_REG_RE = re.compile(r"^x([0-9]|[12][0-9]|3[01])$", re.IGNORECASE)
_MEM_RE = re.compile(r"^(.*)\(\s*(x\d{1,2})\s*\)$", re.IGNORECASE)


def _parse_reg(tok: str, line: int) -> int:
    m = _REG_RE.match(tok.strip())
    if not m:
        raise AsmError(f"expected register x0..x31, got {tok!r}", line)
    return int(m.group(1))


def _parse_int(tok: str, line: int) -> int:
    t = tok.strip().lower().replace("_", "")
    try:
        neg = t.startswith("-")
        core = t[1:] if neg else t
        v = int(core, 16) if core.startswith("0x") else int(core, 10)
        return -v if neg else v
    except ValueError:
        raise AsmError(f"bad integer literal {tok!r}", line) from None


def _check_imm(value: int, bits: int, signed: bool, line: int, what="immediate"):
    if signed:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    else:
        lo, hi = 0, (1 << bits) - 1
    if not (lo <= value <= hi):
        raise AsmError(f"{what} {value} out of {bits}-bit "
                       f"{'signed' if signed else 'unsigned'} range", line)
    return value


class _Pending:
    """Instruction operand awaiting label resolution in pass two."""

    def __init__(self, label, offset, kind):
        self.label = label
        self.offset = offset
        self.kind = kind  # 'reloff' (branch/jal) or 'abs' (imm value)


def _parse_operand_value(tok, line):
    """Integer literal, or label[+/-offset] left pending."""
    t = tok.strip()
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*([+-]\s*\d+)?$", t)
    if m and not _REG_RE.match(t):
        off = int(m.group(2).replace(" ", "")) if m.group(2) else 0
        return _Pending(m.group(1), off, "abs")
    return _parse_int(t, line)


def parse_assembly(text: str) -> Program:
    """Assemble source text into a Program (two passes, labels resolved).

    Grammar summary (full EBNF in docs/asm.md): one instruction per line,
    ``label:`` definitions, ``.data``/``.text`` section switches, ``.word``
    and ``.space`` data directives, ``#`` comments, registers x0..x31,
    decimal or 0x-hex immediates, ``label+N`` address arithmetic.
    """
    prog = Program()
    section = "text"
    pending_code: list[tuple[int, Instruction, _Pending]] = []

    def define_label(name, line):
        if not _LABEL_RE.match(name):
            raise AsmError(f"bad label name {name!r}", line)
        if name in prog.labels or name in prog.data_labels:
            raise AsmError(f"duplicate label {name!r}", line)
        if section == "text":
            prog.labels[name] = len(prog.instructions)
        else:
            prog.data_labels[name] = prog.data_base + len(prog.data_segment)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        while line:
            m = re.match(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*:\s*", line)
            if m:
                define_label(m.group(1), lineno)
                line = line[m.end():]
                continue
            break
        if not line:
            continue

        if line.startswith("."):
            parts = line.split(None, 1)
            directive = parts[0].lower()
            rest = parts[1] if len(parts) > 1 else ""
            if directive == ".data":
                section = "data"
            elif directive == ".text":
                section = "text"
            elif directive == ".word":
                if section != "data":
                    raise AsmError(".word outside .data section", lineno)
                for tok in rest.split(","):
                    v = _parse_int(tok, lineno)
                    if not (-(1 << 31) <= v < (1 << 32)):
                        raise AsmError(f"data word {v} out of 32-bit range", lineno)
                    prog.data_segment.append(v & 0xFFFFFFFF)
            elif directive == ".space":
                if section != "data":
                    raise AsmError(".space outside .data section", lineno)
                n = _parse_int(rest, lineno)
                if n < 0:
                    raise AsmError(".space count must be non-negative", lineno)
                prog.data_segment.extend([0] * n)
            else:
                raise AsmError(f"unknown directive {directive}", lineno)
            continue

        if section != "text":
            raise AsmError("instruction outside .text section", lineno)

        parts = line.split(None, 1)
        mn = parts[0].upper()
        if mn not in OPCODES:
            raise AsmError(f"unknown mnemonic {parts[0]!r}", lineno)
        op = OPCODES[mn]
        operands = [o.strip() for o in parts[1].split(",")] if len(parts) > 1 else []
        n_expected = {"rrr": 3, "rri": 3, "shift": 3, "load": 2, "store": 2,
                      "br": 3, "jal": 2, "ui": 2, "mac": 2, "macr": 1, "none": 0}
        if len(operands) != n_expected[op.fmt]:
            raise AsmError(f"{mn} expects {n_expected[op.fmt]} operand(s), "
                           f"got {len(operands)}", lineno)

        rd = rs1 = rs2 = imm = 0
        pend = None
        f = op.fmt
        if f == "rrr":
            rd, rs1, rs2 = (_parse_reg(o, lineno) for o in operands)
        elif f == "rri":
            rd = _parse_reg(operands[0], lineno)
            rs1 = _parse_reg(operands[1], lineno)
            v = _parse_operand_value(operands[2], lineno)
            if isinstance(v, _Pending):
                pend = v
            else:
                imm = _check_imm(v, 12, True, lineno)
        elif f == "shift":
            rd = _parse_reg(operands[0], lineno)
            rs1 = _parse_reg(operands[1], lineno)
            v = _parse_int(operands[2], lineno)
            if not (0 <= v <= 31):
                raise AsmError(f"shift amount {v} out of range 0..31", lineno)
            imm = v
        elif f in ("load", "store"):
            reg0 = _parse_reg(operands[0], lineno)
            m = _MEM_RE.match(operands[1])
            if not m:
                raise AsmError(f"expected imm(reg) operand, got {operands[1]!r}",
                               lineno)
            base = _parse_reg(m.group(2), lineno)
            v = _parse_operand_value(m.group(1) or "0", lineno)
            if isinstance(v, _Pending):
                pend = v
            else:
                imm = _check_imm(v, 12, True, lineno)
            if f == "load":
                rd, rs1 = reg0, base
            else:
                rs2, rs1 = reg0, base
        elif f == "br":
            rs1 = _parse_reg(operands[0], lineno)
            rs2 = _parse_reg(operands[1], lineno)
            v = _parse_operand_value(operands[2], lineno)
            if isinstance(v, _Pending):
                v.kind = "reloff"
                pend = v
            else:
                imm = _check_imm(v, 12, True, lineno, "branch offset")
        elif f == "jal":
            rd = _parse_reg(operands[0], lineno)
            v = _parse_operand_value(operands[1], lineno)
            if isinstance(v, _Pending):
                v.kind = "reloff"
                pend = v
            else:
                imm = _check_imm(v, 20, True, lineno, "jump offset")
        elif f == "ui":
            rd = _parse_reg(operands[0], lineno)
            imm = _check_imm(_parse_int(operands[1], lineno), 20, False, lineno)
        elif f == "mac":
            rs1, rs2 = (_parse_reg(o, lineno) for o in operands)
        elif f == "macr":
            rd = _parse_reg(operands[0], lineno)

        instr = Instruction(op, rd, rs1, rs2, imm, lineno)
        if pend is not None:
            pending_code.append((len(prog.instructions), instr, pend))
        prog.instructions.append(instr)

    # pass two: resolve labels
    for index, instr, pend in pending_code:
        if pend.label in prog.labels:
            value = prog.labels[pend.label] + pend.offset
        elif pend.label in prog.data_labels:
            value = prog.data_labels[pend.label] + pend.offset
        else:
            raise AsmError(f"unresolved label {pend.label!r}", instr.source_line)
        if pend.kind == "reloff":
            if pend.label not in prog.labels:
                raise AsmError(f"branch target {pend.label!r} is not a code label",
                               instr.source_line)
            value = value - index
        bits = _IMM_WIDTH[instr.op.fmt]
        _check_imm(value, bits, True, instr.source_line,
                   "resolved " + ("offset" if pend.kind == "reloff" else "address"))
        prog.instructions[index] = replace(instr, imm=value)

    for idx, instr in enumerate(prog.instructions):
        if instr.op.fmt in ("br", "jal"):
            target = idx + instr.imm
            if not (0 <= target < len(prog.instructions)):
                raise AsmError(
                    f"branch target {target} outside program of "
                    f"{len(prog.instructions)} instructions", instr.source_line)
    return prog


def pretty_print(program: Program) -> str:
    """Canonical source text; parse_assembly(pretty_print(p)) is structurally
    equal to p (branch targets emitted as numeric offsets)."""
    out = []
    for instr in program.instructions:
        op, f = instr.op, instr.op.fmt
        if f == "rrr":
            s = f"{op.mnemonic} x{instr.rd}, x{instr.rs1}, x{instr.rs2}"
        elif f in ("rri", "shift"):
            s = f"{op.mnemonic} x{instr.rd}, x{instr.rs1}, {instr.imm}"
        elif f == "load":
            s = f"{op.mnemonic} x{instr.rd}, {instr.imm}(x{instr.rs1})"
        elif f == "store":
            s = f"{op.mnemonic} x{instr.rs2}, {instr.imm}(x{instr.rs1})"
        elif f == "br":
            s = f"{op.mnemonic} x{instr.rs1}, x{instr.rs2}, {instr.imm}"
        elif f == "jal":
            s = f"{op.mnemonic} x{instr.rd}, {instr.imm}"
        elif f == "ui":
            s = f"{op.mnemonic} x{instr.rd}, {instr.imm}"
        elif f == "mac":
            s = f"{op.mnemonic} x{instr.rs1}, x{instr.rs2}"
        elif f == "macr":
            s = f"{op.mnemonic} x{instr.rd}"
        else:
            s = op.mnemonic
        out.append(s)
    if program.data_segment:
        out.append(".data")
        labels_at = {}
        for name, addr in program.data_labels.items():
            labels_at.setdefault(addr - program.data_base, []).append(name)
        for offset, w in enumerate(program.data_segment):
            for name in sorted(labels_at.get(offset, [])):
                out.append(f"{name}:")
            out.append(f".word {w}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# ROM encoding
# ---------------------------------------------------------------------------

class EncodeError(Exception):
    """Instruction not representable at the requested word width."""

    def __init__(self, instr: Instruction, reason: str):
        super().__init__(f"{instr.op.mnemonic} (line {instr.source_line}): {reason}")
        self.instr = instr
        self.reason = reason


@dataclass
class RomImage:
    word_width_bits: int
    words: list[int]

    @property
    def total_bits(self) -> int:
        return self.word_width_bits * len(self.words)

    def hex_dump(self) -> str:
        digits = self.word_width_bits // 4
        return "".join(f"{w:0{digits}x}\n" for w in self.words)


def _enc32(instr: Instruction) -> int:
    op, f = instr.op, instr.op.fmt
    word = op.code << 26
    if f == "rrr":
        word |= (instr.rd << 21) | (instr.rs1 << 16) | (instr.rs2 << 11)
    elif f in ("rri", "shift", "load"):
        word |= (instr.rd << 21) | (instr.rs1 << 16) | (instr.imm & 0xFFFF)
    elif f in ("store", "br"):
        word |= (instr.rs1 << 21) | (instr.rs2 << 16) | (instr.imm & 0xFFFF)
    elif f in ("jal", "ui"):
        word |= (instr.rd << 21) | (instr.imm & 0x1FFFFF)
    elif f == "mac":
        word |= (instr.rs1 << 21) | (instr.rs2 << 16)
    elif f == "macr":
        word |= instr.rd << 21
    return word


# 16-bit compressed format: 4-bit tag + per-tag payload.  Registers are
# restricted to x0..x15, immediates to 8-bit signed, ALU ops to the
# two-address form rd==rs1, branches compare against x0, and memory ops use
# x0-based absolute addressing.  LUI/AUIPC/LB/LBU/SB have no 16-bit form.
_C_TAGS = {"R": 0, "ADDI": 1, "ANDI": 2, "ORI": 3, "XORI": 4, "SLTI": 5,
           "SHIFT": 6, "LW": 7, "SW": 8, "BEQ": 9, "BNE": 10, "BLT": 11,
           "BGE": 12, "JAL": 13, "SYS": 14}
_C_RSUB = {"ADD": 0, "SUB": 1, "AND": 2, "OR": 3, "XOR": 4, "SLL": 5,
           "SRL": 6, "SRA": 7, "SLT": 8, "MUL": 9, "MULH": 10}
_C_SHSUB = {"SLLI": 0, "SRLI": 1, "SRAI": 2}
_C_SYSSUB = {"MAC.P32": 0, "MAC.P16": 1, "MAC.P8": 2, "MAC.P4": 3,
             "MACR": 4, "MACZ": 5, "HALT": 6, "JALR": 7}


def _reg4(instr, value, what):
    if not (0 <= value <= 15):
        raise EncodeError(instr, f"{what} x{value} exceeds x15 (16-bit form)")
    return value


def _imm8(instr, value, what="immediate"):
    if not (-128 <= value <= 127):
        raise EncodeError(instr, f"{what} {value} exceeds 8-bit signed limit")
    return value & 0xFF


def _enc16(instr: Instruction) -> int:
    op, mn, f = instr.op, instr.op.mnemonic, instr.op.fmt
    if mn in _C_RSUB:
        if instr.rd != instr.rs1:
            raise EncodeError(instr, "16-bit ALU form requires rd == rs1")
        return ((_C_TAGS["R"] << 12) | (_C_RSUB[mn] << 8)
                | (_reg4(instr, instr.rd, "rd") << 4)
                | _reg4(instr, instr.rs2, "rs2"))
    if mn in ("ADDI", "ANDI", "ORI", "XORI", "SLTI"):
        if instr.rd != instr.rs1:
            raise EncodeError(instr, "16-bit imm form requires rd == rs1")
        return ((_C_TAGS[mn] << 12) | (_reg4(instr, instr.rd, "rd") << 8)
                | _imm8(instr, instr.imm))
    if mn in _C_SHSUB:
        if instr.rd != instr.rs1:
            raise EncodeError(instr, "16-bit shift form requires rd == rs1")
        return ((_C_TAGS["SHIFT"] << 12) | (_C_SHSUB[mn] << 9)
                | (_reg4(instr, instr.rd, "rd") << 5) | instr.imm)
    if mn in ("LW", "SW"):
        if instr.rs1 != 0:
            raise EncodeError(instr, "16-bit memory form requires x0 base")
        reg = instr.rd if mn == "LW" else instr.rs2
        return ((_C_TAGS[mn] << 12) | (_reg4(instr, reg, "register") << 8)
                | _imm8(instr, instr.imm, "address"))
    if mn in ("BEQ", "BNE", "BLT", "BGE"):
        if instr.rs2 != 0:
            raise EncodeError(instr, "16-bit branch form compares against x0 only")
        return ((_C_TAGS[mn] << 12) | (_reg4(instr, instr.rs1, "rs1") << 8)
                | _imm8(instr, instr.imm, "branch offset"))
    if mn == "JAL":
        return ((_C_TAGS["JAL"] << 12) | (_reg4(instr, instr.rd, "rd") << 8)
                | _imm8(instr, instr.imm, "jump offset"))
    if mn == "JALR":
        if instr.imm != 0:
            raise EncodeError(instr, "16-bit JALR form requires zero offset")
        return ((_C_TAGS["SYS"] << 12) | (_C_SYSSUB[mn] << 9)
                | (_reg4(instr, instr.rd, "rd") << 5)
                | (_reg4(instr, instr.rs1, "rs1") << 1))
    if f == "mac":
        return ((_C_TAGS["SYS"] << 12) | (_C_SYSSUB[mn] << 9)
                | (_reg4(instr, instr.rs1, "rs1") << 5)
                | (_reg4(instr, instr.rs2, "rs2") << 1))
    if mn == "MACR":
        return ((_C_TAGS["SYS"] << 12) | (_C_SYSSUB[mn] << 9)
                | (_reg4(instr, instr.rd, "rd") << 5))
    if mn in ("MACZ", "HALT"):
        return (_C_TAGS["SYS"] << 12) | (_C_SYSSUB[mn] << 9)
    raise EncodeError(instr, f"{mn} has no 16-bit encoding")


def encode(program: Program, word_width_bits: int) -> RomImage:
    """Encode a program into a ROM image; deterministic per docs/asm.md.

    Data words are scaled to the ROM word width: at 16 bits each 32-bit data
    word occupies two ROM words (little-half first).
    """
    if word_width_bits not in (16, 32):
        raise ValueError("word_width_bits must be 16 or 32")
    words = []
    if word_width_bits == 32:
        words.extend(_enc32(i) for i in program.instructions)
        words.extend(w & 0xFFFFFFFF for w in program.data_segment)
    else:
        words.extend(_enc16(i) for i in program.instructions)
        for w in program.data_segment:
            words.append(w & 0xFFFF)
            words.append((w >> 16) & 0xFFFF)
    return RomImage(word_width_bits, words)


def decode_rom_word(word: int, word_width_bits: int = 32) -> dict:
    """Field-level view of a 32-bit ROM word (diagnostics and tests only)."""
    if word_width_bits != 32:
        raise ValueError("only the 32-bit layout is field-decodable")
    code = word >> 26
    by_code = {op.code: op for op in OPCODES.values()}
    op = by_code[code]
    f = op.fmt
    d = {"mnemonic": op.mnemonic}
    def simm(v, bits):
        return v - (1 << bits) if v & (1 << (bits - 1)) else v
    if f == "rrr":
        d.update(rd=(word >> 21) & 31, rs1=(word >> 16) & 31, rs2=(word >> 11) & 31)
    elif f in ("rri", "shift", "load"):
        d.update(rd=(word >> 21) & 31, rs1=(word >> 16) & 31,
                 imm=simm(word & 0xFFFF, 16))
    elif f in ("store", "br"):
        d.update(rs1=(word >> 21) & 31, rs2=(word >> 16) & 31,
                 imm=simm(word & 0xFFFF, 16))
    elif f in ("jal", "ui"):
        imm = word & 0x1FFFFF
        d.update(rd=(word >> 21) & 31,
                 imm=simm(imm, 21) if f == "jal" else imm)
    elif f == "mac":
        d.update(rs1=(word >> 21) & 31, rs2=(word >> 16) & 31)
    elif f == "macr":
        d.update(rd=(word >> 21) & 31)
    return d


# ---------------------------------------------------------------------------
# Static validation against a core configuration
# ---------------------------------------------------------------------------

@dataclass
class Violation:
    kind: str        # opcode | register | pc | data_address | mac_precision
    index: int       # instruction index (-1 for program-level findings)
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(program: Program, config: ISAConfig) -> ValidationReport:
    """List every way the program exceeds the configured core.

    Violations are data, not failures: opcode not enabled, register index
    beyond the register file, instruction index beyond the trimmed PC, and
    data addresses beyond the trimmed BAR (static view: segment extent plus
    x0-based absolute accesses).
    """
    v: list[Violation] = []
    pc_limit = 1 << config.pc_width_bits
    bar_limit = 1 << config.bar_width_bits
    for idx, instr in enumerate(program.instructions):
        mn = instr.op.mnemonic
        if not config.enables(instr.op):
            v.append(Violation("opcode", idx, f"opcode {mn} disabled"))
        elif instr.op.cls == "mac" and \
                instr.op.mac_precision not in config.mac_precisions:
            v.append(Violation("mac_precision", idx,
                               f"{mn} precision not configured"))
        for r in instr.registers():
            if r >= config.register_count:
                v.append(Violation(
                    "register", idx,
                    f"{mn} uses x{r}, register_count is {config.register_count}"))
        if idx >= pc_limit:
            v.append(Violation(
                "pc", idx,
                f"instruction index {idx} needs more than "
                f"{config.pc_width_bits} PC bits"))
        if instr.op.fmt in ("load", "store") and instr.rs1 == 0:
            if not (0 <= instr.imm < bar_limit):
                v.append(Violation(
                    "data_address", idx,
                    f"{mn} address {instr.imm} needs more than "
                    f"{config.bar_width_bits} BAR bits"))
    if program.data_segment and program.max_data_address >= bar_limit:
        v.append(Violation(
            "data_address", -1,
            f"data segment extends to word {program.max_data_address}, beyond "
            f"{config.bar_width_bits}-bit BAR"))
    return ValidationReport(v)
