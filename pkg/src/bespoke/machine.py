"""Instruction-level simulator with a configurable cycle-cost model.

Execution is deterministic: registers are two's-complement 32-bit values,
memory is a flat array of 32-bit words indexed by word address, and every
retired instruction charges its class cost from the CostModel.  The MAC unit
is one bank of eight 32-bit lane accumulators, re-sliced by the active
precision; switching precision without an intervening MACZ is a fault.

Programs are compiled to per-instruction closures once at load time so the
evaluation harness can push tens of millions of retired instructions through
pure Python in reasonable time.  The closures capture the register and
memory lists directly; reset() therefore replaces their contents in place,
never the objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .isa import ISAConfig, Instruction, Program

_MASK32 = 0xFFFFFFFF
_SIGN32 = 0x80000000


def to_i32(value: int) -> int:
    """Wrap an integer into two's-complement 32-bit range."""
    value &= _MASK32
    return value - 0x100000000 if value & _SIGN32 else value


def to_u32(value: int) -> int:
    return value & _MASK32


# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    """Cycle cost per instruction class.

    Only mul=3 (multi-cycle multiplier) and mac=1 (single-cycle MAC) are
    anchored; the remainder are declared model parameters.  Speedup figures
    are always relative to the same CostModel, so per-op absolutes cancel in
    trend comparisons.  HALT retires at the alu cost.
    """
    alu: int = 1
    load: int = 1
    store: int = 1
    branch_not_taken: int = 1
    branch_taken: int = 2
    jump: int = 1
    mul: int = 3
    mac: int = 1
    macreduce: int = 1
    macclear: int = 1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 1:
                raise ValueError(f"cost {name}={value} must be >= 1")

    def cost_of_class(self, cls: str, taken: bool = False) -> int:
        if cls == "branch":
            return self.branch_taken if taken else self.branch_not_taken
        if cls == "halt":
            return self.alu
        return getattr(self, cls)


# ---------------------------------------------------------------------------
# MAC unit
# ---------------------------------------------------------------------------

LANE_COUNTS = {4: 8, 8: 4, 16: 2, 32: 1}


class MacUnit:
    """Eight 32-bit lane accumulators shared across precisions.

    A precision becomes active on the first MAC.Pn after a clear; lanes are
    the LSB-first n-bit slices of the operand words (lane i at bits
    [i*n+n-1 : i*n]).  Accumulators wrap modulo 2^32; wraps are counted,
    never trapped.
    """

    __slots__ = ("acc", "active_precision", "overflow_events")

    def __init__(self):
        self.acc = [0] * 8
        self.active_precision: int | None = None
        self.overflow_events = 0

    def clone(self) -> "MacUnit":
        m = MacUnit()
        m.acc = list(self.acc)
        m.active_precision = self.active_precision
        m.overflow_events = self.overflow_events
        return m

    def clear(self):
        for i in range(8):
            self.acc[i] = 0
        self.active_precision = None

    def step(self, precision: int, rs1_value: int, rs2_value: int):
        """One MAC.Pn: every lane multiplies its signed n-bit operand slices
        exactly and accumulates with 32-bit wraparound."""
        if self.active_precision is None:
            self.active_precision = precision
        elif self.active_precision != precision:
            raise MacPrecisionFault(self.active_precision, precision)
        n = precision
        a = rs1_value & _MASK32
        b = rs2_value & _MASK32
        mask = (1 << n) - 1
        sign = 1 << (n - 1)
        acc = self.acc
        for i in range(LANE_COUNTS[n]):
            la = (a >> (i * n)) & mask
            lb = (b >> (i * n)) & mask
            if la & sign:
                la -= 1 << n
            if lb & sign:
                lb -= 1 << n
            raw = acc[i] + la * lb
            wrapped = to_i32(raw)
            if wrapped != raw:
                self.overflow_events += 1
            acc[i] = wrapped

    def reduce(self) -> int:
        """Two's-complement 32-bit sum of the active lanes; state untouched."""
        if self.active_precision is None:
            return 0
        return to_i32(sum(self.acc[:LANE_COUNTS[self.active_precision]]))

    def lanes(self) -> list[int]:
        if self.active_precision is None:
            return []
        return list(self.acc[:LANE_COUNTS[self.active_precision]])


def mac_step(mac: MacUnit, precision: int, rs1_value: int, rs2_value: int) -> MacUnit:
    """Functional wrapper over MacUnit.step (returns an updated copy)."""
    out = mac.clone()
    out.step(precision, rs1_value, rs2_value)
    return out


def mac_reduce(mac: MacUnit) -> int:
    return mac.reduce()


def mac_clear(mac: MacUnit) -> MacUnit:
    out = mac.clone()
    out.clear()
    return out


# ---------------------------------------------------------------------------
# Faults
# ---------------------------------------------------------------------------

class SimulationFault(Exception):
    """Architectural fault: the program exceeded the configured core."""

    def __init__(self, kind, message, index=-1, mnemonic="?"):
        super().__init__(f"[{kind}] at instruction {index} ({mnemonic}): {message}")
        self.kind = kind
        self.index = index
        self.mnemonic = mnemonic
        self.detail = message

    def to_dict(self):
        return {"fault": self.kind, "index": self.index,
                "mnemonic": self.mnemonic, "detail": self.detail}


class MacPrecisionFault(SimulationFault):
    def __init__(self, active, requested):
        super().__init__(
            "mac_precision",
            f"precision switch {active}->{requested} without MACZ")


class CycleBudgetExceeded(Exception):
    """Distinct from faults: the run did not halt within max_cycles."""

    def __init__(self, cycles, pc):
        super().__init__(f"cycle budget exhausted after {cycles} cycles (pc={pc})")
        self.cycles = cycles
        self.pc = pc


# ---------------------------------------------------------------------------
# Run statistics
# ---------------------------------------------------------------------------

@dataclass
class RunStats:
    total_cycles: int = 0
    instructions_retired: int = 0
    retired_by_opcode: dict[str, int] = field(default_factory=dict)
    mac_overflow_events: int = 0

    def to_dict(self):
        return {
            "total_cycles": self.total_cycles,
            "instructions_retired": self.instructions_retired,
            "retired_by_opcode": dict(sorted(self.retired_by_opcode.items())),
            "mac_overflow_events": self.mac_overflow_events,
        }


# ---------------------------------------------------------------------------
# Machine
# ---------------------------------------------------------------------------

class Machine:
    """One simulated core instance: config + cost model + loaded program.

    Instances share nothing; run any number of them in parallel.
    """

    def __init__(self, config: ISAConfig, cost_model: CostModel | None = None):
        self.config = config
        self.cost = cost_model or CostModel()
        self.program: Program | None = None
        self.regs = [0] * 32
        self.mem: list[int] = []
        self.mac = MacUnit()
        self.pc = 0
        self.halted = False
        self._ops = []          # compiled closures, one per instruction
        self._mnemonics = []
        self._touched: set[int] = set()   # registers dynamically read/written
        self._initial_data: list[int] = []

    # -- program loading ----------------------------------------------------

    def load(self, program: Program):
        self.program = program
        self._initial_data = [to_i32(w) for w in program.data_segment]
        self._mnemonics = [i.op.mnemonic for i in program.instructions]
        self._ops = [self._compile(idx, instr)
                     for idx, instr in enumerate(program.instructions)]
        self.reset()

    def reset(self):
        """Registers, memory, MAC and PC back to the load-time state.

        In-place: compiled closures hold references to the lists.
        """
        regs = self.regs
        for i in range(32):
            regs[i] = 0
        self.mem[:] = self._initial_data
        self.mac.clear()
        self.mac.overflow_events = 0
        self.pc = self.program.entry if self.program else 0
        self.halted = False
        self._touched = set()

    # -- memory -------------------------------------------------------------

    def read_word(self, address: int) -> int:
        if address < len(self.mem):
            return self.mem[address]
        return 0

    def write_word(self, address: int, value: int):
        if address >= len(self.mem):
            self.mem.extend([0] * (address + 1 - len(self.mem)))
        self.mem[address] = to_i32(value)

    def write_words(self, address: int, values):
        for i, v in enumerate(values):
            self.write_word(address + i, v)

    # -- instruction compilation --------------------------------------------

    def _fault_op(self, kind, message, idx, mn):
        def op_():
            raise SimulationFault(kind, message, idx, mn)
        return op_

    def _compile(self, idx: int, instr: Instruction):
        """Build the execute closure for one instruction.

        Register-file and opcode-set membership are static per instruction,
        so out-of-config instructions compile to fault raisers: they only
        fault if actually executed (dead disabled code is harmless).
        Writes to x0 are compiled away.
        """
        cfg, cost = self.config, self.cost
        op, mn = instr.op, instr.op.mnemonic
        rd, rs1, rs2, imm = instr.rd, instr.rs1, instr.rs2, instr.imm

        if not cfg.enables(op):
            return self._fault_op("opcode_disabled",
                                  "opcode not in enabled_opcodes", idx, mn)
        if op.cls == "mac" and op.mac_precision not in cfg.mac_precisions:
            return self._fault_op("mac_precision",
                                  "precision not configured", idx, mn)
        for r in instr.registers():
            if r >= cfg.register_count:
                return self._fault_op(
                    "register",
                    f"x{r} >= register_count {cfg.register_count}", idx, mn)

        regs = self.regs
        mem = self.mem
        mac = self.mac
        machine = self
        npc = idx + 1
        c_alu = cost.alu
        bar_limit = 1 << cfg.bar_width_bits
        bar_bits = cfg.bar_width_bits

        if mn == "ADD":
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] + regs[rs2])
                return npc, c_alu
        elif mn == "ADDI":
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] + imm)
                return npc, c_alu
        elif mn == "SUB":
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] - regs[rs2])
                return npc, c_alu
        elif mn == "AND":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] & regs[rs2]
                return npc, c_alu
        elif mn == "ANDI":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] & imm
                return npc, c_alu
        elif mn == "OR":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] | regs[rs2]
                return npc, c_alu
        elif mn == "ORI":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] | imm
                return npc, c_alu
        elif mn == "XOR":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] ^ regs[rs2]
                return npc, c_alu
        elif mn == "XORI":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] ^ imm
                return npc, c_alu
        elif mn == "SLL":
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] << (regs[rs2] & 31))
                return npc, c_alu
        elif mn == "SLLI":
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] << imm)
                return npc, c_alu
        elif mn == "SRL":
            def op_():
                if rd:
                    regs[rd] = to_i32((regs[rs1] & _MASK32) >> (regs[rs2] & 31))
                return npc, c_alu
        elif mn == "SRLI":
            def op_():
                if rd:
                    regs[rd] = to_i32((regs[rs1] & _MASK32) >> imm)
                return npc, c_alu
        elif mn == "SRA":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] >> (regs[rs2] & 31)
                return npc, c_alu
        elif mn == "SRAI":
            def op_():
                if rd:
                    regs[rd] = regs[rs1] >> imm
                return npc, c_alu
        elif mn == "SLT":
            def op_():
                if rd:
                    regs[rd] = 1 if regs[rs1] < regs[rs2] else 0
                return npc, c_alu
        elif mn == "SLTI":
            def op_():
                if rd:
                    regs[rd] = 1 if regs[rs1] < imm else 0
                return npc, c_alu
        elif mn == "MUL":
            c_mul = cost.mul
            def op_():
                if rd:
                    regs[rd] = to_i32(regs[rs1] * regs[rs2])
                return npc, c_mul
        elif mn == "MULH":
            c_mul = cost.mul
            def op_():
                if rd:
                    regs[rd] = to_i32((regs[rs1] * regs[rs2]) >> 32)
                return npc, c_mul
        elif mn == "LW":
            c_load = cost.load
            def op_():
                a = regs[rs1] + imm
                if 0 <= a < bar_limit:
                    if rd:
                        regs[rd] = mem[a] if a < len(mem) else 0
                    return npc, c_load
                raise SimulationFault(
                    "data_address",
                    f"address {a} needs more than {bar_bits} BAR bits", idx, mn)
        elif mn in ("LB", "LBU"):
            c_load = cost.load
            signed = mn == "LB"
            def op_():
                a = regs[rs1] + imm
                if not (0 <= a < bar_limit):
                    raise SimulationFault(
                        "data_address",
                        f"address {a} needs more than {bar_bits} BAR bits",
                        idx, mn)
                b = (mem[a] if a < len(mem) else 0) & 0xFF
                if signed and b & 0x80:
                    b -= 256
                if rd:
                    regs[rd] = b
                return npc, c_load
        elif mn == "SW":
            c_store = cost.store
            def op_():
                a = regs[rs1] + imm
                if 0 <= a < bar_limit:
                    if a >= len(mem):
                        mem.extend([0] * (a + 1 - len(mem)))
                    mem[a] = regs[rs2]
                    return npc, c_store
                raise SimulationFault(
                    "data_address",
                    f"address {a} needs more than {bar_bits} BAR bits", idx, mn)
        elif mn == "SB":
            c_store = cost.store
            def op_():
                a = regs[rs1] + imm
                if not (0 <= a < bar_limit):
                    raise SimulationFault(
                        "data_address",
                        f"address {a} needs more than {bar_bits} BAR bits",
                        idx, mn)
                if a >= len(mem):
                    mem.extend([0] * (a + 1 - len(mem)))
                mem[a] = to_i32((mem[a] & ~0xFF) | (regs[rs2] & 0xFF))
                return npc, c_store
        elif mn in ("BEQ", "BNE", "BLT", "BGE"):
            tgt = idx + imm
            c_bt, c_bn = cost.branch_taken, cost.branch_not_taken
            if mn == "BEQ":
                def op_():
                    if regs[rs1] == regs[rs2]:
                        return tgt, c_bt
                    return npc, c_bn
            elif mn == "BNE":
                def op_():
                    if regs[rs1] != regs[rs2]:
                        return tgt, c_bt
                    return npc, c_bn
            elif mn == "BLT":
                def op_():
                    if regs[rs1] < regs[rs2]:
                        return tgt, c_bt
                    return npc, c_bn
            else:
                def op_():
                    if regs[rs1] >= regs[rs2]:
                        return tgt, c_bt
                    return npc, c_bn
        elif mn == "JAL":
            tgt = idx + imm
            c_jump = cost.jump
            def op_():
                if rd:
                    regs[rd] = npc
                return tgt, c_jump
        elif mn == "JALR":
            c_jump = cost.jump
            def op_():
                t = to_i32(regs[rs1] + imm)
                if rd:
                    regs[rd] = npc
                return t, c_jump
        elif mn == "LUI":
            value = to_i32(imm << 12)
            def op_():
                if rd:
                    regs[rd] = value
                return npc, c_alu
        elif mn == "AUIPC":
            value = to_i32((imm << 12) + idx)
            def op_():
                if rd:
                    regs[rd] = value
                return npc, c_alu
        elif op.cls == "mac":
            precision = op.mac_precision
            c_mac = cost.mac
            mac_step_fn = mac.step
            def op_():
                try:
                    mac_step_fn(precision, regs[rs1], regs[rs2])
                except MacPrecisionFault as f:
                    raise SimulationFault("mac_precision", f.detail, idx, mn) \
                        from None
                return npc, c_mac
        elif mn == "MACR":
            c_macr = cost.macreduce
            mac_reduce_fn = mac.reduce
            def op_():
                if rd:
                    regs[rd] = mac_reduce_fn()
                return npc, c_macr
        elif mn == "MACZ":
            c_macz = cost.macclear
            mac_clear_fn = mac.clear
            def op_():
                mac_clear_fn()
                return npc, c_macz
        elif mn == "HALT":
            c_halt = cost.alu
            def op_():
                machine.halted = True
                return idx, c_halt
        else:  # pragma: no cover - opcode table is closed
            raise AssertionError(mn)
        return op_

    # -- execution ----------------------------------------------------------

    def step(self) -> tuple[int, str, int]:
        """Execute one instruction; returns (index, mnemonic, cycles)."""
        if self.halted:
            raise RuntimeError("machine is halted")
        idx = self.pc
        self._check_pc(idx)
        next_pc, cycles = self._ops[idx]()
        self.pc = next_pc
        return idx, self._mnemonics[idx], cycles

    def _check_pc(self, pc: int):
        if not (0 <= pc < len(self._ops)):
            raise SimulationFault(
                "pc", f"pc {pc} outside program of {len(self._ops)} instructions",
                pc)
        if pc >= (1 << self.config.pc_width_bits):
            raise SimulationFault(
                "pc", f"pc {pc} needs more than "
                f"{self.config.pc_width_bits} PC bits", pc)

    def run(self, max_cycles: int = 10_000_000, trace=None,
            track_registers: bool = False) -> RunStats:
        """Run until HALT or until the cycle budget is exhausted.

        The fast path (no trace, no register tracking) skips per-opcode
        retire counts; use run_counted() when they matter.  `trace` is
        called as trace(index, mnemonic, cycles, cumulative_cycles) per
        retired instruction.
        """
        stats = RunStats()
        retired: dict[str, int] = {}
        ops = self._ops
        mnemonics = self._mnemonics
        cycles = 0
        n_retired = 0
        pc = self.pc
        pc_limit = min(len(ops), 1 << self.config.pc_width_bits)
        program = self.program

        try:
            if trace is None and not track_registers:
                while not self.halted:
                    if not 0 <= pc < pc_limit:
                        self._check_pc(pc)
                    pc, c = ops[pc]()
                    cycles += c
                    n_retired += 1
                    if cycles >= max_cycles and not self.halted:
                        raise CycleBudgetExceeded(cycles, pc)
            else:
                touched = self._touched
                instructions = program.instructions
                while not self.halted:
                    if not 0 <= pc < pc_limit:
                        self._check_pc(pc)
                    idx = pc
                    pc, c = ops[pc]()
                    cycles += c
                    n_retired += 1
                    mn = mnemonics[idx]
                    retired[mn] = retired.get(mn, 0) + 1
                    if track_registers:
                        touched.update(instructions[idx].registers())
                    if trace is not None:
                        trace(idx, mn, c, cycles)
                    if cycles >= max_cycles and not self.halted:
                        raise CycleBudgetExceeded(cycles, pc)
        finally:
            self.pc = pc

        stats.total_cycles = cycles
        stats.instructions_retired = n_retired
        stats.retired_by_opcode = retired
        stats.mac_overflow_events = self.mac.overflow_events
        return stats

    def run_counted(self, max_cycles: int = 10_000_000,
                    track_registers: bool = False) -> RunStats:
        """Like run(), with per-opcode retire counts populated."""
        return self.run(max_cycles=max_cycles, trace=None if track_registers
                        else _null_trace, track_registers=track_registers)

    @property
    def touched_registers(self) -> set[int]:
        return set(self._touched)


def _null_trace(index, mnemonic, cycles, cumulative):
    pass


def run_program(program: Program, config: ISAConfig,
                cost_model: CostModel | None = None,
                max_cycles: int = 10_000_000,
                inputs: dict[int, int] | None = None) -> tuple[RunStats, Machine]:
    """Convenience wrapper: load, optionally poke input words, run."""
    m = Machine(config, cost_model)
    m.load(program)
    if inputs:
        for addr, value in inputs.items():
            m.write_word(addr, value)
    stats = m.run_counted(max_cycles=max_cycles)
    return stats, m
