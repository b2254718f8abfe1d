"""Fixed-point inference program generation (MLP and one-vs-one SVM).

Four lowering variants share one arithmetic contract (identical outputs,
different cycle/size profiles):

  softmul_baseline  multiplier-less ALU code; every multiply is expanded
                    inline into the shift-add sequence
  mul_baseline      hardware MUL + ADD accumulation
  mac_scalar        MAC.P32 per term, one MACZ/MACR per neuron
  mac_simd          MAC.Pn over packed lanes, n <= 16

Lowering shapes (chosen to mirror compiled scalar code vs a hand-written
SIMD kernel): scalar variants emit one term loop per neuron (pointer walk,
end-pointer compare); SIMD MLPs pack the input once at runtime, then run
nested neuron/word loops and repack activations for the output layer; SIMD
SVMs merge input lanes on the fly inside each decision loop.  Everything
fits registers x0..x11.

Input slots hold one code per word: sign-extended for the scalar variants,
zero-extended (masked to the lane width) for mac_simd, padded with zero
codes to a lane multiple.  Classifiers write the winning class index to the
result slot, regressors the raw output code at the accumulator scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isa import Program, parse_assembly
from .models import QuantModel

VARIANTS = ("softmul_baseline", "mul_baseline", "mac_scalar", "mac_simd")


@dataclass(frozen=True)
class CodegenOptions:
    variant: str
    precision: int
    word_width_bits: int = 32

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.precision not in (4, 8, 16, 32):
            raise ValueError(f"precision {self.precision} not supported")
        if self.variant == "mac_simd":
            if self.precision > 16:
                raise ValueError("mac_simd requires precision <= 16 "
                                 "(at least 2 lanes)")
            if self.word_width_bits < 32 and self.precision == 4:
                raise ValueError("8-lane packing needs a 32-bit datapath; "
                                 "use mac_scalar on narrow cores")

    @property
    def lanes(self) -> int:
        return 32 // self.precision if self.variant == "mac_simd" else 1


# ---------------------------------------------------------------------------
# lane packing
# ---------------------------------------------------------------------------

def pack_lanes(codes, precision: int) -> list[int]:
    """Pack signed n-bit codes into 32-bit words, lane i at bits
    [i*n+n-1 : i*n]; the tail is padded with zero codes."""
    n = precision
    k = 32 // n
    lo, hi = -(1 << (n - 1)), (1 << (n - 1)) - 1
    mask = (1 << n) - 1
    words = []
    buf = list(codes)
    for base in range(0, len(buf), k):
        word = 0
        for i, c in enumerate(buf[base:base + k]):
            c = int(c)
            if not (lo <= c <= hi):
                raise ValueError(f"code {c} out of {n}-bit signed range")
            word |= (c & mask) << (i * n)
        words.append(word)
    return words


def unpack_lanes(words, precision: int, count: int | None = None) -> list[int]:
    """Inverse of pack_lanes (test helper)."""
    n = precision
    k = 32 // n
    mask = (1 << n) - 1
    sign = 1 << (n - 1)
    out = []
    for word in words:
        for i in range(k):
            c = (int(word) >> (i * n)) & mask
            out.append(c - (1 << n) if c & sign else c)
    return out if count is None else out[:count]


# ---------------------------------------------------------------------------
# emitter
# ---------------------------------------------------------------------------

class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.data_lines: list[str] = []
        self.data_len = 0
        self.symbols: dict[str, int] = {}
        self._fresh = 0

    def op(self, text: str):
        self.lines.append(text)

    def label(self, name: str):
        self.lines.append(f"{name}:")

    def fresh(self, stem: str) -> str:
        self._fresh += 1
        return f"{stem}_{self._fresh}"

    def data_words(self, name: str, values) -> int:
        addr = self.data_len
        self.symbols[name] = addr
        values = [int(v) for v in values]
        self.data_lines.append(f"{name}:")
        for base in range(0, len(values), 8):
            chunk = ", ".join(str(v) for v in values[base:base + 8])
            self.data_lines.append(f".word {chunk}")
        if not values:
            self.data_lines.append(".space 0")
        self.data_len += len(values)
        return addr

    def data_space(self, name: str, count: int) -> int:
        addr = self.data_len
        self.symbols[name] = addr
        self.data_lines.append(f"{name}: .space {count}")
        self.data_len += count
        return addr

    def finish(self) -> Program:
        text = "\n".join(self.lines)
        if self.data_lines:
            text += "\n.data\n" + "\n".join(self.data_lines)
        return parse_assembly(text + "\n")


def _emit_softmul_inline(e: _Emitter):
    """x3 = (x1 * x2) mod 2^32 via shift-add; clobbers x1, x2, x10."""
    loop = e.fresh("sm_loop")
    skip = e.fresh("sm_skip")
    done = e.fresh("sm_done")
    e.op("ADDI x3, x0, 0")
    e.op(f"BGE x2, x0, {loop}")
    e.op("SUB x2, x0, x2")
    e.op("SUB x1, x0, x1")
    e.label(loop)
    e.op(f"BEQ x2, x0, {done}")
    e.op("ANDI x10, x2, 1")
    e.op(f"BEQ x10, x0, {skip}")
    e.op("ADD x3, x3, x1")
    e.label(skip)
    e.op("SLLI x1, x1, 1")
    e.op("SRLI x2, x2, 1")
    e.op(f"JAL x0, {loop}")
    e.label(done)


def _emit_scalar_dot(e: _Emitter, variant: str, x_base: str, count: int):
    """Accumulate sum(w[j]*x[j]) over `count` terms.

    Weights stream through x8 (left pointing at the row end afterwards);
    result lands in x3 (mac) or x4 (softmul/mul).  Loop: pointer walk with
    an end-pointer compare in x11.
    """
    loop = e.fresh("dot")
    e.op(f"ADDI x9, x0, {x_base}")
    e.op(f"ADDI x11, x8, {count}")
    if variant == "mac_scalar":
        e.op("MACZ")
    else:
        e.op("ADDI x4, x0, 0")
    e.label(loop)
    e.op("LW x1, 0(x8)")
    e.op("LW x2, 0(x9)")
    if variant == "mac_scalar":
        e.op("MAC.P32 x1, x2")
    elif variant == "mul_baseline":
        e.op("MUL x3, x1, x2")
        e.op("ADD x4, x4, x3")
    else:
        _emit_softmul_inline(e)
        e.op("ADD x4, x4, x3")
    e.op("ADDI x8, x8, 1")
    e.op("ADDI x9, x9, 1")
    e.op(f"BNE x8, x11, {loop}")
    if variant == "mac_scalar":
        e.op("MACR x3")
    else:
        e.op("ADD x3, x4, x0")


def _emit_relu_saturate(e: _Emitter, shift: int):
    """x3: accumulator -> activation (shift, clamp at 0, saturate to x6)."""
    relu_ok = e.fresh("relu")
    sat_ok = e.fresh("sat")
    if shift:
        e.op(f"SRAI x3, x3, {shift}")
    e.op(f"BGE x3, x0, {relu_ok}")
    e.op("ADDI x3, x0, 0")
    e.label(relu_ok)
    e.op(f"BGE x6, x3, {sat_ok}")
    e.op("ADD x3, x6, x0")
    e.label(sat_ok)


def _emit_argmax(e: _Emitter, base: str, count: int, result: str):
    """Strictly-greater scan: first maximum wins; index -> result slot."""
    e.op(f"LW x3, {base}(x0)")
    e.op("ADDI x9, x0, 0")
    for k in range(1, count):
        keep = e.fresh("amax")
        e.op(f"LW x1, {base}+{k}(x0)")
        e.op(f"BGE x3, x1, {keep}")
        e.op("ADD x3, x1, x0")
        e.op(f"ADDI x9, x0, {k}")
        e.label(keep)
    e.op(f"SW x9, {result}(x0)")


def _emit_pack_loop(e: _Emitter, src: str, dst: str, words: int, n: int,
                    count: int | None = None):
    """Merge zero-extended n-bit codes, one per word, into packed words.

    Word-major: each iteration loads K slots, ORs the shifted lanes and
    stores one packed word; src must be padded to a lane multiple.  A
    single-word stream is emitted straight-line with the pad lanes trimmed.
    """
    k = 32 // n
    if words == 1:
        lanes = k if count is None else min(count, k)
        e.op(f"LW x1, {src}(x0)")
        for lane in range(1, lanes):
            e.op(f"LW x2, {src}+{lane}(x0)")
            e.op(f"SLLI x2, x2, {lane * n}")
            e.op("OR x1, x1, x2")
        e.op(f"SW x1, {dst}(x0)")
        return
    loop = e.fresh("pack")
    e.op(f"ADDI x8, x0, {src}")
    e.op(f"ADDI x9, x0, {dst}")
    e.op(f"ADDI x11, x9, {words}")
    e.label(loop)
    e.op("LW x1, 0(x8)")
    for lane in range(1, k):
        e.op(f"LW x2, {lane}(x8)")
        e.op(f"SLLI x2, x2, {lane * n}")
        e.op("OR x1, x1, x2")
    e.op("SW x1, 0(x9)")
    e.op(f"ADDI x8, x8, {k}")
    e.op("ADDI x9, x9, 1")
    e.op(f"BNE x9, x11, {loop}")


def _emit_vote(e: _Emitter, votes: str, neg_index: int, pos_index: int):
    """x3 holds a decision value: increment the winning class counter."""
    pos = e.fresh("vpos")
    end = e.fresh("vend")
    e.op(f"BGE x3, x0, {pos}")
    e.op(f"LW x1, {votes}+{neg_index}(x0)")
    e.op("ADDI x1, x1, 1")
    e.op(f"SW x1, {votes}+{neg_index}(x0)")
    e.op(f"JAL x0, {end}")
    e.label(pos)
    e.op(f"LW x1, {votes}+{pos_index}(x0)")
    e.op("ADDI x1, x1, 1")
    e.op(f"SW x1, {votes}+{pos_index}(x0)")
    e.label(end)


def _pad(count: int, k: int) -> int:
    return -(-count // k) * k


# ---------------------------------------------------------------------------
# MLP generation
# ---------------------------------------------------------------------------

def _check_kind(qm: QuantModel, opts: CodegenOptions, want: str):
    if not qm.kind.startswith(want):
        raise ValueError(f"model kind {qm.kind} does not fit {want} codegen")
    if opts.variant == "mac_simd" and opts.precision != qm.n_bits:
        raise ValueError(f"options precision {opts.precision} inconsistent "
                         f"with model quantized at {qm.n_bits}")


def gen_mlp_program(qm: QuantModel, opts: CodegenOptions) -> Program:
    _check_kind(qm, opts, "mlp")
    hidden, out = qm.layers
    h, d = hidden.weight_codes.shape
    c = out.weight_codes.shape[0]
    classifier = qm.kind == "mlp_classifier"
    if opts.variant == "mac_simd":
        return _gen_mlp_simd(qm, opts, hidden, out, h, d, c, classifier)
    return _gen_mlp_scalar(qm, opts, hidden, out, h, d, c, classifier)


def _gen_mlp_scalar(qm, opts, hidden, out, h, d, c, classifier) -> Program:
    e = _Emitter()
    e.data_words("cmax", [hidden.out_format.code_max])
    e.data_words("w1", hidden.weight_codes.reshape(-1))
    e.data_words("w2", out.weight_codes.reshape(-1))
    e.data_words("b1", hidden.bias_codes)
    e.data_words("b2", out.bias_codes)
    e.data_space("input", d)
    e.data_space("act", h)
    if classifier:
        e.data_space("out", c)
    e.data_space("result", 1)

    e.op("LW x6, cmax(x0)")
    e.op("ADDI x8, x0, w1")
    for i in range(h):
        _emit_scalar_dot(e, opts.variant, "input", d)
        e.op(f"LW x5, b1+{i}(x0)")
        e.op("ADD x3, x3, x5")
        _emit_relu_saturate(e, hidden.out_shift)
        e.op(f"SW x3, act+{i}(x0)")
    for k in range(c):
        _emit_scalar_dot(e, opts.variant, "act", h)
        e.op(f"LW x5, b2+{k}(x0)")
        e.op("ADD x3, x3, x5")
        if classifier:
            e.op(f"SW x3, out+{k}(x0)")
        else:
            e.op("SW x3, result(x0)")
    if classifier:
        _emit_argmax(e, "out", c, "result")
    e.op("HALT")
    return e.finish()


def _gen_mlp_simd(qm, opts, hidden, out, h, d, c, classifier) -> Program:
    n = opts.precision
    k = 32 // n
    w1_rows = [pack_lanes(row, n) for row in hidden.weight_codes]
    w2_rows = [pack_lanes(row, n) for row in out.weight_codes]
    w1_words = len(w1_rows[0])
    w2_words = len(w2_rows[0])

    e = _Emitter()
    e.data_words("cmax", [hidden.out_format.code_max])
    e.data_words("w1p", [w for row in w1_rows for w in row])
    e.data_words("w2p", [w for row in w2_rows for w in row])
    e.data_words("b1", hidden.bias_codes)
    e.data_words("b2", out.bias_codes)
    e.data_space("input", _pad(d, k))
    e.data_space("xpack", w1_words)
    e.data_space("hact", _pad(h, k))
    e.data_space("hpack", w2_words)
    if classifier:
        e.data_space("out", c)
    e.data_space("result", 1)

    e.op("LW x6, cmax(x0)")
    _emit_pack_loop(e, "input", "xpack", w1_words, n, count=d)

    # hidden layer: nested neuron / packed-word loops
    neuron = e.fresh("hneuron")
    word = e.fresh("hword")
    e.op("ADDI x8, x0, w1p")
    e.op("ADDI x4, x0, b1")
    e.op("ADDI x10, x0, hact")
    e.op(f"ADDI x7, x0, {h}")
    e.label(neuron)
    e.op("ADDI x9, x0, xpack")
    e.op(f"ADDI x11, x8, {w1_words}")
    e.op("MACZ")
    e.label(word)
    e.op("LW x1, 0(x8)")
    e.op("LW x2, 0(x9)")
    e.op(f"MAC.P{n} x1, x2")
    e.op("ADDI x8, x8, 1")
    e.op("ADDI x9, x9, 1")
    e.op(f"BNE x8, x11, {word}")
    e.op("MACR x3")
    e.op("LW x5, 0(x4)")
    e.op("ADDI x4, x4, 1")
    e.op("ADD x3, x3, x5")
    _emit_relu_saturate(e, hidden.out_shift)
    e.op("SW x3, 0(x10)")
    e.op("ADDI x10, x10, 1")
    e.op("ADDI x7, x7, -1")
    e.op(f"BNE x7, x0, {neuron}")

    _emit_pack_loop(e, "hact", "hpack", w2_words, n, count=h)

    # output layer; a lone output neuron (regressor) needs no outer loop
    if c == 1 and not classifier:
        word = e.fresh("oword")
        e.op("ADDI x8, x0, w2p")
        e.op("ADDI x9, x0, hpack")
        e.op(f"ADDI x11, x8, {w2_words}")
        e.op("MACZ")
        e.label(word)
        e.op("LW x1, 0(x8)")
        e.op("LW x2, 0(x9)")
        e.op(f"MAC.P{n} x1, x2")
        e.op("ADDI x8, x8, 1")
        e.op("ADDI x9, x9, 1")
        e.op(f"BNE x8, x11, {word}")
        e.op("MACR x3")
        e.op("LW x5, b2(x0)")
        e.op("ADD x3, x3, x5")
        e.op("SW x3, result(x0)")
    else:
        neuron = e.fresh("oneuron")
        word = e.fresh("oword")
        e.op("ADDI x8, x0, w2p")
        e.op("ADDI x4, x0, b2")
        e.op("ADDI x10, x0, out")
        e.op(f"ADDI x7, x0, {c}")
        e.label(neuron)
        e.op("ADDI x9, x0, hpack")
        e.op(f"ADDI x11, x8, {w2_words}")
        e.op("MACZ")
        e.label(word)
        e.op("LW x1, 0(x8)")
        e.op("LW x2, 0(x9)")
        e.op(f"MAC.P{n} x1, x2")
        e.op("ADDI x8, x8, 1")
        e.op("ADDI x9, x9, 1")
        e.op(f"BNE x8, x11, {word}")
        e.op("MACR x3")
        e.op("LW x5, 0(x4)")
        e.op("ADDI x4, x4, 1")
        e.op("ADD x3, x3, x5")
        e.op("SW x3, 0(x10)")
        e.op("ADDI x10, x10, 1")
        e.op("ADDI x7, x7, -1")
        e.op(f"BNE x7, x0, {neuron}")

    if classifier:
        _emit_argmax(e, "out", c, "result")
    e.op("HALT")
    return e.finish()


# ---------------------------------------------------------------------------
# SVM generation
# ---------------------------------------------------------------------------

def gen_svm_program(qm: QuantModel, opts: CodegenOptions) -> Program:
    _check_kind(qm, opts, "svm")
    layer = qm.layers[0]
    rows, d = layer.weight_codes.shape
    classifier = qm.kind == "svm_classifier"
    if opts.variant == "mac_simd":
        return _gen_svm_simd(qm, opts, layer, rows, d, classifier)
    return _gen_svm_scalar(qm, opts, layer, rows, d, classifier)


def _class_index(qm: QuantModel):
    return {cls: i for i, cls in enumerate(qm.class_labels)}


def _gen_svm_scalar(qm, opts, layer, rows, d, classifier) -> Program:
    e = _Emitter()
    e.data_words("w", layer.weight_codes.reshape(-1))
    e.data_words("b", layer.bias_codes)
    e.data_space("input", d)
    n_classes = len(qm.class_labels)
    if classifier:
        e.data_space("votes", n_classes)
    e.data_space("result", 1)

    index_of = _class_index(qm) if classifier else {}
    e.op("ADDI x8, x0, w")
    for p in range(rows):
        _emit_scalar_dot(e, opts.variant, "input", d)
        e.op(f"LW x5, b+{p}(x0)")
        e.op("ADD x3, x3, x5")
        if classifier:
            neg, pos = qm.pair_classes[p]
            _emit_vote(e, "votes", index_of[neg], index_of[pos])
        else:
            e.op("SW x3, result(x0)")
    if classifier:
        _emit_argmax(e, "votes", n_classes, "result")
    e.op("HALT")
    return e.finish()


def _gen_svm_simd(qm, opts, layer, rows, d, classifier) -> Program:
    """Fused lane merge: each decision loop reads K unpacked input slots,
    assembles the packed word in flight and feeds it to MAC.Pn.  Full words
    run in a uniform loop; a ragged tail word is emitted straight-line."""
    n = opts.precision
    k = 32 // n
    w_rows = [pack_lanes(row, n) for row in layer.weight_codes]
    row_words = len(w_rows[0])
    full_words = d // k
    tail_lanes = d - full_words * k

    e = _Emitter()
    e.data_words("wp", [w for row in w_rows for w in row])
    e.data_words("b", layer.bias_codes)
    e.data_space("input", _pad(d, k))
    n_classes = len(qm.class_labels)
    if classifier:
        e.data_space("votes", n_classes)
    e.data_space("result", 1)

    index_of = _class_index(qm) if classifier else {}
    e.op("ADDI x8, x0, wp")
    for p in range(rows):
        e.op("ADDI x9, x0, input")
        e.op("MACZ")
        if full_words:
            loop = e.fresh("dword")
            e.op(f"ADDI x11, x8, {full_words}")
            e.label(loop)
            e.op("LW x1, 0(x8)")
            e.op("LW x2, 0(x9)")
            for lane in range(1, k):
                e.op(f"LW x3, {lane}(x9)")
                e.op(f"SLLI x3, x3, {lane * n}")
                e.op("OR x2, x2, x3")
            e.op(f"MAC.P{n} x1, x2")
            e.op("ADDI x8, x8, 1")
            e.op(f"ADDI x9, x9, {k}")
            e.op(f"BNE x8, x11, {loop}")
        if tail_lanes:
            e.op("LW x1, 0(x8)")
            e.op("LW x2, 0(x9)")
            for lane in range(1, tail_lanes):
                e.op(f"LW x3, {lane}(x9)")
                e.op(f"SLLI x3, x3, {lane * n}")
                e.op("OR x2, x2, x3")
            e.op(f"MAC.P{n} x1, x2")
            e.op("ADDI x8, x8, 1")
        e.op("MACR x3")
        e.op(f"LW x5, b+{p}(x0)")
        e.op("ADD x3, x3, x5")
        if classifier:
            neg, pos = qm.pair_classes[p]
            _emit_vote(e, "votes", index_of[neg], index_of[pos])
        else:
            e.op("SW x3, result(x0)")
    if classifier:
        _emit_argmax(e, "votes", n_classes, "result")
    e.op("HALT")
    return e.finish()


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def generate_program(qm: QuantModel, opts: CodegenOptions) -> Program:
    if qm.kind.startswith("mlp"):
        return gen_mlp_program(qm, opts)
    return gen_svm_program(qm, opts)


def encode_input_words(qm: QuantModel, opts: CodegenOptions, codes) \
        -> list[int]:
    """Words for the program's input slot: one code per word, sign-extended
    for scalar variants, masked to the lane width and zero-padded to a lane
    multiple for mac_simd."""
    codes = [int(v) for v in codes]
    if opts.variant != "mac_simd":
        return codes
    n = opts.precision
    mask = (1 << n) - 1
    k = 32 // n
    padded = codes + [0] * (_pad(len(codes), k) - len(codes))
    return [c & mask for c in padded]
