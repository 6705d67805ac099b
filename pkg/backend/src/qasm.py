# src/qasm.py
"""Minimal OpenQASM 2 import/export.

Import accepts register declarations, the built-in gate names below,
measure and barrier (ignored). Conditionals, gate definitions, opaque
gates and reset are refused with the construct's line and column.
Export covers static circuits only.
"""

import math
import re
from typing import Dict, List, Tuple

import pyparsing as pp

from src.circuit import Circuit, Gate, GateKind, measure, one_qubit, two_qubit
from src.errors import QasmExportError, QasmParseError

# name -> (qubits, params)
QASM_GATES: Dict[str, Tuple[int, int]] = {
    "h": (1, 0), "x": (1, 0), "y": (1, 0), "z": (1, 0),
    "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0),
    "rz": (1, 1), "rx": (1, 1), "ry": (1, 1), "u3": (1, 3),
    "cx": (2, 0), "cz": (2, 0), "swap": (2, 0), "rzz": (2, 1),
}
UNSUPPORTED = ("if", "gate", "opaque", "reset")
RESERVED = ("OPENQASM", "include", "qreg", "creg", "measure", "barrier") + UNSUPPORTED


def _fold_binary(tokens):
    values = tokens[0]
    result = float(values[0])
    for op, operand in zip(values[1::2], values[2::2]):
        if op == "+":
            result += operand
        elif op == "-":
            result -= operand
        elif op == "*":
            result *= operand
        else:
            result /= operand
    return result


def _unary(tokens):
    op, value = tokens[0]
    return -value if op == "-" else value


def _located(kind: str):
    def action(s, loc, toks):
        return [(kind, loc, toks.as_list())]
    return action


def _build_grammar() -> pp.ParserElement:
    lpar, rpar, lbra, rbra, semi, comma = map(pp.Suppress, "()[];,")
    ident = pp.Word(pp.alphas + "_", pp.alphanums + "_")
    integer = pp.Word(pp.nums).set_parse_action(lambda t: int(t[0]))
    operand = pp.Group(ident + lbra + integer + rbra)
    operands = pp.Group(operand + pp.ZeroOrMore(comma + operand))

    pi = pp.CaselessKeyword("pi").set_parse_action(lambda: math.pi)
    # unsigned; signs are handled as unary operators
    number = pp.Regex(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?").set_parse_action(lambda t: float(t[0]))
    expr = pp.infix_notation(
        number | pi,
        [
            (pp.one_of("+ -"), 1, pp.OpAssoc.RIGHT, _unary),
            (pp.one_of("* /"), 2, pp.OpAssoc.LEFT, _fold_binary),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _fold_binary),
        ],
    )
    params = pp.Group(pp.Optional(lpar + expr + pp.ZeroOrMore(comma + expr) + rpar))

    header = pp.Suppress(pp.Keyword("OPENQASM") + pp.Regex(r"\d+(\.\d+)?") + semi)
    include = pp.Suppress(pp.Keyword("include") + pp.QuotedString('"') + semi)
    qreg = (pp.Suppress(pp.Keyword("qreg")) + ident + lbra + integer + rbra + semi).set_parse_action(
        _located("qreg"))
    creg = (pp.Suppress(pp.Keyword("creg")) + ident + lbra + integer + rbra + semi).set_parse_action(
        _located("creg"))
    measure_op = (pp.Suppress(pp.Keyword("measure")) + operand + pp.Suppress("->") + operand + semi
                  ).set_parse_action(_located("measure"))
    barrier = pp.Suppress(pp.Keyword("barrier") + (operand | ident) + pp.ZeroOrMore(comma + (operand | ident))
                          + semi)
    gate_name = ~pp.MatchFirst([pp.Keyword(k) for k in RESERVED]) + ident
    gate_call = (gate_name + params + operands + semi).set_parse_action(_located("gate"))

    statement = qreg | creg | measure_op | barrier | gate_call
    program = pp.Optional(header) + pp.ZeroOrMore(include) + pp.ZeroOrMore(statement) + pp.StringEnd()
    program.ignore(pp.cpp_style_comment)
    return program


_GRAMMAR = _build_grammar()
_WORD = re.compile(r"[A-Za-z_]\w*|\S+")
_SKIP = re.compile(r"(\s|//[^\n]*)*")


def _error_at(text: str, loc: int, reason: str = None) -> QasmParseError:
    loc = _SKIP.match(text, loc).end()
    match = _WORD.match(text, loc)
    construct = match.group(0) if match else "<end of input>"
    if reason is None:
        reason = "unsupported construct" if construct in UNSUPPORTED else "syntax error at"
    return QasmParseError(construct, pp.lineno(loc, text), pp.col(loc, text), reason)


def parse_qasm2_subset(text: str) -> Circuit:
    try:
        statements = _GRAMMAR.parse_string(text, parse_all=True).as_list()
    except pp.ParseBaseException as e:
        raise _error_at(text, e.loc) from e

    qregs: Dict[str, Tuple[int, int]] = {}
    cregs: Dict[str, Tuple[int, int]] = {}
    num_qubits = num_clbits = 0
    gates: List[Gate] = []

    def resolve(registers, operand, loc) -> int:
        name, index = operand
        if name not in registers:
            raise _error_at(text, loc, "unknown register in")
        offset, size = registers[name]
        if not 0 <= index < size:
            raise _error_at(text, loc, f"index {index} out of range for '{name}' in")
        return offset + index

    for kind, loc, toks in statements:
        if kind in ("qreg", "creg"):
            name, size = toks
            registers = qregs if kind == "qreg" else cregs
            if name in qregs or name in cregs:
                raise _error_at(text, loc, "duplicate register in")
            if kind == "qreg":
                registers[name] = (num_qubits, size)
                num_qubits += size
            else:
                registers[name] = (num_clbits, size)
                num_clbits += size
        elif kind == "measure":
            qubit, bit = toks
            gates.append(measure(resolve(qregs, qubit, loc), resolve(cregs, bit, loc)))
        else:
            name, params, operands = toks
            if name not in QASM_GATES:
                raise _error_at(text, loc, "unsupported gate")
            arity, n_params = QASM_GATES[name]
            if len(operands) != arity or len(params) != n_params:
                raise _error_at(text, loc, "wrong arity for")
            qubits = [resolve(qregs, op, loc) for op in operands]
            if arity == 1:
                gates.append(one_qubit(name, qubits[0], *params))
            else:
                gates.append(two_qubit(name, qubits[0], qubits[1], *params))
    return Circuit(num_qubits, num_clbits, tuple(gates))


def export_qasm2(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    if circuit.num_clbits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    for index, gate in enumerate(circuit.gates):
        if gate.kind == GateKind.MEASURE:
            if (gate.basis or "Z") != "Z":
                raise QasmExportError(f"X-basis measurement at index {index} has no QASM 2 form",
                                      {"gate_index": index})
            lines.append(f"measure q[{gate.qubits[0]}] -> c[{gate.clbits[0]}];")
            continue
        if gate.kind not in (GateKind.ONE_QUBIT, GateKind.TWO_QUBIT) or gate.name not in QASM_GATES:
            raise QasmExportError(
                f"Gate '{gate.name}' ({gate.kind.value}) at index {index} cannot be exported to QASM 2",
                {"gate_index": index, "name": gate.name, "kind": gate.kind.value},
            )
        args = ",".join(f"q[{q}]" for q in gate.qubits)
        if gate.params:
            params = ",".join(repr(float(p)) for p in gate.params)
            lines.append(f"{gate.name}({params}) {args};")
        else:
            lines.append(f"{gate.name} {args};")
    return "\n".join(lines) + "\n"
