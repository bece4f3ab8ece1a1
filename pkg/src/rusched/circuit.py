"""Circuit IR over the {Rz, H, X, CNOT} basis.

Angles are kept as exact multiples of pi (``Fraction``) whenever the source
expression allows it, otherwise as float radians.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

Angle = Union[Fraction, float]


class GateKind(str, Enum):
    RZ = "Rz"
    H = "H"
    X = "X"
    CNOT = "CNOT"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: Angle | None = None
    id: int = 0

    def __post_init__(self):
        if self.kind is GateKind.CNOT:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"CNOT needs two distinct qubits, got {self.qubits}")
        elif len(self.qubits) != 1:
            raise ValueError(f"{self.kind.value} acts on one qubit, got {self.qubits}")
        if (self.theta is not None) != (self.kind is GateKind.RZ):
            raise ValueError("theta is required for Rz and forbidden otherwise")

    @property
    def control(self) -> int:
        return self.qubits[0]

    @property
    def target(self) -> int:
        return self.qubits[-1]


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate {g.id}: qubit {q} out of range ({self.num_qubits})")

    def append(self, kind: GateKind, *qubits: int, theta: Angle | None = None) -> Gate:
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"qubit {q} out of range ({self.num_qubits})")
        g = Gate(kind, tuple(qubits), theta, len(self.gates))
        self.gates.append(g)
        return g

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def __len__(self):
        return len(self.gates)


@dataclass
class DependencyDag:
    preds: list[list[int]]
    succs: list[list[int]]
    remaining_depth: list[int]

    def sources(self) -> list[int]:
        return [i for i, p in enumerate(self.preds) if not p]

    def layers(self) -> list[list[int]]:
        """ASAP layering: a gate sits one layer after its latest predecessor."""
        level = [0] * len(self.preds)
        for g, ps in enumerate(self.preds):
            if ps:
                level[g] = 1 + max(level[p] for p in ps)
        out: list[list[int]] = [[] for _ in range(max(level, default=-1) + 1)]
        for g, lv in enumerate(level):
            out[lv].append(g)
        return out


def build_dag(c: Circuit) -> DependencyDag:
    n = len(c.gates)
    preds: list[list[int]] = [[] for _ in range(n)]
    succs: list[list[int]] = [[] for _ in range(n)]
    last: dict[int, int] = {}
    for i, g in enumerate(c.gates):
        for q in g.qubits:
            p = last.get(q)
            if p is not None and p not in preds[i]:
                preds[i].append(p)
                succs[p].append(i)
            last[q] = i
    depth = [1] * n
    for i in range(n - 1, -1, -1):
        if succs[i]:
            depth[i] = 1 + max(depth[s] for s in succs[i])
    return DependencyDag(preds, succs, depth)


# ---------------------------------------------------------------------------
# Angles
# ---------------------------------------------------------------------------

def angle_radians(theta: Angle) -> float:
    if isinstance(theta, Fraction):
        return float(theta) * math.pi
    return float(theta)


def format_angle(theta: Angle) -> str:
    if isinstance(theta, Fraction):
        if theta == 0:
            return "0"
        num, den = theta.numerator, theta.denominator
        sign = "-" if num < 0 else ""
        num = abs(num)
        head = "pi" if num == 1 else f"{num}*pi"
        return f"{sign}{head}" if den == 1 else f"{sign}{head}/{den}"
    return repr(float(theta))


class _Lin:
    """a + b*pi with rational a, b."""

    __slots__ = ("a", "b")

    def __init__(self, a=Fraction(0), b=Fraction(0)):
        self.a, self.b = Fraction(a), Fraction(b)


def _eval_angle(node, lineno):
    # Returns _Lin when exact, float otherwise.
    if isinstance(node, ast.Expression):
        return _eval_angle(node.body, lineno)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        if isinstance(node.value, int):
            return _Lin(node.value)
        return _Lin(Fraction(repr(node.value)))
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return _Lin(0, 1)
        raise QasmError(lineno, f"unknown identifier {node.id!r} in angle")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_angle(node.operand, lineno)
        if isinstance(node.op, ast.UAdd):
            return v
        return -v if isinstance(v, float) else _Lin(-v.a, -v.b)
    if isinstance(node, ast.BinOp):
        lhs = _eval_angle(node.left, lineno)
        rhs = _eval_angle(node.right, lineno)
        if isinstance(lhs, _Lin) and isinstance(rhs, _Lin):
            if isinstance(node.op, ast.Add):
                return _Lin(lhs.a + rhs.a, lhs.b + rhs.b)
            if isinstance(node.op, ast.Sub):
                return _Lin(lhs.a - rhs.a, lhs.b - rhs.b)
            if isinstance(node.op, ast.Mult):
                if lhs.b == 0:
                    return _Lin(lhs.a * rhs.a, lhs.a * rhs.b)
                if rhs.b == 0:
                    return _Lin(lhs.a * rhs.a, lhs.b * rhs.a)
            if isinstance(node.op, ast.Div) and rhs.b == 0:
                if rhs.a == 0:
                    raise QasmError(lineno, "division by zero in angle")
                return _Lin(lhs.a / rhs.a, lhs.b / rhs.a)
        lf = lhs if isinstance(lhs, float) else float(lhs.a) + float(lhs.b) * math.pi
        rf = rhs if isinstance(rhs, float) else float(rhs.a) + float(rhs.b) * math.pi
        ops = {ast.Add: lambda x, y: x + y, ast.Sub: lambda x, y: x - y,
               ast.Mult: lambda x, y: x * y, ast.Div: lambda x, y: x / y,
               ast.Pow: lambda x, y: x ** y}
        fn = ops.get(type(node.op))
        if fn is None:
            raise QasmError(lineno, "unsupported operator in angle")
        return fn(lf, rf)
    raise QasmError(lineno, "unsupported angle expression")


def parse_angle(expr: str, lineno: int = 0) -> Angle:
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        raise QasmError(lineno, f"bad angle expression {expr!r}") from None
    v = _eval_angle(tree, lineno)
    if isinstance(v, float):
        return v
    if v.a == 0:
        return v.b
    return float(v.a) + float(v.b) * math.pi


# ---------------------------------------------------------------------------
# OpenQASM 2.0 subset
# ---------------------------------------------------------------------------

class QasmError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


# Fixed-angle single-qubit gates rewritten to Rz, in multiples of pi.
_RZ_ALIASES = {
    "z": Fraction(1),
    "s": Fraction(1, 2),
    "sdg": Fraction(-1, 2),
    "t": Fraction(1, 4),
    "tdg": Fraction(-1, 4),
}
_PARAM_RZ = {"rz", "u1", "p"}
_IGNORED = {"measure", "barrier", "reset", "id"}

_STMT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*(.*)$", re.S)
_REG = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")


def _statements(text: str):
    """Yield (lineno, statement) pairs, comments stripped."""
    buf, start, blank = [], 1, True
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("//", 1)[0]
        for ch in line:
            if blank and not ch.isspace():
                start, blank = lineno, False
            if ch == ";":
                stmt = "".join(buf).strip()
                if stmt:
                    yield start, stmt
                buf, blank = [], True
            else:
                buf.append(ch)
        buf.append(" ")
    rest = "".join(buf).strip()
    if rest:
        raise QasmError(start, f"missing ';' after {rest!r}")


def parse_qasm(text: str) -> Circuit:
    regs: dict[str, tuple[int, int]] = {}
    nq = 0
    ops: list[tuple[int, GateKind, tuple[int, ...], Angle | None]] = []

    def qubit(arg: str, lineno: int) -> int:
        m = _REG.match(arg.strip())
        if not m:
            raise QasmError(lineno, f"expected indexed qubit, got {arg.strip()!r}")
        name, idx = m.group(1), int(m.group(2))
        if name not in regs:
            raise QasmError(lineno, f"unknown register {name!r}")
        off, size = regs[name]
        if idx >= size:
            raise QasmError(lineno, f"qubit index {name}[{idx}] out of range (size {size})")
        return off + idx

    for lineno, stmt in _statements(text):
        if stmt.startswith("OPENQASM") or stmt.startswith("include"):
            continue
        m = _STMT.match(stmt)
        if not m:
            raise QasmError(lineno, f"syntax error near {stmt!r}")
        name, params, args = m.group(1), m.group(2), m.group(3)
        if name in ("qreg", "creg"):
            r = _REG.match(args.strip())
            if not r:
                raise QasmError(lineno, f"bad register declaration {stmt!r}")
            if name == "qreg":
                regs[r.group(1)] = (nq, int(r.group(2)))
                nq += int(r.group(2))
            continue
        if name in _IGNORED:
            continue
        if name == "gate" or name == "opaque":
            raise QasmError(lineno, "custom gate definitions are not supported")
        operands = [a for a in args.split(",") if a.strip()]
        if name in ("cx", "CX"):
            if len(operands) != 2:
                raise QasmError(lineno, "cx takes two qubits")
            ops.append((lineno, GateKind.CNOT, (qubit(operands[0], lineno), qubit(operands[1], lineno)), None))
            continue
        if name in ("h", "x") or name in _RZ_ALIASES or name in _PARAM_RZ:
            if len(operands) != 1:
                raise QasmError(lineno, f"{name} takes one qubit")
            q = qubit(operands[0], lineno)
            if name == "h":
                ops.append((lineno, GateKind.H, (q,), None))
            elif name == "x":
                ops.append((lineno, GateKind.X, (q,), None))
            elif name in _RZ_ALIASES:
                ops.append((lineno, GateKind.RZ, (q,), _RZ_ALIASES[name]))
            else:
                if params is None:
                    raise QasmError(lineno, f"{name} needs an angle")
                ops.append((lineno, GateKind.RZ, (q,), parse_angle(params, lineno)))
            continue
        raise QasmError(lineno, f"unsupported gate {name!r}")

    circ = Circuit(nq)
    for _, kind, qs, theta in ops:
        circ.append(kind, *qs, theta=theta)
    return circ


def to_qasm(c: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.num_qubits}];"]
    for g in c.gates:
        if g.kind is GateKind.RZ:
            lines.append(f"rz({format_angle(g.theta)}) q[{g.qubits[0]}];")
        elif g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.qubits[0]}],q[{g.qubits[1]}];")
        else:
            lines.append(f"{g.kind.value.lower()} q[{g.qubits[0]}];")
    return "\n".join(lines) + "\n"


def load_qasm(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        circ = parse_qasm(fh.read())
    circ.name = str(path)
    return circ


# ---------------------------------------------------------------------------
# Built-in benchmark families
# ---------------------------------------------------------------------------

def _ry(c: Circuit, q: int, theta: Angle):
    # Ry(t) = S . H Rz(t) H . Sdg
    c.append(GateKind.RZ, q, theta=Fraction(-1, 2))
    c.append(GateKind.H, q)
    c.append(GateKind.RZ, q, theta=theta)
    c.append(GateKind.H, q)
    c.append(GateKind.RZ, q, theta=Fraction(1, 2))


def _qft(n: int) -> Circuit:
    c = Circuit(n, name=f"qft:{n}")
    for t in range(n):
        c.append(GateKind.H, t)
        total = Fraction(0)
        for ctrl in range(t + 1, n):
            # controlled phase pi/2^(ctrl-t): the diagonal Rz on the target
            # commutes through the whole stage and is merged at the end
            half = Fraction(1, 2 ** (ctrl - t + 1))
            c.append(GateKind.RZ, ctrl, theta=half)
            c.append(GateKind.CNOT, ctrl, t)
            c.append(GateKind.RZ, t, theta=-half)
            c.append(GateKind.CNOT, ctrl, t)
            total += half
        if total:
            c.append(GateKind.RZ, t, theta=total)
    return c


def _ising(n: int, j_dt: float = 0.2, hx_dt: float = 0.15, hz_dt: float = 0.1) -> Circuit:
    """One Trotter step of a transverse/longitudinal-field Ising chain."""
    c = Circuit(n, name=f"ising_trotter:{n}")
    for q in range(n):
        c.append(GateKind.H, q)
    for i in range(n - 1):
        c.append(GateKind.CNOT, i, i + 1)
        c.append(GateKind.RZ, i + 1, theta=2 * j_dt)
        c.append(GateKind.CNOT, i, i + 1)
    for q in range(1, n - 1, 2):
        c.append(GateKind.RZ, q, theta=2 * hz_dt)
    for q in range(n):
        c.append(GateKind.H, q)
        c.append(GateKind.RZ, q, theta=2 * hx_dt)
        c.append(GateKind.H, q)
    return c


def _wstate(n: int) -> Circuit:
    c = Circuit(n, name=f"wstate:{n}")
    c.append(GateKind.X, n - 1)
    for i in range(n - 1, 0, -1):
        theta = math.acos(math.sqrt(1.0 / (i + 1)))
        _ry(c, i - 1, -theta)
        c.append(GateKind.H, i - 1)
        c.append(GateKind.CNOT, i, i - 1)
        c.append(GateKind.H, i - 1)
        _ry(c, i - 1, theta)
    for i in range(n - 1, 0, -1):
        c.append(GateKind.CNOT, i - 1, i)
    return c


def _ghz(n: int) -> Circuit:
    c = Circuit(n, name=f"ghz:{n}")
    c.append(GateKind.H, 0)
    for i in range(n - 1):
        c.append(GateKind.CNOT, i, i + 1)
    return c


BENCHMARKS = {
    "qft": _qft,
    "ising_trotter": _ising,
    "ising": _ising,
    "wstate": _wstate,
    "ghz": _ghz,
}


def generate_benchmark(family: str, n: int) -> Circuit:
    if family not in BENCHMARKS:
        raise ValueError(f"unknown benchmark family {family!r}; choose from {sorted(BENCHMARKS)}")
    if n < 2:
        raise ValueError("benchmark circuits need at least 2 qubits")
    return BENCHMARKS[family](n)


def load_circuit(source: str) -> Circuit:
    """``family:n`` for a generator, anything else is a QASM file path."""
    fam, sep, n = source.partition(":")
    if sep and fam in BENCHMARKS and n.isdigit():
        return generate_benchmark(fam, int(n))
    return load_qasm(source)
