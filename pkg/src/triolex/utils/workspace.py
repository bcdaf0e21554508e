# Copyright 2025 Lucas Zampieri
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Workspace files and the two CLI commands, ``validate`` and ``analyze``.

A workspace is one JSON object tagged ``"schema": "triolex/1"`` holding an ``algebra`` header and
optional named collections. Commands return ``(exit_code, report)``; the caller prints the report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from triolex.utils.config import (
    get_determinant_cap,
    get_dmax,
    get_identity_degree_bound,
    get_valence_cap,
)
from triolex.utils.errors import (
    DegreeError,
    NonUnitDeterminantError,
    SchemaError,
    TriolexError,
    UnknownObjectError,
)
from triolex.utils.linalg import Matrix
from triolex.utils.report import Report
from triolex.utils.serialize import (
    decode_algebra,
    decode_biderivation,
    decode_connection,
    decode_derivation,
    decode_diffop,
    decode_matrix,
    decode_module,
    decode_morphism,
    encode_algebra,
    encode_biderivation,
    encode_connection,
    encode_derivation,
    encode_diffop,
    encode_matop,
    encode_matrix,
    encode_module,
    encode_morphism,
    encode_op,
    encode_poly,
    encode_symbol,
    encode_vectorfield,
    loads,
    wrap_errors,
)
from triolex.utils.trioleconn import (
    TriConnection,
    curvature,
    flat_check,
    gauge_structure_search,
    nabla_constant_sections,
    validate_connection,
)
from triolex.utils.triolecore import (
    TrioleAlgebra,
    TrioleMorphism,
    determinant_triole,
    gauge_act,
    validate_algebra,
    validate_morphism,
)
from triolex.utils.triolederiv import (
    GradedDerivation,
    TruncatedTriModule,
    bracket,
    symbol_deg0,
    symbol_deg1,
    validate_derivation,
    validate_truncated_module,
)
from triolex.utils.trioledo import (
    TriDiffOp,
    atiyah_k_decompose,
    coordinate_tuples,
    symbol_deg0_tensor,
    symbol_deg1_tensor,
    symbol_deg2_tensor,
    validate_diffop,
)
from triolex.utils.triolepoisson import (
    BiDerivation,
    algebroid_from_deg_minus1,
    algebroid_from_deg_minus2,
    poisson_check_deg0,
    schouten_square,
    validate_biderivation,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "triolex/1"
COLLECTIONS = ("derivations", "connections", "biderivations", "diffops", "modules", "morphisms", "gauges")
ANALYZE_COMMANDS = ("curvature", "flat-check", "poisson-check", "symbol", "atiyah", "h0", "bracket", "gauge")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SCHEMA = 2


@dataclass
class WorkspaceFile:
    algebra: TrioleAlgebra
    derivations: Dict[str, GradedDerivation] = field(default_factory=dict)
    connections: Dict[str, TriConnection] = field(default_factory=dict)
    biderivations: Dict[str, BiDerivation] = field(default_factory=dict)
    diffops: Dict[str, Tuple[TriDiffOp, Optional[int]]] = field(default_factory=dict)
    modules: Dict[str, TruncatedTriModule] = field(default_factory=dict)
    morphisms: Dict[str, Tuple[TrioleMorphism, TrioleAlgebra]] = field(default_factory=dict)
    gauges: Dict[str, Tuple[Matrix, Matrix]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorkspaceFile":
        if data.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"expected schema {SCHEMA_VERSION!r}, got {data.get('schema')!r}")
        unknown = set(data) - {"schema", "algebra", *COLLECTIONS}
        if unknown:
            raise SchemaError(f"unknown workspace keys: {', '.join(sorted(unknown))}")
        if "algebra" not in data:
            raise SchemaError("workspace has no algebra header")
        alg = wrap_errors(decode_algebra, data["algebra"])
        R = alg.ring

        def collection(name: str, decode: Callable) -> Dict[str, Any]:
            entries = data.get(name, {})
            if not isinstance(entries, dict):
                raise SchemaError(f"{name} must map names to objects")
            out = {}
            for key, value in sorted(entries.items()):
                try:
                    out[key] = wrap_errors(decode, value)
                except SchemaError as e:
                    raise SchemaError(f"{name}/{key}: {e}") from e
            return out

        def diffop(value):
            order = value.get("order") if isinstance(value, dict) else None
            if order is not None and (isinstance(order, bool) or not isinstance(order, int)):
                raise SchemaError("operator order must be an integer")
            return decode_diffop(value, alg), order

        def gauge(value):
            return (decode_matrix(value["rhoP"], R, alg.m_P, alg.m_P),
                    decode_matrix(value["rhoQ"], R, alg.m_Q, alg.m_Q))

        return cls(
            alg,
            derivations=collection("derivations", lambda v: decode_derivation(v, alg)),
            connections=collection("connections", lambda v: decode_connection(v, alg)),
            biderivations=collection("biderivations", lambda v: decode_biderivation(v, alg)),
            diffops=collection("diffops", diffop),
            modules=collection("modules", lambda v: decode_module(v, alg)),
            morphisms=collection("morphisms", lambda v: decode_morphism(v, alg)),
            gauges=collection("gauges", gauge),
        )

    @classmethod
    def load(cls, path) -> "WorkspaceFile":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise SchemaError(f"cannot read {path}: {e}") from e
        logger.debug(f"Loaded workspace {path} ({len(text)} bytes)")
        return cls.from_dict(loads(text))

    def to_dict(self) -> Dict[str, Any]:
        """Canonical form; ``from_dict(to_dict())`` reproduces every object."""
        diffops = {}
        for name, (op, order) in self.diffops.items():
            diffops[name] = encode_diffop(op)
            if order is not None:
                diffops[name]["order"] = order
        morphisms = {}
        for name, (psi, target) in self.morphisms.items():
            morphisms[name] = encode_morphism(psi, None if target == self.algebra else target)
        data = {
            "schema": SCHEMA_VERSION,
            "algebra": encode_algebra(self.algebra),
            "derivations": {k: encode_derivation(v) for k, v in self.derivations.items()},
            "connections": {k: encode_connection(v) for k, v in self.connections.items()},
            "biderivations": {k: encode_biderivation(v) for k, v in self.biderivations.items()},
            "diffops": diffops,
            "modules": {k: encode_module(v) for k, v in self.modules.items()},
            "morphisms": morphisms,
            "gauges": {k: {"rhoP": encode_matrix(a), "rhoQ": encode_matrix(b)} for k, (a, b) in self.gauges.items()},
        }
        return {k: v for k, v in data.items() if v or k in ("schema", "algebra")}

    def lookup(self, collection: str, name: str):
        entries = getattr(self, collection)
        if name not in entries:
            raise UnknownObjectError(f"no {collection[:-1]} named {name!r}")
        return entries[name]

    def find(self, name: str, *collections: str) -> Tuple[str, Any]:
        """First of ``collections`` holding ``name``."""
        for collection in collections:
            if name in getattr(self, collection):
                return collection, getattr(self, collection)[name]
        raise UnknownObjectError(f"no {' or '.join(c[:-1] for c in collections)} named {name!r}")


def _guarded(check: Callable[[], Report]) -> Report:
    try:
        return check()
    except TriolexError as e:
        return Report.fail(None, str(e))


def _gauge_report(alg: TrioleAlgebra, rho_P: Matrix, rho_Q: Matrix) -> Report:
    try:
        moved = gauge_act(rho_P, rho_Q, alg)
    except NonUnitDeterminantError as e:
        return Report.fail(None, str(e))
    report = validate_algebra(moved)
    return Report(report.valid, report.witness, report.message, dict(report.details, algebra=encode_algebra(moved)))


def validate_workspace(ws: WorkspaceFile, config: Dict) -> Report:
    """Run every per-object validator; objects are keyed ``collection/name`` in file order."""
    alg = ws.algebra
    bound = get_identity_degree_bound(config)
    checks: Dict[str, Callable[[], Report]] = {"algebra": lambda: validate_algebra(alg)}
    for name, X in ws.derivations.items():
        checks[f"derivations/{name}"] = lambda X=X: validate_derivation(X, alg, bound)
    for name, C in ws.connections.items():
        checks[f"connections/{name}"] = lambda C=C: validate_connection(C, alg)
    for name, Pi in ws.biderivations.items():
        checks[f"biderivations/{name}"] = lambda Pi=Pi: validate_biderivation(Pi, alg, bound)
    for name, (op, order) in ws.diffops.items():
        checks[f"diffops/{name}"] = lambda op=op, order=order: validate_diffop(op, alg, order)
    for name, module in ws.modules.items():
        checks[f"modules/{name}"] = lambda module=module: validate_truncated_module(module, alg)
    for name, (psi, target) in ws.morphisms.items():
        checks[f"morphisms/{name}"] = lambda psi=psi, target=target: validate_morphism(psi, alg, target)
    for name, (rho_P, rho_Q) in ws.gauges.items():
        checks[f"gauges/{name}"] = lambda rho_P=rho_P, rho_Q=rho_Q: _gauge_report(alg, rho_P, rho_Q)

    objects = {}
    first_failure = None
    for key, check in checks.items():
        report = _guarded(check)
        logger.debug(f"{key}: {'ok' if report.valid else 'FAILED'}")
        objects[key] = report.to_dict()
        if not report.valid and first_failure is None:
            first_failure = key
    if first_failure is None:
        return Report.ok(objects=objects)
    return Report.fail(first_failure, f"{first_failure} is invalid", objects=objects)


def cmd_validate(path, config: Dict) -> Tuple[int, Dict[str, Any]]:
    ws = WorkspaceFile.load(path)
    report = validate_workspace(ws, config)
    if not report.valid:
        logger.warning(report.message)
    return (EXIT_OK if report.valid else EXIT_INVALID), report.to_dict()


def _symbol_values(symbol, alg: TrioleAlgebra) -> Dict[str, Any]:
    values = {}
    for fs in coordinate_tuples(alg.ring, symbol.order - 1):
        label = ",".join(str(f.as_expr()) for f in fs) or "()"
        values[label] = encode_derivation(symbol(*fs))
    return values


def _analyze_symbol(ws: WorkspaceFile, target: str) -> Report:
    alg = ws.algebra
    collection, obj = ws.find(target, "diffops", "derivations")
    if collection == "derivations":
        X = obj
        if X.degree == 0:
            return Report.ok(kind="derivation", degree=0, symbol=encode_vectorfield(symbol_deg0(X)))
        if X.degree == 1:
            return Report.ok(kind="derivation", degree=1, symbol=[encode_matrix(m) for m in symbol_deg1(X, alg)])
        raise DegreeError(f"derivation symbols are defined in degrees 0 and 1, not {X.degree}")
    op, order = obj
    if op.degree == 2:
        return Report.ok(kind="diffop", degree=2, symbol=encode_symbol(symbol_deg2_tensor(op, alg, order)))
    build = symbol_deg0_tensor if op.degree == 0 else symbol_deg1_tensor
    symbol = build(op, alg, order)
    return Report.ok(kind="diffop", degree=op.degree, order=symbol.order, zero=symbol.is_zero(),
                     values=_symbol_values(symbol, alg))


def _analyze_atiyah(ws: WorkspaceFile, target: str, connection: Optional[str]) -> Report:
    alg = ws.algebra
    collection, obj = ws.find(target, "diffops", "derivations")
    op, order = (TriDiffOp.from_derivation(obj), 1) if collection == "derivations" else obj
    C = ws.lookup("connections", connection) if connection else None
    split = atiyah_k_decompose(op, alg, order, C)
    return Report(
        split.relation.valid,
        split.relation.witness,
        split.relation.message,
        {
            "order": split.order,
            "scalar": encode_op(split.scalar),
            "kernel_P": encode_matop(split.kernel_P),
            "kernel_Q": encode_matop(split.kernel_Q),
            "reassembles": split.reassemble() == op,
        },
    )


def _analyze_poisson(ws: WorkspaceFile, target: str, bound: int) -> Report:
    alg = ws.algebra
    Pi = ws.lookup("biderivations", target)
    if Pi.degree == 0:
        return poisson_check_deg0(Pi, alg, bound)
    if Pi.degree == -1:
        return algebroid_from_deg_minus1(Pi, alg, bound)
    if Pi.degree == -2:
        return algebroid_from_deg_minus2(Pi, alg)
    return schouten_square(Pi, alg, bound)


def _analyze_bracket(ws: WorkspaceFile, target: str, bound: int) -> Report:
    names = [s.strip() for s in target.split(",")]
    if len(names) != 2:
        raise UnknownObjectError(f"bracket target must be 'X,Y', got {target!r}")
    X, Y = (ws.lookup("derivations", name) for name in names)
    Z = bracket(X, Y, ws.algebra)
    report = validate_derivation(Z, ws.algebra, bound)
    return Report(report.valid, report.witness, report.message,
                  dict(report.details, bracket=encode_derivation(Z), degree=Z.degree))


def _analyze_h0(ws: WorkspaceFile, target: str, dmax: int) -> Report:
    C = ws.lookup("connections", target)
    basis = nabla_constant_sections(C, ws.algebra, dmax)
    return Report.ok(dmax=dmax, dimension=len(basis), basis=[[encode_poly(x) for x in p] for p in basis])


def _analyze_gauge(ws: WorkspaceFile, target: str, config: Dict) -> Report:
    """Gauge-moved algebra, its determinant triole and, for a constant scalar metric, the stabilizer of g."""
    alg = ws.algebra
    rho_P, rho_Q = ws.lookup("gauges", target)
    report = _gauge_report(alg, rho_P, rho_Q)
    if not report.valid:
        return report
    details = dict(report.details)
    cap = get_determinant_cap(config)
    if alg.m_P <= cap:
        details["determinant"] = encode_algebra(determinant_triole(gauge_act(rho_P, rho_Q, alg), cap))
    if alg.m_Q == 1 and all(x.is_ground for row in alg.g[0] for x in row):
        flat = [x for row in alg.g[0] for x in row]
        stabilizer = gauge_structure_search(flat, (0, 2), alg, get_valence_cap(config))
        details["stabilizer"] = stabilizer.details
    return Report.ok(**details)


def analyze_workspace(ws: WorkspaceFile, cmd: str, target: str, dmax: int, config: Dict) -> Report:
    """Dispatch ``cmd`` on the named ``target``; a ``name@connection`` target picks the Atiyah splitting."""
    alg = ws.algebra
    bound = get_identity_degree_bound(config)
    if cmd == "curvature":
        curv = curvature(ws.lookup("connections", target), alg)
        return Report.ok(flat=curv.is_flat, components=curv.nonzero_components())
    if cmd == "flat-check":
        return flat_check(ws.lookup("connections", target), alg)
    if cmd == "poisson-check":
        return _analyze_poisson(ws, target, bound)
    if cmd == "symbol":
        return _analyze_symbol(ws, target)
    if cmd == "atiyah":
        name, _, connection = target.partition("@")
        return _analyze_atiyah(ws, name, connection or None)
    if cmd == "h0":
        return _analyze_h0(ws, target, dmax)
    if cmd == "bracket":
        return _analyze_bracket(ws, target, bound)
    if cmd == "gauge":
        return _analyze_gauge(ws, target, config)
    raise UnknownObjectError(f"unknown analyze command {cmd!r}")


def cmd_analyze(path, cmd: str, target: str, dmax: Optional[int], config: Dict) -> Tuple[int, Dict[str, Any]]:
    ws = WorkspaceFile.load(path)
    dmax = get_dmax(config) if dmax is None else dmax
    report = analyze_workspace(ws, cmd, target, dmax, config)
    data = dict(report.to_dict(), command=cmd, target=target)
    return (EXIT_OK if report.valid else EXIT_INVALID), data
