"""Filter-graph engine: typed ports, dirty propagation, memoized execution.

Edits mark the touched node and everything downstream dirty; execute then
pulls only the dirty ancestors of the requested sink. The observable
behavior matches an eager push cascade, without recomputation storms
while parameters are being dragged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    CycleError,
    ParamError,
    PortTypeError,
    SchemaError,
    UnconnectedInputError,
    UnknownFilterError,
)
from .registry import FILTERS

SCHEMA_VERSION = 1


@dataclass
class Node:
    id: str
    filter_type: str
    params: dict = field(default_factory=dict)

    @property
    def spec(self):
        return FILTERS[self.filter_type]


class PipelineGraph:
    def __init__(self):
        self.nodes: dict[str, Node] = {}
        # input edges keyed by destination: (node, in_port) -> (node, out_port)
        self.edges: dict[tuple, tuple] = {}
        self.dirty: set[str] = set()
        self.cache: dict[tuple, object] = {}
        self.stats = {"kernel_evals": 0}

    # -- construction -------------------------------------------------------

    def add_node(self, node_id, filter_type, params=None):
        if filter_type not in FILTERS:
            raise UnknownFilterError(f"unknown filter type {filter_type!r}")
        if node_id in self.nodes:
            raise ParamError(f"duplicate node id {node_id!r}")
        spec = FILTERS[filter_type]
        merged = spec.defaults()
        for name, value in (params or {}).items():
            merged[name] = spec.param(name).validate(value)
        node = Node(id=node_id, filter_type=filter_type, params=merged)
        self.nodes[node_id] = node
        self.dirty.add(node_id)
        return node

    def _node(self, node_id):
        if node_id not in self.nodes:
            raise ParamError(f"unknown node {node_id!r}")
        return self.nodes[node_id]

    def connect(self, from_node, from_port, to_node, to_port):
        """Add an edge; rejects type mismatches and cycles atomically.
        An occupied input port gets its old edge replaced."""
        src = self._node(from_node)
        dst = self._node(to_node)
        out_spec = src.spec.output_port(from_port)
        if out_spec is None:
            raise PortTypeError(f"{from_node} has no output port {from_port!r}")
        in_spec = dst.spec.input_port(to_port)
        if in_spec is None:
            raise PortTypeError(f"{to_node} has no input port {to_port!r}")
        if out_spec.type != in_spec.type:
            raise PortTypeError(
                f"cannot connect {out_spec.type} port {from_node}.{from_port} "
                f"to {in_spec.type} port {to_node}.{to_port}")
        if from_node == to_node or from_node in self._descendants(to_node):
            raise CycleError(
                f"edge {from_node}.{from_port} -> {to_node}.{to_port} would "
                f"create a cycle",
                from_endpoint=(from_node, from_port),
                to_endpoint=(to_node, to_port))
        self.edges[(to_node, to_port)] = (from_node, from_port)
        self._mark_dirty(to_node)

    def set_param(self, node_id, name, value):
        node = self._node(node_id)
        node.params[name] = node.spec.param(name).validate(value)
        self._mark_dirty(node_id)

    # -- reachability -------------------------------------------------------

    def _descendants(self, node_id):
        """Nodes strictly downstream of node_id."""
        downstream = {}
        for (to, _), (frm, _) in self.edges.items():
            downstream.setdefault(frm, set()).add(to)
        seen = set()
        frontier = [node_id]
        while frontier:
            cur = frontier.pop()
            for nxt in downstream.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    def _ancestors(self, node_id):
        """node_id plus everything upstream of it."""
        seen = {node_id}
        frontier = [node_id]
        while frontier:
            cur = frontier.pop()
            for (to, _), (frm, _) in self.edges.items():
                if to == cur and frm not in seen:
                    seen.add(frm)
                    frontier.append(frm)
        return seen

    def _mark_dirty(self, node_id):
        touched = {node_id} | self._descendants(node_id)
        self.dirty |= touched
        for key in [k for k in self.cache if k[0] in touched]:
            del self.cache[key]

    # -- execution ----------------------------------------------------------

    def execute(self, sink, context=None):
        """Evaluate the graph up to sink = (node, port) and return its value.

        Clean nodes are served from the memo cache; the kernel-eval count
        is tracked in graph.stats."""
        context = context or {}
        sink_node, sink_port = sink
        node = self._node(sink_node)
        if node.spec.output_port(sink_port) is None:
            raise PortTypeError(f"{sink_node} has no output port {sink_port!r}")

        needed = self._ancestors(sink_node)
        for nid in needed:
            for port in self.nodes[nid].spec.inputs:
                if port.required and (nid, port.name) not in self.edges:
                    raise UnconnectedInputError(
                        f"input port {nid}.{port.name} is not connected",
                        node=nid, port=port.name)

        order = self._topological(needed)
        for nid in order:
            if nid not in self.dirty and all(
                    (nid, p.name) in self.cache
                    for p in self.nodes[nid].spec.outputs):
                continue
            n = self.nodes[nid]
            inputs = {}
            for port in n.spec.inputs:
                frm = self.edges.get((nid, port.name))
                if frm is not None:
                    inputs[port.name] = self.cache[frm]
            outputs = n.spec.kernel(inputs, n.params, context)
            self.stats["kernel_evals"] += 1
            for port_name, value in outputs.items():
                self.cache[(nid, port_name)] = value
            self.dirty.discard(nid)
        return self.cache[(sink_node, sink_port)]

    def _topological(self, subset):
        indeg = {nid: 0 for nid in subset}
        downstream = {nid: [] for nid in subset}
        for (to, _), (frm, _) in self.edges.items():
            if to in subset and frm in subset:
                indeg[to] += 1
                downstream[frm].append(to)
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for nxt in downstream[nid]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
        if len(order) != len(subset):
            raise CycleError("pipeline graph contains a cycle")
        return order

    # -- serialization ------------------------------------------------------

    def to_json(self) -> bytes:
        payload = {
            "schema": SCHEMA_VERSION,
            "nodes": [
                {"id": n.id, "type": n.filter_type, "params": n.params}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": sorted(
                ({"from": list(frm), "to": list(to)}
                 for to, frm in self.edges.items()),
                key=lambda e: (e["to"], e["from"])),
        }
        return json.dumps(payload, indent=2).encode("utf-8")

    @classmethod
    def from_json(cls, data) -> "PipelineGraph":
        if isinstance(data, (bytes, str)):
            try:
                payload = json.loads(data)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}") from exc
        else:
            payload = data
        if not isinstance(payload, dict):
            raise SchemaError("payload must be an object", pointer="")
        if payload.get("schema") != SCHEMA_VERSION:
            raise SchemaError(
                f"unsupported schema {payload.get('schema')!r}", pointer="/schema")
        graph = cls()
        nodes = payload.get("nodes")
        if not isinstance(nodes, list):
            raise SchemaError("nodes must be a list", pointer="/nodes")
        for i, entry in enumerate(nodes):
            if not isinstance(entry, dict) or "id" not in entry or "type" not in entry:
                raise SchemaError("node needs id and type", pointer=f"/nodes/{i}")
            graph.add_node(entry["id"], entry["type"], entry.get("params", {}))
        edges = payload.get("edges", [])
        if not isinstance(edges, list):
            raise SchemaError("edges must be a list", pointer="/edges")
        for i, entry in enumerate(edges):
            try:
                (fn, fp), (tn, tp) = entry["from"], entry["to"]
            except (KeyError, TypeError, ValueError):
                raise SchemaError("edge needs from/to [id, port] pairs",
                                  pointer=f"/edges/{i}") from None
            graph.connect(fn, fp, tn, tp)
        return graph

    def structurally_equal(self, other) -> bool:
        mine = {(n.id, n.filter_type, json.dumps(n.params, sort_keys=True))
                for n in self.nodes.values()}
        theirs = {(n.id, n.filter_type, json.dumps(n.params, sort_keys=True))
                  for n in other.nodes.values()}
        return mine == theirs and self.edges == other.edges
