/** DOM node editor: palette, draggable nodes with left/right ports,
 * parameter widgets generated from the registry schema, red SVG edges,
 * and a live render view of the selected sink. */

import { ApiClient, ApiError } from "./api.js";
import { GraphState } from "./graphState.js";
import { ExecuteScheduler } from "./scheduler.js";
import type {
  Endpoint,
  ExecuteRequest,
  ParamSchema,
  PipelineNode,
  Registry,
} from "./types.js";

export const EDGE_STROKE = "#d03030"; // the documented red stroke token

const SVG_NS = "http://www.w3.org/2000/svg";

interface DragEdge {
  from: Endpoint;
}

export class Editor {
  readonly root: HTMLElement;
  readonly palette: HTMLElement;
  readonly canvas: HTMLElement;
  readonly edgeLayer: SVGSVGElement;
  readonly renderView: HTMLImageElement;
  readonly errorOverlay: HTMLElement;
  readonly graph: GraphState;
  private readonly scheduler: ExecuteScheduler;
  private dragEdge: DragEdge | null = null;
  private lastObjectUrl: string | null = null;
  database: string | null = null;
  select: Record<string, number> = {};

  constructor(
    container: HTMLElement,
    private readonly registry: Registry,
    api: ApiClient,
  ) {
    this.graph = new GraphState(registry);
    this.root = container;
    this.root.classList.add("darkroom-editor");

    this.palette = document.createElement("aside");
    this.palette.className = "palette";
    this.canvas = document.createElement("div");
    this.canvas.className = "canvas";
    this.edgeLayer = document.createElementNS(SVG_NS, "svg");
    this.edgeLayer.classList.add("edges");
    this.canvas.appendChild(this.edgeLayer);

    const view = document.createElement("section");
    view.className = "render-view";
    this.renderView = document.createElement("img");
    this.renderView.alt = "render output";
    this.errorOverlay = document.createElement("div");
    this.errorOverlay.className = "error-overlay";
    this.errorOverlay.hidden = true;
    view.append(this.renderView, this.errorOverlay);

    this.root.append(this.palette, this.canvas, view);
    this.scheduler = new ExecuteScheduler(
      api,
      (blob) => this.showFrame(blob),
      (err) => this.showError(err),
    );

    this.renderPalette();
    this.graph.onChange(() => {
      this.redrawEdges();
      this.scheduleExecute();
    });
    this.canvas.addEventListener("pointerup", () => {
      // a drag released over empty canvas is a no-op
      this.dragEdge = null;
    });
  }

  // -- palette --------------------------------------------------------------

  private renderPalette(): void {
    for (const filter of this.registry.filters) {
      const entry = document.createElement("button");
      entry.className = "palette-entry";
      entry.textContent = filter.name;
      entry.dataset.filter = filter.name;
      entry.addEventListener("click", () => {
        const at = { x: 40 + this.graph.nodes.size * 24, y: 40 };
        this.addNode(filter.name, at);
      });
      this.palette.appendChild(entry);
    }
  }

  addNode(type: string, at: { x: number; y: number }): PipelineNode {
    const node = this.graph.addNode(type, at);
    this.canvas.appendChild(this.renderNode(node));
    return node;
  }

  // -- nodes ----------------------------------------------------------------

  private renderNode(node: PipelineNode): HTMLElement {
    const schema = this.graph.filterSchema(node.type);
    const el = document.createElement("div");
    el.className = "node";
    el.dataset.nodeId = node.id;
    const pos = this.graph.positions.get(node.id)!;
    el.style.left = `${pos.x}px`;
    el.style.top = `${pos.y}px`;

    const title = document.createElement("header");
    title.textContent = node.type;
    title.addEventListener("pointerdown", (ev) =>
      this.beginNodeDrag(node.id, el, ev),
    );
    el.appendChild(title);

    const body = document.createElement("div");
    body.className = "node-body";
    const left = document.createElement("div");
    left.className = "ports-in";
    const right = document.createElement("div");
    right.className = "ports-out";

    for (const port of schema.inputs) {
      const row = document.createElement("div");
      row.className = "port-row";
      const dot = document.createElement("span");
      dot.className = "port port-in";
      dot.dataset.port = port.name;
      dot.dataset.portType = port.type;
      dot.title = `${port.name}: ${port.type}`;
      dot.addEventListener("pointerup", (ev) => {
        ev.stopPropagation();
        this.completeDrag([node.id, port.name], dot);
      });
      row.append(dot, this.label(port.name));
      left.appendChild(row);
    }

    // parameter widgets sit beside the input ports, per the layout contract
    for (const param of schema.params) {
      const row = document.createElement("div");
      row.className = "param-row";
      row.append(this.label(param.name), this.widget(node, param));
      left.appendChild(row);
    }

    for (const port of schema.outputs) {
      const row = document.createElement("div");
      row.className = "port-row";
      const dot = document.createElement("span");
      dot.className = "port port-out";
      dot.dataset.port = port.name;
      dot.dataset.portType = port.type;
      dot.title = `${port.name}: ${port.type}`;
      dot.addEventListener("pointerdown", (ev) => {
        ev.stopPropagation();
        this.dragEdge = { from: [node.id, port.name] };
      });
      dot.addEventListener("dblclick", () =>
        this.graph.setSink([node.id, port.name]),
      );
      row.append(this.label(port.name), dot);
      right.appendChild(row);
    }

    body.append(left, right);
    el.appendChild(body);
    return el;
  }

  private label(text: string): HTMLElement {
    const span = document.createElement("span");
    span.className = "label";
    span.textContent = text;
    return span;
  }

  /** Widget kind follows the parameter schema, not a hard-coded table. */
  private widget(node: PipelineNode, param: ParamSchema): HTMLElement {
    if (param.type === "enum") {
      const select = document.createElement("select");
      select.dataset.param = param.name;
      for (const choice of param.choices ?? []) {
        const option = document.createElement("option");
        option.value = choice;
        option.textContent = choice;
        option.selected = choice === node.params[param.name];
        select.appendChild(option);
      }
      select.addEventListener("change", () =>
        this.graph.setParam(node.id, param.name, select.value),
      );
      return select;
    }
    if (param.type === "color") {
      const input = document.createElement("input");
      input.type = "color";
      input.dataset.param = param.name;
      input.value = rgbToHex(node.params[param.name] as number[]);
      input.addEventListener("input", () =>
        this.graph.setParam(node.id, param.name, hexToRgb(input.value)),
      );
      return input;
    }
    if (param.type === "string") {
      const input = document.createElement("input");
      input.type = "text";
      input.dataset.param = param.name;
      input.value = String(node.params[param.name]);
      input.addEventListener("change", () =>
        this.graph.setParam(node.id, param.name, input.value),
      );
      return input;
    }
    // float / int: a slider when the range is bounded, a number box otherwise
    const input = document.createElement("input");
    input.dataset.param = param.name;
    if (param.min !== undefined && param.max !== undefined) {
      input.type = "range";
      input.min = String(param.min);
      input.max = String(param.max);
      input.step = param.type === "int" ? "1" : "any";
    } else {
      input.type = "number";
      if (param.min !== undefined) input.min = String(param.min);
      if (param.max !== undefined) input.max = String(param.max);
    }
    input.value = String(node.params[param.name]);
    input.addEventListener("input", () => {
      const v = param.type === "int" ? parseInt(input.value, 10)
                                     : parseFloat(input.value);
      if (!Number.isNaN(v)) this.graph.setParam(node.id, param.name, v);
    });
    return input;
  }

  private beginNodeDrag(
    nodeId: string,
    el: HTMLElement,
    start: PointerEvent,
  ): void {
    const pos = this.graph.positions.get(nodeId)!;
    const offX = start.clientX - pos.x;
    const offY = start.clientY - pos.y;
    const move = (ev: PointerEvent) => {
      const at = { x: ev.clientX - offX, y: ev.clientY - offY };
      el.style.left = `${at.x}px`;
      el.style.top = `${at.y}px`;
      this.graph.moveNode(nodeId, at);
    };
    const up = () => {
      this.canvas.removeEventListener("pointermove", move);
      this.canvas.removeEventListener("pointerup", up);
    };
    this.canvas.addEventListener("pointermove", move);
    this.canvas.addEventListener("pointerup", up);
  }

  // -- edges ----------------------------------------------------------------

  private completeDrag(to: Endpoint, dot: HTMLElement): void {
    const drag = this.dragEdge;
    this.dragEdge = null;
    if (!drag) return;
    if (!this.graph.connect(drag.from, to)) {
      // illegal drop: flash the port, leave the pipeline untouched
      dot.classList.add("port-reject");
      setTimeout(() => dot.classList.remove("port-reject"), 400);
    }
  }

  redrawEdges(): void {
    while (this.edgeLayer.firstChild) {
      this.edgeLayer.firstChild.remove();
    }
    for (const edge of this.graph.edges) {
      const path = document.createElementNS(SVG_NS, "path");
      path.classList.add("edge");
      path.setAttribute("stroke", EDGE_STROKE);
      path.setAttribute("fill", "none");
      path.setAttribute("stroke-width", "2");
      path.setAttribute("d", this.edgePath(edge.from, edge.to));
      path.dataset.from = edge.from.join(".");
      path.dataset.to = edge.to.join(".");
      this.edgeLayer.appendChild(path);
    }
  }

  private edgePath(from: Endpoint, to: Endpoint): string {
    const a = this.portAnchor(from, "out");
    const b = this.portAnchor(to, "in");
    const dx = Math.max(40, Math.abs(b.x - a.x) / 2);
    return `M ${a.x} ${a.y} C ${a.x + dx} ${a.y}, ${b.x - dx} ${b.y}, ${b.x} ${b.y}`;
  }

  private portAnchor(
    endpoint: Endpoint,
    side: "in" | "out",
  ): { x: number; y: number } {
    const pos = this.graph.positions.get(endpoint[0]) ?? { x: 0, y: 0 };
    // layout metrics are fixed-size in CSS; keep the anchor math simple
    const x = side === "out" ? pos.x + 180 : pos.x;
    const schema = this.graph.filterSchema(
      this.graph.nodes.get(endpoint[0])!.type,
    );
    const ports = side === "out" ? schema.outputs : schema.inputs;
    const index = ports.findIndex((p) => p.name === endpoint[1]);
    return { x, y: pos.y + 34 + 22 * Math.max(0, index) };
  }

  // -- execution ------------------------------------------------------------

  private buildRequest(): ExecuteRequest | null {
    if (!this.database || !this.graph.sink) return null;
    return {
      database: this.database,
      select: this.select,
      pipeline: this.graph.toPipelineJson(),
      sink: this.graph.sink,
      format: "png8",
    };
  }

  scheduleExecute(): void {
    const req = this.buildRequest();
    if (req) this.scheduler.request(req);
  }

  /** Sink switches skip the debounce for an instant view change. */
  executeNow(): void {
    const req = this.buildRequest();
    if (req) this.scheduler.requestImmediate(req);
  }

  private showFrame(blob: Blob): void {
    this.errorOverlay.hidden = true;
    if (this.lastObjectUrl) URL.revokeObjectURL(this.lastObjectUrl);
    this.lastObjectUrl = URL.createObjectURL(blob);
    this.renderView.src = this.lastObjectUrl;
  }

  private showError(err: unknown): void {
    this.errorOverlay.hidden = false;
    if (err instanceof ApiError) {
      const where =
        err.body.details.node !== undefined
          ? ` (${err.body.details.node}:${err.body.details.port ?? "?"})`
          : "";
      this.errorOverlay.textContent = `${err.body.code}: ${err.body.message}${where}`;
      if (err.body.code === "cycle") {
        // remove the offending edge the server pointed at
        const to = err.body.details.to as [string, string] | undefined;
        if (to) this.graph.disconnect(to);
      }
    } else {
      this.errorOverlay.textContent = String(err);
    }
  }
}

function rgbToHex(rgb: number[]): string {
  const to2 = (v: number) =>
    Math.round(Math.max(0, Math.min(1, v)) * 255)
      .toString(16)
      .padStart(2, "0");
  return `#${to2(rgb[0] ?? 0)}${to2(rgb[1] ?? 0)}${to2(rgb[2] ?? 0)}`;
}

function hexToRgb(hex: string): number[] {
  const n = parseInt(hex.slice(1), 16);
  return [(n >> 16) & 255, (n >> 8) & 255, n & 255].map((v) => v / 255);
}

/** Bootstrap: fetch the registry and mount the editor, or show a blocking
 * banner when the registry is unreachable. */
export async function mountEditor(
  container: HTMLElement,
  api: ApiClient,
): Promise<Editor | null> {
  let registry: Registry;
  try {
    registry = await api.getFilters();
  } catch (err) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `failed to load filter registry: ${String(err)}`;
    container.appendChild(banner);
    return null;
  }
  return new Editor(container, registry, api);
}
