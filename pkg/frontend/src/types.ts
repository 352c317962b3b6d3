/** Shared wire types: the filter registry served by /api/filters and the
 * pipeline JSON (schema 1) accepted by /api/execute and `darkroom shade`. */

export type PortType = "gbuffer" | "channel" | "image" | "colormap" | "number";

export type ParamKind = "float" | "int" | "enum" | "color" | "string";

export interface ParamSchema {
  name: string;
  type: ParamKind;
  default: unknown;
  min?: number;
  max?: number;
  choices?: string[];
}

export interface PortSchema {
  name: string;
  type: PortType;
  required?: boolean;
}

export interface FilterSchema {
  name: string;
  params: ParamSchema[];
  inputs: PortSchema[];
  outputs: PortSchema[];
}

export interface Registry {
  filters: FilterSchema[];
}

export const PIPELINE_SCHEMA_VERSION = 1;

export interface PipelineNode {
  id: string;
  type: string;
  params: Record<string, unknown>;
}

export type Endpoint = [nodeId: string, port: string];

export interface PipelineEdge {
  from: Endpoint;
  to: Endpoint;
}

export interface PipelineJson {
  schema: typeof PIPELINE_SCHEMA_VERSION;
  nodes: PipelineNode[];
  edges: PipelineEdge[];
}

export interface DatabaseIndex {
  axes: string[];
  values: Record<string, number[]>;
  rows: number;
}

export interface ExecuteRequest {
  database: string;
  select: Record<string, number>;
  pipeline: PipelineJson;
  sink: Endpoint;
  format?: "png8" | "gbuf";
}

/** Machine-readable error body returned by every 4xx/5xx API response. */
export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
