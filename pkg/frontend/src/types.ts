/** Mirrors of the service JSON schemas.
 *
 * The explorer never computes margins, verdicts, or trajectories locally;
 * everything below is exactly what the service returns, and the view
 * renders it verbatim.
 */

export type NodeRole = "leader" | "follower";

export interface GraphNodeJson {
  id: number;
  role: NodeRole;
}

export interface GraphEdgeJson {
  id: number;
  head: number;
  tail: number;
}

export interface GraphJson {
  nodes: GraphNodeJson[];
  edges: GraphEdgeJson[];
}

export interface EdgeRow {
  edge: number;
  cycle_term: number;
  E_i: number;
  margin: number;
}

export interface PathRow {
  nodes: number[];
  bypass: boolean;
  cycle_term: number;
  F_i: number;
  margin: number;
}

export interface Witness {
  kind: "edge" | "path";
  margin: number;
  edge?: number;
  nodes?: number[];
  subgraph_nodes?: number[];
}

export interface ConditionReport {
  verdict: "pass" | "fail";
  edges: EdgeRow[];
  paths: PathRow[];
  witness: Witness | null;
}

/** POST /api/check response with default options: one report per check. */
export interface CheckPayload {
  theorem1: ConditionReport;
  theorem2: ConditionReport;
}

export interface FunnelSettingsJson {
  rho0: number;
  rho_inf: number;
  l: number;
  gain: number;
}

export interface PpcJson {
  default: FunnelSettingsJson;
  edges?: Record<string, FunnelSettingsJson>;
}

export interface FormationJson {
  dimension: number;
  displacements: Record<string, number[]>;
  anchors?: Record<string, number[]>;
}

export interface SimConfigJson {
  dt: number;
  horizon: number;
  integrator: "rk4" | "euler";
  violation_policy: "record-and-continue" | "halt";
  record_stride: number;
}

export interface ScenarioJson {
  format_version: number;
  name: string;
  graph: GraphJson;
  formation: FormationJson;
  ppc: PpcJson;
  sim: SimConfigJson;
  initial_positions: Record<string, number[]>;
}

export interface ScenariosResponse {
  scenarios: Record<string, ScenarioJson>;
}

export interface ViolationJson {
  time: number;
  edge: number;
  dim: number;
  value: number;
}

export interface SimSummary {
  max_normalized_error: number;
  violations: ViolationJson[];
  final_errors: Record<string, number[]>;
}

export interface EdgeSeriesJson {
  /** One array per dimension, each with one value per sample. */
  errors: number[][];
  radius: number[];
}

export interface SeriesPayload {
  stride: number;
  times: number[];
  edges: Record<string, EdgeSeriesJson>;
}

export interface SimulateResponse {
  summary: SimSummary;
  series: SeriesPayload;
}

export interface SuggestResponse {
  assignments: { leaders: number[] }[];
}
