/** Wire types of the session service. Field names match the JSON exactly;
 * nothing here is computed on the client side. */

export interface SessionCreated {
  schema_version: string;
  id: string;
  status: "computing" | "ready" | "failed";
  progress: number;
  lambda_alpha: number | null;
}

export interface SessionStatus extends SessionCreated {
  alpha: number;
  error?: string;
  m?: number;
  w?: number;
}

export interface PeakCoord {
  x: number;
  y: number;
  z: number;
}

export interface ClusterEntry {
  id: string;
  size: number;
  /** guaranteed true discoveries in the cluster, an exact integer */
  tdp_lower_bound: number;
  /** server's float convenience ratio; display always derives from the
   * (tdp_lower_bound, size) rational instead */
  tdp: number;
  peak: PeakCoord;
  peak_stat: number;
  voxels?: number[];
}

export interface ClusterReport {
  schema_version: string;
  threshold: number;
  connectivity: number;
  clusters: ClusterEntry[];
}

export type SliceAxis = "x" | "y" | "z";
export type SliceLayer = "stat" | "tdp";

export interface SlicePayload {
  schema_version: string;
  axis: SliceAxis;
  index: number;
  clamped: boolean;
  layer: SliceLayer;
  dims: number[];
  shape: number[];
  values: number[][];
  in_mask: boolean[][];
}

export interface HistoryNode {
  kind: "clusters" | "drill";
  source: { cluster_id?: string; voxels?: number } | null;
  threshold: number;
  connectivity: number;
  cluster_ids: string[];
  children: HistoryNode[];
}

export interface HistoryPayload {
  schema_version: string;
  roots: HistoryNode[];
}

export interface SessionParams {
  data: string;
  geometry?: string;
  alpha?: number;
  family?: string;
  delta?: number;
  w?: number;
  seed?: number;
  labels?: number[];
}

export interface DrillBody {
  threshold: number;
  cluster_id?: string;
  voxels?: number[];
  connectivity?: number;
}
