/** Wire types of the session service. */

export interface SessionInfo {
  session: string;
  revision: number;
  faces: number[];
}

export interface MeshPayload {
  vertices: number[][];
  triangles: number[][];
  face_ids: number[];
  revision: number;
}

export interface ConstraintStateReport {
  state: "well" | "over" | "under" | "over-and-under";
  rank: number;
  nullity: number;
  excess_dof: number;
  rigid_dof: number;
  effective_rigid_dof: number;
  self_symmetric: boolean;
}

export interface ConstraintRecord {
  id: number;
  type: string;
  refs: number[];
  value?: number;
}

export interface Certificate {
  support: number[];
  residual: number;
}

export interface WellPart {
  entities: number[];
  constraints: number[];
}

export interface AnalysisPayload {
  revision: number;
  validity: { is_valid: boolean; violations: unknown[] };
  constraint_state: ConstraintStateReport;
  certificates: Certificate[];
  well_constrained_parts: WellPart[];
  constraints: ConstraintRecord[];
  volume: number;
}

export interface ResolutionOptionPayload {
  id: string;
  kind: "remove" | "add";
  rough_rank: number;
  sensitivity: number;
  explanation: string;
  constraint_id?: number;
  candidate?: { type: string; refs: number[]; value?: number | null };
}

export interface OptionsPayload {
  revision: string;
  session_revision: number;
  options: ResolutionOptionPayload[];
}

export interface GtipEvent {
  kind: string;
  t: number;
  faces: number[];
  vertices: number[];
  edges: number[];
}

export interface EditResultPayload {
  revision: number;
  gtips: GtipEvent[];
  completed_t: number;
  constraint_state: ConstraintStateReport;
  intermediate_volumes: number[];
  [key: string]: unknown;
}

export interface ServiceError {
  error: string;
  detail: string;
  last_valid_t?: number;
}

export class ConflictError extends Error {
  constructor(public payload: ServiceError) {
    super(payload.detail);
  }
}

export class RejectedError extends Error {
  constructor(public payload: ServiceError) {
    super(payload.detail);
  }
}
