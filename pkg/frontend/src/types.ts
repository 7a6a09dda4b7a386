/** Wire types mirroring the gateway's JSON payloads. */

export interface ApiOk<T> {
  status: 'ok';
  payload: T;
}

export interface ApiError {
  status: 'error';
  error: {code: string; message: string; location?: string};
}

export type Envelope<T> = ApiOk<T> | ApiError;

export interface Alpha2Readout {
  observed: number;
  null_mean: number;
  null_sd: number;
  ratio: number;
  trials: number;
  seed: number;
  standardized: boolean;
}

/** GET /sessions/{id}/biplot */
export interface BiplotPayload {
  components: number[];
  weights: number[];
  sample_ids: string[];
  variable_ids: string[];
  sample_coords: number[][];
  variable_coords: number[][];
  alpha2: Alpha2Readout;
  /** lambda-weighted pairing matrix, variables x samples */
  pairings?: number[][];
}

export interface StepSummary {
  index: number;
  kind: string;
  params: Record<string, unknown>;
  seed: number | null;
  dof_delta: number;
  has_artifact: boolean;
}

export interface StateSummary {
  n_variables: number;
  n_samples: number;
  dof_adjustment: number;
  n_steps: number;
}

/** GET /sessions/{id} */
export interface SessionPayload {
  state: StateSummary;
  steps: StepSummary[];
  detected_signals: {label: string; sample_ids: string[]}[];
}

export interface TestTablePayload {
  step_index: number;
  table: {
    variable_ids: string[];
    t: number[];
    df: number[];
    p: number[];
    q?: number[];
    rejected?: boolean[];
    degenerate: boolean[];
    level?: number;
    n_rejected?: number;
    params: Record<string, unknown>;
  };
}

/** Body for POST /sessions/{id}/steps. */
export interface StepRequest {
  kind: string;
  params: Record<string, unknown>;
  seed?: number;
  async?: boolean;
}

export interface FactorTable {
  scope: string;
  factors: Record<string, Record<string, string>>;
}
