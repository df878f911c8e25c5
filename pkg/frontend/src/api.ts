/**
 * Typed client for the intervention service.
 *
 * The UI never computes anything itself: every number it shows comes
 * out of one of these three endpoints.
 */

export interface FeatureInfo {
  name: string;
  kind: "continuous" | "binary";
}

export interface Meta {
  model_kind: string;
  features: FeatureInfo[];
  allowed_accessible: string[];
  default_delta: number;
  positive_label: number;
  n_records: number;
  splits: string[];
  n_cells?: number;
}

export interface PatientRecord {
  id: number;
  features: Record<string, number>;
  label: number;
  risk: number;
}

export interface RecordsResponse {
  split: string;
  records: PatientRecord[];
}

export interface PerFeatureChange {
  name: string;
  before: number;
  after: number;
  delta: number;
  before_std: number;
  after_std: number;
}

export interface CellDiagnostic {
  cell: number;
  reason: string;
  drop: number;
}

export interface MapResponse {
  record_id: number;
  status: "found" | "infeasible";
  delta: number;
  accessible: string[];
  risk_before: number;
  per_cell: CellDiagnostic[];
  mad?: number;
  mad_boundary?: number;
  achieved_drop?: number;
  risk_after?: number;
  winner_cells?: number[];
  eta?: number;
  per_feature?: PerFeatureChange[];
  binary_rounding?: {
    mad_rounded: number;
    achieved_drop_rounded: number;
    meets_delta: boolean;
  };
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  constructor(public status: number, public body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface MapRequestBody {
  record_id: number;
  accessible: string[];
  delta: number;
}

/** Minimal fetch signature so tests can substitute recorded transport. */
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string; signal?: AbortSignal },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path);
    const body = await resp.json();
    if (resp.status !== 200) throw new ServiceError(resp.status, body as ApiError);
    return body as T;
  }

  meta(): Promise<Meta> {
    return this.get<Meta>("/meta");
  }

  records(split: string): Promise<RecordsResponse> {
    return this.get<RecordsResponse>(`/records?split=${encodeURIComponent(split)}`);
  }

  async map(body: MapRequestBody, signal?: AbortSignal): Promise<MapResponse> {
    const resp = await this.fetchImpl(this.baseUrl + "/map", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    const payload = await resp.json();
    if (resp.status !== 200) throw new ServiceError(resp.status, payload as ApiError);
    return payload as MapResponse;
  }
}
