/**
 * Typed client for the screening service HTTP API.
 *
 * Every number shown in the UI comes back through these calls. The client
 * parses responses and surfaces errors, it never computes diagnostic values
 * of its own.
 */

export interface QuestionDef {
  id: string;
  text: string;
  parent?: string | null;
}

export interface QuestionGroupDef {
  priority_factor: number;
  questions: QuestionDef[];
}

export interface QuestionnaireDef {
  name: string;
  version: number;
  groups: QuestionGroupDef[];
  subscores?: Record<string, string[]>;
}

export type Verdict = 'positive' | 'negative' | 'inconclusive';

export interface DiagnoseResult {
  case_id: string;
  algorithm: string;
  model_version: number;
  signs: string[];
  probabilities: Record<string, number>;
  verdict: Verdict;
  top: string | null;
}

export interface DiagnosePayload {
  responses: Record<string, boolean>;
  professional_responses?: Record<string, boolean>;
  report?: Record<string, number>;
  image?: string;
  algorithm?: string;
}

export interface FeedbackPayload {
  rating: number;
  confirmed_label?: string;
  comment?: string;
}

export interface FeedbackResult {
  case_id: string;
  feedback: Record<string, unknown>;
  learned: boolean;
  model_version: number;
}

export interface HealthInfo {
  status: string;
  model_version: number;
  cases: number;
  diseases: string[];
  algorithms: string[];
}

/** Error raised for any non-2xx response, carrying the parsed body. */
export class ApiError extends Error {
  readonly status: number;
  readonly field: string | null;

  constructor(status: number, detail: string, field: string | null = null) {
    super(detail);
    this.name = 'ApiError';
    this.status = status;
    this.field = field;
  }
}

interface SchemaErrorEntry {
  loc?: Array<string | number>;
  msg?: string;
}

/**
 * Collapse an error body to one message plus the offending field.
 *
 * The service reports its own validation failures as {detail, field} while
 * schema-level failures arrive as a list of {loc, msg} entries. The last
 * element of loc names the field that broke.
 */
export function toApiError(status: number, body: unknown): ApiError {
  if (body && typeof body === 'object') {
    const detail = (body as { detail?: unknown }).detail;
    if (typeof detail === 'string') {
      const field = (body as { field?: unknown }).field;
      return new ApiError(status, detail, typeof field === 'string' ? field : null);
    }
    if (Array.isArray(detail) && detail.length > 0) {
      const entry = detail[0] as SchemaErrorEntry;
      const loc = entry.loc ?? [];
      const field = loc.length > 0 ? String(loc[loc.length - 1]) : null;
      return new ApiError(status, entry.msg ?? `request rejected (${status})`, field);
    }
  }
  return new ApiError(status, `request failed (${status})`);
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = '', fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl;
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      body = null;
    }
    if (!res.ok) {
      throw toApiError(res.status, body);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  questionnaire(): Promise<QuestionnaireDef> {
    return this.request<QuestionnaireDef>('/api/questionnaire');
  }

  professionalQuestionnaire(): Promise<QuestionnaireDef> {
    return this.request<QuestionnaireDef>('/api/questionnaire/professional');
  }

  diagnose(payload: DiagnosePayload): Promise<DiagnoseResult> {
    return this.post<DiagnoseResult>('/api/diagnose', payload);
  }

  feedback(caseId: string, payload: FeedbackPayload): Promise<FeedbackResult> {
    return this.post<FeedbackResult>(`/api/cases/${encodeURIComponent(caseId)}/feedback`, payload);
  }

  caseRecord(caseId: string): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>(`/api/cases/${encodeURIComponent(caseId)}`);
  }

  health(): Promise<HealthInfo> {
    return this.request<HealthInfo>('/api/health');
  }
}
