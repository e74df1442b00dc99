/**
 * Typed client for the cloudmri gateway REST API.
 *
 * The actor travels as the trusted X-Actor header. Gateway errors arrive as
 * {"error": {"code", "message"}} with a 4xx/5xx status and are rethrown as
 * ApiError so the UI can show the server's message verbatim.
 */

export interface JobRecord {
  job_id: string;
  state: string;
  node: string | null;
  dataset_id: string;
  image_id: string | null;
  params: Record<string, unknown>;
  metrics: { nrmse: number | null; iterations_used?: number } | null;
  error: string | null;
}

export interface ImagePayload {
  width: number;
  height: number;
  pixels: number[];
  meta: { job_id: string; algorithm: string; nrmse: number | null };
}

export interface LabelBox {
  x: number;
  y: number;
  w: number;
  h: number;
  text: string;
}

export interface ReviewBody {
  image_id: string;
  score: number;
  labels: LabelBox[];
  report: string;
  client_token?: string;
}

export interface StoredReview {
  review_id: string;
  image_id: string;
  reviewer: string;
  score: number;
  labels: LabelBox[];
  report: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "HttpError";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    } else if (body?.detail) {
      message = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON body: keep the status line
  }
  return new ApiError(response.status, code, message);
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    readonly actor: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers = new Headers(init.headers);
    headers.set("X-Actor", this.actor);
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listJobs(): Promise<JobRecord[]> {
    return this.request<{ jobs: JobRecord[] }>("/v1/jobs").then((r) => r.jobs);
  }

  getJob(jobId: string, waitS = 0): Promise<JobRecord> {
    const query = waitS > 0 ? `?wait_s=${waitS}` : "";
    return this.request<JobRecord>(`/v1/jobs/${jobId}${query}`);
  }

  getImage(imageId: string): Promise<ImagePayload> {
    return this.request<ImagePayload>(`/v1/images/${imageId}`);
  }

  postReview(review: ReviewBody): Promise<{ review_id: string }> {
    return this.request<{ review_id: string }>("/v1/reviews", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(review),
    });
  }

  getReview(reviewId: string): Promise<StoredReview> {
    return this.request<StoredReview>(`/v1/reviews/${reviewId}`);
  }

  metrics(): Promise<Record<string, number>> {
    return this.request<Record<string, number>>("/v1/metrics");
  }
}
