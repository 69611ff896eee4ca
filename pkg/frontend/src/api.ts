import type {
  AssignmentView,
  JudgeView,
  SuggestionsResponse,
  SwapOutcome,
  SwapRequest,
  SwapSuccess,
  Violation,
} from "./types.js";

export interface ApiConfig {
  baseUrl: string;
  bearerToken?: string;
  fetchImpl?: typeof fetch;
}

export class ApiError extends Error {
  constructor(public status: number, public body: unknown) {
    super(`API error ${status}`);
  }
}

interface ErrorDetail {
  error?: string;
  violations?: Violation[];
  current_version?: number;
}

export class ApiClient {
  private fetchImpl: typeof fetch;

  constructor(private config: ApiConfig) {
    this.fetchImpl = config.fetchImpl ?? fetch;
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.config.bearerToken) {
      headers["Authorization"] = `Bearer ${this.config.bearerToken}`;
    }
    return headers;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.config.baseUrl}${path}`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.json().catch(() => null));
    }
    return (await response.json()) as T;
  }

  getAssignment(): Promise<AssignmentView> {
    return this.getJson<AssignmentView>("/assignment");
  }

  async getJudges(): Promise<JudgeView[]> {
    const payload = await this.getJson<{ judges: JudgeView[] }>("/judges");
    return payload.judges;
  }

  getSuggestions(ventureId: string, removedJudgeId: string, k = 10): Promise<SuggestionsResponse> {
    return this.getJson<SuggestionsResponse>(
      `/suggestions?venture=${encodeURIComponent(ventureId)}&removed=${encodeURIComponent(removedJudgeId)}&k=${k}`,
    );
  }

  async postSwap(request: SwapRequest): Promise<SwapOutcome> {
    const response = await this.fetchImpl(`${this.config.baseUrl}/assignment/swap`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(request),
    });
    if (response.ok) {
      const body = (await response.json()) as SwapSuccess;
      return { kind: "committed", version: body.version, quality: body.quality };
    }
    const body = (await response.json().catch(() => ({}))) as { detail?: ErrorDetail };
    const detail = body.detail ?? {};
    if (response.status === 409 && detail.error === "version_conflict") {
      return { kind: "conflict", currentVersion: detail.current_version ?? -1 };
    }
    if (response.status === 409) {
      return { kind: "violation", violations: detail.violations ?? [] };
    }
    throw new ApiError(response.status, body);
  }
}
