/**
 * Typed client for the animation service HTTP API.
 * The UI keeps no state of its own: everything on screen is reconstructable
 * from these endpoints.
 */

export interface ProjectSummary {
  id: string;
  title: string;
  n_variants: number;
}

export interface VariantSummary {
  id: string;
  project_id: string;
  parent_variant: string | null;
  created_at: number;
  concept_excerpt: string;
  run_solved: boolean;
  open_bugs: number;
  request_id?: string | null;
}

export interface GenerateResult {
  variants: VariantSummary[];
  errors: { variant_index: number; error: string }[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request<ProjectSummary[]>("/api/projects");
  }

  listVariants(projectId: string): Promise<VariantSummary[]> {
    return this.request<VariantSummary[]>(`/api/projects/${encodeURIComponent(projectId)}/variants`);
  }

  generate(projectId: string, n: number): Promise<GenerateResult> {
    return this.request<GenerateResult>(`/api/projects/${encodeURIComponent(projectId)}/generate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ n }),
    });
  }

  submitEdit(variantId: string, prompt: string, requestId: string): Promise<VariantSummary> {
    return this.request<VariantSummary>(`/api/variants/${encodeURIComponent(variantId)}/edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ prompt, request_id: requestId }),
    });
  }

  report(variantId: string): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>(`/api/variants/${encodeURIComponent(variantId)}/report`);
  }

  /** URL of the variant's self-contained animated page, for sandboxed frames. */
  pageUrl(variantId: string): string {
    return `${this.baseUrl}/api/variants/${encodeURIComponent(variantId)}/page.html`;
  }
}

export function newRequestId(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c?.randomUUID) return c.randomUUID();
  return `req-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}
