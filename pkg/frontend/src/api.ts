/**
 * Typed client for the review service. All mutations go through
 * postVerdict; everything else is read-only.
 */

export interface CaseSummary {
  case_id: string;
  labeled: boolean;
  verdict: string | null;
}

export interface CaseListing {
  cases: CaseSummary[];
  total: number;
  labeled: number;
}

export interface StructureCurve {
  structure: number;
  name: string;
  unit: string;
  values: number[];
}

export interface CaseView {
  caseId: string;
  frames: number;
  structures: StructureCurve[];
  frameUrls: string[];
  verdict: string | null;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ReviewApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get(path: string): Promise<unknown> {
    const r = await this.fetchFn(this.base + path);
    if (!r.ok) throw new ApiError(`GET ${path} failed: ${r.status}`, r.status);
    return r.json();
  }

  async listCases(): Promise<CaseListing> {
    return (await this.get("/cases")) as CaseListing;
  }

  frameUrl(caseId: string, t: number): string {
    return `${this.base}/cases/${encodeURIComponent(caseId)}/frames/${t}`;
  }

  /** Assemble the full per-case view; frame URLs cover 0..frames-1 exactly. */
  async fetchCase(caseId: string): Promise<CaseView> {
    const body = (await this.get(
      `/cases/${encodeURIComponent(caseId)}/curves`,
    )) as {
      case_id: string;
      frames: number;
      structures: StructureCurve[];
      verdict: string | null;
    };
    const urls: string[] = [];
    for (let t = 0; t < body.frames; t++) urls.push(this.frameUrl(caseId, t));
    for (const s of body.structures) {
      if (s.values.length !== body.frames) {
        throw new ApiError(
          `curve ${s.name} has ${s.values.length} points for ${body.frames} frames`,
          500,
        );
      }
    }
    return {
      caseId: body.case_id,
      frames: body.frames,
      structures: body.structures,
      frameUrls: urls,
      verdict: body.verdict,
    };
  }

  async postVerdict(
    caseId: string,
    verdict: "good" | "erroneous",
    reviewer = "ui",
  ): Promise<void> {
    const r = await this.fetchFn(
      `${this.base}/cases/${encodeURIComponent(caseId)}/label`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ verdict, reviewer }),
      },
    );
    if (!r.ok) throw new ApiError(`label ${caseId} failed: ${r.status}`, r.status);
  }
}
