import type {
  ApiErrorBody,
  AssetRecord,
  BlastRadius,
  DryRunResult,
  LeaderboardRow,
  NodeRecord,
  PolicyContext,
  PolicyRecord,
  StatusRecord,
  TierRecord,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiFault extends Error {
  status: number;
  body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message || body.code);
    this.status = status;
    this.body = body;
  }
}

export type AggMode = "sum" | "max" | "mean";

export type LeaderboardQuery = {
  agg?: AggMode;
  overrides?: Record<string, string | null>;
};

// Exported so tests can prove the preview uses the exact same parameter
// a direct call would.
export function leaderboardPath(orgId: string, query: LeaderboardQuery = {}): string {
  const params = new URLSearchParams();
  if (query.agg) params.set("agg", query.agg);
  for (const [asset, tier] of Object.entries(query.overrides ?? {})) {
    params.append("override_tier", `${asset}:${tier ?? "none"}`);
  }
  const qs = params.toString();
  return `/api/v1/orgs/${encodeURIComponent(orgId)}/leaderboard${qs ? `?${qs}` : ""}`;
}

export class DeptexApi {
  private base: string;
  private token: string;
  private fetchImpl: FetchLike;

  constructor(base = "", token = "", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.token = token;
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const res = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await res.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = null;
    }
    if (!res.ok) {
      const errBody =
        parsed && typeof parsed === "object" && "error" in (parsed as object)
          ? ((parsed as { error: ApiErrorBody }).error)
          : { code: `http_${res.status}`, message: text || res.statusText };
      throw new ApiFault(res.status, errBody);
    }
    return parsed as T;
  }

  health(): Promise<{ status: string; nodes: number }> {
    return this.request("GET", "/api/v1/health");
  }

  listOrgs(): Promise<NodeRecord[]> {
    return this.request("GET", "/api/v1/orgs");
  }

  listAssets(): Promise<AssetRecord[]> {
    return this.request("GET", "/api/v1/assets");
  }

  listTiers(): Promise<TierRecord[]> {
    return this.request("GET", "/api/v1/tiers");
  }

  listStatuses(): Promise<StatusRecord[]> {
    return this.request("GET", "/api/v1/statuses");
  }

  listPolicies(): Promise<PolicyRecord[]> {
    return this.request("GET", "/api/v1/policies");
  }

  listSignals(): Promise<NodeRecord[]> {
    return this.request("GET", "/api/v1/signals");
  }

  leaderboard(orgId: string, query: LeaderboardQuery = {}): Promise<LeaderboardRow[]> {
    return this.request("GET", leaderboardPath(orgId, query));
  }

  blastRadius(signalRef: string): Promise<BlastRadius> {
    return this.request(
      "GET",
      `/api/v1/signals/${encodeURIComponent(signalRef)}/blast-radius`,
    );
  }

  setAssetTier(assetId: string, tier: string | null): Promise<{ id: string }> {
    return this.request("PUT", `/api/v1/assets/${encodeURIComponent(assetId)}/tier`, {
      tier,
    });
  }

  createTier(tier: TierRecord): Promise<TierRecord> {
    return this.request("POST", "/api/v1/tiers", tier);
  }

  updateTier(tierId: string, patch: Partial<TierRecord>): Promise<TierRecord> {
    return this.request("PUT", `/api/v1/tiers/${encodeURIComponent(tierId)}`, patch);
  }

  createStatus(status: Partial<StatusRecord>): Promise<StatusRecord> {
    return this.request("POST", "/api/v1/statuses", status);
  }

  createPolicy(policy: PolicyRecord): Promise<PolicyRecord> {
    return this.request("POST", "/api/v1/policies", policy);
  }

  dryRunAdhoc(
    context: PolicyContext,
    source: string,
    binding: unknown,
  ): Promise<DryRunResult> {
    return this.request("POST", "/api/v1/policies/dry-run", {
      context,
      source,
      binding,
    });
  }

  dryRunStored(policyId: string, binding: unknown): Promise<DryRunResult> {
    return this.request(
      "POST",
      `/api/v1/policies/${encodeURIComponent(policyId)}/dry-run`,
      { binding },
    );
  }

  buildBinding(context: PolicyContext, refs: Record<string, unknown>): Promise<unknown> {
    return this.request("POST", "/api/v1/bindings", { context, ...refs });
  }
}
