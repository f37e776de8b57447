export type LeaderboardRow = {
  signal_id: string;
  external_id: string;
  org_risk: number;
  asset_count: number;
  unit_count: number;
  gap_count: number;
};

export type BlastAsset = {
  id: string;
  name: string;
  tier: string | null;
  ownership_gap: boolean;
  depscore: number | null;
};

export type BlastUnit = {
  id: string;
  name: string;
  risk: number;
};

export type BlastRadius = {
  signal_id: string;
  external_id: string;
  severity: number;
  asset_count: number;
  unit_count: number;
  gap_assets: string[];
  assets: BlastAsset[];
  units: BlastUnit[];
};

export type PolicyContext = "status" | "policy" | "pr" | "notification";

export type StatusOutcome = { transition_to: string | null };
export type CheckOutcome = { pass: boolean; violations: string[] };
export type PrOutcome = { decision: "allow" | "block"; comment: string };
export type NotifyOutcome = {
  dispatches: { channel_id: string; payload: unknown }[];
};

export type DryRunOutcome =
  | StatusOutcome
  | CheckOutcome
  | PrOutcome
  | NotifyOutcome;

export type TraceStep = Record<string, unknown>;

export type HttpLogEntry = {
  method: string;
  url: string;
  body: unknown;
  response: unknown;
};

export type DryRunResult = {
  outcome: DryRunOutcome;
  trace: TraceStep[];
  http_log: HttpLogEntry[];
  logs: string[];
};

export type TierRecord = {
  tier_id: string;
  name: string;
  importance: number;
};

export type StatusRecord = {
  status_id: string;
  name: string;
  color_hint: string;
};

export type PolicyRecord = {
  policy_id: string;
  context: PolicyContext;
  source: string;
};

export type NodeRecord = {
  id: string;
  kind: string;
  name: string;
  [key: string]: unknown;
};

export type AssetRecord = NodeRecord & {
  tier: string | null;
  compliance_status: string;
};

export type ApiErrorBody = {
  code: string;
  message: string;
  line?: number;
  col?: number;
  kind?: string;
  target?: string;
  url?: string;
  partial_trace?: TraceStep[];
};
