// Mirrors the review service's response models; field names are frozen
// on the API side.

export type PairStatus = "pending" | "accepted" | "rejected" | "edited";

export interface PairView {
  pair_id: string;
  source: string;
  target: string;
  original_source: string;
  original_target: string;
  status: PairStatus;
  language: string;
  match_rate: number | null;
  lineage: Record<string, unknown>;
  notes: string | null;
  annotator: string | null;
  decided_at: number | null;
}

export interface Stats {
  total: number;
  decisions: number;
  by_status: Record<PairStatus, number>;
}

export interface MarkerEntry {
  from: string; // hex code point
  to: string;
}

export interface MarkerTable {
  version: string;
  entries: MarkerEntry[];
}

export interface DecisionBody {
  status: PairStatus;
  annotator: string;
  corrected_source?: string;
  corrected_target?: string;
  notes?: string;
}
