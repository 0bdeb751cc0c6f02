// Thin client for the review API. Texts travel verbatim: nothing here may
// trim, normalize or otherwise transform what the annotator typed.

import type { DecisionBody, MarkerTable, PairView, Stats } from "./types.js";

export interface ApiConfig {
  baseUrl: string;
  token?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status?: number,
  ) {
    super(message);
  }
}

async function request<T>(
  config: ApiConfig,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const headers: Record<string, string> = {
    ...(init?.body ? { "Content-Type": "application/json" } : {}),
    ...(config.token ? { "X-Auth-Token": config.token } : {}),
  };
  let response: Response;
  try {
    response = await fetch(config.baseUrl + path, { ...init, headers });
  } catch (err) {
    throw new ApiError(`cannot reach the review service: ${String(err)}`);
  }
  if (!response.ok) {
    throw new ApiError(`API ${path} failed (${response.status})`, response.status);
  }
  return (await response.json()) as T;
}

export function listPairs(
  config: ApiConfig,
  status?: string,
): Promise<{ pairs: PairView[] }> {
  const query = status ? `?status=${encodeURIComponent(status)}` : "";
  return request(config, `/api/pairs${query}`);
}

export function getPair(config: ApiConfig, pairId: string): Promise<PairView> {
  return request(config, `/api/pairs/${encodeURIComponent(pairId)}`);
}

export function postDecision(
  config: ApiConfig,
  pairId: string,
  decision: DecisionBody,
): Promise<PairView> {
  return request(config, `/api/pairs/${encodeURIComponent(pairId)}/decision`, {
    method: "POST",
    body: JSON.stringify(decision),
  });
}

export function getStats(config: ApiConfig): Promise<Stats> {
  return request(config, "/api/stats");
}

export function getMarkers(config: ApiConfig): Promise<MarkerTable> {
  return request(config, "/api/markers");
}
