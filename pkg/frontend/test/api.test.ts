import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, getStats, listPairs, postDecision } from "../src/api.js";

const config = { baseUrl: "http://reviews.local", token: "sesame" };

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("api client", () => {
  it("lists pairs with the status filter and token header", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ pairs: [] }));
    vi.stubGlobal("fetch", fetchMock);
    await listPairs(config, "pending");
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://reviews.local/api/pairs?status=pending");
    expect(init.headers["X-Auth-Token"]).toBe("sesame");
  });

  it("posts a decision body byte-for-byte as typed", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ ok: true }));
    vi.stubGlobal("fetch", fetchMock);
    const typed = "  vie m̃  (exactly as typed, with spaces) ";
    await postDecision(config, "p1", {
      status: "edited",
      annotator: "phi",
      corrected_target: typed,
    });
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://reviews.local/api/pairs/p1/decision");
    expect(init.method).toBe("POST");
    const body = JSON.parse(init.body as string);
    expect(body.corrected_target).toBe(typed);
    expect(init.headers["Content-Type"]).toBe("application/json");
  });

  it("raises ApiError with the HTTP status on failure", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse({}, 401)));
    await expect(getStats(config)).rejects.toMatchObject({ status: 401 });
  });

  it("wraps network failures in ApiError", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("offline")));
    const err = await getStats(config).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(String(err.message)).toContain("cannot reach");
  });
});
