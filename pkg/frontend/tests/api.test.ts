import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";

function mockFetch(
  handler: (url: string, init?: RequestInit) => { status: number; body: unknown },
): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const { status, body } = handler(String(input), init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
}

describe("GatewayClient", () => {
  it("sends the actor header and parses job lists", async () => {
    let seenActor = "";
    const client = new GatewayClient(
      "http://gw",
      "dr-1",
      mockFetch((url, init) => {
        seenActor = new Headers(init?.headers).get("X-Actor") ?? "";
        expect(url).toBe("http://gw/v1/jobs");
        return { status: 200, body: { jobs: [{ job_id: "j1", state: "DONE" }] } };
      }),
    );
    const jobs = await client.listJobs();
    expect(seenActor).toBe("dr-1");
    expect(jobs[0].job_id).toBe("j1");
  });

  it("rethrows gateway error envelopes as ApiError with the server message", async () => {
    const client = new GatewayClient(
      "http://gw",
      "op-1",
      mockFetch(() => ({
        status: 403,
        body: { error: { code: "Denied", message: "actor 'op-1' may not read images" } },
      })),
    );
    const failure = await client.getImage("abc").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(403);
    expect(failure.code).toBe("Denied");
    expect(failure.message).toContain("may not read images");
  });

  it("posts reviews as JSON with the expected shape", async () => {
    let captured: unknown = null;
    const client = new GatewayClient(
      "http://gw",
      "dr-1",
      mockFetch((url, init) => {
        expect(url).toBe("http://gw/v1/reviews");
        captured = JSON.parse(String(init?.body));
        return { status: 200, body: { review_id: "r1" } };
      }),
    );
    const result = await client.postReview({
      image_id: "img",
      score: 5,
      labels: [],
      report: "",
    });
    expect(result.review_id).toBe("r1");
    expect(captured).toMatchObject({ image_id: "img", score: 5 });
  });

  it("builds wait queries for job polling", async () => {
    const client = new GatewayClient(
      "http://gw",
      "dr-1",
      mockFetch((url) => {
        expect(url).toBe("http://gw/v1/jobs/j9?wait_s=15");
        return { status: 200, body: { job_id: "j9", state: "DONE" } };
      }),
    );
    expect((await client.getJob("j9", 15)).state).toBe("DONE");
  });
});
