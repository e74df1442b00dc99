/**
 * Against a live gateway: spawns `cloudmri serve` on a scratch state
 * directory, seeds it through the CLI (simulate -> upload -> recon), then
 * drives the UI's own client and state modules end to end.
 *
 * Requires the Python package to be installed (`cloudmri` on PATH); skipped
 * otherwise.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";
import { autoWindow, pixelsToRgba } from "../src/render.js";
import { applySubmitFailure, initialState, prepareSubmission } from "../src/state.js";

const run = promisify(execFile);
const PORT = 8473;
const BASE = `http://127.0.0.1:${PORT}`;

let available = true;
let workDir: string;
let server: ChildProcess | null = null;
let env: NodeJS.ProcessEnv;
let doneJobId = "";
let imageId = "";

async function cli(args: string[]): Promise<unknown> {
  const { stdout } = await run("cloudmri", args, { env });
  return JSON.parse(stdout);
}

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/v1/metrics`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("gateway did not become ready");
}

beforeAll(async () => {
  try {
    await run("cloudmri", ["--help"]);
  } catch {
    available = false;
    return;
  }
  workDir = mkdtempSync(join(tmpdir(), "cloudmri-ui-"));
  env = { ...process.env, CLOUDMRI_CONFIG: join(workDir, "state", "config.json") };

  await cli(["init", "--dir", join(workDir, "state")]);
  const scan = join(workDir, "scan.cmri");
  await cli(["simulate", "--out", scan, "--size", "32"]);
  const receipt = (await cli(["upload", scan, "--actor", "op-1"])) as { dataset_id: string };
  const record = (await cli([
    "recon", receipt.dataset_id, "--actor", "op-1",
    "--algorithm", "fista", "--accel", "2", "--max-iters", "80",
  ])) as { job_id: string; state: string; image_id: string };
  if (record.state !== "DONE") throw new Error(`seed job ended ${record.state}`);
  doneJobId = record.job_id;
  imageId = record.image_id;

  server = spawn("cloudmri", ["serve", "--port", String(PORT)], {
    env,
    stdio: "ignore",
  });
  await waitForServer();
}, 120000);

afterAll(async () => {
  server?.kill("SIGTERM");
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("review UI against a live gateway", () => {
  it("renders a DONE job's image with the correct pixel count", async () => {
    if (!available) return;
    const viewer = new GatewayClient(BASE, "dr-1");
    const jobs = await viewer.listJobs();
    const done = jobs.find((j) => j.job_id === doneJobId);
    expect(done?.state).toBe("DONE");
    expect(done?.image_id).toBe(imageId);

    const payload = await viewer.getImage(imageId);
    expect(payload.pixels.length).toBe(payload.width * payload.height);
    const rgba = pixelsToRgba(payload, autoWindow(payload.pixels));
    expect(rgba.length).toBe(4 * payload.width * payload.height);
  });

  it("submits a review that round-trips field for field", async () => {
    if (!available) return;
    const viewer = new GatewayClient(BASE, "dr-1");
    const payload = await viewer.getImage(imageId);
    const draft = {
      imageId,
      score: 4,
      labels: [{ x: 2, y: 3, w: 6, h: 5, text: "residual aliasing" }],
      report: "Acceptable for diagnosis.",
    };
    const prepared = prepareSubmission(draft, payload);
    expect(prepared.ok).toBe(true);
    if (!prepared.ok) return;

    const { review_id } = await viewer.postReview(prepared.body);
    const stored = await viewer.getReview(review_id);
    expect(stored.image_id).toBe(imageId);
    expect(stored.score).toBe(4);
    expect(stored.labels).toEqual(draft.labels);
    expect(stored.report).toBe(draft.report);
    expect(stored.reviewer).toBe("dr-1");
  });

  it("preserves the draft when the server answers 403", async () => {
    if (!available) return;
    const intruder = new GatewayClient(BASE, "op-1"); // operators may not review
    const payload = await new GatewayClient(BASE, "dr-1").getImage(imageId);
    const draft = {
      imageId,
      score: 2,
      labels: [{ x: 0, y: 0, w: 4, h: 4, text: "draft to keep" }],
      report: "work in progress",
    };
    const prepared = prepareSubmission(draft, payload);
    expect(prepared.ok).toBe(true);
    if (!prepared.ok) return;

    const failure = await intruder.postReview(prepared.body).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(403);

    const state = { ...initialState(), draft, inFlight: true };
    const next = applySubmitFailure(state, failure);
    expect(next.draft).toEqual(draft);
    expect(next.notice).toContain("403");
  });

  it("client-side bounds stop a bad score before any request is made", async () => {
    if (!available) return;
    const viewer = new GatewayClient(BASE, "dr-1");
    const payload = await viewer.getImage(imageId);
    const before = (await viewer.metrics())["events_review"];
    const prepared = prepareSubmission(
      { imageId, score: 0, labels: [], report: "" },
      payload,
    );
    expect(prepared.ok).toBe(false);
    const after = (await viewer.metrics())["events_review"];
    expect(after).toBe(before); // nothing reached the server
  });
});
