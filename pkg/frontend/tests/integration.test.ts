/**
 * Full-stack test: spawns the real verifier service and drives a complete
 * ten-question session through the client state machine over HTTP.
 *
 * Uses the repository's golden fixtures: a trace that enrolls 12 eligible
 * locations, and the derived locations CSV to know where the correct
 * answers are.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GeoPoint, ServiceClient } from "../src/api";
import { SessionController } from "../src/session";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = resolve(HERE, "..", "..");
const GOLDEN_TRACE = join(REPO_ROOT, "tests", "data", "golden_trace.csv");
const GOLDEN_LOCATIONS = join(REPO_ROOT, "tests", "data", "golden_locations.csv");

let server: ChildProcess;
let baseUrl: string;

/** Every response body the client stack received, for leak inspection. */
const observedBodies: string[] = [];
let capturingFetch: typeof fetch;

function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      probe.close(() => resolvePort(address.port));
    });
  });
}

async function waitForHealth(url: string): Promise<void> {
  const deadline = Date.now() + 20_000;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${url}/health`);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`service never became healthy: ${lastError}`);
}

interface LocationRow {
  id: string;
  point: GeoPoint;
  loggedAt: string;
}

function readGoldenLocations(): LocationRow[] {
  const [header, ...rows] = readFileSync(GOLDEN_LOCATIONS, "utf-8").trim().split("\n");
  expect(header).toBe("id,lat,lon,logged_at,cumulative_dwell_s");
  return rows.map((row) => {
    const [id, lat, lon, loggedAt] = row.split(",");
    return { id: id!, point: { lat: Number(lat), lon: Number(lon) }, loggedAt: loggedAt! };
  });
}

beforeAll(async () => {
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  const dataDir = mkdtempSync(join(tmpdir(), "geochallenge-ui-"));
  server = spawn(
    "python3",
    ["-m", "geochallenge.cli", "--data-dir", dataDir, "--listen", `127.0.0.1:${port}`, "serve"],
    { stdio: "ignore" },
  );
  await waitForHealth(baseUrl);

  capturingFetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const response = await fetch(input, init);
    observedBodies.push(await response.clone().text());
    return response;
  }) as typeof fetch;

  // enrollment is a CLI/API concern, not part of the answering UI
  const trace = readFileSync(GOLDEN_TRACE, "utf-8");
  const enrollment = await fetch(`${baseUrl}/accounts/walker/traces`, {
    method: "POST",
    body: trace,
  });
  expect(enrollment.status).toBe(200);
  const summary = (await enrollment.json()) as { challenge_ready: boolean; eligible: number };
  expect(summary.challenge_ready).toBe(true);
  expect(summary.eligible).toBe(12);
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("full session against the live service", () => {
  it("answers ten questions and renders the decision", async () => {
    const client = new ServiceClient(baseUrl, capturingFetch);
    const controller = new SessionController(client, "walker");

    await controller.load();
    expect(controller.getState().phase).toBe("idle"); // start affordance

    await controller.start();
    let state = controller.getState();
    expect(state.phase).toBe("answering");
    expect(state.prompts).toHaveLength(10);
    for (const prompt of state.prompts) {
      expect(prompt).toMatch(/^Where were you on the \d+ of \w+ at /);
    }

    // question order is newest logged location first
    const newestFirst = readGoldenLocations()
      .sort((a, b) => b.loggedAt.localeCompare(a.loggedAt))
      .slice(0, 10);

    const doubleSubmitIndex = 4;
    for (let i = 0; i < 10; i++) {
      state = controller.getState();
      expect(state.currentIndex).toBe(i);

      // next must be blocked before a marker is placed
      expect(controller.canSubmit).toBe(false);
      expect(await controller.submitCurrent()).toBe(false);

      const target = newestFirst[i]!.point;
      const correct = i < 7;
      const answer = correct ? target : { lat: target.lat + 0.05, lon: target.lon };

      // remove-then-place: a stray marker must be removed before the real one
      controller.placeMarker({ lat: 0, lon: 0 });
      controller.removeMarker();
      expect(controller.placeMarker(answer)).toBe(true);

      if (i === doubleSubmitIndex) {
        const outcomes = await Promise.all([
          controller.submitCurrent(),
          controller.submitCurrent(),
        ]);
        expect(outcomes.filter(Boolean)).toHaveLength(1);
      } else {
        expect(await controller.submitCurrent()).toBe(true);
      }
    }

    state = controller.getState();
    expect(state.phase).toBe("decided");
    expect(state.submitted.size).toBe(10);
    expect(state.decision?.decision).toBe("authenticated");
    expect(state.decision?.score).toBe(7);
  }, 30_000);

  it("never received coordinates or correctness before completion", () => {
    const coordinateFragments = readGoldenLocations().flatMap((row) => [
      row.point.lat.toFixed(4),
      row.point.lon.toFixed(4),
    ]);
    const preCompletion = observedBodies.filter(
      (body) => !body.includes('"decision": "authenticated"') && !body.includes('"score"'),
    );
    for (const body of preCompletion) {
      if (body.includes('"questions"')) {
        for (const fragment of coordinateFragments) {
          expect(body).not.toContain(fragment);
        }
        expect(body).not.toContain('"lat"');
        expect(body).not.toContain('"lon"');
        expect(body).not.toContain("incorrect");
      }
    }
    expect(observedBodies.length).toBeGreaterThan(10);
  });

  it("server recorded exactly one answer for the double-submitted question", async () => {
    // a fresh session conflicts: 12 eligible minus 10 consumed leaves 2
    const response = await fetch(`${baseUrl}/accounts/walker/sessions`, { method: "POST" });
    expect(response.status).toBe(409);
    const body = (await response.json()) as { code: string; detail: { available: number } };
    expect(body.code).toBe("insufficient_locations");
    expect(body.detail.available).toBe(2);
  });
});
