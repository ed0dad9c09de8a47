import { describe, expect, it } from "vitest";

import { FetchLike, GatewayClient, GatewayError } from "../src/api.js";
import { EmptyPromptError, submitAndFollow } from "../src/app.js";
import type { RunView } from "../src/types.js";

import fallbackPlan from "./fixtures/fallback_plan.json";
import fallbackReport from "./fixtures/fallback_report.json";
import fallbackTrace from "./fixtures/fallback_trace.json";

function fakeGateway(pollsUntilDone: number) {
  const calls: string[] = [];
  let polls = 0;
  const fetchImpl: FetchLike = async (url, init) => {
    calls.push(`${init?.method ?? "GET"} ${url}`);
    const respond = (status: number, body: unknown) => ({
      ok: status < 400,
      status,
      json: async () => body,
    });
    if (url.endsWith("/query")) return respond(202, { run_id: "r1" });
    if (url.endsWith("/runs/r1")) {
      polls += 1;
      return respond(200, {
        run_id: "r1",
        status: polls < pollsUntilDone ? "running" : "succeeded",
      });
    }
    if (url.endsWith("/plan")) return respond(200, fallbackPlan);
    if (url.endsWith("/trace")) return respond(200, fallbackTrace);
    if (url.endsWith("/report")) return respond(200, fallbackReport);
    return respond(404, { error: "NotFound" });
  };
  return { calls, fetchImpl };
}

const instantSleep = async () => {};

describe("submitAndFollow", () => {
  it("polls until completion then fetches plan, trace, and report", async () => {
    const { calls, fetchImpl } = fakeGateway(3);
    const client = new GatewayClient("http://gw", fetchImpl);
    const updates: RunView[] = [];
    const view = await submitAndFollow(client, "weather at mornos", undefined, {
      sleep: instantSleep,
      onUpdate: (v) => updates.push(v),
    });
    expect(view.status).toBe("succeeded");
    expect(view.plan).not.toBeNull();
    expect(view.trace).not.toBeNull();
    expect(view.report).not.toBeNull();
    expect(calls.filter((c) => c === "GET http://gw/runs/r1").length).toBe(3);
    expect(updates[0].status).toBe("running");
    expect(updates[updates.length - 1].status).toBe("succeeded");
  });

  it("rejects an empty prompt without sending any request", async () => {
    const { calls, fetchImpl } = fakeGateway(1);
    const client = new GatewayClient("http://gw", fetchImpl);
    await expect(
      submitAndFollow(client, "   ", undefined, { sleep: instantSleep }),
    ).rejects.toBeInstanceOf(EmptyPromptError);
    expect(calls).toEqual([]);
  });

  it("surfaces a failed run with its error and no report fetch", async () => {
    const fetchImpl: FetchLike = async (url, init) => ({
      ok: true,
      status: 200,
      json: async () =>
        url.endsWith("/query") && init?.method === "POST"
          ? { run_id: "r2" }
          : { run_id: "r2", status: "failed", error: "UnknownWaterBody" },
    });
    const client = new GatewayClient("http://gw", fetchImpl);
    const view = await submitAndFollow(client, "bad lake", undefined, {
      sleep: instantSleep,
    });
    expect(view.status).toBe("failed");
    expect(view.error).toBe("UnknownWaterBody");
    expect(view.report).toBeNull();
  });

  it("propagates gateway errors from submission", async () => {
    const fetchImpl: FetchLike = async () => ({
      ok: false,
      status: 422,
      json: async () => ({ error: "EmptyQuery" }),
    });
    const client = new GatewayClient("http://gw", fetchImpl);
    await expect(
      submitAndFollow(client, "q", undefined, { sleep: instantSleep }),
    ).rejects.toBeInstanceOf(GatewayError);
  });

  it("passes expertise through to the query body", async () => {
    let body = "";
    const { fetchImpl } = fakeGateway(1);
    const spy: FetchLike = async (url, init) => {
      if (url.endsWith("/query")) body = init?.body ?? "";
      return fetchImpl(url, init);
    };
    const client = new GatewayClient("http://gw", spy);
    await submitAndFollow(client, "q", "expert", { sleep: instantSleep });
    expect(JSON.parse(body)).toEqual({ prompt: "q", expertise: "expert" });
  });
});
