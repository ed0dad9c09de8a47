import { GatewayClient } from "./api.js";
import type { RunView } from "./types.js";

export interface FollowOptions {
  /** Poll interval in milliseconds (1 s by default). */
  intervalMs?: number;
  /** Called after every poll with the freshest view; drives re-rendering. */
  onUpdate?: (view: RunView) => void;
  /** Injectable for tests; defaults to setTimeout-based sleeping. */
  sleep?: (ms: number) => Promise<void>;
  /** Safety valve so a stuck run cannot poll forever. */
  maxPolls?: number;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class EmptyPromptError extends Error {
  constructor() {
    super("prompt must not be empty");
  }
}

/** Submit a query and poll it to completion, emitting a RunView per poll.
 *  Client-side validation: an empty prompt never reaches the gateway. */
export async function submitAndFollow(
  client: GatewayClient,
  prompt: string,
  expertise?: string,
  options: FollowOptions = {},
): Promise<RunView> {
  if (!prompt.trim()) {
    throw new EmptyPromptError();
  }
  const intervalMs = options.intervalMs ?? 1000;
  const sleep = options.sleep ?? defaultSleep;
  const maxPolls = options.maxPolls ?? 600;

  const { run_id } = await client.submitQuery(prompt, expertise);
  let view: RunView = {
    runId: run_id,
    status: "running",
    plan: null,
    trace: null,
    report: null,
  };
  options.onUpdate?.(view);

  for (let poll = 0; poll < maxPolls; poll += 1) {
    await sleep(intervalMs);
    const status = await client.runStatus(run_id);
    view = { ...view, status: status.status, error: status.error };
    if (status.status !== "running") break;
    options.onUpdate?.(view);
  }

  if (view.status !== "failed" || view.error === undefined) {
    view = {
      ...view,
      plan: await client.plan(run_id).catch(() => null),
      trace: await client.trace(run_id).catch(() => null),
      report: await client.report(run_id).catch(() => null),
    };
  }
  options.onUpdate?.(view);
  return view;
}
