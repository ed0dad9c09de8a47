import type { Plan, Trace, TraceEntry } from "./types.js";

export type NodeState =
  | "pending"
  | "running"
  | "succeeded"
  | "failed"
  | "skipped"
  | "fallback";

function stateFor(entry: TraceEntry): NodeState {
  switch (entry.resolution) {
    case "executed":
      return "succeeded";
    case "failed":
      return "failed";
    case "replaced_by_fallback":
      return "fallback";
    case "skipped_cached":
    case "unavailable":
      return "skipped";
    default:
      return "pending";
  }
}

/** Node states are a pure function of the fetched trace: same JSON in,
 *  same states out. While the run is still executing the gateway withholds
 *  the trace, so every node renders as running. */
export function deriveNodeStates(
  plan: Plan,
  trace: Trace | null,
  runStatus: string,
): Map<string, NodeState> {
  const states = new Map<string, NodeState>();
  const byNode = new Map<string, TraceEntry>();
  for (const entry of trace?.entries ?? []) {
    byNode.set(entry.node_id, entry);
  }
  for (const node of plan.nodes) {
    const entry = byNode.get(node.id);
    if (entry) {
      states.set(node.id, stateFor(entry));
    } else {
      states.set(node.id, runStatus === "running" ? "running" : "pending");
    }
  }
  return states;
}
