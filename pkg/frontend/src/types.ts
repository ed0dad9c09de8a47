/** Gateway response shapes. The console renders these verbatim and performs
 *  no metric or plan computation of its own. */

export interface PlanNode {
  id: string;
  tool: string;
  kind: string;
  params: Record<string, unknown>;
  fallback_for: string | null;
  skip_if_cached: boolean;
}

export interface Plan {
  run_id: string;
  nodes: PlanNode[];
  edges: [string, string][];
}

export interface Attempt {
  number: number;
  outcome: string;
  duration: number;
}

export interface Artifact {
  producer: string;
  fields: Record<string, unknown>;
  types: Record<string, string>;
  provenance: string;
}

export interface TraceEntry {
  node_id: string;
  tool: string;
  resolution: string;
  note: string;
  attempts: Attempt[];
  artifact: Artifact | null;
}

export interface Trace {
  run_id: string;
  status: string;
  entries: TraceEntry[];
}

export interface ReportSection {
  heading: string;
  body: string;
  sources: string[];
}

export interface Report {
  run_id: string;
  audience: string;
  original_query: string;
  summary: string;
  sections: ReportSection[];
  revisions: number;
  unresolved_issues: string[];
}

export interface RunStatus {
  run_id: string;
  status: string;
  error?: string;
}

export interface ScoreCard {
  task_id: string;
  input_correct: boolean;
  tools_correct: boolean;
  order_correct: boolean;
  relevant: boolean;
  anomalies: string[];
}

export interface EvalSummary {
  model: string;
  n_tasks: number;
  correctness_pct: string;
  relevancy_pct: string;
  cards: ScoreCard[];
}

/** The console's view of one run: everything below is fetched, never computed. */
export interface RunView {
  runId: string;
  status: string;
  error?: string;
  plan: Plan | null;
  trace: Trace | null;
  report: Report | null;
}
