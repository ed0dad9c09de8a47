import { layoutDag } from "./layout.js";
import { deriveNodeStates } from "./state.js";
import type {
  EvalSummary,
  Plan,
  Report,
  RunView,
  ScoreCard,
  Trace,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// --- DAG view ---------------------------------------------------------------

export function renderDag(
  plan: Plan,
  trace: Trace | null,
  runStatus: string,
): string {
  const states = deriveNodeStates(plan, trace, runStatus);
  const nodesById = new Map(plan.nodes.map((n) => [n.id, n]));
  const layers = layoutDag(plan).layers.map((layer) => {
    const cells = layer.map((id) => {
      const node = nodesById.get(id)!;
      const state = states.get(id) ?? "pending";
      const badge = node.fallback_for
        ? `<span class="badge badge-fallback">fallback for ${escapeHtml(node.fallback_for)}</span>`
        : "";
      return (
        `<div class="node node-${state}" data-node-id="${escapeHtml(id)}" data-state="${state}">` +
        `<span class="node-id">${escapeHtml(id)}</span>` +
        `<span class="node-tool">${escapeHtml(node.tool)}</span>` +
        badge +
        `</div>`
      );
    });
    return `<div class="dag-layer">${cells.join("")}</div>`;
  });
  const edges = plan.edges
    .map(
      ([a, b]) =>
        `<li class="edge" data-from="${escapeHtml(a)}" data-to="${escapeHtml(b)}">${escapeHtml(a)} &rarr; ${escapeHtml(b)}</li>`,
    )
    .join("");
  return (
    `<div class="dag" data-run-status="${escapeHtml(runStatus)}">` +
    layers.join("") +
    `<ul class="dag-edges">${edges}</ul>` +
    `</div>`
  );
}

// --- report panel ------------------------------------------------------------

export function renderReport(report: Report): string {
  const sections = report.sections
    .map((s) => {
      const sources = s.sources
        .map((id) => `<a class="source-link" href="#node-${escapeHtml(id)}">${escapeHtml(id)}</a>`)
        .join(", ");
      return (
        `<section class="report-section" data-heading="${escapeHtml(s.heading)}">` +
        `<h3>${escapeHtml(s.heading)}</h3>` +
        `<p>${escapeHtml(s.body)}</p>` +
        (sources ? `<p class="sources">sources: ${sources}</p>` : "") +
        `</section>`
      );
    })
    .join("");
  return (
    `<article class="report" data-run-id="${escapeHtml(report.run_id)}" data-audience="${escapeHtml(report.audience)}">` +
    `<h2>Report for run ${escapeHtml(report.run_id)}</h2>` +
    `<p class="summary">${escapeHtml(report.summary)}</p>` +
    sections +
    `</article>`
  );
}

// --- run view ----------------------------------------------------------------

export function renderRunView(view: RunView): string {
  if (view.status === "failed" && !view.trace) {
    return (
      `<div class="run run-failed" data-run-id="${escapeHtml(view.runId)}">` +
      `<p class="error-banner">run failed: ${escapeHtml(view.error ?? "unknown error")}</p>` +
      `</div>`
    );
  }
  const dag = view.plan ? renderDag(view.plan, view.trace, view.status) : "";
  const report = view.report ? renderReport(view.report) : "";
  return (
    `<div class="run run-${escapeHtml(view.status)}" data-run-id="${escapeHtml(view.runId)}">` +
    dag +
    report +
    `</div>`
  );
}

export function renderUnreachableBanner(detail: string): string {
  return `<p class="error-banner">gateway unreachable: ${escapeHtml(detail)}</p>`;
}

// --- eval dashboard -----------------------------------------------------------

export function renderEvalTable(summary: EvalSummary): string {
  const row =
    `<tr class="summary-row">` +
    `<td>${escapeHtml(summary.model)}</td>` +
    `<td>${summary.n_tasks}</td>` +
    `<td>${escapeHtml(summary.correctness_pct)}</td>` +
    `<td>${escapeHtml(summary.relevancy_pct)}</td>` +
    `</tr>`;
  return (
    `<table class="eval-table">` +
    `<thead><tr><th>Model</th><th>Tasks</th><th>Correctness %</th><th>Relevancy %</th></tr></thead>` +
    `<tbody>${row}</tbody>` +
    `</table>`
  );
}

export function renderTaskCard(card: ScoreCard): string {
  const flag = (label: string, ok: boolean) =>
    `<li class="judgment judgment-${ok ? "true" : "false"}" data-judgment="${label}">${label}: ${ok}</li>`;
  const anomalies = card.anomalies
    .map((a) => `<li class="anomaly">${escapeHtml(a)}</li>`)
    .join("");
  return (
    `<div class="task-card" data-task-id="${escapeHtml(card.task_id)}">` +
    `<h4>${escapeHtml(card.task_id)}</h4>` +
    `<ul>` +
    flag("input", card.input_correct) +
    flag("tools", card.tools_correct) +
    flag("order", card.order_correct) +
    flag("relevant", card.relevant) +
    `</ul>` +
    (anomalies ? `<ul class="anomalies">${anomalies}</ul>` : "") +
    `</div>`
  );
}

export function renderEvalDashboard(summaries: EvalSummary[]): string {
  if (summaries.length === 0) {
    return `<p class="empty-state">No evaluation runs yet. Start one with POST /eval.</p>`;
  }
  return summaries
    .map((s) => renderEvalTable(s) + s.cards.map(renderTaskCard).join(""))
    .join("");
}
