import { GatewayClient } from "./api.js";
import { EmptyPromptError, submitAndFollow } from "./app.js";
import {
  renderEvalDashboard,
  renderRunView,
  renderUnreachableBanner,
} from "./render.js";
import type { EvalSummary } from "./types.js";

const client = new GatewayClient("");

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

async function onSubmit(event: Event): Promise<void> {
  event.preventDefault();
  const prompt = (byId("prompt") as HTMLInputElement).value;
  const expertise = (byId("expertise") as HTMLSelectElement).value || undefined;
  const output = byId("run-view");
  try {
    await submitAndFollow(client, prompt, expertise, {
      onUpdate: (view) => {
        output.innerHTML = renderRunView(view);
      },
    });
  } catch (err) {
    if (err instanceof EmptyPromptError) {
      byId("prompt-error").textContent = err.message;
      return;
    }
    output.innerHTML = renderUnreachableBanner(String(err));
  }
}

async function loadEvals(): Promise<void> {
  const output = byId("eval-view");
  const stored = sessionStorage.getItem("naiad-eval-ids");
  const ids: string[] = stored ? JSON.parse(stored) : [];
  const summaries: EvalSummary[] = [];
  for (const id of ids) {
    const body = await client.evalStatus(id).catch(() => null);
    if (body?.summary) summaries.push(body.summary);
  }
  output.innerHTML = renderEvalDashboard(summaries);
}

byId("query-form").addEventListener("submit", onSubmit);
byId("refresh-evals").addEventListener("click", loadEvals);
void loadEvals();
