import type { Plan } from "./types.js";

export interface DagLayout {
  /** Left-to-right layers; within a layer, node ids sorted ascending. */
  layers: string[][];
}

/** Deterministic layered layout: a node's layer is its longest-path depth
 *  from the roots, ties within a layer broken by id. Fallback nodes carry no
 *  edges, so they sit beside their primary (same layer). */
export function layoutDag(plan: Plan): DagLayout {
  const depth = new Map<string, number>();
  const incoming = new Map<string, string[]>();
  for (const node of plan.nodes) incoming.set(node.id, []);
  for (const [from, to] of plan.edges) incoming.get(to)?.push(from);

  const primaryOf = new Map<string, string>();
  for (const node of plan.nodes) {
    if (node.fallback_for) primaryOf.set(node.id, node.fallback_for);
  }

  const resolve = (id: string, seen: Set<string>): number => {
    const cached = depth.get(id);
    if (cached !== undefined) return cached;
    if (seen.has(id)) return 0; // defensive: validated plans are acyclic
    seen.add(id);
    const anchor = primaryOf.get(id);
    const parents = anchor ? [anchor] : incoming.get(id) ?? [];
    const d = parents.length
      ? Math.max(...parents.map((p) => resolve(p, seen))) + (anchor ? 0 : 1)
      : 0;
    depth.set(id, d);
    return d;
  };

  const layers: string[][] = [];
  for (const node of plan.nodes) {
    const d = resolve(node.id, new Set());
    while (layers.length <= d) layers.push([]);
    layers[d].push(node.id);
  }
  for (const layer of layers) layer.sort();
  return { layers: layers.filter((l) => l.length > 0) };
}
