/** Pure string renderers for the explorer view.
 *
 * Everything here returns SVG/HTML markup; main.ts owns the DOM. Keeping
 * these as functions of (data) -> string makes the view testable without
 * a browser. Margins and verdicts are printed exactly as the service
 * returned them.
 */

import type { Point } from "./layout.js";
import type { FunnelPlot } from "./plot.js";
import type {
  CheckPayload,
  ConditionReport,
  GraphJson,
  SimSummary,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Edge ids highlighted as failing: every edge row with margin > 0 plus
 * the edges along every path row with margin > 0. */
export function failingEdgeIds(graph: GraphJson, report: ConditionReport): Set<number> {
  const failing = new Set<number>();
  for (const row of report.edges) {
    if (row.margin > 0) failing.add(row.edge);
  }
  const byPair = new Map<string, number>();
  for (const e of graph.edges) {
    byPair.set(`${Math.min(e.head, e.tail)}-${Math.max(e.head, e.tail)}`, e.id);
  }
  for (const row of report.paths) {
    if (row.margin <= 0) continue;
    for (let i = 0; i + 1 < row.nodes.length; i++) {
      const a = row.nodes[i];
      const b = row.nodes[i + 1];
      const id = byPair.get(`${Math.min(a, b)}-${Math.max(a, b)}`);
      if (id !== undefined) failing.add(id);
    }
  }
  return failing;
}

export function renderGraphSvg(
  graph: GraphJson,
  positions: Map<number, Point>,
  report: ConditionReport | null,
  selected: number | null,
  width = 640,
  height = 420,
): string {
  const failing = report ? failingEdgeIds(graph, report) : new Set<number>();
  const parts: string[] = [
    `<svg class="graph" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const e of graph.edges) {
    const a = positions.get(e.head);
    const b = positions.get(e.tail);
    if (!a || !b) continue;
    const cls = failing.has(e.id) ? "edge failing" : "edge";
    parts.push(
      `<line class="${cls}" data-edge="${e.id}" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"/>`,
      `<text class="edge-label" x="${(a.x + b.x) / 2}" y="${(a.y + b.y) / 2 - 4}">e${e.id}</text>`,
    );
  }
  for (const n of graph.nodes) {
    const p = positions.get(n.id);
    if (!p) continue;
    const cls = `node ${n.role}${selected === n.id ? " selected" : ""}`;
    if (n.role === "leader") {
      parts.push(
        `<rect class="${cls}" data-node="${n.id}" x="${p.x - 11}" y="${p.y - 11}" width="22" height="22"/>`,
      );
    } else {
      parts.push(
        `<circle class="${cls}" data-node="${n.id}" cx="${p.x}" cy="${p.y}" r="12"/>`,
      );
    }
    parts.push(`<text class="node-label" x="${p.x}" y="${p.y + 4}">${n.id}</text>`);
  }
  parts.push("</svg>");
  return parts.join("");
}

function witnessLine(report: ConditionReport): string {
  if (!report.witness) return "";
  const w = report.witness;
  const what =
    w.kind === "edge" ? `edge ${w.edge}` : `path ${w.nodes?.join(" - ") ?? "?"}`;
  const sub = w.subgraph_nodes ? ` (subgraph nodes ${w.subgraph_nodes.join(", ")})` : "";
  return `<p class="witness">worst witness: ${what}, margin ${w.margin}${sub}</p>`;
}

export function renderReport(name: string, report: ConditionReport): string {
  const rows: string[] = [
    `<section class="report" data-check="${name}">`,
    `<h3>${name} <span class="verdict ${report.verdict}">${report.verdict}</span></h3>`,
  ];
  if (report.edges.length > 0) {
    rows.push(
      "<table><thead><tr><th>edge</th><th>cycle term</th><th>|E_i|</th><th>margin</th></tr></thead><tbody>",
    );
    for (const r of report.edges) {
      rows.push(
        `<tr class="${r.margin > 0 ? "failing" : ""}"><td>e${r.edge}</td><td>${r.cycle_term}</td><td>${r.E_i}</td><td>${r.margin}</td></tr>`,
      );
    }
    rows.push("</tbody></table>");
  }
  if (report.paths.length > 0) {
    rows.push(
      "<table><thead><tr><th>path</th><th>bypass</th><th>cycle term</th><th>|F_i|</th><th>margin</th></tr></thead><tbody>",
    );
    for (const r of report.paths) {
      rows.push(
        `<tr class="${r.margin > 0 ? "failing" : ""}"><td>${r.nodes.join("-")}</td><td>${r.bypass ? "yes" : "no"}</td><td>${r.cycle_term}</td><td>${r.F_i}</td><td>${r.margin}</td></tr>`,
      );
    }
    rows.push("</tbody></table>");
  }
  rows.push(witnessLine(report), "</section>");
  return rows.join("");
}

export function renderChecks(payload: CheckPayload): string {
  return (
    renderReport("theorem1", payload.theorem1) +
    renderReport("theorem2", payload.theorem2)
  );
}

export function renderFunnelPanel(plots: FunnelPlot[], summary: SimSummary): string {
  const parts: string[] = [
    `<p class="sim-summary">max normalized error ${summary.max_normalized_error}, ` +
      `${summary.violations.length} violation${summary.violations.length === 1 ? "" : "s"}</p>`,
  ];
  for (const plot of plots) {
    const cls = plot.violating ? "funnel violating" : "funnel";
    parts.push(
      `<figure class="${cls}" data-edge="${plot.edgeId}">`,
      `<figcaption>e${plot.edgeId}${plot.violating ? " - funnel violated" : ""}</figcaption>`,
      `<svg viewBox="0 0 320 160" xmlns="http://www.w3.org/2000/svg">`,
      `<path class="envelope" d="${plot.upperPath}"/>`,
      `<path class="envelope" d="${plot.lowerPath}"/>`,
      ...plot.curvePaths.map((d) => `<path class="curve" d="${d}"/>`),
      "</svg></figure>",
    );
  }
  return parts.join("");
}

export function renderError(message: string | null): string {
  return message ? `<div class="error">${escapeHtml(message)}</div>` : "";
}
