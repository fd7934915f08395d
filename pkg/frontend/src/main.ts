/** Browser entry point: owns the DOM, delegates everything else. */

import { createApi } from "./api.js";
import { forceLayout, type Point } from "./layout.js";
import { funnelPlots } from "./plot.js";
import {
  renderChecks,
  renderError,
  renderFunnelPanel,
  renderGraphSvg,
} from "./render.js";
import { ExplorerStore } from "./state.js";

const app = document.getElementById("app");
if (!app) throw new Error("missing #app container");

const store = new ExplorerStore(createApi(), render);
let positions = new Map<number, Point>();
const pinned = new Map<number, Point>();
let dragging: number | null = null;
let dragMoved = false;

function relayout(): void {
  const graph = store.graphJson();
  if (!graph) return;
  positions = forceLayout(
    graph.nodes.map((n) => n.id),
    graph.edges.map((e) => [e.head, e.tail] as [number, number]),
    { pinned },
  );
}

function render(): void {
  if (!app) return;
  const graph = store.graphJson();
  const names = store.scenarioNames();
  const options = names
    .map(
      (n) =>
        `<option value="${n}"${n === store.scenarioName() ? " selected" : ""}>${n}</option>`,
    )
    .join("");
  const theorem2 = store.lastCheck?.payload.theorem2 ?? null;

  app.innerHTML = `
    <header>
      <select id="scenario"><option value="">load scenario...</option>${options}</select>
      <button id="undo" ${store.undoDepth === 0 ? "disabled" : ""}>undo</button>
      <button id="simulate" ${!store.loaded || store.simulating ? "disabled" : ""}>
        ${store.simulating ? "simulating..." : "simulate"}</button>
      <button id="export" ${!store.loaded ? "disabled" : ""}>export</button>
    </header>
    ${renderError(store.error)}
    <main>
      <section id="canvas">${graph ? renderGraphSvg(graph, positions, theorem2, store.selectedNode) : "<p>no graph loaded</p>"}</section>
      <aside id="reports">${store.lastCheck ? renderChecks(store.lastCheck.payload) : ""}</aside>
    </main>
    <section id="funnels">${
      store.lastSimulation
        ? renderFunnelPanel(
            funnelPlots(store.lastSimulation),
            store.lastSimulation.summary,
          )
        : ""
    }</section>`;

  document.getElementById("scenario")?.addEventListener("change", (ev) => {
    const name = (ev.target as HTMLSelectElement).value;
    if (!name) return;
    store.loadByName(name);
    pinned.clear();
    relayout();
    render();
  });
  document.getElementById("undo")?.addEventListener("click", () => store.undo());
  document.getElementById("simulate")?.addEventListener("click", () => {
    void store.runSimulation();
  });
  document.getElementById("export")?.addEventListener("click", downloadScenario);

  const canvas = document.getElementById("canvas");
  canvas?.addEventListener("pointerdown", (ev) => {
    const target = (ev.target as Element).closest("[data-node]");
    if (!target) return;
    dragging = Number(target.getAttribute("data-node"));
    dragMoved = false;
  });
  canvas?.addEventListener("pointermove", (ev) => {
    if (dragging === null) return;
    const svg = canvas.querySelector("svg");
    if (!svg) return;
    dragMoved = true;
    const rect = svg.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * 640;
    const y = ((ev.clientY - rect.top) / rect.height) * 420;
    pinned.set(dragging, { x, y });
    positions.set(dragging, { x, y });
    render();
  });
  canvas?.addEventListener("pointerup", () => {
    if (dragging === null) return;
    const id = dragging;
    dragging = null;
    if (!dragMoved) {
      // plain click: toggle the node's role
      store.selectedNode = id;
      store.toggleRole(id);
    }
  });
}

async function boot(): Promise<void> {
  try {
    await store.fetchScenarios();
  } catch {
    // render() below shows the empty state; the header still works
  }
  render();
}

function downloadScenario(): void {
  const scenario = store.exportScenario();
  if (!scenario) return;
  const blob = new Blob([JSON.stringify(scenario, null, 1)], {
    type: "application/json",
  });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = `${scenario.name || "scenario"}.json`;
  a.click();
  URL.revokeObjectURL(url);
}

void boot();
