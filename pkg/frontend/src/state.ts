/** Explorer view-model: current scenario, role edits, reports, undo.
 *
 * All verdicts and margins come from the service; the store only moves
 * them around. Role toggles re-check through POST /api/check behind a
 * 150 ms debounce, and every dispatched request carries a sequence
 * number so a stale response can never overwrite a newer one.
 */

import { ApiError, type Api, type CheckResult } from "./api.js";
import type {
  GraphJson,
  NodeRole,
  ScenarioJson,
  ScenariosResponse,
  SimulateResponse,
} from "./types.js";

export const CHECK_DEBOUNCE_MS = 150;

interface UndoEntry {
  roles: Map<number, NodeRole>;
  check: CheckResult | null;
  error: string | null;
}

export class ExplorerStore {
  private scenario: ScenarioJson | null = null;
  private roles = new Map<number, NodeRole>();
  private undoStack: UndoEntry[] = [];
  private seq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private scenarioList: ScenariosResponse | null = null;

  selectedNode: number | null = null;
  lastCheck: CheckResult | null = null;
  lastSimulation: SimulateResponse | null = null;
  error: string | null = null;
  simulating = false;

  constructor(
    private readonly api: Api,
    private readonly onChange: () => void = () => {},
  ) {}

  /** Fetch and cache the built-in scenario list. */
  async fetchScenarios(): Promise<ScenariosResponse> {
    this.scenarioList = await this.api.scenarios();
    this.onChange();
    return this.scenarioList;
  }

  scenarioNames(): string[] {
    return this.scenarioList ? Object.keys(this.scenarioList.scenarios) : [];
  }

  loadByName(name: string): void {
    const found = this.scenarioList?.scenarios[name];
    if (!found) {
      this.error = `unknown scenario "${name}"`;
      this.onChange();
      return;
    }
    this.loadScenario(found);
  }

  loadScenario(scenario: ScenarioJson): void {
    this.scenario = structuredClone(scenario);
    this.roles = new Map(this.scenario.graph.nodes.map((n) => [n.id, n.role]));
    this.undoStack = [];
    this.lastCheck = null;
    this.lastSimulation = null;
    this.error = null;
    this.selectedNode = null;
    this.cancelPending();
    this.dispatchCheck();
  }

  get loaded(): boolean {
    return this.scenario !== null;
  }

  scenarioName(): string | null {
    return this.scenario?.name ?? null;
  }

  role(nodeId: number): NodeRole | undefined {
    return this.roles.get(nodeId);
  }

  /** Graph JSON with the current roles, in the scenario's node order. */
  graphJson(): GraphJson | null {
    if (!this.scenario) return null;
    return {
      nodes: this.scenario.graph.nodes.map((n) => ({
        id: n.id,
        role: this.roles.get(n.id) as NodeRole,
      })),
      edges: this.scenario.graph.edges.map((e) => ({ ...e })),
    };
  }

  /** Scenario JSON with the current roles applied; null before a load. */
  exportScenario(): ScenarioJson | null {
    if (!this.scenario) return null;
    const out = structuredClone(this.scenario);
    out.graph = this.graphJson() as GraphJson;
    return out;
  }

  /** Flip one node's role and schedule a re-check. No-op when nothing is
   * loaded or the id is unknown. */
  toggleRole(nodeId: number): void {
    const current = this.roles.get(nodeId);
    if (!this.scenario || current === undefined) return;
    this.undoStack.push({
      roles: new Map(this.roles),
      check: this.lastCheck,
      error: this.error,
    });
    this.roles.set(nodeId, current === "leader" ? "follower" : "leader");
    this.onChange();
    this.schedule();
  }

  /** Restore the previous roles and the report that went with them,
   * without asking the service again. */
  undo(): boolean {
    const entry = this.undoStack.pop();
    if (!entry) return false;
    this.roles = entry.roles;
    this.lastCheck = entry.check;
    this.error = entry.error;
    this.cancelPending();
    this.seq += 1; // anything still in flight is now stale
    this.onChange();
    return true;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  /** Dispatch a pending debounced check immediately. */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
      this.dispatchCheck();
    }
  }

  private cancelPending(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private schedule(): void {
    this.cancelPending();
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatchCheck();
    }, CHECK_DEBOUNCE_MS);
  }

  private dispatchCheck(): void {
    const graph = this.graphJson();
    if (!graph) return;
    const id = ++this.seq;
    this.api.check(graph).then(
      (result) => {
        if (id !== this.seq) return; // a newer edit superseded this request
        this.lastCheck = result;
        this.error = null;
        this.onChange();
      },
      (err: unknown) => {
        if (id !== this.seq) return;
        this.error = describeError(err);
        this.onChange();
      },
    );
  }

  /** Simulate the current scenario (with edited roles) and keep the
   * summary + downsampled series for plotting. */
  async runSimulation(stride?: number): Promise<void> {
    const scenario = this.exportScenario();
    if (!scenario || this.simulating) return;
    this.simulating = true;
    this.onChange();
    try {
      this.lastSimulation = await this.api.simulate(scenario, stride);
      this.error = null;
    } catch (err) {
      this.error = describeError(err);
    } finally {
      this.simulating = false;
      this.onChange();
    }
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
