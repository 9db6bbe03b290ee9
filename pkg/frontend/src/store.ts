/** Session view-model.
 *
 * All geometry and prioritization logic stays on the server; this store only
 * mirrors server payloads, tracks the optimistic revision, and exposes the
 * pieces the panels bind to (state badge, options dialog, event timeline).
 */
import { SessionApi } from "./api.js";
import {
  AnalysisPayload, ConflictError, GtipEvent, MeshPayload, OptionsPayload,
} from "./types.js";

export type Badge = "well" | "over" | "under" | "over-and-under" | "unknown";

export interface TimelineEntry {
  t: number;
  kind: string;
  volume: number | null;
}

export class SessionStore {
  session: string | null = null;
  revision = -1;
  mesh: MeshPayload | null = null;
  analysis: AnalysisPayload | null = null;
  options: OptionsPayload | null = null;
  timeline: TimelineEntry[] = [];
  conflict: string | null = null;
  private listeners: (() => void)[] = [];

  constructor(private api: SessionApi) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    this.listeners.forEach((fn) => fn());
  }

  get badge(): Badge {
    return this.analysis ? this.analysis.constraint_state.state : "unknown";
  }

  async load(model: unknown): Promise<void> {
    const info = await this.api.createSession(model);
    this.session = info.session;
    this.revision = info.revision;
    await this.refresh();
  }

  async attach(session: string, revision: number): Promise<void> {
    this.session = session;
    this.revision = revision;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.session) throw new Error("no session");
    this.mesh = await this.api.mesh(this.session);
    this.analysis = await this.api.constraints(this.session);
    this.revision = this.analysis.revision;
    this.conflict = null;
    this.emit();
  }

  async fetchOptions(): Promise<OptionsPayload> {
    if (!this.session) throw new Error("no session");
    this.options = await this.api.options(this.session);
    this.emit();
    return this.options;
  }

  /** Options are displayed exactly as the server ranked them. */
  optionLabels(): string[] {
    return (this.options?.options ?? []).map(
      (o) => `${o.id} — ${o.explanation}`);
  }

  async chooseOption(optionId: string): Promise<boolean> {
    if (!this.session) throw new Error("no session");
    try {
      const res = await this.api.postOption(this.session, optionId,
                                            this.revision);
      this.revision = res.revision;
      this.options = null;
      await this.refresh();
      return true;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.conflict = err.payload.detail;
        this.emit();
        return false;
      }
      throw err;
    }
  }

  /** The dialog's Auto toggle: hand resolution to the server's auto mode. */
  async resolveAuto(): Promise<boolean> {
    if (!this.session) throw new Error("no session");
    try {
      const res = await this.api.postResolveAuto(this.session, this.revision);
      this.revision = res.revision;
      this.options = null;
      await this.refresh();
      return true;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.conflict = err.payload.detail;
        this.emit();
        return false;
      }
      throw err;
    }
  }

  async applyEdit(edit: unknown, autoResolve = false): Promise<GtipEvent[]> {
    if (!this.session) throw new Error("no session");
    try {
      const res = await this.api.postEdit(this.session, edit, this.revision,
                                          autoResolve);
      this.revision = res.revision;
      this.timeline = res.gtips.map((g, k) => ({
        t: g.t, kind: g.kind,
        volume: res.intermediate_volumes[k] ?? null,
      }));
      this.options = null;
      await this.refresh();
      return res.gtips;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.conflict = err.payload.detail;
        this.emit();
        return [];
      }
      throw err;
    }
  }
}
