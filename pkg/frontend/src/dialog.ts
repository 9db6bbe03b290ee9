/** View-model of the resolution-options dialog: a verbatim projection of the
 * server's prioritized list plus a selection action. */
import { SessionStore } from "./store.js";
import { ResolutionOptionPayload } from "./types.js";

export interface DialogRow {
  id: string;
  kind: string;
  explanation: string;
  sensitivity: number;
}

export class OptionsDialog {
  constructor(private store: SessionStore) {}

  /** Rows in exactly the server order: the client never reorders, filters,
   * or renames prioritized options. */
  rows(): DialogRow[] {
    const opts: ResolutionOptionPayload[] = this.store.options?.options ?? [];
    return opts.map((o) => ({
      id: o.id, kind: o.kind, explanation: o.explanation,
      sensitivity: o.sensitivity,
    }));
  }

  isOpen(): boolean {
    return this.store.badge !== "well" && this.rows().length > 0;
  }

  async chooseTop(): Promise<boolean> {
    const rows = this.rows();
    if (rows.length === 0) return false;
    return this.store.chooseOption(rows[0].id);
  }

  /** Auto toggle: no dialog interaction, the server picks top options. */
  async auto(): Promise<boolean> {
    if (this.store.badge === "well") return true;  // nothing to resolve
    return this.store.resolveAuto();
  }

  async choose(id: string): Promise<boolean> {
    if (!this.rows().some((r) => r.id === id)) {
      throw new Error(`option ${id} is not in the current list`);
    }
    return this.store.chooseOption(id);
  }
}
