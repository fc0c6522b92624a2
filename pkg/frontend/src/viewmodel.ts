// Session view state and the actions that mutate it. Every server ack
// replaces the snapshot wholesale, so rendered requirements always reflect
// the latest acknowledged revision; pending panel edits live in a local
// queue until applied and are reconciled (cleared) on the server response.

import { ApiError } from "./api.js";
import type { Client, EditRequest, SessionSnapshot } from "./api.js";

export interface ViewState {
  snapshot: SessionSnapshot | null;
  pendingEdits: EditRequest[];
  busy: boolean;
  error: string | null;
  toast: string | null;
}

const CONFLICT = 409;

export function createViewModel(client: Client, onChange: (state: ViewState) => void) {
  let state: ViewState = {
    snapshot: null,
    pendingEdits: [],
    busy: false,
    error: null,
    toast: null,
  };

  const set = (patch: Partial<ViewState>): void => {
    state = { ...state, ...patch };
    onChange(state);
  };

  // A conflict means another request won the race: surface a non-blocking
  // toast and re-sync the view instead of failing the interaction.
  const mutate = async (call: () => Promise<SessionSnapshot>): Promise<void> => {
    set({ busy: true, error: null, toast: null });
    try {
      const snapshot = await call();
      set({ snapshot, busy: false });
    } catch (err) {
      if (err instanceof ApiError && err.status === CONFLICT && state.snapshot) {
        try {
          const snapshot = await client.getSession(state.snapshot.session_id);
          set({ snapshot, busy: false, toast: err.detail });
          return;
        } catch {
          // re-sync failed too; fall through to the inline error path
        }
      }
      set({ busy: false, error: err instanceof Error ? err.message : String(err) });
    }
  };

  return {
    get state(): ViewState {
      return state;
    },

    async create(initialPrompt: string): Promise<void> {
      await mutate(() => client.createSession(initialPrompt));
    },

    async refresh(): Promise<void> {
      if (!state.snapshot) {
        return;
      }
      try {
        const snapshot = await client.getSession(state.snapshot.session_id);
        set({ snapshot });
      } catch (err) {
        set({ error: err instanceof Error ? err.message : String(err) });
      }
    },

    async answerOption(optionIndex: number): Promise<void> {
      const snapshot = state.snapshot;
      if (!snapshot) {
        return;
      }
      await mutate(() =>
        client.answer(snapshot.session_id, { option_index: optionIndex }, snapshot.revision),
      );
    },

    async answerOther(text: string): Promise<void> {
      const snapshot = state.snapshot;
      if (!snapshot) {
        return;
      }
      await mutate(() =>
        client.answer(snapshot.session_id, { other_text: text }, snapshot.revision),
      );
    },

    queueEdit(edit: EditRequest): void {
      // one pending edit per feature; a later edit replaces the earlier one
      const kept = state.pendingEdits.filter((e) => e.feature !== edit.feature);
      set({ pendingEdits: [...kept, edit] });
    },

    discardEdits(): void {
      set({ pendingEdits: [] });
    },

    async applyEdits(): Promise<void> {
      const snapshot = state.snapshot;
      const edits = state.pendingEdits;
      if (!snapshot || edits.length === 0) {
        return;
      }
      await mutate(async () => {
        const next = await client.editRequirements(snapshot.session_id, edits, snapshot.revision);
        set({ pendingEdits: [] });
        return next;
      });
    },

    async generate(): Promise<void> {
      const snapshot = state.snapshot;
      if (!snapshot) {
        return;
      }
      await mutate(() => client.generate(snapshot.session_id, snapshot.revision));
    },

    canGenerate(): boolean {
      const snapshot = state.snapshot;
      if (!snapshot || state.busy) {
        return false;
      }
      if (snapshot.status === "closed" || snapshot.status === "generating") {
        return false;
      }
      return snapshot.specification.requirements.length > 0;
    },

    dismissToast(): void {
      set({ toast: null });
    },
  };
}

export type ViewModel = ReturnType<typeof createViewModel>;
