// Entry point: wires the view model to the DOM and keeps one session per
// tab in sync with the server through a light refresh poll.

import { createClient } from "./api.js";
import { renderApp } from "./render.js";
import { createViewModel } from "./viewmodel.js";

const POLL_INTERVAL_MS = 4000;

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const client = createClient(window.location.origin);

const vm = createViewModel(client, (state) => {
  renderApp(root, state, actions, client.mediaUrl, vm.canGenerate());
});

const actions = {
  create: (prompt: string) => void vm.create(prompt),
  answerOption: (index: number) => void vm.answerOption(index),
  answerOther: (text: string) => void vm.answerOther(text),
  queueEdit: vm.queueEdit,
  applyEdits: () => void vm.applyEdits(),
  discardEdits: vm.discardEdits,
  generate: () => void vm.generate(),
  dismissToast: vm.dismissToast,
};

renderApp(root, vm.state, actions, client.mediaUrl, vm.canGenerate());

// pick up server-side changes made outside this tab; skip while a local
// mutation is in flight so the poll never clobbers an optimistic update
window.setInterval(() => {
  if (vm.state.snapshot && !vm.state.busy) {
    void vm.refresh();
  }
}, POLL_INTERVAL_MS);
