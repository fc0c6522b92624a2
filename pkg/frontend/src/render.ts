// DOM rendering for the three panels: the question panel with exemplar
// image options, the editable requirements panel, and the generation panel
// that always shows the synthesized prompt text verbatim.

import type { ActiveQuery, QueryOption, Requirement } from "./api.js";
import type { ViewState } from "./viewmodel.js";

export interface Actions {
  create(initialPrompt: string): void;
  answerOption(optionIndex: number): void;
  answerOther(text: string): void;
  queueEdit(edit: { op: "add" | "modify" | "delete"; feature: string; value?: string }): void;
  applyEdits(): void;
  discardEdits(): void;
  generate(): void;
  dismissToast(): void;
}

export type MediaUrl = (handle: string) => string;

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
};

const renderStartForm = (actions: Actions): HTMLElement => {
  const panel = el("section", "panel start-panel");
  panel.dataset.role = "start-panel";
  panel.append(el("h2", undefined, "Describe what you want to create"));

  const input = el("input");
  input.type = "text";
  input.placeholder = "e.g. an icon for a hiking app";
  input.dataset.role = "start-input";

  const button = el("button", "primary", "Start");
  button.dataset.role = "start-button";
  button.addEventListener("click", () => {
    if (input.value.trim()) {
      actions.create(input.value);
    }
  });

  const row = el("div", "row");
  row.append(input, button);
  panel.append(row);
  return panel;
};

const renderStatusBar = (state: ViewState, actions: Actions): HTMLElement => {
  const bar = el("header", "status-bar");
  const snapshot = state.snapshot;
  if (snapshot) {
    bar.append(el("span", "status", snapshot.status));
    bar.append(el("span", "revision", `revision ${snapshot.revision}`));
  }
  if (state.error) {
    const error = el("span", "error", state.error);
    error.dataset.role = "error";
    bar.append(error);
  } else if (snapshot?.error) {
    const error = el("span", "error", snapshot.error);
    error.dataset.role = "error";
    bar.append(error);
  }
  if (state.toast) {
    const toast = el("span", "toast", state.toast);
    toast.dataset.role = "toast";
    const dismiss = el("button", "dismiss", "x");
    dismiss.addEventListener("click", () => actions.dismissToast());
    toast.append(dismiss);
    bar.append(toast);
  }
  return bar;
};

const renderOptionCard = (
  option: QueryOption,
  index: number,
  actions: Actions,
  mediaUrl: MediaUrl,
  disabled: boolean,
): HTMLElement => {
  const card = el("button", "option-card");
  card.dataset.role = "option-card";
  card.dataset.optionIndex = String(index);
  card.disabled = disabled;
  card.addEventListener("click", () => actions.answerOption(index));

  if (option.exemplar_image) {
    const image = el("img", "option-image");
    image.src = mediaUrl(option.exemplar_image);
    image.alt = option.label;
    // a broken media handle degrades to a placeholder; the option stays
    // selectable either way
    image.addEventListener("error", () => {
      const placeholder = el("div", "option-placeholder", "image unavailable");
      placeholder.dataset.role = "option-placeholder";
      image.replaceWith(placeholder);
    });
    card.append(image);
    card.classList.add("image-card");
  } else {
    card.classList.add("text-card");
  }

  card.append(el("span", "option-label", option.label));
  return card;
};

const renderQuestionPanel = (
  state: ViewState,
  actions: Actions,
  mediaUrl: MediaUrl,
): HTMLElement => {
  const panel = el("section", "panel question-panel");
  panel.dataset.role = "question-panel";
  const snapshot = state.snapshot;
  if (!snapshot) {
    return panel;
  }

  const query: ActiveQuery | null = snapshot.active_query;
  if (!query) {
    const notice = el(
      "p",
      "complete-notice",
      "All visual features are covered. Edit the requirements or generate.",
    );
    notice.dataset.role = "complete-notice";
    panel.append(notice);
    return panel;
  }

  panel.append(el("h2", undefined, `Which ${query.feature} best matches your vision?`));

  const cards = el("div", "option-row");
  query.options.forEach((option, index) => {
    cards.append(renderOptionCard(option, index, actions, mediaUrl, state.busy));
  });
  panel.append(cards);

  if (query.has_residual) {
    const other = el("div", "other-row");
    const input = el("input");
    input.type = "text";
    input.placeholder = "Other: describe it yourself";
    input.dataset.role = "other-input";
    const submit = el("button", undefined, "Use my answer");
    submit.dataset.role = "other-submit";
    submit.disabled = state.busy;
    submit.addEventListener("click", () => {
      if (input.value.trim()) {
        actions.answerOther(input.value);
      }
    });
    other.append(input, submit);
    panel.append(other);
  }

  return panel;
};

const renderRequirementRow = (
  requirement: Requirement,
  actions: Actions,
  disabled: boolean,
): HTMLElement => {
  const row = el("li", "requirement-row");
  row.dataset.role = "requirement-row";
  row.dataset.feature = requirement.feature;

  row.append(el("span", "feature", requirement.feature));

  const value = el("input", "value");
  value.type = "text";
  value.value = requirement.value;
  value.dataset.role = "requirement-value";
  value.disabled = disabled;
  value.addEventListener("change", () => {
    if (value.value.trim()) {
      actions.queueEdit({ op: "modify", feature: requirement.feature, value: value.value });
    }
  });
  row.append(value);

  const remove = el("button", "remove", "remove");
  remove.dataset.role = "requirement-delete";
  remove.disabled = disabled;
  remove.addEventListener("click", () =>
    actions.queueEdit({ op: "delete", feature: requirement.feature }),
  );
  row.append(remove);
  return row;
};

const renderRequirementsPanel = (state: ViewState, actions: Actions): HTMLElement => {
  const panel = el("section", "panel requirements-panel");
  panel.dataset.role = "requirements-panel";
  const snapshot = state.snapshot;
  if (!snapshot) {
    return panel;
  }

  panel.append(el("h2", undefined, "Requirements"));

  // rows come from the acknowledged server snapshot, never from local state
  const list = el("ul", "requirement-list");
  for (const requirement of snapshot.specification.requirements) {
    list.append(renderRequirementRow(requirement, actions, state.busy));
  }
  panel.append(list);

  const addRow = el("div", "add-row");
  const feature = el("input");
  feature.type = "text";
  feature.placeholder = "feature";
  feature.dataset.role = "add-feature";
  const value = el("input");
  value.type = "text";
  value.placeholder = "value";
  value.dataset.role = "add-value";
  const add = el("button", undefined, "Add");
  add.dataset.role = "add-button";
  add.disabled = state.busy;
  add.addEventListener("click", () => {
    if (feature.value.trim() && value.value.trim()) {
      actions.queueEdit({ op: "add", feature: feature.value, value: value.value });
    }
  });
  addRow.append(feature, value, add);
  panel.append(addRow);

  if (state.pendingEdits.length > 0) {
    const pending = el("div", "pending-edits");
    pending.dataset.role = "pending-edits";
    pending.append(el("h3", undefined, "Pending changes"));
    const pendingList = el("ul");
    for (const edit of state.pendingEdits) {
      const label =
        edit.op === "delete"
          ? `delete ${edit.feature}`
          : `${edit.op} ${edit.feature}: ${edit.value}`;
      const item = el("li", undefined, label);
      item.dataset.role = "pending-edit";
      pendingList.append(item);
    }
    pending.append(pendingList);

    const apply = el("button", "primary", "Apply changes");
    apply.dataset.role = "apply-edits";
    apply.disabled = state.busy;
    apply.addEventListener("click", () => actions.applyEdits());
    const discard = el("button", undefined, "Discard");
    discard.dataset.role = "discard-edits";
    discard.addEventListener("click", () => actions.discardEdits());
    pending.append(apply, discard);
    panel.append(pending);
  }

  return panel;
};

const renderGeneratePanel = (
  state: ViewState,
  actions: Actions,
  mediaUrl: MediaUrl,
  canGenerate: boolean,
): HTMLElement => {
  const panel = el("section", "panel generate-panel");
  panel.dataset.role = "generate-panel";
  const snapshot = state.snapshot;
  if (!snapshot) {
    return panel;
  }

  const button = el("button", "primary", "Generate");
  button.dataset.role = "generate-button";
  button.disabled = !canGenerate;
  button.addEventListener("click", () => actions.generate());
  panel.append(button);

  const history = [...snapshot.prompts].reverse();
  for (const entry of history) {
    const block = el("figure", "generation");
    if (entry.image_handle) {
      const image = el("img", "generated-image");
      image.src = mediaUrl(entry.image_handle);
      image.alt = "generated image";
      block.append(image);
    } else {
      block.append(el("div", "render-missing", "render unavailable"));
    }
    // the exact prompt sent to the renderer stays visible alongside the image
    const caption = el("figcaption", "prompt-text", entry.text);
    caption.dataset.role = "prompt-text";
    block.append(caption);
    panel.append(block);
  }

  return panel;
};

export function renderApp(
  root: HTMLElement,
  state: ViewState,
  actions: Actions,
  mediaUrl: MediaUrl,
  canGenerate: boolean,
): void {
  root.textContent = "";
  root.append(renderStatusBar(state, actions));
  if (!state.snapshot) {
    root.append(renderStartForm(actions));
    return;
  }
  const main = el("main", "panels");
  main.append(
    renderQuestionPanel(state, actions, mediaUrl),
    renderRequirementsPanel(state, actions),
    renderGeneratePanel(state, actions, mediaUrl, canGenerate),
  );
  root.append(main);
}
