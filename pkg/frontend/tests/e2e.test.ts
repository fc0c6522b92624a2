// End-to-end round trip against a real server process on scripted backends:
// create a session, answer three queries (one via Other), add one
// requirement through the panel, generate once. The final server
// specification must hold exactly the five expected requirements and the
// prompt text shown in the DOM must equal the server's synthesized prompt
// byte for byte.

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, expect, it } from "vitest";

import { createClient } from "../src/api.js";
import type { SessionSnapshot } from "../src/api.js";
import { renderApp } from "../src/render.js";
import type { Actions } from "../src/render.js";
import { createViewModel } from "../src/viewmodel.js";

const PORT = 23100 + (process.pid % 1800);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let sessionsDir: string;
let serverLog = "";

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

const waitForServer = async (): Promise<void> => {
  for (let attempt = 0; attempt < 80; attempt++) {
    try {
      const response = await fetch(`${BASE}/sessions/warmup-probe`);
      if (response.status === 404) {
        return;
      }
    } catch {
      // not listening yet
    }
    await sleep(250);
  }
  throw new Error(`server did not come up on ${BASE}\n${serverLog}`);
};

beforeAll(async () => {
  sessionsDir = mkdtempSync(join(tmpdir(), "ui-e2e-"));
  server = spawn(
    "promptelicit",
    ["serve", "--sessions-dir", sessionsDir, "--port", String(PORT), "--seed", "5"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += String(chunk)));
  server.stderr?.on("data", (chunk) => (serverLog += String(chunk)));
  await waitForServer();
});

afterAll(async () => {
  server.kill();
  await sleep(200);
  rmSync(sessionsDir, { recursive: true, force: true });
});

const query = <T extends Element>(selector: string): T => {
  const node = document.querySelector<T>(selector);
  if (!node) {
    throw new Error(`missing ${selector}`);
  }
  return node;
};

const queryAll = <T extends Element>(selector: string): T[] =>
  Array.from(document.querySelectorAll<T>(selector));

it("ui round trip holds five requirements and shows the prompt verbatim", async () => {
  document.body.innerHTML = "<div id='app'></div>";
  const root = document.getElementById("app") as HTMLElement;

  const client = createClient(BASE);
  const vm = createViewModel(client, (state) => {
    renderApp(root, state, actions, client.mediaUrl, vm.canGenerate());
  });
  const actions: Actions = {
    create: (p) => void vm.create(p),
    answerOption: (i) => void vm.answerOption(i),
    answerOther: (t) => void vm.answerOther(t),
    queueEdit: vm.queueEdit,
    applyEdits: () => void vm.applyEdits(),
    discardEdits: vm.discardEdits,
    generate: () => void vm.generate(),
    dismissToast: vm.dismissToast,
  };
  renderApp(root, vm.state, actions, client.mediaUrl, vm.canGenerate());

  const settled = async (done: () => boolean): Promise<void> => {
    for (let attempt = 0; attempt < 200; attempt++) {
      if (done()) {
        return;
      }
      await sleep(25);
    }
    throw new Error(`timed out waiting; state=${JSON.stringify(vm.state, null, 2)}`);
  };

  // start a session from the entry form
  query<HTMLInputElement>("[data-role='start-input']").value = "an icon for hiking";
  query<HTMLButtonElement>("[data-role='start-button']").click();
  await settled(() => vm.state.snapshot !== null && !vm.state.busy);
  expect(vm.state.snapshot?.active_query?.feature).toBe("graphic motif");

  // query 1: pick the first option card by clicking its image
  query<HTMLButtonElement>("[data-role='option-card'][data-option-index='0']").click();
  await settled(() => vm.state.snapshot?.revision === 1 && !vm.state.busy);
  expect(vm.state.snapshot?.active_query?.feature).toBe("color scheme");

  // query 2: answer through the Other field
  query<HTMLInputElement>("[data-role='other-input']").value = "glacier teal";
  query<HTMLButtonElement>("[data-role='other-submit']").click();
  await settled(() => vm.state.snapshot?.revision === 2 && !vm.state.busy);
  expect(vm.state.snapshot?.active_query?.feature).toBe("artistic style");

  // query 3: second option card
  query<HTMLButtonElement>("[data-role='option-card'][data-option-index='1']").click();
  await settled(() => vm.state.snapshot?.revision === 3 && !vm.state.busy);

  // the Other value must already read back verbatim from the panel
  const valueInputs = queryAll<HTMLInputElement>("[data-role='requirement-value']");
  expect(valueInputs.map((input) => input.value)).toContain("glacier teal");

  // edit one requirement through the panel: queue an add and apply it
  query<HTMLInputElement>("[data-role='add-feature']").value = "mood";
  query<HTMLInputElement>("[data-role='add-value']").value = "serene";
  query<HTMLButtonElement>("[data-role='add-button']").click();
  await settled(() => queryAll("[data-role='pending-edit']").length === 1);
  query<HTMLButtonElement>("[data-role='apply-edits']").click();
  await settled(() => vm.state.snapshot?.revision === 4 && !vm.state.busy);

  // generate once
  const generate = query<HTMLButtonElement>("[data-role='generate-button']");
  expect(generate.disabled).toBe(false);
  generate.click();
  await settled(() => (vm.state.snapshot?.prompts.length ?? 0) === 1 && !vm.state.busy);

  // independent read of the server state, bypassing the view model
  const sessionId = vm.state.snapshot!.session_id;
  const response = await fetch(`${BASE}/sessions/${sessionId}`);
  expect(response.status).toBe(200);
  const serverView = (await response.json()) as SessionSnapshot;

  const serverPairs = serverView.specification.requirements.map(
    (r) => [r.feature, r.value] as const,
  );
  expect(serverPairs).toEqual([
    ["theme", "an icon for hiking"],
    ["graphic motif", "mountain silhouette"],
    ["color scheme", "glacier teal"],
    ["artistic style", "watercolor"],
    ["mood", "serene"],
  ]);

  // displayed prompt text equals the server's synthesized prompt verbatim
  const shown = queryAll<HTMLElement>("[data-role='prompt-text']").map((n) => n.textContent);
  expect(shown).toHaveLength(1);
  const serverPrompt = serverView.prompts[serverView.prompts.length - 1]?.text;
  expect(shown[0]).toBe(serverPrompt);

  // no hidden state: the rendered rows match the server pairs exactly
  const rows = queryAll<HTMLElement>("[data-role='requirement-row']");
  const shownPairs = rows.map((row) => [
    row.dataset.feature,
    row.querySelector<HTMLInputElement>("[data-role='requirement-value']")?.value,
  ]);
  expect(shownPairs).toEqual(serverPairs.map(([f, v]) => [f, v]));

  console.log(
    `PASS: ui round trip (5 requirements on the server, prompt shown verbatim: ${JSON.stringify(serverPrompt)})`,
  );
});
