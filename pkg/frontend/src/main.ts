import { ApiError, GatewayClient } from "./api.js";
import { EventStream, SocketLike } from "./events.js";
import { fleetRows } from "./fleet.js";
import { BARRIER_LABEL, buildPreview, formatFailure } from "./plan.js";
import { SessionStateMachine } from "./state.js";
import { createPushToTalk } from "./speech.js";
import { isPlanFailure } from "./types.js";
import type { EventFrame, TelemetryFrame } from "./types.js";

const client = new GatewayClient("");
const machine = new SessionStateMachine();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const taskInput = $<HTMLInputElement>("task-input");
const submitBtn = $<HTMLButtonElement>("submit-btn");
const talkBtn = $<HTMLButtonElement>("talk-btn");
const approveBtn = $<HTMLButtonElement>("approve-btn");
const rejectBtn = $<HTMLButtonElement>("reject-btn");
const abortBtn = $<HTMLButtonElement>("abort-btn");
const stateBadge = $("state-badge");
const banner = $("banner");
const planText = $("plan-text");
const planTable = $("plan-table");
const errorPanel = $("error-panel");
const timeline = $("timeline");
const fleetBody = $("fleet-body");
const conversation = $("conversation");

let sessionId: string | null = null;
let stream: EventStream | null = null;

function showBanner(text: string, tone: "info" | "warn" | "error") {
  banner.textContent = text;
  banner.className = `banner ${tone}`;
  banner.hidden = text === "";
}

function render() {
  const c = machine.controls;
  submitBtn.disabled = !c.canSubmit;
  taskInput.disabled = !c.canSubmit;
  talkBtn.disabled = !c.canSubmit;
  approveBtn.disabled = !c.canApprove;
  rejectBtn.disabled = !c.canReject;
  abortBtn.disabled = !c.canAbort;
  stateBadge.textContent = machine.abortInProgress
    ? `${machine.state} (abort in progress)`
    : machine.state;
  stateBadge.dataset.state = machine.state;
}

function addBubble(role: "operator" | "console", text: string) {
  const div = document.createElement("div");
  div.className = `bubble ${role}`;
  div.textContent = text;
  conversation.appendChild(div);
  conversation.scrollTop = conversation.scrollHeight;
}

function renderPreview(plan_text: string, actions: Parameters<typeof buildPreview>[0]) {
  planText.textContent = plan_text;
  planTable.innerHTML = "";
  errorPanel.hidden = true;
  const model = buildPreview(actions);
  model.segments.forEach((segment, i) => {
    if (i > 0) {
      const sep = document.createElement("div");
      sep.className = "barrier-separator";
      sep.textContent = BARRIER_LABEL;
      planTable.appendChild(sep);
    }
    for (const row of segment.rows) {
      const line = document.createElement("div");
      line.className = "plan-row";
      line.innerHTML = `<span class="drone-tag">drone ${row.drone}</span> ${row.description}`;
      planTable.appendChild(line);
    }
  });
}

function renderErrors(lines: string[]) {
  planText.textContent = "";
  planTable.innerHTML = "";
  errorPanel.hidden = false;
  errorPanel.innerHTML = "";
  for (const line of lines) {
    const li = document.createElement("div");
    li.textContent = line;
    errorPanel.appendChild(li);
  }
}

function addTimelineEntry(frame: EventFrame) {
  const div = document.createElement("div");
  div.className = `event kind-${frame.kind}`;
  const who = frame.drone === null ? "fleet" : `drone ${frame.drone}`;
  const what = frame.action ?? frame.detail ?? "";
  div.textContent = `${frame.kind.replace("_", " ")} · ${who} ${what ? "· " + what : ""}`;
  timeline.appendChild(div);
  timeline.scrollTop = timeline.scrollHeight;
}

function renderFleet(frame: TelemetryFrame) {
  fleetBody.innerHTML = "";
  for (const row of fleetRows(frame.drones)) {
    const tr = document.createElement("tr");
    if (row.stale) tr.className = "stale";
    tr.innerHTML =
      `<td>${row.id}</td><td>${row.badge}</td><td>${row.battery}</td>` +
      `<td>${row.height}</td><td>${row.yaw}</td><td>${row.age}</td>`;
    fleetBody.appendChild(tr);
  }
}

function connectStream(id: string) {
  stream?.stop();
  stream = new EventStream(client.eventsUrl(id, window.location), {
    socketFactory: (url) => new WebSocket(url) as unknown as SocketLike,
    onFrame: (frame) => {
      if (frame.type === "telemetry") {
        renderFleet(frame);
        return;
      }
      addTimelineEntry(frame);
      machine.event(frame.kind);
      render();
    },
    onStatus: (status) => {
      if (status.kind === "connected") showBanner("", "info");
      else if (status.kind === "reconnecting") {
        showBanner(
          `event stream lost, retrying in ${(status.delayMs / 1000).toFixed(1)} s`,
          "warn",
        );
      }
    },
  });
  stream.start();
}

async function ensureSession(): Promise<string> {
  if (sessionId === null) {
    sessionId = await client.createSession();
    connectStream(sessionId);
  }
  return sessionId;
}

async function submitTask() {
  const text = taskInput.value.trim();
  if (!text) return; // empty submissions are blocked client-side
  try {
    machine.submitTask();
    render();
    addBubble("operator", text);
    const id = await ensureSession();
    const resp = await client.submitTask(id, text);
    if (isPlanFailure(resp)) {
      machine.planFailed();
      renderErrors(formatFailure(resp));
      addBubble("console", "the generated plan did not validate");
    } else {
      machine.planReceived();
      renderPreview(resp.plan_text, resp.actions);
      addBubble("console", resp.plan_text);
      taskInput.value = "";
    }
  } catch (err) {
    if (machine.state === "planning") machine.planFailed();
    showBanner(err instanceof ApiError ? err.message : String(err), "error");
  }
  render();
}

submitBtn.addEventListener("click", () => void submitTask());
taskInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") void submitTask();
});

approveBtn.addEventListener("click", async () => {
  if (!machine.controls.canApprove || sessionId === null) return;
  try {
    machine.approve();
    render();
    await client.approve(sessionId);
  } catch (err) {
    showBanner(String(err), "error");
  }
});

rejectBtn.addEventListener("click", async () => {
  if (!machine.controls.canReject || sessionId === null) return;
  const feedback = window.prompt("feedback for the next attempt (optional)") ?? undefined;
  try {
    machine.reject();
    await client.reject(sessionId, feedback || undefined);
    planText.textContent = "";
    planTable.innerHTML = "";
  } catch (err) {
    showBanner(String(err), "error");
  }
  render();
});

abortBtn.addEventListener("click", async () => {
  if (!machine.controls.canAbort || sessionId === null) return;
  try {
    machine.abortRequested();
    render();
    await client.abort(sessionId);
  } catch (err) {
    showBanner(String(err), "error");
  }
});

// push-to-talk is shown only where the browser supports it; the transcript
// lands in the text field for review, never straight into a submission
const ptt = createPushToTalk(window, {
  onTranscript: (text) => {
    taskInput.value = text;
    taskInput.focus();
  },
  onListening: (on) => {
    talkBtn.classList.toggle("listening", on);
    talkBtn.textContent = on ? "listening…" : "🎤 speak";
  },
  onError: (msg) => showBanner(`speech capture: ${msg}`, "warn"),
});
if (ptt === null) {
  talkBtn.hidden = true;
} else {
  talkBtn.addEventListener("mousedown", () => ptt.start());
  talkBtn.addEventListener("mouseup", () => ptt.stop());
  talkBtn.addEventListener("mouseleave", () => ptt.stop());
}

render();
void client.fleet().then((snapshot) =>
  renderFleet({ type: "telemetry", ...snapshot }),
).catch(() => showBanner("gateway unreachable", "error"));
