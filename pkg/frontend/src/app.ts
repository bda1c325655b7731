// DOM wiring for the single-page client: chat panel on the left,
// flight list and analytics dashboard on the right. Served by the
// flightstat service under /ui (same origin, so baseUrl is empty).

import { FlightStatApi } from "./api.js";
import { ChatController, isQuestion } from "./chat.js";
import { DashboardController, WindowChoice } from "./dashboard.js";
import { FlightsController } from "./flights.js";

const api = new FlightStatApi("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderChat(): void {
  const container = el<HTMLDivElement>("messages");
  container.replaceChildren(
    ...chat.messages.map((message) => {
      const bubble = document.createElement("div");
      bubble.className = `msg ${message.speaker}`;
      if (message.speaker === "system" && isQuestion(message.text)) {
        bubble.classList.add("question");
      }
      if (message.failed) bubble.classList.add("failed");
      bubble.textContent = message.text;
      return bubble;
    }),
  );
  if (chat.pendingRetry) {
    const retry = document.createElement("button");
    retry.id = "retry";
    retry.textContent = "Retry";
    retry.onclick = () => void chat.retry();
    container.appendChild(retry);
  }
  container.scrollTop = container.scrollHeight;
  el<HTMLButtonElement>("send").disabled = chat.busy;
  el<HTMLInputElement>("input").disabled = chat.busy;
}

function renderFlights(): void {
  const list = el<HTMLUListElement>("flight-list");
  list.replaceChildren(
    ...flights.flights.map((flight) => {
      const item = document.createElement("li");
      const label = document.createElement("span");
      label.textContent = `${flight.origin} → ${flight.destination} · ${flight.airline} · ${flight.date} ${flight.time}`;
      const remove = document.createElement("button");
      remove.textContent = "remove";
      remove.onclick = () => {
        if (window.confirm(`Remove the flight from ${flight.origin} to ${flight.destination}?`)) {
          void flights.remove(flight.id);
        }
      };
      item.append(label, remove);
      return item;
    }),
  );
  el<HTMLParagraphElement>("flight-count").textContent =
    flights.error ?? `${flights.flights.length} flight(s)`;
}

function renderDashboard(): void {
  const summary = dashboard.summary;
  el("tile-total").textContent = summary ? String(summary.count) : "-";
  el("tile-mean").textContent =
    summary && summary.mean_predicted_delay !== null
      ? `${summary.mean_predicted_delay.toFixed(1)} min`
      : "-";
  el("tile-delayed").textContent =
    summary && summary.delayed_share !== null
      ? `${(summary.delayed_share * 100).toFixed(0)}%`
      : "-";
  const chart = el<HTMLDivElement>("model-chart");
  chart.replaceChildren();
  if (!summary) return;
  const max = Math.max(1, ...Object.values(summary.per_model));
  for (const [model, count] of Object.entries(summary.per_model).sort()) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const name = document.createElement("span");
    name.textContent = model;
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${(count / max) * 100}%`;
    bar.textContent = String(count);
    row.append(name, bar);
    chart.appendChild(row);
  }
}

const chat = new ChatController(api, renderChat);
const flights = new FlightsController(api, renderFlights);
const dashboard = new DashboardController(api, renderDashboard);

async function sendCurrentInput(): Promise<void> {
  const input = el<HTMLInputElement>("input");
  const text = input.value;
  input.value = "";
  await chat.send(text);
  // chat turns can add/remove flights and log prediction events, so
  // both panels refresh after every reply, no page reload needed
  await Promise.all([flights.refresh(), dashboard.refresh()]);
}

function wire(): void {
  el<HTMLButtonElement>("send").onclick = () => void sendCurrentInput();
  el<HTMLInputElement>("input").addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      event.preventDefault();
      void sendCurrentInput();
    }
  });
  el<HTMLSelectElement>("window-select").addEventListener("change", (event) => {
    const choice = (event.target as HTMLSelectElement).value as WindowChoice;
    void dashboard.refresh(choice);
  });
  el<HTMLButtonElement>("refresh-dashboard").onclick = () => void dashboard.refresh();

  void chat.ensureSession().catch(() => {
    chat.messages.push({
      speaker: "system",
      text: "Could not reach the service. Is it running?",
      timestamp: new Date(),
    });
    renderChat();
  });
  void flights.refresh();
  void dashboard.refresh();
}

wire();
