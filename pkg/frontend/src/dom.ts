/** DOM bindings: straight mappings from the view models onto elements. */

import type { ComparisonView, SortKey } from "./comparison";
import { buildComparison, sortRows } from "./comparison";
import type { ConsoleState } from "./state";
import { formatMw } from "./comparison";

export function renderVerdict(el: HTMLElement, state: ConsoleState): void {
  const v = state.classification;
  if (!v) {
    el.innerHTML = `<span class="chip chip-idle">not classified</span>`;
    return;
  }
  const cls = v.label === "feasible" ? "chip-feasible" : "chip-infeasible";
  el.innerHTML =
    `<span class="chip ${cls}">${v.label}</span>` +
    `<span class="muted"> p(feasible) = ${v.proba.toFixed(3)}, logit ${v.logit.toFixed(2)}</span>`;
}

export function renderDemandEditor(
  el: HTMLElement,
  state: ConsoleState,
  onEdit: (index: number, value: number) => void,
  onToggleFreeze: (busId: number) => void,
): void {
  if (!state.caseSummary) {
    el.textContent = "loading case...";
    return;
  }
  el.innerHTML = "";
  const table = document.createElement("table");
  table.className = "demand";
  table.innerHTML = "<tr><th>bus</th><th>MW</th><th>freeze</th></tr>";
  state.caseSummary.buses.forEach((bus, i) => {
    if (bus.load === 0 && state.demand[i] === 0) return; // zero-load buses stay zero
    const row = document.createElement("tr");
    const frozen = state.constraints.freeze.includes(bus.id);
    row.innerHTML = `<td>${bus.id}</td>`;
    const cell = document.createElement("td");
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.001";
    input.value = formatMw(state.demand[i]);
    input.addEventListener("change", () => onEdit(i, Number(input.value)));
    cell.appendChild(input);
    row.appendChild(cell);
    const fcell = document.createElement("td");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = frozen;
    box.addEventListener("change", () => onToggleFreeze(bus.id));
    fcell.appendChild(box);
    row.appendChild(fcell);
    table.appendChild(row);
  });
  el.appendChild(table);
}

export function renderComparison(
  el: HTMLElement,
  view: ComparisonView,
  onSort: (key: SortKey) => void,
): void {
  el.innerHTML = "";
  if (view.kind === "empty") {
    const p = document.createElement("p");
    p.className = "empty-state";
    p.textContent = view.message;
    el.appendChild(p);
    return;
  }
  const controls = document.createElement("div");
  controls.className = "sort-controls";
  for (const [key, label] of [["total", "sort by total"], ["changed", "sort by buses changed"]] as const) {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.addEventListener("click", () => onSort(key));
    controls.appendChild(btn);
  }
  el.appendChild(controls);

  const table = document.createElement("table");
  table.className = "comparison";
  const head = document.createElement("tr");
  head.innerHTML =
    "<th></th>" +
    view.busColumns.map((b) => `<th>bus ${b}</th>`).join("") +
    "<th>total MW</th><th>buses</th><th>validated</th>";
  table.appendChild(head);
  for (const row of view.rows) {
    const tr = document.createElement("tr");
    const badge = row.validated
      ? `<span class="badge badge-ok">validated</span>`
      : `<span class="badge badge-warn">unvalidated</span>`;
    const label = row.noChange ? `${row.label} <em>(no change)</em>` : row.label;
    tr.innerHTML =
      `<td>${label}</td>` +
      row.cells.map((c) => `<td class="num">${c.text}</td>`).join("") +
      `<td class="num">${row.totalText}</td>` +
      `<td class="num">${row.nChanged}</td>` +
      `<td>${badge}</td>`;
    table.appendChild(tr);
  }
  el.appendChild(table);
}

export function bindComparison(
  el: HTMLElement,
  state: ConsoleState,
): void {
  let view = buildComparison(state.options);
  const rerender = () =>
    renderComparison(el, view, (key) => {
      if (view.kind === "table") {
        view = sortRows(view, key);
        rerender();
      }
    });
  rerender();
}
