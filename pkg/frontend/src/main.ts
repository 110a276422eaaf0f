// DOM wiring for the console. All state transitions live in core.ts; this
// file only reads events and renders the current state.

import {
  acceptSuggestion,
  applySuggestions,
  beginAutocomplete,
  closeDropdown,
  ConsoleState,
  debounce,
  formatCell,
  formatTimings,
  initialState,
  moveHighlight,
  onInput,
  Suggestion,
  suggestionLabel,
  unseenLiterals,
  withTable,
} from "./core.js";
import { ask, fetchSuggestions, uploadTable } from "./api.js";

let state: ConsoleState = initialState();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const fileInput = $<HTMLInputElement>("csv-file");
const uploadStatus = $<HTMLElement>("upload-status");
const questionInput = $<HTMLInputElement>("question");
const dropdown = $<HTMLElement>("dropdown");
const askButton = $<HTMLButtonElement>("ask-button");
const executeToggle = $<HTMLInputElement>("execute-toggle");
const modeSelect = $<HTMLSelectElement>("mode-select");
const panels = $<HTMLElement>("panels");

function setState(next: ConsoleState): void {
  state = next;
  renderDropdown();
  askButton.disabled = state.tableId === null || state.askInFlight;
}

// --- autocomplete ---------------------------------------------------------

const scheduleAutocomplete = debounce(() => {
  void requestSuggestions();
}, 150);

async function requestSuggestions(): Promise<void> {
  if (state.tableId === null) return;
  const snapshot = { input: state.input, cursor: state.cursor };
  const begun = beginAutocomplete(state);
  setState(begun.state);
  try {
    const suggestions = await fetchSuggestions(state.tableId, snapshot.input, snapshot.cursor);
    setState(applySuggestions(state, begun.requestId, snapshot, suggestions));
  } catch {
    // autocomplete is best-effort; a failed request just leaves the box alone
  }
}

function renderDropdown(): void {
  dropdown.innerHTML = "";
  if (!state.dropdownOpen || state.suggestions.length === 0) {
    dropdown.hidden = true;
    return;
  }
  dropdown.hidden = false;
  state.suggestions.forEach((s, i) => {
    const row = document.createElement("div");
    row.className = "suggestion" + (s.kind === "Value" ? " value" : " attribute");
    if (i === state.highlighted) row.classList.add("highlighted");
    row.textContent = suggestionLabel(s);
    row.addEventListener("mousedown", (event) => {
      event.preventDefault();
      choose(s);
    });
    dropdown.appendChild(row);
  });
}

function choose(s: Suggestion): void {
  setState(acceptSuggestion(state, s));
  questionInput.value = state.input;
  questionInput.setSelectionRange(state.cursor, state.cursor);
  questionInput.focus();
  scheduleAutocomplete.call();
}

questionInput.addEventListener("input", () => {
  setState(onInput(state, questionInput.value, questionInput.selectionStart ?? questionInput.value.length));
  scheduleAutocomplete.call();
});

questionInput.addEventListener("keydown", (event) => {
  if (event.key === "ArrowDown" && state.dropdownOpen) {
    event.preventDefault();
    setState(moveHighlight(state, 1));
  } else if (event.key === "ArrowUp" && state.dropdownOpen) {
    event.preventDefault();
    setState(moveHighlight(state, -1));
  } else if (event.key === "Enter") {
    if (state.dropdownOpen && state.highlighted >= 0) {
      event.preventDefault();
      choose(state.suggestions[state.highlighted]);
    } else {
      event.preventDefault();
      void submit();
    }
  } else if (event.key === "Escape") {
    setState(closeDropdown(state));
  }
});

questionInput.addEventListener("blur", () => {
  // give mousedown on a suggestion a chance to run first
  setTimeout(() => setState(closeDropdown(state)), 100);
});

// --- upload ----------------------------------------------------------------

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  uploadStatus.textContent = "uploading…";
  try {
    const name = file.name.replace(/\.csv$/i, "").replace(/[^\w]+/g, "_") || "table";
    const result = await uploadTable(name, file);
    setState(withTable(state, result.table_id, result.schema.name));
    uploadStatus.textContent =
      `${result.schema.name}: ${result.schema.row_count} rows, ` +
      `${result.schema.columns.length} columns (id ${result.table_id})`;
    questionInput.disabled = false;
    questionInput.focus();
  } catch (error) {
    uploadStatus.textContent = `upload failed: ${(error as Error).message}`;
  }
});

// --- ask -------------------------------------------------------------------

askButton.addEventListener("click", () => void submit());

async function submit(): Promise<void> {
  if (state.tableId === null || state.input.trim() === "" || state.askInFlight) return;
  setState({ ...closeDropdown(state), askInFlight: true, askError: null });
  renderPanels();
  try {
    const response = await ask(
      state.tableId,
      state.input,
      executeToggle.checked,
      modeSelect.value,
    );
    setState({ ...state, askInFlight: false, lastAsk: response });
  } catch (error) {
    setState({ ...state, askInFlight: false, askError: (error as Error).message });
  }
  renderPanels();
}

function panel(title: string): { root: HTMLElement; body: HTMLElement } {
  const root = document.createElement("section");
  root.className = "panel";
  const heading = document.createElement("h2");
  heading.textContent = title;
  const body = document.createElement("div");
  root.append(heading, body);
  return { root, body };
}

function renderPanels(): void {
  panels.innerHTML = "";
  if (state.askInFlight) {
    panels.textContent = "running…";
    return;
  }
  if (state.askError) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `request failed: ${state.askError}`;
    panels.appendChild(banner);
    return;
  }
  const response = state.lastAsk;
  if (!response) return;

  if (response.error_stage) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `stage ${response.error_stage} failed: ${response.error}`;
    panels.appendChild(banner);
  }

  if (response.schema_block) {
    const { root, body } = panel("Dynamic schema");
    const pre = document.createElement("pre");
    pre.textContent = response.schema_block;
    body.appendChild(pre);
    panels.appendChild(root);
  }

  const sqlPanel = panel("Generated SQL");
  if (response.generated_query) {
    const pre = document.createElement("pre");
    pre.appendChild(highlightedSql(response));
    const copy = document.createElement("button");
    copy.textContent = "copy";
    copy.addEventListener("click", () => {
      void navigator.clipboard.writeText(response.generated_query?.sql_text ?? "");
    });
    sqlPanel.body.append(pre, copy);
  } else if (response.error_stage === "generate") {
    const pre = document.createElement("pre");
    pre.textContent = "(no statement could be extracted)";
    sqlPanel.body.appendChild(pre);
  }
  panels.appendChild(sqlPanel.root);

  if (response.validation) {
    const report = response.validation;
    const issues =
      report.unknown_columns.length +
      report.unseen_values.length +
      report.subset_violations.length;
    if (issues > 0) {
      const { root, body } = panel("Validation warnings");
      const list = document.createElement("ul");
      for (const col of report.unknown_columns) {
        const li = document.createElement("li");
        li.textContent = `unknown column ${col}`;
        list.appendChild(li);
      }
      for (const unseen of report.unseen_values) {
        const li = document.createElement("li");
        li.innerHTML = "";
        li.append(`${unseen.attribute} = `);
        const mark = document.createElement("mark");
        mark.textContent = `'${unseen.literal}'`;
        li.appendChild(mark);
        li.append(" is not in the data");
        if (unseen.suggestion) {
          li.append(` — did you mean '${unseen.suggestion}'?`);
        }
        list.appendChild(li);
      }
      for (const violation of report.subset_violations) {
        const li = document.createElement("li");
        li.textContent = violation;
        list.appendChild(li);
      }
      body.appendChild(list);
      panels.appendChild(root);
    }
  }

  if (response.answer) {
    const { root, body } = panel("Answer");
    const table = document.createElement("table");
    const head = document.createElement("tr");
    for (const col of response.answer.columns) {
      const th = document.createElement("th");
      th.textContent = col;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of response.answer.rows) {
      const tr = document.createElement("tr");
      for (const cell of row) {
        const td = document.createElement("td");
        td.textContent = formatCell(cell);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    body.appendChild(table);
    panels.appendChild(root);
  }

  const timings = formatTimings(response.timings_ms);
  if (timings) {
    const footer = document.createElement("div");
    footer.className = "timings";
    footer.textContent = timings;
    panels.appendChild(footer);
  }
}

function highlightedSql(response: { generated_query: { sql_text: string } | null; validation: any }): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const sql = response.generated_query?.sql_text ?? "";
  const literals = unseenLiterals(response.validation);
  if (literals.length === 0) {
    fragment.append(sql);
    return fragment;
  }
  let rest = sql;
  while (rest.length > 0) {
    let earliest = -1;
    let which = "";
    for (const literal of literals) {
      const quoted = `'${literal.replace(/'/g, "''")}'`;
      const at = rest.indexOf(quoted);
      if (at !== -1 && (earliest === -1 || at < earliest)) {
        earliest = at;
        which = quoted;
      }
    }
    if (earliest === -1) {
      fragment.append(rest);
      break;
    }
    fragment.append(rest.slice(0, earliest));
    const mark = document.createElement("mark");
    mark.textContent = which;
    fragment.appendChild(mark);
    rest = rest.slice(earliest + which.length);
  }
  return fragment;
}

questionInput.disabled = true;
askButton.disabled = true;
