// Pure console logic: state transitions, suggestion splicing, debounce.
// Everything in here is DOM-free so it can be unit-tested under node:test.

export interface Suggestion {
  display_text: string;
  kind: "Attribute" | "Value";
  attribute_name: string;
  score: number;
  replace_span: [number, number];
}

export interface UnseenValue {
  attribute: string;
  literal: string;
  suggestion: string | null;
}

export interface ValidationReport {
  unknown_columns: string[];
  unseen_values: UnseenValue[];
  subset_violations: string[];
}

export interface AnswerTable {
  columns: string[];
  rows: (string | number | boolean | null)[][];
  warnings: string[];
}

export interface AskResponse {
  question: string;
  mode: string;
  dynamic_schema: unknown;
  schema_block: string | null;
  prompt_used: string | null;
  generated_query: {
    raw_completion: string;
    sql_text: string;
    extraction_method: string;
  } | null;
  validation: ValidationReport | null;
  answer: AnswerTable | null;
  timings_ms?: Record<string, number>;
  error_stage: string | null;
  error: string | null;
}

export interface SuggestionSnapshot {
  input: string;
  cursor: number;
}

export interface ConsoleState {
  tableId: string | null;
  tableName: string | null;
  input: string;
  cursor: number;
  suggestions: Suggestion[];
  // snapshot of the input the open suggestion list was fetched for
  snapshot: SuggestionSnapshot | null;
  highlighted: number; // -1 = nothing highlighted
  dropdownOpen: boolean;
  lastAsk: AskResponse | null;
  askInFlight: boolean;
  askError: string | null;
  // monotonically increasing autocomplete request ids; only the newest
  // response may be applied (latest wins)
  requestSeq: number;
  appliedSeq: number;
}

export function initialState(): ConsoleState {
  return {
    tableId: null,
    tableName: null,
    input: "",
    cursor: 0,
    suggestions: [],
    snapshot: null,
    highlighted: -1,
    dropdownOpen: false,
    lastAsk: null,
    askInFlight: false,
    askError: null,
    requestSeq: 0,
    appliedSeq: 0,
  };
}

export function withTable(state: ConsoleState, tableId: string, name: string): ConsoleState {
  return { ...initialState(), tableId, tableName: name };
}

export function onInput(state: ConsoleState, input: string, cursor: number): ConsoleState {
  // the open list no longer corresponds to what the user sees; hide it until
  // the next response arrives
  return { ...state, input, cursor, dropdownOpen: false, highlighted: -1 };
}

export function beginAutocomplete(state: ConsoleState): { state: ConsoleState; requestId: number } {
  const requestId = state.requestSeq + 1;
  return { state: { ...state, requestSeq: requestId }, requestId };
}

export function applySuggestions(
  state: ConsoleState,
  requestId: number,
  snapshot: SuggestionSnapshot,
  suggestions: Suggestion[],
): ConsoleState {
  if (requestId <= state.appliedSeq) {
    return state; // an answer for a newer request already landed
  }
  if (snapshot.input !== state.input || snapshot.cursor !== state.cursor) {
    // stale: the input moved on while the request was in flight
    return { ...state, appliedSeq: requestId };
  }
  return {
    ...state,
    appliedSeq: requestId,
    suggestions,
    snapshot,
    dropdownOpen: suggestions.length > 0,
    highlighted: suggestions.length > 0 ? 0 : -1,
  };
}

export function moveHighlight(state: ConsoleState, delta: 1 | -1): ConsoleState {
  if (!state.dropdownOpen || state.suggestions.length === 0) {
    return state;
  }
  const n = state.suggestions.length;
  const next = (state.highlighted + delta + n) % n;
  return { ...state, highlighted: next };
}

export function closeDropdown(state: ConsoleState): ConsoleState {
  return { ...state, dropdownOpen: false, highlighted: -1 };
}

export function spliceSuggestion(
  input: string,
  suggestion: Suggestion,
): { text: string; cursor: number } {
  const [start, end] = suggestion.replace_span;
  const text = input.slice(0, start) + suggestion.display_text + input.slice(end);
  return { text, cursor: start + suggestion.display_text.length };
}

export function acceptSuggestion(state: ConsoleState, suggestion: Suggestion): ConsoleState {
  if (state.snapshot === null || state.snapshot.input !== state.input) {
    // StaleSuggestion: input changed since this list was fetched; drop it
    return closeDropdown(state);
  }
  const { text, cursor } = spliceSuggestion(state.input, suggestion);
  return {
    ...closeDropdown(state),
    input: text,
    cursor,
    suggestions: [],
    snapshot: null,
  };
}

export function suggestionLabel(s: Suggestion): string {
  return s.kind === "Value" ? `${s.display_text} — value of ${s.attribute_name}` : s.display_text;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs = 150,
): { call: (...args: A) => void; cancel: () => void } {
  let timer: ReturnType<typeof setTimeout> | null = null;
  return {
    call: (...args: A) => {
      if (timer !== null) {
        clearTimeout(timer);
      }
      timer = setTimeout(() => {
        timer = null;
        fn(...args);
      }, waitMs);
    },
    cancel: () => {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
      }
    },
  };
}

export function formatCell(value: string | number | boolean | null): string {
  if (value === null) {
    return "∅";
  }
  if (typeof value === "boolean") {
    return value ? "true" : "false";
  }
  return String(value);
}

export function formatTimings(timings: Record<string, number> | undefined): string {
  if (!timings) {
    return "";
  }
  return Object.entries(timings)
    .map(([stage, ms]) => `${stage} ${ms.toFixed(1)}ms`)
    .join(" · ");
}

// literals flagged by validation get highlighted inside the SQL text
export function unseenLiterals(report: ValidationReport | null): string[] {
  if (!report) {
    return [];
  }
  return report.unseen_values.map((u) => u.literal);
}
