// Thin typed wrappers over the service endpoints. The console displays what
// the API returns and computes nothing over the data itself.

import type { AskResponse, Suggestion } from "./core.js";

export interface UploadResult {
  table_id: string;
  schema: { name: string; row_count: number; columns: { normalized_name: string }[] };
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") {
        detail = body.error;
      }
    } catch {
      // leave the status code as the message
    }
    throw new Error(detail);
  }
  return response;
}

export async function uploadTable(name: string, csvBody: Blob | string): Promise<UploadResult> {
  const response = await expectOk(
    await fetch(`/v1/tables?name=${encodeURIComponent(name)}`, {
      method: "POST",
      body: csvBody,
    }),
  );
  return response.json();
}

export async function fetchSuggestions(
  tableId: string,
  q: string,
  cursor: number,
  k = 8,
): Promise<Suggestion[]> {
  const params = new URLSearchParams({ q, cursor: String(cursor), k: String(k) });
  const response = await expectOk(
    await fetch(`/v1/tables/${tableId}/autocomplete?${params.toString()}`),
  );
  const body = await response.json();
  return body.suggestions as Suggestion[];
}

export async function ask(
  tableId: string,
  question: string,
  execute: boolean,
  mode: string,
): Promise<AskResponse> {
  const response = await expectOk(
    await fetch(`/v1/tables/${tableId}/ask`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, execute, mode }),
    }),
  );
  return response.json();
}
