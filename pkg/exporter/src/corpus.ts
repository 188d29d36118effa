// Reader for the canonical corpus JSON: a top-level object mapping
// dialogue id -> {turns: [{speaker, text, ...}]}. Traversal order is
// file order for dialogues, array order for turns; row i of an export
// corresponds to the i-th utterance in this traversal.

import { promises as fs } from "node:fs";

export interface CorpusUtterance {
  /** canonical key "<dialogue_id>:<turn_index>" */
  key: string;
  text: string;
}

export async function loadUtterances(path: string): Promise<CorpusUtterance[]> {
  const raw = JSON.parse(await fs.readFile(path, "utf-8"));
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new Error(`${path}: top level must be an object`);
  }
  const out: CorpusUtterance[] = [];
  for (const [dialogueId, body] of Object.entries(raw as Record<string, unknown>)) {
    const turns = (body as { turns?: unknown })?.turns;
    if (!Array.isArray(turns)) {
      throw new Error(`dialogue ${dialogueId}: missing turns array`);
    }
    turns.forEach((turn, i) => {
      const text = (turn as { text?: unknown })?.text;
      if (typeof text !== "string" || text.trim() === "") {
        throw new Error(`dialogue ${dialogueId} turn ${i}: missing text`);
      }
      out.push({ key: `${dialogueId}:${i}`, text });
    });
  }
  return out;
}
