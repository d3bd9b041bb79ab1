import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import type { Schema } from "../src/validator.js";
import { parseScript, ScriptEntry } from "../src/mockserver.js";

/** The shared wire schema shipped inside the gateway package. */
export function loadWireSchema(): Schema {
  const path = fileURLToPath(
    new URL("../../src/signstream/data/wire_schema.json", import.meta.url),
  );
  return JSON.parse(readFileSync(path, "utf-8")) as Schema;
}

/** The recorded gateway session used by replay and contract tests. */
export function loadSessionScript(): ScriptEntry[] {
  const path = fileURLToPath(
    new URL("../fixtures/session_hello.jsonl", import.meta.url),
  );
  return parseScript(readFileSync(path, "utf-8"));
}
