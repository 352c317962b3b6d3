import { execFileSync } from "node:child_process";

import type { Registry } from "../src/types.js";

let cached: Registry | null = null;

/** The real filter catalog, straight from the backend package, so the
 * UI tests exercise the same schema the server will serve. */
export function realRegistry(): Registry {
  if (!cached) {
    const out = execFileSync("python3", [
      "-c",
      "import json; from darkroom.registry import registry_json; " +
        "print(json.dumps(registry_json()))",
    ]);
    cached = JSON.parse(out.toString()) as Registry;
  }
  return cached;
}
