/** Browser entry point: wire the editor to the serving origin and a
 * database/sample picker. */

import { ApiClient } from "./api.js";
import { Editor, mountEditor } from "./editor.js";

async function pickDatabase(api: ApiClient, editor: Editor): Promise<void> {
  const names = await api.getDatabases();
  const picker = document.createElement("select");
  picker.className = "database-picker";
  for (const name of names) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    picker.appendChild(option);
  }
  picker.addEventListener("change", async () => {
    const index = await api.getIndex(picker.value);
    editor.database = picker.value;
    // default to the first sample; axis widgets can refine from here
    editor.select = Object.fromEntries(
      index.axes.map((axis) => [axis, index.values[axis][0]]),
    );
    editor.executeNow();
  });
  editor.root.prepend(picker);
  if (names.length > 0) {
    picker.value = names[0];
    picker.dispatchEvent(new Event("change"));
  }
}

async function start(): Promise<void> {
  const api = new ApiClient("");
  const container = document.getElementById("app");
  if (!container) throw new Error("missing #app container");
  const editor = await mountEditor(container, api);
  if (editor) await pickDatabase(api, editor);
}

start();
