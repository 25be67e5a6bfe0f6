/** Entry point: pick the first project and mount its gallery. */

import { ApiClient } from "./api.js";
import { Gallery } from "./gallery.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ApiClient("");
  try {
    const projects = await api.listProjects();
    if (projects.length === 0) {
      root.textContent = "No projects in the workspace. Ingest one with the CLI first.";
      return;
    }
    const heading = document.createElement("h1");
    heading.textContent = projects[0].title || projects[0].id;
    root.appendChild(heading);
    const mount = document.createElement("div");
    root.appendChild(mount);
    await new Gallery(mount, api, projects[0].id).refresh();
  } catch (error) {
    root.textContent = `service unreachable: ${error instanceof Error ? error.message : String(error)}`;
  }
}

void boot();
