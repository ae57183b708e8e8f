/** vitest globalSetup: build a fixture catalog through the backend CLI,
 * start the exploration service, wait for it, and tear it down after. */

import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export const E2E_PORT = 8799;
export const E2E_BASE_URL = `http://127.0.0.1:${E2E_PORT}`;

const here = dirname(fileURLToPath(import.meta.url));
const python = process.env.E2E_PYTHON ?? "python3";

let service: ChildProcess | null = null;
let workdir: string | null = null;

async function waitForService(url: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${url}/categories`);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error(`service at ${url} did not come up`);
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

export default async function setup(): Promise<() => void> {
  workdir = mkdtempSync(join(tmpdir(), "artexplore-e2e-"));
  execFileSync(python, [join(here, "build_fixture.py"), workdir], { stdio: "inherit" });
  service = spawn(
    python,
    [
      "-m",
      "artexplore.cli",
      "--catalog",
      join(workdir, "catalog"),
      "serve",
      "--port",
      String(E2E_PORT),
    ],
    { stdio: "inherit" },
  );
  await waitForService(E2E_BASE_URL);
  return () => {
    service?.kill("SIGTERM");
    if (workdir) rmSync(workdir, { recursive: true, force: true });
  };
}
