/** Poll a generation job until it settles, with exponential backoff. */

import type { ApiClient } from "./api.js";
import type { Generation } from "./types.js";

export interface PollOptions {
  initialMs?: number;
  maxIntervalMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollGeneration(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<Generation> {
  const initial = options.initialMs ?? 250;
  const maxInterval = options.maxIntervalMs ?? 4000;
  const timeout = options.timeoutMs ?? 120_000;
  const sleep = options.sleep ?? defaultSleep;

  let interval = initial;
  let waited = 0;
  for (;;) {
    const generation = await client.getGeneration(jobId);
    if (generation.status === "done" || generation.status === "failed") {
      return generation;
    }
    if (waited >= timeout) {
      throw new Error(`generation ${jobId} still ${generation.status} after ${timeout}ms`);
    }
    await sleep(interval);
    waited += interval;
    interval = Math.min(interval * 2, maxInterval);
  }
}
