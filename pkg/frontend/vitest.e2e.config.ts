import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/e2e/**/*.test.ts"],
    environment: "node",
    globalSetup: ["./e2e/setup.ts"],
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // one worker: the flows share a live service and assert on its event log
    pool: "forks",
    poolOptions: { forks: { singleFork: true } },
  },
});
