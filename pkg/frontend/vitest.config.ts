import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The round-trip test boots the real study service in a child process,
    // so hooks and tests get generous timeouts.
    testTimeout: 60_000,
    hookTimeout: 120_000,
  },
});
