import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The integration test boots the Python pipeline service and drives a
    // full review round trip against it.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
