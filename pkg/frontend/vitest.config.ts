import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the e2e test boots a real server process and waits for it
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
