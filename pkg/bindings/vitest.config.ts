import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // Every test shells out to the absmath CLI; give slow CI boxes headroom.
    testTimeout: 60_000,
  },
});
