import { describe, expect, it } from "vitest";

import {
  buildQuery,
  emptyDraft,
  labelOptions,
  selectOptions,
  validateDraft,
} from "../src/queryBuilder.js";
import type { GrammarDoc } from "../src/types.js";
import { fixture } from "./helpers.js";

const grammar = fixture<GrammarDoc>("grammar");

describe("query builder", () => {
  it("offers every visible relation label from the grammar", () => {
    expect(labelOptions(grammar)).toEqual([
      "Informs",
      "InformedBy",
      "Supports",
      "SupportedBy",
      "Opposes",
      "OpposedBy",
    ]);
  });

  it("offers metadata fields plus the find type's attributes", () => {
    expect(selectOptions(grammar, "CLM")).toEqual([
      "title",
      "content",
      "citekey",
      "type",
      "robustness",
    ]);
    expect(selectOptions(grammar, "EVD")).toEqual([
      "title",
      "content",
      "citekey",
      "type",
    ]);
  });

  it("assembles the wire document the query endpoint expects", () => {
    const draft = emptyDraft("EVD");
    draft.conditions.push(
      { relation: "Informs", targetKind: "node", targetValue: "QUE - q1" },
      { relation: "Opposes", targetKind: "type", targetValue: "CLM" },
    );
    draft.select = ["title", "citekey"];
    expect(buildQuery(draft)).toEqual({
      find: "EVD",
      conditions: [
        { relation: "Informs", target: { node: "QUE - q1" } },
        { relation: "Opposes", target: { type: "CLM" } },
      ],
      select: ["title", "citekey"],
    });
  });

  it("starts from a minimal valid draft", () => {
    const draft = emptyDraft("CLM");
    expect(validateDraft(grammar, draft)).toEqual([]);
    expect(buildQuery(draft)).toEqual({
      find: "CLM",
      conditions: [],
      select: ["title"],
    });
  });

  it("flags the mistakes the service would reject", () => {
    const draft = emptyDraft("XYZ");
    draft.conditions.push(
      { relation: "Blesses", targetKind: "node", targetValue: "" },
      { relation: "Supports", targetKind: "type", targetValue: "NOPE" },
    );
    draft.select = ["robustness"];
    const problems = validateDraft(grammar, draft);
    expect(problems.some((p) => p.includes("unknown node type XYZ"))).toBe(true);
    expect(problems.some((p) => p.includes("unknown relation Blesses"))).toBe(true);
    expect(problems.some((p) => p.includes("empty target"))).toBe(true);
    expect(problems.some((p) => p.includes("unknown node type NOPE"))).toBe(true);
  });

  it("rejects selecting another type's attribute", () => {
    const draft = emptyDraft("EVD");
    draft.select = ["robustness"];
    expect(validateDraft(grammar, draft)).toEqual([
      "robustness is not selectable for EVD",
    ]);
    expect(validateDraft(grammar, { ...draft, select: [] })).toEqual([
      "select at least one field",
    ]);
  });
});
